import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as quad_integrate
from scipy import stats

from halflib.integrate import (exact_moment, integrate_poly, integrate_word, moment_table, table_to_csv,
                               table_to_json)
from halflib.model import DiagonalSampler, SphereSampler, UnitarySampler, restrict_sampler
from halflib.ncalg import Polynomial, adjoint, commutator, word_adjoint, zword

from conftest import sphere_words


def within(est, value, k=4):
    return abs(est.estimate - value) <= k * est.standard_error


# ---------------------------------------------------------------------------
# closed forms against independent oracles


def test_fourth_moment_quadrature_n2():
    # N = 2: |z_1| = cos(theta) with density 2 sin(theta) cos(theta) on [0, pi/2]
    val, _ = quad_integrate.quad(lambda t: np.cos(t) ** 4 * 2 * np.sin(t) * np.cos(t), 0, np.pi / 2)
    assert val == pytest.approx(1 / 3, abs=1e-12)
    ex, note = exact_moment("z1 z1* z1 z1*", SphereSampler(2, 1))
    assert ex == pytest.approx(val, abs=1e-12)
    assert "Dirichlet" in note


@pytest.mark.parametrize("N", [2, 3, 4, 6])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_single_coordinate_moments_match_beta(N, m):
    # |z_1|^2 is Beta(1, N - 1) distributed on the unit sphere of C^N
    ex, _ = exact_moment(zword([1, 1] * m, [False, True] * m), SphereSampler(N, 2))
    assert ex.real == pytest.approx(stats.beta(1, N - 1).moment(m), rel=1e-12)


def test_mixed_coordinate_moment_matches_monte_carlo():
    # E|z1|^2 |z2|^2 = 1/(N(N+1)) at N = 3; checked by plain sampling
    ex, _ = exact_moment("z1 z1* z2 z2*", SphereSampler(3, 1))
    assert ex.real == pytest.approx(1 / 12)
    est = integrate_word("z1 z1* z2 z2*", "k_half_sphere", 3, 1, 10**5, 4)
    assert within(est, ex)


@pytest.mark.parametrize("word,value,note", [
    ("", 1, "unit word"),
    ("z1", 0, "band"),
    ("z1 z2*", 0, "phase"),
    ("z1 z1*", 0.5, "Dirichlet"),
    ("z1* z1", 0.5, "Dirichlet"),
])
def test_exact_moment_provenance(word, value, note):
    ex, why = exact_moment(word, SphereSampler(2, 2))
    assert ex == pytest.approx(value)
    assert note in why


def test_no_exact_value_for_general_words():
    assert exact_moment("z1 z2 z1* z2*", SphereSampler(2, 2)) == (None, "")
    restricted = restrict_sampler(SphereSampler(2, 2), lambda p: True)
    assert exact_moment("z1 z2*", restricted)[0] is None


# ---------------------------------------------------------------------------
# Monte Carlo estimates


@pytest.mark.parametrize("N", [2, 3])
@pytest.mark.parametrize("K", [1, 2, 3])
def test_moment_examples(N, K):
    rows = moment_table(["z1 z1*", "z1 z2*", "z1 z1* z1 z1*"], "k_half_sphere", N, K, 10**5, 17)
    assert within(rows[0], 1 / N)
    assert within(rows[1], 0)
    assert within(rows[2], 2 / (N * (N + 1)))
    for r in rows:
        assert r.standard_error < 5e-3


def test_empty_word_is_exact():
    r = integrate_word("", "k_half_sphere", 2, 3, 100, 1)
    assert r.estimate == 1 and r.standard_error == 0


def test_off_band_words_vanish_exactly():
    r = integrate_word("z1 z2", "k_half_sphere", 2, 3, 100, 1)
    assert r.estimate == 0 and r.standard_error == 0


def test_same_seed_bit_identical():
    words = ["z1 z1*", "z1 z2 z1* z2*", "z2* z1"]
    a = moment_table(words, "k_half_sphere", 3, 2, 2000, 5)
    b = moment_table(words, "k_half_sphere", 3, 2, 2000, 5)
    assert table_to_json(a) == table_to_json(b)
    c = moment_table(words, "k_half_sphere", 3, 2, 2000, 6)
    assert table_to_json(a) != table_to_json(c)


def test_table_rows_match_single_word_runs():
    words = ["z1 z1*", "z1 z2 z1* z2*"]
    table = moment_table(words, "k_half_sphere", 2, 3, 500, 8)
    for w, row in zip(words, table):
        single = integrate_word(w, "k_half_sphere", 2, 3, 500, 8)
        assert single.estimate == row.estimate and single.standard_error == row.standard_error


@pytest.mark.parametrize("N", [2, 3])
def test_delta_pattern(N):
    words = [zword([i, j], [False, True]) for i in range(1, N + 1) for j in range(1, N + 1)]
    rows = moment_table(words, "k_half_sphere", N, 2, 20000, 3)
    for w, r in zip(words, rows):
        target = 1 / N if w[0].index == w[1].index else 0
        assert within(r, target)


@settings(max_examples=25)
@given(sphere_words(2, 6, min_len=1), st.integers(1, 3))
def test_trace_is_cyclic(w, K):
    rows = moment_table([w[s:] + w[:s] for s in range(len(w))], "k_half_sphere", 2, K, 400, 2)
    for r in rows[1:]:
        assert abs(r.estimate - rows[0].estimate) < 1e-12


@settings(max_examples=25)
@given(sphere_words(3, 4, min_len=1), st.integers(1, 3))
def test_positivity_of_w_wstar(w, K):
    r = integrate_word(w + word_adjoint(w), "k_half_sphere", 3, K, 400, 5)
    assert r.estimate.real >= -4 * r.standard_error


@settings(max_examples=25)
@given(sphere_words(3, 5, min_len=1), st.integers(1, 3))
def test_adjoint_symmetry(w, K):
    a, b = moment_table([w, word_adjoint(w)], "k_half_sphere", 3, K, 300, 9)
    assert abs(b.estimate - a.estimate.conjugate()) < 1e-14


def test_k_dependence_probe():
    c = commutator(Polynomial.from_word(zword([1, 1])), Polynomial.from_word(zword([2, 2])))
    p = c * adjoint(c)
    for K in (1, 2):
        r = integrate_poly(p, "k_half_sphere", 2, K, 5000, 1)
        assert abs(r.estimate) < 1e-12
    r = integrate_poly(p, "k_half_sphere", 2, 3, 5000, 1)
    assert r.estimate.real > 4 * r.standard_error


def test_polynomial_text_is_accepted():
    r = moment_table(["z1 z1* + z2 z2*"], "k_half_sphere", 2, 2, 50, 1)[0]
    assert r.estimate == pytest.approx(1) and r.exact_value is None


def test_unitary_row_moment():
    ex, note = exact_moment("u1,1 u1,1* u2,1 u2,1*", UnitarySampler(3, 2))
    assert ex == pytest.approx(1 / 12)
    r = integrate_word("u1,1 u1,1* u2,1 u2,1*", "unk_quantum_group", 3, 2, 20000, 1)
    assert within(r, ex)


def test_diagonal_sampler_moments():
    r = integrate_word("z1 z1*", DiagonalSampler(2, 3), 2, 3, 20000, 3)
    assert within(r, 0.5)


def test_errors():
    with pytest.raises(ValueError):
        integrate_word("z1 z1*", "k_half_sphere", 2, 2, 1, 0)
    with pytest.raises(ValueError):
        integrate_word("z3 z3*", "k_half_sphere", 2, 2, 10, 0)
    with pytest.raises(ValueError):
        integrate_word("u1,1", "k_half_sphere", 2, 2, 10, 0)
    with pytest.raises(ValueError):
        integrate_word("z1", "no_such_space", 2, 2, 10, 0)
    with pytest.raises(ValueError):
        integrate_word("z1", SphereSampler(3, 2), 2, 2, 10, 0)


# ---------------------------------------------------------------------------
# emission


def test_csv_and_json_rows_carry_provenance():
    rows = moment_table(["z1 z1*", "z1 z2*"], "k_half_sphere", 2, 2, 100, 42)
    parsed = list(csv.DictReader(io.StringIO(table_to_csv(rows))))
    assert [r["word"] for r in parsed] == ["z1 z1*", "z1 z2*"]
    for r, est in zip(parsed, rows):
        assert r["seed"] == "42" and r["sampler"] == est.sampler["name"]
        assert float(r["estimate_re"]) == est.estimate.real
    doc = json.loads(table_to_json(rows))
    assert doc["schema"].startswith("halflib.moments/")
    assert doc["rows"][0]["exact_value"] == pytest.approx([0.5, 0.0])
    assert all(r["seed"] == 42 for r in doc["rows"])


def test_deviation_helper():
    r = integrate_word("z1 z1*", "k_half_sphere", 2, 1, 1000, 1)
    assert r.deviation() == pytest.approx(abs(r.estimate - 0.5) / r.standard_error)
    assert integrate_word("", "k_half_sphere", 2, 1, 10, 1).deviation() == 0
    assert integrate_word("z1 z2 z1* z2*", "k_half_sphere", 2, 2, 10, 1).deviation() is None
