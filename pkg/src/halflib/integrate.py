"""Monte Carlo moments of words under the matrix models.

The model functional is phi -> (1/K) sum_c E[rho(phi)_{cc}] where the
expectation runs over the sampler's product measure (uniform measure on each
sphere factor, or Haar measure on each unitary factor).
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .model import (DiagonalSampler, Sampler, SphereSampler, UnitarySampler, eval_words_banded,
                    model_sampler)
from .ncalg import SPACE_IDS, Polynomial, Word, format_poly, grading_degree, parse_poly, parse_word, word_str

SCHEMA = "halflib.moments/1"


@dataclass
class MomentEstimate:
    word: str
    N: int
    K: int
    space: str
    sampler: dict
    sample_count: int
    seed: int
    estimate: complex
    standard_error: float
    exact_value: complex | None = None
    exact_note: str = ""
    extra: dict = field(default_factory=dict)

    def deviation(self) -> float | None:
        """|estimate - exact| in units of the standard error (inf when SE is 0 and they differ)."""
        if self.exact_value is None:
            return None
        d = abs(self.estimate - self.exact_value)
        if self.standard_error == 0:
            return 0.0 if d == 0 else math.inf
        return d / self.standard_error

    def to_dict(self) -> dict:
        ex = None if self.exact_value is None else [self.exact_value.real, self.exact_value.imag]
        return {"word": self.word, "N": self.N, "K": self.K, "space": self.space,
                "sampler": self.sampler, "sample_count": self.sample_count, "seed": self.seed,
                "estimate": [self.estimate.real, self.estimate.imag],
                "standard_error": self.standard_error, "exact_value": ex, "exact_note": self.exact_note}


def _as_word(w) -> Word:
    return parse_word(w) if isinstance(w, str) else tuple(w)


def _as_item(w):
    """A Word, or a Polynomial for text with + or - signs."""
    if isinstance(w, Polynomial):
        return w
    if isinstance(w, str) and ("+" in w or "-" in w or "(" in w):
        return parse_poly(w)
    return _as_word(w)


def _phase_balanced(w: Word, quantum: bool) -> bool:
    """Net charge per coordinate (per row and per column for u_ij) vanishes."""
    net: Counter = Counter()
    for lt in w:
        s = -1 if lt.starred else 1
        if quantum:
            i, j = lt.index
            net["r", i] += s
            net["c", j] += s
        else:
            net[lt.index] += s
    return all(v == 0 for v in net.values())


def _dirichlet(N: int, ms: Sequence[int]) -> float:
    """E prod |x_i|^{2 m_i} for x uniform on the unit sphere of C^N."""
    return math.exp(math.lgamma(N) + sum(math.lgamma(m + 1) for m in ms) - math.lgamma(N + sum(ms)))


def _pair_exponents(w: Word, quantum: bool):
    """Exponents m_i if w is a product of adjacent pairs a a^* or a^* a sharing one sphere.

    For u_ij letters all pairs must share a row or share a column, since a row
    or column of a Haar unitary is uniform on the sphere.
    """
    if len(w) % 2:
        return None
    counts: Counter = Counter()
    for a, b in zip(w[::2], w[1::2]):
        if a.index != b.index or a.starred == b.starred:
            return None
        counts[a.index] += 1
    if quantum:
        rows = {i for i, _ in counts}
        cols = {j for _, j in counts}
        if len(rows) > 1 and len(cols) > 1:
            return None
    return list(counts.values())


def exact_moment(w, sampler: Sampler) -> tuple:
    """(value, provenance) for the cases with a closed form, else (None, "")."""
    w = _as_word(w)
    K, N = sampler.K, sampler.N
    if len(w) == 0:
        return 1 + 0j, "unit word"
    if grading_degree(w, K) != 0:
        return 0j, "off-diagonal band: trace vanishes identically"
    if type(sampler) not in (SphereSampler, UnitarySampler, DiagonalSampler):
        return None, ""
    quantum = sampler.kind == "unitary"
    if not _phase_balanced(w, quantum):
        return 0j, "phase symmetry of the measure"
    ms = _pair_exponents(w, quantum)
    if ms is not None:
        return complex(_dirichlet(N, ms)), "Dirichlet moment of the uniform sphere measure"
    return None, ""


def _resolve(space, N: int, K: int) -> tuple:
    if isinstance(space, Sampler):
        if (space.N, space.K) != (N, K):
            raise ValueError("sampler dimensions do not match N, K")
        return space.name, space
    if space not in SPACE_IDS + ("diagonal",):
        raise ValueError("no sampler for space %r" % space)
    return space, model_sampler(space, N, K)


def _check_word(w: Word, sampler: Sampler):
    quantum = sampler.kind == "unitary"
    for lt in w:
        if isinstance(lt.index, tuple) != quantum:
            raise ValueError("letter %s does not fit the %s sampler" % (lt, sampler.kind))
        idx = lt.index if quantum else (lt.index,)
        if min(idx) < 1 or max(idx) > sampler.N:
            raise ValueError("letter %s outside ambient dimension %d" % (lt, sampler.N))


def _estimates(words: list, space_name: str, sampler: Sampler, points: np.ndarray, seed: int) -> list:
    n = points.shape[0]
    flat = list(dict.fromkeys(w2 for it in words for w2 in (it.words() if isinstance(it, Polynomial) else [it])))
    pos = {w: i for i, w in enumerate(flat)}
    bands, vals = eval_words_banded(flat, points) if flat else (np.zeros(0, int), np.zeros((0, n, 1)))
    traces = np.where((bands == 0)[:, None], vals.mean(axis=2), 0)  # (1/K) trace per sample
    out = []
    for w in words:
        if isinstance(w, Polynomial):
            x = np.zeros(n, dtype=complex)
            for ww, c in w.terms.items():
                x = x + c * traces[pos[ww]]
            label, ex, note = format_poly(w), None, ""
        else:
            x = traces[pos[w]]
            label = word_str(w) or "1"
            ex, note = exact_moment(w, sampler)
        mean = complex(x.mean())
        se = float(np.sqrt(np.sum(np.abs(x - mean) ** 2) / (n - 1) / n))
        out.append(MomentEstimate(label, sampler.N, sampler.K, space_name, sampler.describe(),
                                  n, seed, mean, se, ex, note))
    return out


def integrate_poly(p, space, N: int, K: int, n_samples: int = 10_000, seed: int = 0) -> MomentEstimate:
    """Estimate for a polynomial (text or Polynomial); no exact value is attached."""
    p = parse_poly(p) if isinstance(p, str) else p
    return moment_table([p], space, N, K, n_samples, seed)[0]


def integrate_word(w, space, N: int, K: int, n_samples: int = 10_000, seed: int = 0) -> MomentEstimate:
    """Monte Carlo estimate of the model functional on a single word."""
    return moment_table([w], space, N, K, n_samples, seed)[0]


def moment_table(words: Sequence, space, N: int, K: int, n_samples: int = 10_000, seed: int = 0) -> list:
    """Estimates for several words (polynomials are accepted too).

    Every word is evaluated on the same seeded points, so a word's row is
    identical to what :func:`integrate_word` returns for it with that seed.
    """
    if n_samples < 2:
        raise ValueError("need at least 2 samples for a standard error")
    space_name, sampler = _resolve(space, N, K)
    ws = [_as_item(w) for w in words]
    for w in ws:
        for ww in (w.words() if isinstance(w, Polynomial) else [w]):
            _check_word(ww, sampler)
    points = sampler.draw(n_samples, seed)
    return _estimates(ws, space_name, sampler, points, seed)


def table_to_json(rows: Sequence[MomentEstimate], **kw) -> str:
    return json.dumps({"schema": SCHEMA, "tool_version": __version__,
                       "rows": [r.to_dict() for r in rows]}, **kw)


CSV_FIELDS = ("word", "N", "K", "space", "sampler", "sample_count", "seed", "estimate_re", "estimate_im",
              "standard_error", "exact_re", "exact_im", "exact_note")


def table_to_csv(rows: Sequence[MomentEstimate]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_FIELDS)
    for r in rows:
        ex = r.exact_value
        wr.writerow([r.word, r.N, r.K, r.space, r.sampler["name"], r.sample_count, r.seed,
                     repr(r.estimate.real), repr(r.estimate.imag), repr(r.standard_error),
                     "" if ex is None else repr(ex.real), "" if ex is None else repr(ex.imag), r.exact_note])
    return buf.getvalue()
