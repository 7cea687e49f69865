"""Crossed-product matrix models and their numerical verification.

At a point x = (x_0, ..., x_{K-1}) of (S^{N-1}_C)^K the sphere coordinate z_i
is represented by the K x K matrix sum_c (x_c)_i E_{c,c+1} (indices mod K).
For the quantum group model a tuple (g_0, ..., g_{K-1}) of unitaries sends
u_ij to sum_c (g_c)_ij E_{c,c+1}.

Two evaluation routes exist.  :func:`eval_word` multiplies dense matrices and
is the reference.  The batched route used by :func:`verify_relations` keeps
every word as a single cyclic band, sum_c v_c E_{c,c+j}, which is what all
letters of these models are; products of bands are bands again.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from . import __version__
from .ncalg import Letter, Polynomial, RelationSet, format_poly, is_quantum_word, letter

BLOCK_SIZE = 256


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class SamplePoint:
    vectors: np.ndarray  # (K, N)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=complex)
        if v.ndim != 2:
            raise ValueError("SamplePoint needs a (K, N) array")
        norms = np.linalg.norm(v, axis=1)
        if np.max(np.abs(norms - 1)) > 1e-12:
            raise ValueError("sample point vectors must have unit norm")
        object.__setattr__(self, "vectors", v)

    @property
    def K(self) -> int:
        return self.vectors.shape[0]

    @property
    def N(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class UnitaryTuple:
    unitaries: np.ndarray  # (K, N, N)

    def __post_init__(self):
        g = np.asarray(self.unitaries, dtype=complex)
        if g.ndim == 2:
            g = g[None]
        if g.ndim != 3 or g.shape[1] != g.shape[2]:
            raise ValueError("UnitaryTuple needs a (K, N, N) array")
        eye = np.eye(g.shape[1])
        for gc in g:
            if np.max(np.abs(gc @ gc.conj().T - eye)) > 1e-10:
                raise ValueError("UnitaryTuple entries must be unitary")
        object.__setattr__(self, "unitaries", g)

    @property
    def K(self) -> int:
        return self.unitaries.shape[0]

    @property
    def N(self) -> int:
        return self.unitaries.shape[1]


def _shift(K: int) -> np.ndarray:
    return np.roll(np.eye(K), 1, axis=1)  # E_{c,c+1}


def _letter_values(points: np.ndarray, index) -> np.ndarray:
    """(n, K) coefficients a_c of a letter over a batch of points."""
    if isinstance(index, tuple):
        if points.ndim != 4:
            raise ValueError("quantum group letters need unitary sample points")
        i, j = index
        return points[:, :, i - 1, j - 1]
    if points.ndim != 3:
        raise ValueError("sphere letters need sphere sample points")
    return points[:, :, index - 1]


def _point_array(x) -> np.ndarray:
    if isinstance(x, SamplePoint):
        return x.vectors
    if isinstance(x, UnitaryTuple):
        return x.unitaries
    return np.asarray(x, dtype=complex)


def letter_matrix(lt: Letter, x) -> np.ndarray:
    pts = _point_array(x)
    K = pts.shape[0]
    N = pts.shape[1]
    idx = lt.index if isinstance(lt.index, tuple) else (lt.index,)
    if max(idx) > N or min(idx) < 1:
        raise ValueError("letter %s outside ambient dimension %d" % (lt, N))
    a = _letter_values(pts[None], lt.index)[0]
    m = np.diag(a) @ _shift(K)
    return m.conj().T if lt.starred else m


def eval_word(w, x) -> np.ndarray:
    """Dense K x K image of a word at a point (SamplePoint or UnitaryTuple)."""
    pts = _point_array(x)
    K = pts.shape[0]
    out = np.eye(K, dtype=complex)
    for lt in w:
        out = out @ letter_matrix(lt, x)
    return out


def eval_poly(p: Polynomial, x) -> np.ndarray:
    K = _point_array(x).shape[0]
    out = np.zeros((K, K), dtype=complex)
    for w, c in p.terms.items():
        out += c * eval_word(w, x)
    return out


def qg_eval(w, g: UnitaryTuple) -> np.ndarray:
    if not isinstance(g, UnitaryTuple):
        g = UnitaryTuple(g)
    if any(not isinstance(lt.index, tuple) for lt in w):
        raise ValueError("qg_eval needs u_ij letters")
    return eval_word(w, g)


def coefficient_blocks(g) -> np.ndarray:
    """(N, N, K, K) array whose (i, j) block is the image of u_ij."""
    g = g.unitaries if isinstance(g, UnitaryTuple) else np.asarray(g, dtype=complex)
    K = g.shape[0]
    # block[i, j] = sum_c g[c, i, j] E_{c,c+1}
    blocks = np.einsum("cij,cd->ijcd", g, _shift(K))
    return blocks


def fundamental_matrix(g) -> np.ndarray:
    """The NK x NK matrix U = sum_ij e_ij (x) rho(u_ij); row index i*K + c."""
    b = coefficient_blocks(g)
    N, K = b.shape[0], b.shape[2]
    return b.transpose(0, 2, 1, 3).reshape(N * K, N * K)


def operator_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2)) if m.size else 0.0


# ---------------------------------------------------------------------------
# sampling


def haar_unitary(N: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary: QR of a Ginibre matrix, columns rephased by diag(R)/|diag(R)|."""
    zmat = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2)
    q, r = np.linalg.qr(zmat)
    d = np.diag(r)
    return q * (d / np.abs(d))


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Generator for sample block ``block``; derived from (seed, block) by SeedSequence hashing."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


class Sampler:
    """Base class: a product measure on K-tuples, drawn in seeded blocks.

    Samples ``b*BLOCK_SIZE .. (b+1)*BLOCK_SIZE - 1`` come from their own
    stream ``block_rng(seed, b)``, so any split of the work over blocks gives
    bit-identical points.
    """

    kind = "sphere"
    name = "sampler"

    def __init__(self, N: int, K: int):
        if N < 1 or K < 1:
            raise ValueError("N and K must be >= 1")
        self.N, self.K = N, K

    def from_rng(self, rng: np.random.Generator, m: int) -> np.ndarray:
        raise NotImplementedError

    def draw(self, n: int, seed: int) -> np.ndarray:
        blocks = []
        for b in range((n + BLOCK_SIZE - 1) // BLOCK_SIZE):
            m = min(BLOCK_SIZE, n - b * BLOCK_SIZE)
            blocks.append(self.from_rng(block_rng(seed, b), m))
        return np.concatenate(blocks) if blocks else np.empty((0,) + self.point_shape, complex)

    @property
    def point_shape(self) -> tuple:
        return (self.K, self.N) if self.kind == "sphere" else (self.K, self.N, self.N)

    def describe(self) -> dict:
        return {"name": self.name, "kind": self.kind, "N": self.N, "K": self.K}


class SphereSampler(Sampler):
    name = "uniform_sphere_product(gaussian_normalized)"

    def from_rng(self, rng, m):
        g = rng.standard_normal((m, self.K, self.N, 2))
        v = g[..., 0] + 1j * g[..., 1]
        return v / np.linalg.norm(v, axis=2, keepdims=True)


class UnitarySampler(Sampler):
    kind = "unitary"
    name = "haar_unitary_product(ginibre_qr_phase_fixed)"

    def from_rng(self, rng, m):
        out = np.empty((m, self.K, self.N, self.N), complex)
        for s in range(m):
            for c in range(self.K):
                out[s, c] = haar_unitary(self.N, rng)
        return out


class DiagonalSampler(Sampler):
    """Points (x, x, ..., x) with x uniform on the sphere."""

    name = "diagonal_sphere(gaussian_normalized)"

    def from_rng(self, rng, m):
        g = rng.standard_normal((m, self.N, 2))
        v = g[..., 0] + 1j * g[..., 1]
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return np.repeat(v[:, None, :], self.K, axis=1)


class LowAcceptanceError(RuntimeError):
    pass


class RestrictedSampler(Sampler):
    """Rejection sampler for a cyclically symmetric subset of the base space."""

    def __init__(self, base: Sampler, predicate: Callable[[np.ndarray], bool], min_acceptance: float = 1e-3,
                 label: str = "predicate"):
        super().__init__(base.N, base.K)
        self.base = base
        self.kind = base.kind
        self.predicate = predicate
        self.min_acceptance = min_acceptance
        self.label = label
        self.name = "restricted(%s | %s)" % (base.name, label)
        self.attempted = 0
        self.accepted = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.attempted if self.attempted else float("nan")

    def from_rng(self, rng, m):
        got = []
        while len(got) < m:
            cand = self.base.from_rng(rng, max(16, 2 * (m - len(got))))
            for pt in cand:
                self.attempted += 1
                ok = bool(self.predicate(pt))
                if ok != bool(self.predicate(np.roll(pt, 1, axis=0))):
                    raise ValueError("predicate is not invariant under the cyclic shift")
                if ok:
                    self.accepted += 1
                    got.append(pt)
                    if len(got) == m:
                        break
            if self.attempted >= 1000 and self.acceptance_rate < self.min_acceptance:
                raise LowAcceptanceError("acceptance rate %.2g below floor %.2g"
                                         % (self.acceptance_rate, self.min_acceptance))
        return np.array(got)

    def describe(self):
        d = super().describe()
        d["acceptance_rate"] = self.acceptance_rate
        return d


def restrict_sampler(base: Sampler, predicate=None, diagonal: bool = False, min_acceptance: float = 1e-3,
                     label: str | None = None) -> Sampler:
    """Model sampler on a symmetric subset T of the base space.

    ``diagonal=True`` gives T = {(x, ..., x)}, sampled directly.  A predicate
    gives a rejection sampler; it must be invariant under cyclic shifts of the
    K-tuple (checked on every candidate).
    """
    if diagonal:
        if base.kind != "sphere":
            raise ValueError("diagonal restriction is only implemented for sphere samplers")
        s = DiagonalSampler(base.N, base.K)
        if predicate is None:
            return s
        base = s
    if predicate is None:
        return base
    return RestrictedSampler(base, predicate, min_acceptance, label or getattr(predicate, "__name__", "predicate"))


def sample_sphere_point(N: int, K: int, rng: np.random.Generator) -> SamplePoint:
    return SamplePoint(SphereSampler(N, K).from_rng(rng, 1)[0])


def sample_unitary_tuple(N: int, K: int, rng: np.random.Generator) -> UnitaryTuple:
    return UnitaryTuple(UnitarySampler(N, K).from_rng(rng, 1)[0])


def model_sampler(space: str, N: int, K: int) -> Sampler:
    """Natural model sampler for a space id (or 'diagonal')."""
    if space in ("unk_quantum_group", "u_infinity_quantum_group", "unitary"):
        return UnitarySampler(N, K)
    if space == "diagonal":
        return DiagonalSampler(N, K)
    return SphereSampler(N, K)


# ---------------------------------------------------------------------------
# batched band evaluation


def _eval_unique(words: list, points: np.ndarray, K: int):
    n = points.shape[0]
    W = len(words)
    bands = np.zeros(W, dtype=np.int64)
    vals = np.empty((W, n, K), dtype=complex)
    longs = []
    for k, w in enumerate(words):
        if len(w) == 0:
            vals[k] = 1
        elif len(w) == 1:
            lt = w[0]
            a = _letter_values(points, lt.index)
            if lt.starred:
                bands[k] = (-1) % K
                vals[k] = np.roll(a.conj(), 1, axis=1)
            else:
                bands[k] = 1 % K
                vals[k] = a
        else:
            longs.append(k)
    if longs:
        halves: dict = {}
        for k in longs:
            w = words[k]
            h = len(w) // 2
            halves.setdefault(w[:h], None)
            halves.setdefault(w[h:], None)
        hw = list(halves)
        pos = {w: i for i, w in enumerate(hw)}
        hb, hv = _eval_unique(hw, points, K)
        li = np.array([pos[words[k][: len(words[k]) // 2]] for k in longs])
        ri = np.array([pos[words[k][len(words[k]) // 2:]] for k in longs])
        # (v w)_c = v_c w_{c + band(v)}
        idx = (np.arange(K)[None, :] + hb[li][:, None]) % K
        right = hv[ri[:, None, None], np.arange(n)[None, :, None], idx[:, None, :]]
        vals[longs] = hv[li] * right
        bands[longs] = (hb[li] + hb[ri]) % K
    return bands, vals


def eval_words_banded(words: Sequence, points: np.ndarray):
    """Bands j and coefficients v (W, n, K) with image sum_c v_c E_{c,c+j} per word."""
    K = points.shape[1]
    words = [tuple(w) for w in words]
    uniq = list(dict.fromkeys(words))
    b, v = _eval_unique(uniq, points, K)
    if len(uniq) == len(words):
        return b, v
    pos = {w: i for i, w in enumerate(uniq)}
    sel = np.array([pos[w] for w in words])
    return b[sel], v[sel]


def band_to_dense(band: int, vec: np.ndarray) -> np.ndarray:
    """(n, K) band coefficients -> (n, K, K) dense matrices."""
    n, K = vec.shape
    out = np.zeros((n, K, K), dtype=complex)
    c = np.arange(K)
    out[:, c, (c + band) % K] = vec
    return out


def eval_poly_batch(p: Polynomial, points: np.ndarray) -> np.ndarray:
    """(n, K, K) images of a polynomial over a batch of points."""
    n, K = points.shape[0], points.shape[1]
    out = np.zeros((n, K, K), dtype=complex)
    if p.is_zero():
        return out
    words = p.words()
    bands, vals = eval_words_banded(words, points)
    for (w, c), b, v in zip(p.terms.items(), bands, vals):
        out += c * band_to_dense(int(b), v)
    return out


def residual_norms(polys: Sequence[Polynomial], points: np.ndarray, chunk_words: int = 4096) -> np.ndarray:
    """(R, n) operator norms of each polynomial's image at each point."""
    n, K = points.shape[0], points.shape[1]
    R = len(polys)
    out = np.zeros((R, n))
    # chunk by word count so the (W, n, K) band array stays small
    chunks, cur, cur_words = [], [], 0
    for r, p in enumerate(polys):
        cur.append(r)
        cur_words += len(p)
        if cur_words >= chunk_words:
            chunks.append(cur)
            cur, cur_words = [], 0
    if cur:
        chunks.append(cur)

    def work(idx):
        ps = [polys[r] for r in idx]
        words = list(dict.fromkeys(w for p in ps for w in p.terms))
        if not words:
            return np.zeros((len(idx), n))
        pos = {w: i for i, w in enumerate(words)}
        bands, vals = _eval_unique(words, points, K)
        res = np.zeros((len(idx), n))
        rows, cols, data, mixed = [], [], [], []
        for k, p in enumerate(ps):
            wb = {int(bands[pos[w]]) for w in p.terms}
            if len(wb) > 1:
                mixed.append(k)
                continue
            for w, c in p.terms.items():
                rows.append(k)
                cols.append(pos[w])
                data.append(c)
        if rows:
            cmat = sp.csr_matrix((data, (rows, cols)), shape=(len(ps), len(words)), dtype=complex)
            acc = (cmat @ vals.reshape(len(words), n * K)).reshape(len(ps), n, K)
            # a single band is a weighted permutation: its norm is max |v_c|
            res[:] = np.abs(acc).max(axis=2)
        for k in mixed:
            dense = np.zeros((n, K, K), dtype=complex)
            for w, c in ps[k].terms.items():
                dense += c * band_to_dense(int(bands[pos[w]]), vals[pos[w]])
            res[k] = np.linalg.norm(dense, 2, axis=(1, 2))
        return res

    threads = int(os.environ.get("HALFLIB_THREADS", "1") or 1)
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(work, chunks))
    else:
        results = [work(c) for c in chunks]
    for idx, res in zip(chunks, results):
        out[idx] = res
    return out


# ---------------------------------------------------------------------------
# verification


@dataclass
class RelationResult:
    text: str
    max_residual: float
    argmax_sample_index: int


@dataclass
class VerificationReport:
    space: str
    N: int
    K: int
    sample_count: int
    seed: int
    tolerance: float
    sampler: dict
    relations: list = field(default_factory=list)
    worst_sample_index: int = -1
    worst_point: list | None = None
    word_length_bound: int | None = None

    @property
    def max_residual(self) -> float:
        return max((r.max_residual for r in self.relations), default=0.0)

    @property
    def passed(self) -> bool:
        return all(r.max_residual < self.tolerance for r in self.relations)

    def failures(self) -> list:
        return [r for r in self.relations if not r.max_residual < self.tolerance]

    def to_dict(self) -> dict:
        return {
            "schema": "halflib.verification/1",
            "tool_version": __version__,
            "space": self.space,
            "N": self.N,
            "K": self.K,
            "samples": self.sample_count,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "sampler": self.sampler,
            "word_length_bound": self.word_length_bound,
            "relations": [
                {"text": r.text, "max_residual": r.max_residual, "argmax_sample_index": r.argmax_sample_index}
                for r in self.relations
            ],
            "max_residual": self.max_residual,
            "worst_sample_index": self.worst_sample_index,
            "worst_point": self.worst_point,
            "pass": self.passed,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _encode_point(pt: np.ndarray) -> list:
    return np.stack([pt.real, pt.imag], axis=-1).tolist()


def _check_compatible(polys, sampler: Sampler, N: int):
    for p in polys:
        for w in p.terms:
            if w and is_quantum_word(w) != (sampler.kind == "unitary"):
                raise ValueError("relation letters do not match the %s sampler" % sampler.kind)
            break
    if N != sampler.N:
        raise ValueError("dimension mismatch: relations N=%d, sampler N=%d" % (N, sampler.N))


def _report(space, N, labels, polys, sampler, n_samples, tol, seed, bound=None, points=None):
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    _check_compatible(polys, sampler, N)
    if points is None:
        points = sampler.draw(n_samples, seed)
    norms = residual_norms(polys, points)
    rep = VerificationReport(space, N, sampler.K, n_samples, seed, tol, sampler.describe(),
                             word_length_bound=bound)
    for lab, row in zip(labels, norms):
        k = int(np.argmax(row))
        rep.relations.append(RelationResult(lab, float(row[k]), k))
    if len(norms):
        flat = int(np.argmax(norms.max(axis=0)))
        rep.worst_sample_index = flat
        rep.worst_point = _encode_point(points[flat])
    return rep


def verify_relations(rels: RelationSet, sampler: Sampler, n_samples: int = 100, tol: float = 1e-9,
                     seed: int = 0, points: np.ndarray | None = None) -> VerificationReport:
    """Evaluate every relation at sampled points; operator-norm residuals per relation."""
    labels = [format_poly(p) for p in rels.relations]
    return _report(rels.space_id, rels.N, labels, list(rels.relations), sampler, n_samples, tol, seed,
                   rels.word_length_bound, points)


def check_identities(triples: Sequence, sampler: Sampler, n_samples: int = 100, tol: float = 1e-9,
                     seed: int = 0, space: str = "identities", points: np.ndarray | None = None) -> VerificationReport:
    """Residuals of lhs - rhs for (label, lhs, rhs) triples."""
    polys = [lhs - rhs for _, lhs, rhs in triples]
    N = sampler.N
    labels = ["%s == %s" % (lab, format_poly(rhs)) for lab, _, rhs in triples]
    return _report(space, N, labels, polys, sampler, n_samples, tol, seed, points=points)


def check_model_identity(lhs: Polynomial, rhs: Polynomial, sampler: Sampler, n_samples: int = 100,
                         tol: float = 1e-9, seed: int = 0) -> VerificationReport:
    return check_identities([(format_poly(lhs), lhs, rhs)], sampler, n_samples, tol, seed)


# ---------------------------------------------------------------------------
# irreducibility


def commutant_dimension(mats: Sequence[np.ndarray], tol: float = 1e-9, dim: int | None = None) -> int:
    """dim {Y : YA = AY and YA* = A*Y for all A}, by SVD of the stacked linear system."""
    mats = [np.asarray(a, dtype=complex) for a in mats]
    if not mats:
        if dim is None:
            raise ValueError("dimension required for an empty family")
        return dim * dim
    d = mats[0].shape[0]
    eye = np.eye(d)
    rows = []
    for a in mats:
        if a.shape != (d, d):
            raise ValueError("all matrices must be square of the same size")
        for b in (a, a.conj().T):
            # column-major vec: vec(BY) = (I kron B) vec Y, vec(YB) = (B^T kron I) vec Y
            rows.append(np.kron(eye, b) - np.kron(b.T, eye))
    s = np.linalg.svd(np.vstack(rows), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return d * d
    return int(d * d - np.count_nonzero(s > tol * s[0]))


def default_phases(K: int, offset: float = 0.3) -> np.ndarray:
    return np.exp(1j * (2 * np.pi * np.arange(K) / K + offset))


def irrep_point(N: int, K: int, phases: Sequence[complex] | None = None) -> SamplePoint:
    """x_c = (1, xi_c, ...)/sqrt(N) with distinct unimodular xi_c; leftover mass on coordinate 3."""
    if N < 2:
        raise ValueError("irrep_point needs N >= 2")
    xi = default_phases(K) if phases is None else np.asarray(phases, dtype=complex)
    if xi.shape != (K,):
        raise ValueError("need exactly K phases")
    if np.max(np.abs(np.abs(xi) - 1)) > 1e-12:
        raise ValueError("phases must be unimodular")
    for a in range(K):
        for b in range(a):
            if abs(xi[a] - xi[b]) < 1e-9:
                raise ValueError("phases must be pairwise distinct")
    v = np.zeros((K, N), dtype=complex)
    v[:, 0] = 1 / np.sqrt(N)
    v[:, 1] = xi / np.sqrt(N)
    if N > 2:
        v[:, 2] = np.sqrt(1 - 2 / N)
    return SamplePoint(v)


def irrep_commutant(N: int, K: int, phases=None, tol: float = 1e-9) -> int:
    x = irrep_point(N, K, phases)
    mats = [eval_word((letter(1),), x), eval_word((letter(2),), x)]
    return commutant_dimension(mats, tol)
