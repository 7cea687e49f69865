"""Pure (rank-one) tensors in (C^N)^{(x)K}.

A tensor is pure iff every single-slot exchange r_I r_J = r_L r_M holds, where
(L, M) is (I, J) with the entries of one slot swapped.  For slot m these are
exactly the 2 x 2 minors of the N x N^{K-1} unfolding along that slot, which is
how :func:`segre_residual` enumerates them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

EXHAUSTIVE_LIMIT = 4096
SAMPLED_PAIRS = 10_000


@dataclass(frozen=True)
class Tensor:
    N: int
    K: int
    data: np.ndarray  # shape (N,) * K

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        if d.size != self.N ** self.K:
            raise ValueError("tensor data has %d entries, expected N^K = %d" % (d.size, self.N ** self.K))
        d = d.reshape((self.N,) * self.K)
        if not np.all(np.isfinite(d)):
            raise ValueError("tensor entries must be finite")
        object.__setattr__(self, "data", d)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.data.ravel()))

    def to_json(self) -> str:
        flat = self.data.ravel()
        return json.dumps({"N": self.N, "K": self.K, "data": [[float(c.real), float(c.imag)] for c in flat]})

    @classmethod
    def from_json(cls, text: str) -> "Tensor":
        obj = json.loads(text)
        data = np.array([complex(re, im) for re, im in obj["data"]])
        return cls(int(obj["N"]), int(obj["K"]), data)


def _unfold(data: np.ndarray, slot: int) -> np.ndarray:
    N = data.shape[slot]
    return np.moveaxis(data, slot, 0).reshape(N, -1)


def segre_residual(t: Tensor, rng: np.random.Generator | None = None) -> float:
    """Largest |r_I r_J - r_L r_M| over single-slot exchanges.

    Exhaustive when N^K <= 4096, otherwise 10^4 random pairs of index tuples
    per slot (``rng`` defaults to a fixed seed).
    """
    data = t.data
    if t.K <= 1:
        return 0.0
    worst = 0.0
    total = t.N ** t.K
    for slot in range(t.K):
        m = _unfold(data, slot)
        cols = m.shape[1]
        if total <= EXHAUSTIVE_LIMIT:
            for i in range(t.N):
                for j in range(i + 1, t.N):
                    minors = np.outer(m[i], m[j]) - np.outer(m[j], m[i])
                    worst = max(worst, float(np.abs(minors).max()))
        else:
            rng = rng or np.random.default_rng(0)
            rows = rng.integers(0, t.N, size=(SAMPLED_PAIRS, 2))
            cc = rng.integers(0, cols, size=(SAMPLED_PAIRS, 2))
            i, j = rows[:, 0], rows[:, 1]
            a, b = cc[:, 0], cc[:, 1]
            minors = m[i, a] * m[j, b] - m[j, a] * m[i, b]
            worst = max(worst, float(np.abs(minors).max()))
    return worst


def rank_one_by_svd(t: Tensor, tol: float = 1e-6) -> bool:
    """Independent check: each split (first m slots | rest) has numerical rank 1."""
    data = t.data.ravel()
    s0 = np.linalg.norm(data)
    if s0 == 0:
        return False
    for m in range(1, t.K):
        mat = data.reshape(t.N ** m, -1)
        s = np.linalg.svd(mat, compute_uv=False)
        if len(s) > 1 and s[1] > tol * s[0]:
            return False
    return True


def is_pure_unit(t: Tensor, tol: float = 1e-9) -> bool:
    return segre_residual(t) < tol and abs(t.norm - 1) < tol


def tensor_of(vectors) -> Tensor:
    vs = [np.asarray(v, dtype=complex) for v in vectors]
    if not vs:
        raise ValueError("need at least one vector")
    N = vs[0].shape[0]
    if any(v.shape != (N,) for v in vs):
        raise ValueError("all vectors must have the same length")
    out = vs[0]
    for v in vs[1:]:
        out = np.multiply.outer(out, v)
    return Tensor(N, len(vs), out)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    mags = np.abs(v)
    first = int(np.argmax(mags > 1e-8 * mags.max()))
    return v * (abs(v[first]) / v[first])


def factorize(t: Tensor, tol: float = 1e-9) -> list:
    """Unit vectors v_1..v_K with v_1 (x) ... (x) v_K = t.

    Gauge: v_1..v_{K-1} have positive real first nonzero coordinate, v_K keeps
    the remaining phase.
    """
    if not is_pure_unit(t, tol):
        raise ValueError("tensor is not a unit pure tensor within tol=%g" % tol)
    rest = t.data.ravel()
    out = []
    for _ in range(t.K - 1):
        mat = rest.reshape(t.N, -1)
        u, _, _ = np.linalg.svd(mat, full_matrices=False)
        v = _fix_phase(u[:, 0])
        out.append(v)
        rest = v.conj() @ mat
    out.append(rest)
    return out


def cyclic_shift(t: Tensor) -> Tensor:
    """v_1 (x) ... (x) v_K  ->  v_K (x) v_1 (x) ... (x) v_{K-1}."""
    return Tensor(t.N, t.K, np.moveaxis(t.data, -1, 0))


def psi_eval(indices, x) -> complex:
    """(x_0)_{i_1} (x_1)_{i_2} ... (x_{K-1})_{i_K}, indices 1-based."""
    vecs = x.vectors if hasattr(x, "vectors") else np.asarray(x)
    if len(indices) != vecs.shape[0]:
        raise ValueError("need one index per tensor factor")
    out = 1 + 0j
    for c, i in enumerate(indices):
        if not 1 <= i <= vecs.shape[1]:
            raise ValueError("index out of range")
        out *= vecs[c, i - 1]
    return complex(out)
