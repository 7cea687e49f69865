"""Colored partitions, their category operations, and the maps T_pi.

Legs are numbered 0..k-1 along the upper row (left to right), then k..k+l-1
along the lower row.  Colors are ``"w"`` (white) and ``"b"`` (black).  T_pi
maps the upper tensor power to the lower one; tensor indices are row-major
with the leftmost leg most significant.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import UnitaryTuple, coefficient_blocks

DEFAULT_SIZE_CAP = 10**5
COLORS = ("w", "b")


def size_cap() -> int:
    return int(os.environ.get("HALFLIB_SIZE_CAP", DEFAULT_SIZE_CAP))


class SizeCapExceeded(ValueError):
    pass


def _flip(c: str) -> str:
    return "b" if c == "w" else "w"


@dataclass(frozen=True)
class ColoredPartition:
    upper: tuple
    lower: tuple
    blocks: tuple

    def __post_init__(self):
        up, lo = tuple(self.upper), tuple(self.lower)
        if any(c not in COLORS for c in up + lo):
            raise ValueError("colors must be 'w' or 'b'")
        blocks = tuple(sorted(tuple(sorted(b)) for b in self.blocks if len(b)))
        legs = [x for b in blocks for x in b]
        if sorted(legs) != list(range(len(up) + len(lo))):
            raise ValueError("blocks must cover every leg exactly once")
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "blocks", blocks)

    @property
    def k(self) -> int:
        return len(self.upper)

    @property
    def l(self) -> int:
        return len(self.lower)

    @property
    def legs(self) -> int:
        return self.k + self.l

    def __str__(self) -> str:
        return format_partition(self)


def _canonical(upper: tuple, lower: tuple, blocks: tuple) -> ColoredPartition:
    """Skip validation for blocks already in canonical form (internal fast path)."""
    p = object.__new__(ColoredPartition)
    object.__setattr__(p, "upper", upper)
    object.__setattr__(p, "lower", lower)
    object.__setattr__(p, "blocks", blocks)
    return p


@dataclass(frozen=True)
class CompositionResult:
    partition: ColoredPartition
    removed_loops: int


def identity(color: str = "w", n: int = 1) -> ColoredPartition:
    """Identity on a row of colors: ``identity("w", 2)`` or ``identity("wb")``."""
    cols = (color,) * n if color in COLORS else tuple(color)
    m = len(cols)
    return ColoredPartition(cols, cols, tuple((x, m + x) for x in range(m)))


def empty_partition() -> ColoredPartition:
    return ColoredPartition((), (), ())


def tensor(p: ColoredPartition, q: ColoredPartition) -> ColoredPartition:
    k1, k2 = p.k, q.k
    l1 = p.l

    def mp(x):
        return x if x < k1 else k1 + k2 + (x - k1)

    def mq(x):
        return k1 + x if x < k2 else k1 + k2 + l1 + (x - k2)

    blocks = [tuple(mp(x) for x in b) for b in p.blocks] + [tuple(mq(x) for x in b) for b in q.blocks]
    return ColoredPartition(p.upper + q.upper, p.lower + q.lower, tuple(blocks))


def compose(p: ColoredPartition, q: ColoredPartition) -> CompositionResult:
    """Stack q below p, glue p's lower row to q's upper row, drop closed middle blocks."""
    if p.lower != q.upper:
        raise ValueError("cannot compose: lower row %s does not match upper row %s"
                         % ("".join(p.lower), "".join(q.upper)))
    k, l = p.k, p.l
    # lab[x]: component label of p-leg x (upper legs, then middle legs)
    lab = [0] * (k + l)
    for bi, b in enumerate(p.blocks):
        for x in b:
            lab[x] = bi
    nxt = len(p.blocks)
    lower = []  # (result leg, label) for q's lower legs
    for b in q.blocks:
        mids = {lab[k + y] for y in b if y < l}
        if not mids:
            tgt, nxt = nxt, nxt + 1
        else:
            tgt = min(mids)
            if len(mids) > 1:
                lab = [tgt if a in mids else a for a in lab]
                lower = [(x, tgt if a in mids else a) for x, a in lower]
        lower.extend((k + y - l, tgt) for y in b if y >= l)
    comps: dict = {}
    for x in range(k):
        comps.setdefault(lab[x], []).append(x)
    for x, a in sorted(lower):
        comps.setdefault(a, []).append(x)
    # blocks come out sorted by least leg, legs ascending within each block
    labels = set(lab) | {a for _, a in lower}
    return CompositionResult(_canonical(p.upper, q.lower, tuple(tuple(c) for c in comps.values())),
                             len(labels) - len(comps))


def involution(p: ColoredPartition) -> ColoredPartition:
    """Upside-down turn with colors reversed."""
    k, l = p.k, p.l

    def mv(x):
        return l + x if x < k else x - k

    return ColoredPartition(tuple(_flip(c) for c in p.lower), tuple(_flip(c) for c in p.upper),
                            tuple(tuple(mv(x) for x in b) for b in p.blocks))


def t_map(p: ColoredPartition, N: int, cap: int | None = None) -> np.ndarray:
    """0/1 matrix of shape (N^l, N^k): entry (j, i) is 1 iff (i, j) is constant on every block."""
    cap = size_cap() if cap is None else cap
    n = p.legs
    if N ** n > cap:
        raise SizeCapExceeded("T_pi would have %d entries (cap %d)" % (N ** n, cap))
    if n == 0:
        return np.ones((1, 1))
    idx = np.indices((N,) * n).reshape(n, -1)
    ok = np.ones(idx.shape[1], dtype=bool)
    for b in p.blocks:
        for x in b[1:]:
            ok &= idx[x] == idx[b[0]]
    arr = ok.reshape((N,) * n).astype(float)
    # axes: upper legs then lower legs -> (lower, upper)
    arr = np.moveaxis(arr, list(range(p.k)), list(range(p.l, n)))
    return arr.reshape(N ** p.l, N ** p.k)


# ---------------------------------------------------------------------------
# pairings


def charge(row: str, color: str) -> int:
    """+1 for white-upper and black-lower legs, -1 otherwise."""
    return (1 if color == "w" else -1) * (1 if row == "upper" else -1)


def _boundary_position(p_k: int, p_l: int, leg: int) -> int:
    # upper row left->right, then lower row right->left
    return leg if leg < p_k else p_k + (p_l - 1 - (leg - p_k))


def is_noncrossing(p: ColoredPartition) -> bool:
    pos = [[_boundary_position(p.k, p.l, x) for x in b] for b in p.blocks]
    for a, b in itertools.combinations(pos, 2):
        for x1, x2 in itertools.combinations(sorted(a), 2):
            for y1, y2 in itertools.combinations(sorted(b), 2):
                if x1 < y1 < x2 < y2 or y1 < x1 < y2 < x2:
                    return False
    return True


def is_color_matching_pairing(p: ColoredPartition) -> bool:
    cols = [("upper", c) for c in p.upper] + [("lower", c) for c in p.lower]
    return all(len(b) == 2 and sum(charge(*cols[x]) for x in b) == 0 for b in p.blocks)


def _perfect_matchings(legs: list):
    if not legs:
        yield []
        return
    a = legs[0]
    for k in range(1, len(legs)):
        rest = legs[1:k] + legs[k + 1:]
        for m in _perfect_matchings(rest):
            yield [(a, legs[k])] + m


def enumerate_pairings(upper: Sequence[str], lower: Sequence[str] = (), matching_only: bool = True,
                       noncrossing_only: bool = False) -> list:
    up, lo = tuple(upper), tuple(lower)
    n = len(up) + len(lo)
    if n % 2:
        raise ValueError("odd number of legs has no pairings")
    out = []
    for m in _perfect_matchings(list(range(n))):
        p = ColoredPartition(up, lo, tuple(m))
        if matching_only and not is_color_matching_pairing(p):
            continue
        if noncrossing_only and not is_noncrossing(p):
            continue
        out.append(p)
    return out


def span_dimension(ps: Iterable[ColoredPartition], N: int, rtol: float = 1e-9) -> int:
    ps = list(ps)
    if not ps:
        return 0
    shapes = {(p.upper, p.lower) for p in ps}
    if len(shapes) != 1:
        raise ValueError("partitions must share rows and colors")
    rows = np.array([t_map(p, N).ravel() for p in ps])
    s = np.linalg.svd(rows, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


# ---------------------------------------------------------------------------
# closure


def closure(generators: Iterable[ColoredPartition], max_legs: int) -> list:
    """Smallest family holding the generators and the colored identities that is
    stable under tensor, composition and involution, keeping only partitions with
    at most ``max_legs`` legs (intermediates beyond the bound are discarded)."""
    found: dict = {}
    by_upper: dict = {}
    by_lower: dict = {}
    by_legs: dict = {}
    queue: list = []

    def add(x: ColoredPartition):
        if x.legs > max_legs or x in found:
            return
        found[x] = None
        by_upper.setdefault(x.upper, []).append(x)
        by_lower.setdefault(x.lower, []).append(x)
        by_legs.setdefault(x.legs, []).append(x)
        queue.append(x)

    for g in list(generators) + [identity("w"), identity("b")]:
        add(g)
    head = 0
    while head < len(queue):
        x = queue[head]
        head += 1
        add(involution(x))
        for n in range(0, max_legs - x.legs + 1):
            for y in list(by_legs.get(n, ())):
                add(tensor(x, y))
                add(tensor(y, x))
        for y in list(by_upper.get(x.lower, ())):
            add(compose(x, y).partition)
        for y in list(by_lower.get(x.upper, ())):
            add(compose(y, x).partition)
    return sorted(found, key=lambda p: (p.legs, p.k, p.upper, p.lower, p.blocks))


# ---------------------------------------------------------------------------
# intertwiners


def _colored_power(blocks: np.ndarray, colors: Sequence[str]) -> np.ndarray:
    N, K = blocks.shape[0], blocks.shape[2]
    bar = blocks.conj().transpose(0, 1, 3, 2)  # block (i, j) -> u_ij^*
    v = np.eye(K, dtype=complex)[None, None]
    for c in colors:
        x = blocks if c == "w" else bar
        v = np.einsum("IJab,ijbc->IiJjac", v, x)
        n = v.shape[0] * v.shape[1]
        v = v.reshape(n, n, K, K)
    n = v.shape[0]
    return v.transpose(0, 2, 1, 3).reshape(n * K, n * K)


def intertwiner_residual(p: ColoredPartition, models: Sequence, cap: int | None = None) -> float:
    """max over models of ||(T_p x 1) u^{upper} - u^{lower} (T_p x 1)||.

    Each model is a UnitaryTuple (or a (K, N, N) array); a white leg carries u
    and a black leg carries ubar, whose (i, j) entry is the adjoint of u_ij.
    """
    worst = 0.0
    for g in models:
        blocks = coefficient_blocks(g if isinstance(g, UnitaryTuple) else UnitaryTuple(g))
        N, K = blocks.shape[0], blocks.shape[2]
        T = t_map(p, N, cap)
        if max(N ** p.k, N ** p.l) * K > (cap or size_cap()):
            raise SizeCapExceeded("tensor power too large")
        TK = np.kron(T, np.eye(K))
        up = _colored_power(blocks, p.upper)
        lo = _colored_power(blocks, p.lower)
        worst = max(worst, float(np.linalg.norm(TK @ up - lo @ TK, 2)))
    return worst


# ---------------------------------------------------------------------------
# presets and text format


def unk_crossing(K: int) -> ColoredPartition:
    """All-white partition in P(2K, 2K) joining upper leg a to lower leg a + K mod 2K."""
    n = 2 * K
    return ColoredPartition(("w",) * n, ("w",) * n, tuple((a, n + (a + K) % n) for a in range(n)))


def u_inf_gen1() -> ColoredPartition:
    return parse_partition("wbbw / bwwb ; u1 d3 ; u2 d4 ; u3 d1 ; u4 d2")


def u_inf_gen2() -> ColoredPartition:
    return parse_partition("wbwb / wbwb ; u1 d3 ; u2 d4 ; u3 d1 ; u4 d2")


def preset(name: str, K: int = 2) -> ColoredPartition:
    if name == "u_inf_gen1":
        return u_inf_gen1()
    if name == "u_inf_gen2":
        return u_inf_gen2()
    if name == "unk_crossing":
        return unk_crossing(K)
    raise ValueError("unknown partition preset %r" % name)


PRESETS = ("u_inf_gen1", "u_inf_gen2", "unk_crossing")


def parse_partition(text: str) -> ColoredPartition:
    """``"wb / wb ; u1 d1 ; u2 d2"``: color rows, then blocks of legs u<i> / d<j> (1-based)."""
    parts = [s.strip() for s in text.split(";")]
    rows = parts[0].split("/")
    if len(rows) != 2:
        raise ValueError("expected 'upper / lower' color rows")
    up, lo = rows[0].strip(), rows[1].strip()
    k = len(up)
    blocks = []
    for part in parts[1:]:
        if not part:
            continue
        legs = []
        for tok in part.split():
            if tok[0] == "u":
                legs.append(int(tok[1:]) - 1)
            elif tok[0] == "d":
                legs.append(k + int(tok[1:]) - 1)
            else:
                raise ValueError("bad leg %r" % tok)
        blocks.append(tuple(legs))
    return ColoredPartition(tuple(up), tuple(lo), tuple(blocks))


def format_partition(p: ColoredPartition) -> str:
    def name(x):
        return "u%d" % (x + 1) if x < p.k else "d%d" % (x - p.k + 1)

    head = "%s / %s" % ("".join(p.upper), "".join(p.lower))
    return " ; ".join([head] + [" ".join(name(x) for x in b) for b in p.blocks])


def set_partitions(n: int):
    """All set partitions of range(n), as tuples of blocks (restricted growth order)."""
    if n == 0:
        yield ()
        return
    for rgs in _rgs(n):
        blocks: dict = {}
        for x, b in enumerate(rgs):
            blocks.setdefault(b, []).append(x)
        yield tuple(tuple(v) for v in blocks.values())


def _rgs(n):
    def rec(prefix, mx):
        if len(prefix) == n:
            yield prefix
            return
        for b in range(mx + 2):
            yield from rec(prefix + [b], max(mx, b))

    yield from rec([0], 0)


def all_partitions(k: int, l: int, upper=None, lower=None) -> list:
    up = tuple(upper) if upper is not None else ("w",) * k
    lo = tuple(lower) if lower is not None else ("w",) * l
    return [ColoredPartition(up, lo, b) for b in set_partitions(k + l)]
