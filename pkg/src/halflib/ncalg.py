"""Free *-polynomials in sphere coordinates z_i or quantum group coordinates u_ij.

Words are tuples of :class:`Letter`; a :class:`Polynomial` is an immutable map
from words to complex coefficients kept in lexicographic word order.  Nothing
here reduces modulo relations: identities are checked numerically through
:mod:`halflib.model`.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence, Union

Index = Union[int, tuple[int, int]]


class Letter(NamedTuple):
    index: Index
    starred: bool = False

    def star(self) -> "Letter":
        return Letter(self.index, not self.starred)

    def __str__(self) -> str:
        if isinstance(self.index, tuple):
            s = "u%d,%d" % self.index
        else:
            s = "z%d" % self.index
        return s + "*" if self.starred else s


Word = tuple  # tuple[Letter, ...]; the empty tuple is the unit

_letter_cache: dict = {}


def letter(index: Index, starred: bool = False) -> Letter:
    key = (index, starred)
    lt = _letter_cache.get(key)
    if lt is None:
        lt = _letter_cache[key] = Letter(index, starred)
    return lt


def _index_max(index: Index) -> int:
    return max(index) if isinstance(index, tuple) else index


def _index_min(index: Index) -> int:
    return min(index) if isinstance(index, tuple) else index


def word_adjoint(w: Word) -> Word:
    return tuple(letter(lt.index, not lt.starred) for lt in reversed(w))


def word_str(w: Word) -> str:
    return " ".join(str(lt) for lt in w) if w else "1"


def is_quantum_word(w: Word) -> bool:
    return bool(w) and isinstance(w[0].index, tuple)


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Complex linear combination of words.

    ``n`` is the ambient dimension (number of z's, or the N of u_ij); it may be
    left as ``None`` for polynomials that are not tied to a dimension.
    """

    terms: dict = field(default_factory=dict)
    n: int | None = None

    def __post_init__(self):
        clean = {}
        for w, c in self.terms.items():
            c = complex(c)
            if c != 0:
                clean[tuple(w)] = c
        ordered = dict(sorted(clean.items()))
        if self.n is not None:
            for w in ordered:
                for lt in w:
                    if _index_min(lt.index) < 1 or _index_max(lt.index) > self.n:
                        raise ValueError("letter %s outside ambient dimension %d" % (lt, self.n))
        object.__setattr__(self, "terms", ordered)

    # construction helpers
    @classmethod
    def from_word(cls, w: Iterable[Letter], coeff: complex = 1, n: int | None = None) -> "Polynomial":
        return cls({tuple(w): coeff}, n)

    @classmethod
    def one(cls, n: int | None = None) -> "Polynomial":
        return cls({(): 1}, n)

    @classmethod
    def zero(cls, n: int | None = None) -> "Polynomial":
        return cls({}, n)

    def _merge_n(self, other: "Polynomial") -> int | None:
        if self.n is not None and other.n is not None and self.n != other.n:
            raise ValueError("ambient dimension mismatch: %d vs %d" % (self.n, other.n))
        return self.n if self.n is not None else other.n

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.one(self.n) * other
        n = self._merge_n(other)
        terms = dict(self.terms)
        for w, c in other.terms.items():
            terms[w] = terms.get(w, 0) + c
        return Polynomial(terms, n)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({w: -c for w, c in self.terms.items()}, self.n)

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.one(self.n) * other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return multiply(self, other)
        c = complex(other)
        return Polynomial({w: c * v for w, v in self.terms.items()}, self.n)

    def __rmul__(self, other):
        c = complex(other)
        return Polynomial({w: c * v for w, v in self.terms.items()}, self.n)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    def words(self) -> list:
        return list(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __str__(self) -> str:
        return format_poly(self)

    def __repr__(self) -> str:
        return "Polynomial(%r)" % format_poly(self)


def adjoint(p: Polynomial) -> Polynomial:
    return Polynomial({word_adjoint(w): c.conjugate() for w, c in p.terms.items()}, p.n)


def multiply(p: Polynomial, q: Polynomial) -> Polynomial:
    n = p._merge_n(q)
    terms: dict = {}
    for w1, c1 in p.terms.items():
        for w2, c2 in q.terms.items():
            w = w1 + w2
            terms[w] = terms.get(w, 0) + c1 * c2
    return Polynomial(terms, n)


def commutator(p: Polynomial, q: Polynomial) -> Polynomial:
    return multiply(p, q) - multiply(q, p)


def z(i: int, starred: bool = False, n: int | None = None) -> Polynomial:
    return Polynomial.from_word((letter(i, starred),), n=n)


def u(i: int, j: int, starred: bool = False, n: int | None = None) -> Polynomial:
    return Polynomial.from_word((letter((i, j), starred),), n=n)


def zword(indices: Sequence[int], starred: bool | Sequence[bool] = False) -> Word:
    if isinstance(starred, bool):
        starred = [starred] * len(indices)
    return tuple(letter(i, s) for i, s in zip(indices, starred))


# ---------------------------------------------------------------------------
# grading


def grading_degree(w: Word, K: int) -> int:
    """Exponent j such that z_i -> omega z_i scales ``w`` by omega**j, omega**K = 1."""
    if K < 1:
        raise ValueError("K must be >= 1")
    d = sum(-1 if lt.starred else 1 for lt in w)
    return d % K


def delta_membership(w: Word, K: int) -> bool:
    return grading_degree(w, K) == 0


def grade_project(p: Polynomial, K: int, j: int) -> Polynomial:
    if not 0 <= j < K:
        raise ValueError("grade must satisfy 0 <= j < K")
    return Polynomial({w: c for w, c in p.terms.items() if grading_degree(w, K) == j}, p.n)


def is_homogeneous(p: Polynomial, K: int) -> bool:
    return len({grading_degree(w, K) for w in p.terms}) <= 1


def gamma(p: Polynomial, N: int) -> Polynomial:
    """sum_i z_i p z_i^*, with no relations applied."""
    terms: dict = {}
    for i in range(1, N + 1):
        a, b = (letter(i, False),), (letter(i, True),)
        for w, c in p.terms.items():
            key = a + w + b
            terms[key] = terms.get(key, 0) + c
    return Polynomial(terms, N if p.n is None else p.n)


def standard_identity_instance(words: Sequence) -> Polynomial:
    """Alternating sum over all orderings of the given words (the standard polynomial)."""
    ws = [tuple(w.words()[0]) if isinstance(w, Polynomial) else tuple(w) for w in words]
    if len(ws) % 2:
        raise ValueError("standard polynomial needs an even number (2K) of words")
    terms: dict = {}
    for perm in itertools.permutations(range(len(ws))):
        sign = _perm_sign(perm)
        key = tuple(itertools.chain.from_iterable(ws[k] for k in perm))
        terms[key] = terms.get(key, 0) + sign
    return Polynomial(terms)


def _perm_sign(perm: Sequence[int]) -> int:
    sign, seen = 1, [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length, k = 0, start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


# ---------------------------------------------------------------------------
# relation presets

SPACE_IDS = (
    "classical_sphere",
    "free_complex_sphere",
    "k_half_sphere",
    "star_half_sphere",
    "double_star_half_sphere",
    "strong_infinity_sphere",
    "delta_infinity_sphere",
    "unk_quantum_group",
    "u_infinity_quantum_group",
)
QUANTUM_SPACES = ("unk_quantum_group", "u_infinity_quantum_group")


@dataclass(frozen=True)
class RelationSet:
    space_id: str
    N: int
    K: int
    relations: tuple
    word_length_bound: int | None = None

    @property
    def is_quantum(self) -> bool:
        return self.space_id in QUANTUM_SPACES

    def __len__(self):
        return len(self.relations)


def _w(lts) -> Word:
    return tuple(lts)


def _comm(a: Word, b: Word, n: int) -> Polynomial:
    return Polynomial({a + b: 1, b + a: -1} if a + b != b + a else {}, n)


def _pairwise_commutators(words: Sequence[Word], n: int, bound: int | None = None) -> list:
    rels = []
    for x, y in itertools.combinations(words, 2):
        if bound is not None and len(x) + len(y) > bound:
            continue
        p = _comm(x, y, n)
        if not p.is_zero():
            rels.append(p)
    return rels


def sphere_normalization(N: int) -> list:
    a = Polynomial({(letter(i), letter(i, True)): 1 for i in range(1, N + 1)}, N) - 1
    b = Polynomial({(letter(i, True), letter(i)): 1 for i in range(1, N + 1)}, N) - 1
    return [a, b]


def unitary_relations(N: int) -> list:
    """Entries of uu* - 1, u*u - 1, u^t ubar - 1, ubar u^t - 1."""
    rels = []
    rng = range(1, N + 1)
    for i in rng:
        for k in rng:
            d = 1 if i == k else 0
            for pairs in (
                [(letter((i, j)), letter((k, j), True)) for j in rng],
                [(letter((j, i), True), letter((j, k))) for j in rng],
                [(letter((j, i)), letter((j, k), True)) for j in rng],
                [(letter((i, j), True), letter((k, j))) for j in rng],
            ):
                rels.append(Polynomial({w: 1 for w in pairs}, N) - d)
    return list(dict.fromkeys(rels))


def block_words(N: int, K: int, starred: bool = False) -> list:
    """All z_{i_1}...z_{i_K} (or z_{i_1}^*...z_{i_K}^* with ``starred``)."""
    return [zword(t, starred) for t in itertools.product(range(1, N + 1), repeat=K)]


def delta_infinity_words(N: int, max_len: int) -> list:
    out = []
    for length in range(2, max_len + 1, 2):
        for stars in itertools.product((False, True), repeat=length):
            if sum(stars) * 2 != length:
                continue
            for idx in itertools.product(range(1, N + 1), repeat=length):
                out.append(zword(idx, stars))
    return out


def relation_preset(space_id: str, N: int, K: int = 1, word_length_bound: int | None = None) -> RelationSet:
    """Defining relations of a named space, enumerated over all index tuples.

    ``word_length_bound`` caps the total word length of commutator relations
    (only binding for the infinitely presented ``delta_infinity_sphere``).
    """
    if space_id not in SPACE_IDS:
        raise ValueError("unknown space %r" % space_id)
    if N < 1:
        raise ValueError("N must be >= 1")
    if K < 1:
        raise ValueError("unsupported K=%d for %s" % (K, space_id))
    rels: list = []
    bound = word_length_bound
    if space_id in QUANTUM_SPACES:
        rels += unitary_relations(N)
    else:
        rels += sphere_normalization(N)

    if space_id == "classical_sphere":
        gens = [(letter(i, s),) for i in range(1, N + 1) for s in (False, True)]
        rels += _pairwise_commutators(gens, N)
    elif space_id == "free_complex_sphere":
        pass
    elif space_id == "k_half_sphere":
        if bound is None:
            bound = 2 * K
        if bound < 2 * K:
            raise ValueError("word_length_bound must be >= 2K for k_half_sphere")
        plain = block_words(N, K)
        rels += _pairwise_commutators(plain, N)
        for x in plain:
            for y in block_words(N, K, starred=True):
                rels.append(_comm(x, y, N))
    elif space_id == "star_half_sphere":
        for i, j, k in itertools.product(range(1, N + 1), repeat=3):
            if i < k:
                rels.append(Polynomial({zword((i, j, k), (False, True, False)): 1,
                                        zword((k, j, i), (False, True, False)): -1}, N))
    elif space_id == "double_star_half_sphere":
        gens = [letter(i, s) for i in range(1, N + 1) for s in (False, True)]
        for a, b, c in itertools.product(gens, repeat=3):
            if a < c:
                rels.append(Polynomial({(a, b, c): 1, (c, b, a): -1}, N))
    elif space_id == "strong_infinity_sphere":
        words = []
        for i, j in itertools.product(range(1, N + 1), repeat=2):
            words.append((letter(i, True), letter(j)))
            words.append((letter(j), letter(i, True)))
        words = list(dict.fromkeys(words))
        rels += _pairwise_commutators(words, N, bound)
    elif space_id == "delta_infinity_sphere":
        if bound is None:
            bound = 4
        if bound < 4:
            raise ValueError("word_length_bound must be >= 4 for delta_infinity_sphere")
        words = delta_infinity_words(N, bound - 2)
        rels += _pairwise_commutators(words, N, bound)
    elif space_id == "unk_quantum_group":
        if bound is None:
            bound = 2 * K
        if bound < 2 * K:
            raise ValueError("word_length_bound must be >= 2K for unk_quantum_group")
        gens = [(i, j) for i in range(1, N + 1) for j in range(1, N + 1)]
        words = [tuple(letter(g) for g in t) for t in itertools.product(gens, repeat=K)]
        rels += _pairwise_commutators(words, N)
    elif space_id == "u_infinity_quantum_group":
        gens = [(i, j) for i in range(1, N + 1) for j in range(1, N + 1)]
        words = []
        for a, b in itertools.product(gens, repeat=2):
            words.append((letter(a, True), letter(b)))
            words.append((letter(a), letter(b, True)))
        rels += _pairwise_commutators(list(dict.fromkeys(words)), N, bound)
    return RelationSet(space_id, N, K, tuple(rels), bound)


# ---------------------------------------------------------------------------
# identity packs: (label, lhs, rhs) triples that must hold in the K-models


def identity_pack(name: str, N: int, K: int) -> list:
    rng = range(1, N + 1)
    out = []
    if name == "gamma_rotation":
        for t in itertools.product(rng, repeat=K):
            lhs = gamma(Polynomial.from_word(zword(t), n=N), N)
            rhs = Polynomial.from_word(zword((t[-1],) + t[:-1]), n=N)
            out.append(("gamma(%s)" % word_str(zword(t)), lhs, rhs))
            # starred form: gamma(z_{iK}^*...z_{i1}^*) = z_{i(K-1)}^*...z_{i1}^* z_{iK}^*
            src = zword(tuple(reversed(t)), True)
            dst = zword(tuple(reversed(t[:-1])) + (t[-1],), True)
            out.append(("gamma(%s)" % word_str(src), gamma(Polynomial.from_word(src, n=N), N),
                        Polynomial.from_word(dst, n=N)))
    elif name == "k_half_consequences":
        zero = Polynomial.zero(N)
        for t in itertools.product(rng, repeat=K + 1):
            lhs = Polynomial.from_word(zword(t), n=N)
            rhs = Polynomial.from_word(zword((t[-1],) + t[1:-1] + (t[0],)), n=N)
            out.append(("outer swap %s" % word_str(zword(t)), lhs, rhs))
        mixed = []
        for i, j in itertools.product(rng, repeat=2):
            mixed.append((letter(i), letter(j, True)))
            mixed.append((letter(i, True), letter(j)))
        mixed = list(dict.fromkeys(mixed))
        for p in _pairwise_commutators(mixed, N):
            out.append((format_poly(p), p, zero))
        for b in block_words(N, K):
            for m in mixed:
                p = _comm(b, m, N)
                if not p.is_zero():
                    out.append((format_poly(p), p, zero))
    elif name == "unk_starred":
        zero = Polynomial.zero(N)
        gens = [(i, j) for i in rng for j in rng]
        tuples = list(itertools.product(gens, repeat=K))
        for a in tuples:
            for b in tuples:
                x = tuple(letter(g) for g in a)
                y = tuple(letter(g, True) for g in b)
                p = _comm(x, y, N)
                out.append((format_poly(p), p, zero))
    elif name == "u_infinity_inclusion":
        zero = Polynomial.zero(N)
        for p in relation_preset("u_infinity_quantum_group", N, 1).relations[len(unitary_relations(N)):]:
            out.append((format_poly(p), p, zero))
    elif name == "strong_infinity_inclusion":
        zero = Polynomial.zero(N)
        for p in relation_preset("strong_infinity_sphere", N, 1).relations[2:]:
            out.append((format_poly(p), p, zero))
    else:
        raise ValueError("unknown identity pack %r" % name)
    return out


IDENTITY_PACKS = ("gamma_rotation", "k_half_consequences", "unk_starred",
                  "u_infinity_inclusion", "strong_infinity_inclusion")


# ---------------------------------------------------------------------------
# rewriting Delta_K words into degree-K blocks


class Block(NamedTuple):
    """r_{i_1..i_K} = z_{i_1}...z_{i_K}; the starred block is its adjoint."""

    indices: tuple
    starred: bool = False

    def letters(self) -> Word:
        if self.starred:
            return zword(tuple(reversed(self.indices)), True)
        return zword(self.indices)

    def __str__(self) -> str:
        s = "r" + ",".join(map(str, self.indices))
        return s + "*" if self.starred else s


@dataclass(frozen=True)
class BlockPolynomial:
    terms: dict
    n: int
    K: int

    def expand(self) -> Polynomial:
        out: dict = {}
        for blocks, c in self.terms.items():
            w = tuple(itertools.chain.from_iterable(b.letters() for b in blocks))
            out[w] = out.get(w, 0) + c
        return Polynomial(out, self.n)

    def __len__(self):
        return len(self.terms)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for blocks, c in self.terms.items():
            body = " ".join(map(str, blocks)) or "1"
            parts.append(body if c == 1 else "%s %s" % (_fmt_coeff(c), body))
        return " + ".join(parts)


class TermBudgetExceeded(RuntimeError):
    pass


def rewrite_to_blocks(w: Word, N: int, K: int, budget: int = 10**6) -> BlockPolynomial:
    """Write a grade-zero word as a sum of products of degree-K blocks.

    Only the normalization identities sum_a z_a z_a^* = 1 = sum_a z_a^* z_a are
    inserted, so the result equals ``w`` in every model of the free sphere.
    """
    w = tuple(w)
    if not delta_membership(w, K):
        raise ValueError("word %s is not in Delta_%d" % (word_str(w), K))
    count = [0]

    def bump(m):
        count[0] += m
        if count[0] > budget:
            raise TermBudgetExceeded("rewrite exceeded term budget %d" % budget)

    def product(a: dict, b: dict) -> dict:
        out: dict = {}
        for ka, ca in a.items():
            for kb, cb in b.items():
                key = ka + kb
                out[key] = out.get(key, 0) + ca * cb
        bump(len(out))
        return out

    def balanced(word: Word) -> dict | None:
        # t unstarred followed by t starred (or the reverse), t < K
        t = len(word) // 2
        if len(word) % 2 or t == 0 or t >= K:
            return None
        head, tail = word[:t], word[t:]
        hs = {lt.starred for lt in head}
        ts = {lt.starred for lt in tail}
        if len(hs) != 1 or len(ts) != 1 or hs == ts:
            return None
        out: dict = {}
        hi = tuple(lt.index for lt in head)
        ti = tuple(lt.index for lt in tail)
        for a in itertools.product(range(1, N + 1), repeat=K - t):
            if not head[0].starred:
                # z_h z_a z_a^* ... z_tail^*  ->  r_(h,a) r_(rev tail, a)^*
                key = (Block(hi + a), Block(tuple(reversed(ti)) + a, True))
            else:
                # z_h^* z_a^* ... z_a z_tail  ->  r_(rev a, rev h)^* r_(rev a, tail)
                ra = tuple(reversed(a))
                key = (Block(ra + tuple(reversed(hi)), True), Block(ra + ti))
            out[key] = out.get(key, 0) + 1
        bump(len(out))
        return out

    def rec(word: Word) -> dict:
        if not word:
            return {(): 1}
        first = word[0].starred
        run = 0
        while run < len(word) and word[run].starred == first:
            run += 1
        if run >= K:
            head = word[:K]
            idx = tuple(lt.index for lt in head)
            blk = Block(tuple(reversed(idx)), True) if first else Block(idx)
            return product({(blk,): 1}, rec(word[K:]))
        b = balanced(word)
        if b is not None:
            return b
        # word = (t letters of one kind) (one of the other kind) x, 1 <= t < K
        t = run
        prefix, x = word[: t + 1], word[t + 1:]
        out: dict = {}
        for alpha in itertools.product(range(1, N + 1), repeat=t - 1):
            # insert sum z_a^* z_a (or z_a z_a^*), innermost index first in alpha
            mid = tuple(letter(a, not first) for a in reversed(alpha))
            back = tuple(letter(a, first) for a in alpha)
            left = balanced(prefix + mid)
            right = rec(back + x)
            for k, c in product(left, right).items():
                out[k] = out.get(k, 0) + c
        return out

    terms = {k: c for k, c in rec(w).items() if c != 0}
    return BlockPolynomial(dict(sorted(terms.items())), N, K)


# ---------------------------------------------------------------------------
# text syntax

_LETTER_RE = re.compile(r"^(z)(\d+)(\*?)$|^(u)(\d+),(\d+)(\*?)$")


def _fmt_coeff(c: complex) -> str:
    return "(%r,%r)" % (c.real, c.imag)


def parse_word(text: str) -> Word:
    text = text.strip()
    if text in ("", "1"):
        return ()
    out = []
    for tok in text.split():
        m = _LETTER_RE.match(tok)
        if not m:
            raise ValueError("bad letter %r" % tok)
        if m.group(1):
            out.append(letter(int(m.group(2)), bool(m.group(3))))
        else:
            out.append(letter((int(m.group(5)), int(m.group(6))), bool(m.group(7))))
    return tuple(out)


def parse_poly(text: str, n: int | None = None) -> Polynomial:
    """Parse e.g. ``"z1 z2* - (0,1) z2* z1 + 1"``.

    Terms are joined by ``+``/``-``; a coefficient is an optional ``(re,im)``
    prefix; ``1`` is the unit word and ``0`` the zero polynomial.
    """
    s = text.strip()
    if s == "0":
        return Polynomial.zero(n)
    terms: dict = {}
    pieces = []
    # split on +/- that are outside parentheses
    depth, start = 0, 0
    for k, ch in enumerate(s):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch in "+-" and depth == 0 and k > start and s[start:k].strip():
            pieces.append(s[start:k])
            start = k
    pieces.append(s[start:])
    for piece in pieces:
        piece = piece.strip()
        sign = 1
        if piece[:1] in "+-":
            sign = -1 if piece[0] == "-" else 1
            piece = piece[1:].strip()
        coeff = 1 + 0j
        if piece.startswith("("):
            close = piece.index(")")
            re_s, im_s = piece[1:close].split(",")
            coeff = complex(float(re_s), float(im_s))
            piece = piece[close + 1:]
        if not piece.strip():
            piece = "1"
        w = parse_word(piece)
        terms[w] = terms.get(w, 0) + sign * coeff
    return Polynomial(terms, n)


def format_poly(p: Polynomial) -> str:
    if p.is_zero():
        return "0"
    out = []
    for k, (w, c) in enumerate(p.terms.items()):
        body = word_str(w)
        if c == 1:
            txt = ("+ " if k else "") + body
        elif c == -1:
            txt = ("- " if k else "- ") + body
        else:
            txt = ("+ " if k else "") + _fmt_coeff(c) + " " + body
        out.append(txt)
    return " ".join(out)
