"""Kronecker pencils V -> W and the splitting type of their kernel bundle on P^1.

The kernel bundle E of v (x) f -> Psi0(v) (x) z f - Psi1(v) (x) f has
h0(E(n)) equal to the kernel dimension of that map from V (x) P_n to
W (x) P_{n+1}, with P_n the polynomials of degree <= n. The splitting type
is read off the jumps a_n = h0(E(n)) - h0(E(n-1)) = #{i : d_i >= -n}.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from sympy import QQ_I
from sympy.polys.matrices import DomainMatrix

from .exact import exact_matrix, exact_rank, matrix_to_strings, nonzero_entries
from .exceptions import BudgetExceeded, InvalidInput, NotPreinjective, ShapeMismatch

MAX_W = 8


@dataclass(frozen=True, eq=False)
class KroneckerPencil:
    psi0: DomainMatrix
    psi1: DomainMatrix

    def __post_init__(self):
        for m in (self.psi0, self.psi1):
            if not isinstance(m, DomainMatrix) or m.domain != QQ_I:
                raise ShapeMismatch("pencil matrices must be QQ_I DomainMatrix instances")
        if self.psi0.shape != self.psi1.shape:
            raise ShapeMismatch(f"psi0 is {self.psi0.shape} but psi1 is {self.psi1.shape}")

    @property
    def w(self) -> int:
        return self.psi0.shape[0]

    @property
    def v(self) -> int:
        return self.psi0.shape[1]

    def __eq__(self, other):
        return isinstance(other, KroneckerPencil) and self.psi0 == other.psi0 and self.psi1 == other.psi1

    @classmethod
    def from_lists(cls, psi0, psi1, v: int | None = None, w: int | None = None) -> "KroneckerPencil":
        w = len(psi0) if w is None else w
        if v is None:
            if not psi0 or not psi0[0]:
                raise ShapeMismatch("cannot infer v from an empty matrix; pass v explicitly")
            v = len(psi0[0])
        return cls(exact_matrix(psi0, (w, v)), exact_matrix(psi1, (w, v)))

    def to_dict(self) -> dict:
        return {"v": self.v, "w": self.w, "psi0": matrix_to_strings(self.psi0),
                "psi1": matrix_to_strings(self.psi1)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "KroneckerPencil":
        try:
            return cls.from_lists(d["psi0"], d["psi1"], d.get("v"), d.get("w"))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed pencil JSON: {exc}") from exc


def direct_sum(p: KroneckerPencil, q: KroneckerPencil) -> KroneckerPencil:
    def block(a, b):
        top = a.hstack(DomainMatrix.zeros((a.shape[0], b.shape[1]), QQ_I))
        bot = DomainMatrix.zeros((b.shape[0], a.shape[1]), QQ_I).hstack(b)
        return top.vstack(bot)

    return KroneckerPencil(block(p.psi0, q.psi0), block(p.psi1, q.psi1))


def shift_pencil(d: int) -> KroneckerPencil:
    """v = d + 1, w = d with psi0 = [I | 0], psi1 = [0 | I]; its kernel is O(-d)."""
    psi0 = [[1 if c == r else 0 for c in range(d + 1)] for r in range(d)]
    psi1 = [[1 if c == r + 1 else 0 for c in range(d + 1)] for r in range(d)]
    return KroneckerPencil.from_lists(psi0, psi1, v=d + 1, w=d)


def trivial_pencil(v: int) -> KroneckerPencil:
    return KroneckerPencil.from_lists([], [], v=v, w=0)


def random_pencil(v: int, w: int, seed, pool: int = 3) -> KroneckerPencil:
    rng = np.random.default_rng(seed)
    raw = rng.integers(-pool, pool + 1, size=(2, w, v, 2))
    mats = [[[QQ_I(int(raw[s, r, c, 0]), int(raw[s, r, c, 1])) for c in range(v)] for r in range(w)]
            for s in range(2)]
    return KroneckerPencil(exact_matrix(mats[0], (w, v)), exact_matrix(mats[1], (w, v)))


def is_preinjective(p: KroneckerPencil) -> bool:
    """lambda0 psi0 + lambda1 psi1 surjective at every point of P^1."""
    v, w = p.v, p.w
    if w == 0:
        return True
    if v < w:
        return False
    if w > MAX_W:
        raise BudgetExceeded(f"w = {w} exceeds the minor enumeration cap {MAX_W}")
    ring = QQ_I["l0", "l1"]
    l0, l1 = ring.gens
    rows0, rows1 = p.psi0.to_list(), p.psi1.to_list()
    pencil = [[l0 * ring.convert(a) + l1 * ring.convert(b) for a, b in zip(r0, r1)]
              for r0, r1 in zip(rows0, rows1)]
    g = ring.zero
    for cols in combinations(range(v), w):
        sub = DomainMatrix([[row[c] for c in cols] for row in pencil], (w, w), ring)
        g = ring.gcd(g, sub.det())
        if g != ring.zero and g.is_ground:
            return True
    return False


def _section_matrix(p: KroneckerPencil, n: int):
    v, w = p.v, p.w
    entries = {}
    minus = QQ_I(-1)
    for k in range(n + 1):
        for key, val in nonzero_entries(p.psi0, (k + 1) * w, k * v):
            entries[key] = val
        for key, val in nonzero_entries(p.psi1, k * w, k * v, scale=minus):
            entries[key] = entries.get(key, QQ_I(0)) + val
    return {k: x for k, x in entries.items() if x}, ((n + 2) * w, (n + 1) * v)


def h0(p: KroneckerPencil, n: int) -> int:
    """h0(E(n)) for n >= 0."""
    if n < 0:
        raise InvalidInput("h0 is only computed for n >= 0")
    entries, shape = _section_matrix(p, n)
    return shape[1] - exact_rank(entries, shape)


@dataclass(frozen=True)
class SplittingType:
    degrees: tuple

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(sorted((int(d) for d in self.degrees), reverse=True)))

    @property
    def rank(self) -> int:
        return len(self.degrees)

    @property
    def degree(self) -> int:
        return sum(self.degrees)

    def to_dict(self) -> dict:
        return {"degrees": list(self.degrees)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "SplittingType":
        return cls(tuple(d["degrees"]))


def splitting_type(p: KroneckerPencil, *, check: bool = True) -> SplittingType:
    if check and not is_preinjective(p):
        raise NotPreinjective("the pencil drops rank somewhere on P^1")
    r = p.v - p.w
    degrees: list[int] = []
    prev_h, prev_a = 0, 0
    n = 0
    while prev_a < r:
        if n > p.w + 1:
            raise RuntimeError("splitting recovery did not stabilize; is the pencil preinjective?")
        cur_h = h0(p, n)
        a_n = cur_h - prev_h
        degrees += [-n] * (a_n - prev_a)
        prev_h, prev_a = cur_h, a_n
        n += 1
    st = SplittingType(tuple(degrees))
    if st.rank != r or st.degree != -p.w or any(d > 0 for d in st.degrees):
        raise RuntimeError(f"inconsistent splitting {st.degrees} for v={p.v}, w={p.w}")
    return st


@dataclass(frozen=True)
class BundleInvariants:
    rank: int
    degree: int
    dual_globally_generated: bool

    def to_dict(self) -> dict:
        return {"rank": self.rank, "degree": self.degree, "dual_globally_generated": self.dual_globally_generated}


def bundle_invariants(p: KroneckerPencil) -> BundleInvariants:
    st = splitting_type(p)
    return BundleInvariants(st.rank, st.degree, all(d <= 0 for d in st.degrees))
