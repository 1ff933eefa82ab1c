"""Exact quiver representations over the Gaussian rationals.

Hom and Ext are read off the rank of the intertwiner map
``(f_v) -> (f_head x_a - y_a f_tail)``; everything is exact.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterator, Mapping
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from joblib import Parallel, delayed
from sympy.polys.matrices import DomainMatrix

from .exact import QQ_I, exact_matrix, exact_rank, matrix_to_strings, nonzero_entries
from .exceptions import (
    BudgetExceeded,
    InvalidInput,
    QuiverMismatch,
    ShapeMismatch,
    VertexMismatch,
    ZeroDims,
)
from .quiver import (
    Quiver,
    RootClass,
    StarShape,
    build_star,
    classify_root,
    dims,
    dims_from_dict,
    dims_to_dict,
    p_value,
    tits_q,
    vertex_key,
)

DEFAULT_BUDGET = 12


@dataclass(frozen=True, eq=False)
class ExactRep:
    quiver: Quiver
    dims: dict
    mats: tuple

    def __post_init__(self):
        d = dims(self.quiver, self.dims, allow_negative=False)
        object.__setattr__(self, "dims", d)
        mats = tuple(self.mats)
        if len(mats) != len(self.quiver.arrows):
            raise ShapeMismatch(f"{len(mats)} matrices for {len(self.quiver.arrows)} arrows")
        for (t, h), m in zip(self.quiver.arrows, mats):
            if not isinstance(m, DomainMatrix) or m.domain != QQ_I:
                raise ShapeMismatch("arrow matrices must be QQ_I DomainMatrix instances")
            if m.shape != (d[h], d[t]):
                raise ShapeMismatch(f"arrow {t!r}->{h!r} needs shape {(d[h], d[t])}, got {m.shape}")
        object.__setattr__(self, "mats", mats)

    def __eq__(self, other):
        return (
            isinstance(other, ExactRep)
            and self.quiver == other.quiver
            and self.dims == other.dims
            and all(a == b for a, b in zip(self.mats, other.mats))
        )

    def to_dict(self) -> dict:
        return {
            "quiver": self.quiver.to_dict(),
            **dims_to_dict(self.dims),
            "mats": {name: matrix_to_strings(m) for name, m in zip(self.quiver.names(), self.mats)},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExactRep":
        q = Quiver.from_dict(d["quiver"])
        a = dims_from_dict(q, d)
        try:
            mats = tuple(
                exact_matrix(d["mats"][name], (a[h], a[t]))
                for name, (t, h) in zip(q.names(), q.arrows)
            )
        except (KeyError, ValueError) as exc:
            raise InvalidInput(f"malformed representation JSON: {exc}") from exc
        return cls(q, a, mats)


def zero_rep(q: Quiver, a) -> ExactRep:
    a = dims(q, a, allow_negative=False)
    return ExactRep(q, a, tuple(DomainMatrix.zeros((a[h], a[t]), QQ_I) for t, h in q.arrows))


def random_rep(q: Quiver, a, seed, pool: int = 10) -> ExactRep:
    """Entries are Gaussian integers with |re|, |im| <= pool.

    ``seed`` is anything ``numpy.random.default_rng`` accepts, so derived seeds
    such as ``(seed, shard, i)`` work.
    """
    if pool < 1:
        raise InvalidInput("pool must be >= 1")
    a = dims(q, a, allow_negative=False)
    rng = np.random.default_rng(seed)
    mats = []
    for t, h in q.arrows:
        shape = (a[h], a[t])
        raw = rng.integers(-pool, pool + 1, size=shape + (2,))
        mats.append(exact_matrix(
            [[QQ_I(int(raw[r, c, 0]), int(raw[r, c, 1])) for c in range(shape[1])] for r in range(shape[0])],
            shape,
        ))
    return ExactRep(q, a, tuple(mats))


def direct_sum(x: ExactRep, y: ExactRep) -> ExactRep:
    if x.quiver != y.quiver:
        raise QuiverMismatch("direct sum needs a common quiver")
    q = x.quiver
    d = {v: x.dims[v] + y.dims[v] for v in q.vertices}
    mats = []
    for mx, my in zip(x.mats, y.mats):
        top = mx.hstack(DomainMatrix.zeros((mx.shape[0], my.shape[1]), QQ_I))
        bot = DomainMatrix.zeros((my.shape[0], mx.shape[1]), QQ_I).hstack(my)
        mats.append(top.vstack(bot))
    return ExactRep(q, d, tuple(mats))


def _hom_map(x: ExactRep, y: ExactRep):
    """Sparse matrix of (f_v) -> (f_h x_a - y_a f_t) and its shape."""
    q = x.quiver
    a, b = x.dims, y.dims
    col0, c = {}, 0
    for v in q.vertices:
        col0[v] = c
        c += b[v] * a[v]
    entries: dict = {}
    row = 0
    minus = QQ_I(-1)
    for (t, h), xm, ym in zip(q.arrows, x.mats, y.mats):
        # equation index (r, cc) for r < b[h], cc < a[t]; f_v[i, j] -> col0[v] + i * a[v] + j
        for (k, cc), val in nonzero_entries(xm):
            for r in range(b[h]):
                key = (row + r * a[t] + cc, col0[h] + r * a[h] + k)
                entries[key] = entries.get(key, QQ_I(0)) + val
        for (r, k), val in nonzero_entries(ym, scale=minus):
            for cc in range(a[t]):
                key = (row + r * a[t] + cc, col0[t] + k * a[t] + cc)
                entries[key] = entries.get(key, QQ_I(0)) + val
        row += b[h] * a[t]
    return entries, (row, c)


def hom_ext_dims(x: ExactRep, y: ExactRep) -> tuple[int, int]:
    if x.quiver != y.quiver:
        raise QuiverMismatch("representations live on different quivers")
    entries, shape = _hom_map(x, y)
    r = exact_rank({k: v for k, v in entries.items() if v}, shape)
    return shape[1] - r, shape[0] - r


def stabilizer_dim(x: ExactRep) -> int:
    if all(v == 0 for v in x.dims.values()):
        raise ZeroDims("stabilizer of the zero-dimensional representation is undefined")
    return hom_ext_dims(x, x)[0] - 1


# -- census ---------------------------------------------------------------------

@dataclass(frozen=True)
class CensusResult:
    histogram: dict
    samples: int
    fraction_trivial: float
    dim_rep: int
    dim_group: int
    per_stratum: dict
    summary: int

    def to_dict(self) -> dict:
        return {
            "histogram": {str(s): n for s, n in sorted(self.histogram.items())},
            "samples": self.samples,
            "fraction_trivial": self.fraction_trivial,
            "dim_rep": self.dim_rep,
            "dim_group": self.dim_group,
            "per_stratum": {str(s): v for s, v in sorted(self.per_stratum.items())},
            "summary": self.summary,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "CensusResult":
        return cls(
            {int(s): int(n) for s, n in d["histogram"].items()},
            int(d["samples"]),
            float(d["fraction_trivial"]),
            int(d["dim_rep"]),
            int(d["dim_group"]),
            {int(s): int(v) for s, v in d["per_stratum"].items()},
            int(d["summary"]),
        )


def _census_shard(q, a, seed, shard, count, pool):
    return Counter(stabilizer_dim(random_rep(q, a, (seed, shard, i), pool)) for i in range(count))


def parameter_census(q: Quiver, a, samples: int, seed: int = 0, *, pool: int = 10,
                     shards: int = 1, n_jobs: int | None = None) -> CensusResult:
    """Sample random representations and histogram their stabilizer dimensions.

    This is a probe, not a certificate. Each stratum is credited with the full
    dimension of Rep(Q, a), so ``summary`` is an upper estimate.
    """
    if samples < 1:
        raise InvalidInput("samples must be >= 1")
    a = dims(q, a, allow_negative=False)
    if all(v == 0 for v in a.values()):
        raise ZeroDims("census needs a nonzero dimension vector")
    shards = max(1, min(shards, samples))
    sizes = [samples // shards + (s < samples % shards) for s in range(shards)]
    parts = Parallel(n_jobs=n_jobs)(
        delayed(_census_shard)(q, a, seed, s, n, pool) for s, n in enumerate(sizes)
    )
    hist: Counter = Counter()
    for c in parts:
        hist.update(c)
    dim_rep = sum(a[t] * a[h] for t, h in q.arrows)
    dim_group = sum(x * x for x in a.values()) - 1
    per = {s: dim_rep + s - dim_group for s in hist}
    return CensusResult(
        dict(sorted(hist.items())),
        samples,
        hist.get(0, 0) / samples,
        dim_rep,
        dim_group,
        per,
        max(per.values()),
    )


# -- decompositions -------------------------------------------------------------

@dataclass(frozen=True)
class Decomposition:
    parts: tuple  # tuple of dicts, lexicographically nondecreasing in vertex order

    def flat(self) -> tuple:
        return tuple(tuple(p.values()) for p in self.parts)

    def to_dict(self) -> dict:
        return {"parts": [dims_to_dict(p)["dims"] for p in self.parts]}


def _sub_vectors(bound: tuple) -> list:
    out = [()]
    for b in bound:
        out = [v + (x,) for v in out for x in range(b + 1)]
    return out


def _multisets(remaining: tuple, lo: tuple, candidates: list) -> Iterator[list]:
    """Multisets of nonzero vectors >= lo (lex) summing to ``remaining``."""
    for v in candidates:
        if v < lo or not any(v):
            continue
        if any(x > r for x, r in zip(v, remaining)):
            continue
        rest = tuple(r - x for r, x in zip(remaining, v))
        if not any(rest):
            yield [v]
            continue
        if rest < v:
            # later parts are >= v, and so is any sum of them
            continue
        for tail in _multisets(rest, v, candidates):
            yield [v] + tail


def enumerate_decompositions(a: Mapping, min_parts: int = 2, roots_only: bool = False,
                             q: Quiver | None = None,
                             budget: int = DEFAULT_BUDGET) -> Iterator[Decomposition]:
    """Stream every multiset decomposition of ``a`` with at least ``min_parts`` parts."""
    verts = list(a.keys())
    flat = tuple(int(a[v]) for v in verts)
    if any(x < 0 for x in flat):
        raise InvalidInput("decompositions need a nonnegative vector")
    if sum(flat) > budget:
        raise BudgetExceeded(f"entry sum {sum(flat)} exceeds the enumeration budget {budget}")
    if roots_only and q is None:
        raise InvalidInput("roots_only needs the quiver")
    if not any(flat):
        return
    candidates = _sub_vectors(flat)
    if roots_only:
        q_dims = dims(q, a)
        if list(q_dims) != verts:
            raise VertexMismatch("vector keys do not follow the quiver's vertex order")
        candidates = [
            v for v in candidates
            if any(v) and classify_root(q, dict(zip(verts, v))) is not RootClass.NOT_ROOT
        ]
    zero = tuple(0 for _ in flat)
    for parts in _multisets(flat, zero, candidates):
        if len(parts) >= min_parts:
            yield Decomposition(tuple(dict(zip(verts, p)) for p in parts))


@dataclass(frozen=True)
class InequalityResult:
    holds: bool
    witness: Decomposition | None

    def to_dict(self) -> dict:
        return {"holds": self.holds, "witness": None if self.witness is None else self.witness.to_dict()}


def check_inequality_302(shape: StarShape, a, budget: int = DEFAULT_BUDGET) -> InequalityResult:
    """Check p(a) > sum p(parts) over every decomposition into >= 2 parts."""
    q = build_star(shape)
    a = dims(q, a, allow_negative=False)
    pa = p_value(q, a)
    cache: dict = {}

    def p_of(part):
        key = tuple(part.values())
        if key not in cache:
            cache[key] = p_value(q, part)
        return cache[key]

    for dec in enumerate_decompositions(a, 2, budget=budget):
        if sum(p_of(part) for part in dec.parts) >= pa:
            return InequalityResult(False, dec)
    return InequalityResult(True, None)


def q_tilde(q: Quiver, a, budget: int = DEFAULT_BUDGET) -> int:
    """Minimum of sum q(parts) over all decompositions, the trivial one included."""
    a = dims(q, a, allow_negative=False)
    verts = list(a)
    flat = tuple(a.values())
    if sum(flat) > budget:
        raise BudgetExceeded(f"entry sum {sum(flat)} exceeds the enumeration budget {budget}")

    @lru_cache(maxsize=None)
    def best(vec: tuple) -> int:
        value = tits_q(q, dict(zip(verts, vec)))
        for part in _sub_vectors(vec):
            if not any(part) or part == vec:
                continue
            rest = tuple(x - y for x, y in zip(vec, part))
            if rest < part:
                continue
            value = min(value, tits_q(q, dict(zip(verts, part))) + best(rest))
        return value

    return best(flat)


# -- King stability certificates -----------------------------------------------

def king_pairing(lam: Mapping, a: Mapping) -> Fraction:
    if set(lam) != set(a):
        raise VertexMismatch("lambda and the dimension vector have different vertex sets")
    return sum((Fraction(lam[v]) * int(a[v]) for v in a), Fraction(0))


def subrep_certificate_check(x: ExactRep, sub: ExactRep, embedding: Mapping) -> bool:
    """True iff ``embedding`` (vertex -> injective matrix) maps ``sub`` into ``x`` as a subrep."""
    if x.quiver != sub.quiver:
        raise QuiverMismatch("subrepresentation lives on another quiver")
    q = x.quiver
    if set(embedding) != set(q.vertices):
        raise ShapeMismatch("embedding must give one matrix per vertex")
    emb = {}
    for v in q.vertices:
        m = embedding[v]
        if not isinstance(m, DomainMatrix):
            m = exact_matrix(m, (x.dims[v], sub.dims[v]))
        if m.shape != (x.dims[v], sub.dims[v]):
            raise ShapeMismatch(f"embedding at {vertex_key(v)} needs shape {(x.dims[v], sub.dims[v])}")
        emb[v] = m
        if sub.dims[v] and m.rank() != sub.dims[v]:
            return False
    for (t, h), xm, sm in zip(q.arrows, x.mats, sub.mats):
        if xm * emb[t] != emb[h] * sm:
            return False
    return True

