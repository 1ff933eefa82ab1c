"""Quivers, dimension vectors, bilinear forms and root classification.

Vertex ids are hashable values. Star and squid builders use ``0`` for the
central vertex, ``(i, j)`` for leg vertices and ``"inf"`` for the extra
Kronecker vertex. Dimension vectors are plain dicts keyed by vertex id.
"""

from __future__ import annotations

import enum
import json
from collections import deque
from collections.abc import Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .exact import QQ_I, format_rational, gq, parse_rational
from .exceptions import (
    DuplicatePoint,
    InvalidInput,
    UnknownVertex,
    VertexMismatch,
    ZeroVector,
)

Vertex = Hashable
DimVector = dict

INF = "inf"


class RootClass(str, enum.Enum):
    NOT_ROOT = "NotRoot"
    REAL = "RealRoot"
    IMAGINARY = "ImaginaryRoot"


# -- vertex id encoding -------------------------------------------------------

def encode_vertex(v):
    if isinstance(v, tuple):
        return ",".join(str(int(x)) for x in v)
    if isinstance(v, bool):
        raise InvalidInput("boolean vertex ids are not supported")
    return v


def vertex_key(v) -> str:
    """Encoding used for JSON object keys."""
    return str(encode_vertex(v))


def decode_vertex(raw):
    if isinstance(raw, bool):
        raise InvalidInput("boolean vertex ids are not supported")
    if isinstance(raw, int):
        return raw
    if isinstance(raw, list):
        return tuple(int(x) for x in raw)
    if isinstance(raw, str):
        s = raw.strip()
        if s.lstrip("-").isdigit():
            return int(s)
        parts = s.split(",")
        if len(parts) > 1 and all(p.strip().lstrip("-").isdigit() for p in parts):
            return tuple(int(p) for p in parts)
        return s
    raise InvalidInput(f"unsupported vertex id {raw!r}")


# -- quiver -------------------------------------------------------------------

@dataclass(frozen=True)
class Quiver:
    vertices: tuple
    arrows: tuple
    arrow_names: tuple | None = None
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        verts = tuple(self.vertices)
        arrows = tuple((t, h) for t, h in self.arrows)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "arrows", arrows)
        index = {v: i for i, v in enumerate(verts)}
        if len(index) != len(verts):
            raise InvalidInput("duplicate vertex ids")
        for t, h in arrows:
            if t not in index or h not in index:
                raise UnknownVertex(f"arrow ({t!r}, {h!r}) uses an unknown vertex")
            if t == h:
                raise InvalidInput(f"loop at vertex {t!r}; quivers must be loop-free")
        if self.arrow_names is not None:
            names = tuple(self.arrow_names)
            if len(names) != len(arrows) or len(set(names)) != len(names):
                raise InvalidInput("arrow_names must be unique and match the arrows")
            object.__setattr__(self, "arrow_names", names)
        object.__setattr__(self, "_index", index)

    def index(self, v) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise UnknownVertex(f"unknown vertex {v!r}") from None

    def __contains__(self, v) -> bool:
        return v in self._index

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def names(self) -> tuple:
        if self.arrow_names is not None:
            return self.arrow_names
        return tuple(f"a{i}" for i in range(len(self.arrows)))

    def neighbours(self) -> dict:
        adj = {v: set() for v in self.vertices}
        for t, h in self.arrows:
            adj[t].add(h)
            adj[h].add(t)
        return adj

    def to_dict(self) -> dict:
        d = {
            "vertices": [encode_vertex(v) for v in self.vertices],
            "arrows": [[encode_vertex(t), encode_vertex(h)] for t, h in self.arrows],
        }
        if self.arrow_names is not None:
            d["names"] = list(self.arrow_names)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "Quiver":
        try:
            verts = [decode_vertex(v) for v in d["vertices"]]
            arrows = [(decode_vertex(t), decode_vertex(h)) for t, h in d["arrows"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed quiver JSON: {exc}") from exc
        return cls(tuple(verts), tuple(arrows), tuple(d["names"]) if "names" in d else None)


def dims(q: Quiver, a, *, allow_negative: bool = True) -> DimVector:
    """Validate ``a`` against ``q`` and return it as an ordered dict.

    ``a`` may be a mapping over exactly the vertex set or a sequence in vertex
    order.
    """
    if isinstance(a, Mapping):
        if a.keys() != q._index.keys():
            raise VertexMismatch("dimension vector keys differ from the quiver's vertices")
        out = {v: a[v] for v in q.vertices}
    else:
        seq = list(a)
        if len(seq) != q.n_vertices:
            raise VertexMismatch(
                f"dimension vector has {len(seq)} entries, quiver has {q.n_vertices} vertices"
            )
        out = dict(zip(q.vertices, seq))
    if set(map(type, out.values())) <= {int}:
        if not allow_negative and min(out.values(), default=0) < 0:
            raise InvalidInput("negative entries are not allowed here")
        return out
    for v, x in out.items():
        if isinstance(x, bool) or int(x) != x:
            raise InvalidInput(f"non-integer entry at {v!r}")
        out[v] = int(x)
        if not allow_negative and x < 0:
            raise InvalidInput(f"negative entry at {v!r}")
    return out


def unit(q: Quiver, i) -> DimVector:
    q.index(i)
    return {v: int(v == i) for v in q.vertices}


def dims_to_dict(a: Mapping) -> dict:
    return {"dims": {vertex_key(v): int(x) for v, x in a.items()}}


def dims_from_dict(q: Quiver, d: Mapping) -> DimVector:
    try:
        raw = d["dims"]
        parsed = {decode_vertex(k): int(x) for k, x in raw.items()}
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise InvalidInput(f"malformed dims JSON: {exc}") from exc
    return dims(q, parsed)


# -- forms ----------------------------------------------------------------------

def euler_form(q: Quiver, a, b) -> int:
    """Euler-Ringel form: sum a_i b_i minus sum over arrows of a_tail b_head."""
    same = b is a
    a = dims(q, a)
    b = a if same else dims(q, b)
    return sum(a[v] * b[v] for v in q.vertices) - sum(a[t] * b[h] for t, h in q.arrows)


def tits_q(q: Quiver, a) -> int:
    return euler_form(q, a, a)


def p_value(q: Quiver, a) -> int:
    return 1 - tits_q(q, a)


def symmetrized_form(q: Quiver, a, b) -> int:
    return euler_form(q, a, b) + euler_form(q, b, a)


def _pair_unit(q: Quiver, a: DimVector, i) -> int:
    """(a, e_i) without building e_i."""
    s = 2 * a[i]
    for t, h in q.arrows:
        if t == i:
            s -= a[h]
        if h == i:
            s -= a[t]
    return s


def tits_gram(q: Quiver) -> list[list[Fraction]]:
    """Symmetric matrix G with x^T G x = q(x), in vertex order."""
    n = q.n_vertices
    g = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        g[i][i] = Fraction(1)
    for t, h in q.arrows:
        i, j = q.index(t), q.index(h)
        g[i][j] -= Fraction(1, 2)
        g[j][i] -= Fraction(1, 2)
    return g


def reflect(q: Quiver, i, a) -> DimVector:
    q.index(i)
    a = dims(q, a)
    out = dict(a)
    out[i] = a[i] - _pair_unit(q, a, i)
    return out


def support(q: Quiver, a: Mapping) -> list:
    return [v for v in q.vertices if a[v] != 0]


def support_connected(q: Quiver, a: Mapping) -> bool:
    supp = support(q, a)
    if not supp:
        return False
    inside = set(supp)
    adj = q.neighbours()
    seen = {supp[0]}
    todo = deque([supp[0]])
    while todo:
        v = todo.popleft()
        for u in adj[v]:
            if u in inside and u not in seen:
                seen.add(u)
                todo.append(u)
    return len(seen) == len(inside)


def in_fundamental_region(q: Quiver, a) -> bool:
    a = dims(q, a, allow_negative=False)
    if not support_connected(q, a):
        return False
    return all(_pair_unit(q, a, i) <= 0 for i in q.vertices)


def classify_root(q: Quiver, a) -> RootClass:
    a = dims(q, a)
    vals = list(a.values())
    if all(x == 0 for x in vals):
        raise ZeroVector("classify_root needs a nonzero vector")
    if any(x > 0 for x in vals) and any(x < 0 for x in vals):
        return RootClass.NOT_ROOT
    cur = {v: abs(x) for v, x in a.items()}
    while True:
        supp = support(q, cur)
        if len(supp) == 1 and cur[supp[0]] == 1:
            return RootClass.REAL
        # vertex order is the id order; the first strict decreaser wins
        pick = next((i for i in supp if _pair_unit(q, cur, i) > 0), None)
        if pick is None:
            return RootClass.IMAGINARY if in_fundamental_region(q, cur) else RootClass.NOT_ROOT
        cur = reflect(q, pick, cur)
        if any(x < 0 for x in cur.values()):
            return RootClass.NOT_ROOT


# -- stars and squids ---------------------------------------------------------

@dataclass(frozen=True)
class StarShape:
    w: tuple

    def __post_init__(self):
        try:
            w = tuple(int(x) for x in self.w)
        except (TypeError, ValueError) as exc:
            raise InvalidInput(f"leg lengths must be integers: {exc}") from exc
        if not w:
            raise InvalidInput("a star needs at least one leg")
        if any(x < 1 for x in w):
            raise InvalidInput("leg lengths w_i must be >= 1")
        object.__setattr__(self, "w", w)

    @property
    def k(self) -> int:
        return len(self.w)

    def leg_vertices(self) -> list:
        return [(i, j) for i, wi in enumerate(self.w, start=1) for j in range(1, wi)]

    def vertices(self) -> list:
        return [0] + self.leg_vertices()

    def to_dict(self) -> dict:
        return {"w": list(self.w)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "StarShape":
        try:
            return cls(tuple(d["w"]))
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"malformed star JSON: {exc}") from exc


def _star_arrows(shape: StarShape):
    arrows, names = [], []
    for i, wi in enumerate(shape.w, start=1):
        for j in range(1, wi):
            arrows.append(((i, j), (i, j - 1) if j > 1 else 0))
            names.append(f"c_{i}_{j}")
    return arrows, names


@lru_cache(maxsize=512)
def build_star(shape: StarShape) -> Quiver:
    arrows, names = _star_arrows(shape)
    return Quiver(tuple(shape.vertices()), tuple(arrows), tuple(names))


def star_dims(shape: StarShape, flat: Sequence[int] | Mapping) -> DimVector:
    """Dimension vector on the star from ``(a0, a11, a12, ..., a21, ...)`` or a mapping."""
    return dims(build_star(shape), flat)


def star_flat(shape: StarShape, a: Mapping) -> tuple:
    return tuple(a[v] for v in shape.vertices())


def delta(shape: StarShape, a) -> int:
    """-2 a0 + sum of the first leg entries (legs with w_i = 1 contribute 0)."""
    a = dims(build_star(shape), a)
    return -2 * a[0] + sum(a[(i, 1)] for i, wi in enumerate(shape.w, start=1) if wi > 1)


@dataclass(frozen=True)
class SquidShape:
    star: StarShape
    points: tuple

    def __post_init__(self):
        pts = tuple((gq(p0), gq(p1)) for p0, p1 in self.points)
        if len(pts) != self.star.k:
            raise InvalidInput(f"{len(pts)} points given for {self.star.k} legs")
        for p0, p1 in pts:
            if not p0 and not p1:
                raise InvalidInput("(0:0) is not a point of the projective line")
        for a in range(len(pts)):
            for b in range(a):
                (x0, x1), (y0, y1) = pts[a], pts[b]
                if not x0 * y1 - x1 * y0:
                    raise DuplicatePoint(f"points {b + 1} and {a + 1} coincide")
        object.__setattr__(self, "points", pts)

    def to_dict(self) -> dict:
        return {
            "w": list(self.star.w),
            "points": [
                [format_rational(p0.x), format_rational(p0.y), format_rational(p1.x), format_rational(p1.y)]
                for p0, p1 in self.points
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SquidShape":
        try:
            pts = []
            for re0, im0, re1, im1 in d["points"]:
                pts.append((_qqi(re0, im0), _qqi(re1, im1)))
            return cls(StarShape.from_dict(d), tuple(pts))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed squid JSON: {exc}") from exc


def _qqi(re_s, im_s):
    r, i = parse_rational(re_s), parse_rational(im_s)
    return QQ_I(QQ_I.dom(r.numerator, r.denominator), QQ_I.dom(i.numerator, i.denominator))


def build_squid(shape: SquidShape) -> Quiver:
    arrows, names = _star_arrows(shape.star)
    verts = [INF] + shape.star.vertices()
    return Quiver(
        tuple(verts),
        tuple([(0, INF), (0, INF)] + arrows),
        tuple(["b0", "b1"] + names),
    )


def to_json(obj) -> str:
    return json.dumps(obj.to_dict(), sort_keys=False, separators=(",", ":"))


def iter_vectors(bounds: Sequence[int]) -> Iterable[tuple]:
    """All integer tuples with 0 <= x_i <= bounds[i], lexicographic."""
    if not bounds:
        yield ()
        return
    for head in range(bounds[0] + 1):
        for tail in iter_vectors(bounds[1:]):
            yield (head,) + tail
