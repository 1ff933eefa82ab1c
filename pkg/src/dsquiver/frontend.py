"""From conjugacy classes to star-quiver data, criteria and stability weights."""

from __future__ import annotations

import cmath
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache

from .exact import format_rational, parse_rational
from .exceptions import InconsistentSize, InvalidInput, NonMonotoneFlag, ZeroRank
from .quiver import (
    INF,
    StarShape,
    build_star,
    delta,
    dims,
    in_fundamental_region,
    p_value,
    vertex_key,
)

MODES = ("additive", "multiplicative", "connection")
ADDITIVE_TOL = 1e-12
MULTIPLICATIVE_TOL = 1e-10
INTEGER_TOL = 1e-10


# -- scalars --------------------------------------------------------------------

def _scalar(raw):
    """JSON scalar -> float or Fraction (strings are exact rationals)."""
    if isinstance(raw, bool):
        raise InvalidInput("booleans are not numbers")
    if isinstance(raw, str):
        return parse_rational(raw)
    if isinstance(raw, Fraction):
        return raw
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, float):
        if not math.isfinite(raw):
            raise InvalidInput("non-finite eigenvalue component")
        return raw
    raise InvalidInput(f"not a number: {raw!r}")


def _scalar_out(x):
    return format_rational(x) if isinstance(x, Fraction) else float(x)


@dataclass(frozen=True)
class Eigenvalue:
    re: float | Fraction
    im: float | Fraction
    mult: int

    def __post_init__(self):
        object.__setattr__(self, "re", _scalar(self.re))
        object.__setattr__(self, "im", _scalar(self.im))
        if isinstance(self.mult, bool) or int(self.mult) != self.mult or self.mult < 1:
            raise InvalidInput("multiplicities must be positive integers")
        object.__setattr__(self, "mult", int(self.mult))

    @property
    def exact(self) -> bool:
        return isinstance(self.re, Fraction) and isinstance(self.im, Fraction)

    @property
    def value(self) -> complex:
        return complex(float(self.re), float(self.im))

    def key(self):
        return (self.re, self.im)

    def to_dict(self) -> dict:
        return {"re": _scalar_out(self.re), "im": _scalar_out(self.im), "mult": self.mult}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Eigenvalue":
        try:
            return cls(d["re"], d.get("im", 0), d["mult"])
        except (KeyError, TypeError, AttributeError) as exc:
            raise InvalidInput(f"malformed eigenvalue: {exc}") from exc


@dataclass(frozen=True)
class ConjugacyClassSpec:
    eigenvalues: tuple

    def __post_init__(self):
        evs = tuple(e if isinstance(e, Eigenvalue) else Eigenvalue(*e) for e in self.eigenvalues)
        if not evs:
            raise InvalidInput("a conjugacy class needs at least one eigenvalue")
        keys = [e.key() for e in evs]
        if len(set(keys)) != len(keys):
            raise InvalidInput("eigenvalues within a class must be distinct")
        object.__setattr__(self, "eigenvalues", evs)

    @property
    def size(self) -> int:
        return sum(e.mult for e in self.eigenvalues)

    def to_dict(self) -> dict:
        return {"eigenvalues": [e.to_dict() for e in self.eigenvalues]}


@dataclass(frozen=True)
class DSInstance:
    mode: str
    classes: tuple
    zeta_override: tuple | None = None
    points: tuple | None = None
    notes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidInput(f"mode must be one of {MODES}")
        classes = tuple(
            c if isinstance(c, ConjugacyClassSpec) else ConjugacyClassSpec(tuple(c)) for c in self.classes
        )
        if not classes:
            raise InvalidInput("an instance needs at least one class")
        sizes = {c.size for c in classes}
        if len(sizes) != 1:
            raise InconsistentSize(f"class sizes differ: {[c.size for c in classes]}")
        if self.mode == "multiplicative":
            for c in classes:
                if any(e.value == 0 for e in c.eigenvalues):
                    raise InvalidInput("multiplicative classes cannot have eigenvalue 0")
        object.__setattr__(self, "classes", classes)
        if self.zeta_override is not None:
            z = tuple(tuple(complex(x) for x in row) for row in self.zeta_override)
            if len(z) != len(classes) or any(len(r) != len(c.eigenvalues) for r, c in zip(z, classes)):
                raise InvalidInput("zeta override must give one value per eigenvalue")
            object.__setattr__(self, "zeta_override", z)
        if self.points is not None:
            pts = tuple(tuple(p) for p in self.points)
            if len(pts) != len(classes) or any(len(p) != 4 for p in pts):
                raise InvalidInput("points must be one [re0, im0, re1, im1] per class")
            object.__setattr__(self, "points", pts)
        object.__setattr__(self, "notes", tuple(self.notes))

    @property
    def n(self) -> int:
        return self.classes[0].size

    @property
    def k(self) -> int:
        return len(self.classes)

    def to_dict(self) -> dict:
        d = {"mode": self.mode, "classes": [c.to_dict() for c in self.classes]}
        if self.points is not None:
            d["points"] = [list(p) for p in self.points]
        if self.zeta_override is not None:
            d["zeta"] = [[{"re": z.real, "im": z.imag} for z in row] for row in self.zeta_override]
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "DSInstance":
        if not isinstance(d, Mapping):
            raise InvalidInput("instance JSON must be an object")
        try:
            classes = tuple(
                ConjugacyClassSpec(tuple(Eigenvalue.from_dict(e) for e in c["eigenvalues"]))
                for c in d["classes"]
            )
            zeta = None
            if d.get("zeta") is not None:
                zeta = tuple(tuple(complex(z["re"], z.get("im", 0.0)) for z in row) for row in d["zeta"])
            return cls(d.get("mode", "additive"), classes, zeta, d.get("points"))
        except (KeyError, TypeError, AttributeError) as exc:
            raise InvalidInput(f"malformed instance JSON: {exc}") from exc


def _sort_key(e: Eigenvalue):
    return (-e.mult, float(e.re), float(e.im))


def normalize_classes(inst: DSInstance) -> DSInstance:
    """Sort each class by multiplicity (descending), ties by (re, im)."""
    notes = list(inst.notes)
    classes = []
    zeta = [] if inst.zeta_override is not None else None
    for i, c in enumerate(inst.classes, start=1):
        perm = sorted(range(len(c.eigenvalues)), key=lambda j: _sort_key(c.eigenvalues[j]))
        if perm != list(range(len(perm))):
            notes.append(f"class {i}: eigenvalues reordered by permutation {perm}")
        classes.append(ConjugacyClassSpec(tuple(c.eigenvalues[j] for j in perm)))
        if zeta is not None:
            zeta.append(tuple(inst.zeta_override[i - 1][j] for j in perm))
    return replace(inst, classes=tuple(classes), zeta_override=None if zeta is None else tuple(zeta),
                   notes=tuple(notes))


@dataclass(frozen=True)
class AlphaZeta:
    shape: StarShape
    alpha: dict
    zeta: dict    # (i, j) -> Eigenvalue-like value (complex, or exact (re, im) pair)
    mults: dict   # (i, j) -> m_ij
    exact: bool


def build_alpha_zeta(inst: DSInstance) -> AlphaZeta:
    inst = normalize_classes(inst)
    n = inst.n
    w = tuple(len(c.eigenvalues) for c in inst.classes)
    shape = StarShape(w)
    alpha = {0: n}
    zeta, mults = {}, {}
    exact = inst.zeta_override is None and all(e.exact for c in inst.classes for e in c.eigenvalues)
    for i, c in enumerate(inst.classes, start=1):
        used = 0
        for j, e in enumerate(c.eigenvalues, start=1):
            used += e.mult
            mults[(i, j)] = e.mult
            if inst.zeta_override is not None:
                zeta[(i, j)] = inst.zeta_override[i - 1][j - 1]
            elif exact:
                zeta[(i, j)] = (e.re, e.im)
            else:
                zeta[(i, j)] = e.value
            if j < len(c.eigenvalues):
                alpha[(i, j)] = n - used
    alpha = dims(build_star(shape), alpha)
    return AlphaZeta(shape, alpha, zeta, mults, exact)


# -- residue condition ------------------------------------------------------------

@dataclass(frozen=True)
class ResidueResult:
    met: bool
    value: complex | tuple
    integer: int | None = None

    def to_dict(self) -> dict:
        if isinstance(self.value, tuple):
            value = {"re": format_rational(self.value[0]), "im": format_rational(self.value[1])}
        else:
            value = {"re": float(self.value.real), "im": float(self.value.imag)}
        d = {"status": "met" if self.met else "violated", "value": value}
        if self.integer is not None:
            d["integer"] = self.integer
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "ResidueResult":
        v = d["value"]
        if isinstance(v["re"], str):
            value = (parse_rational(v["re"]), parse_rational(v["im"]))
        else:
            value = complex(v["re"], v["im"])
        return cls(d["status"] == "met", value, d.get("integer"))


def _gmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def residue_condition(inst: DSInstance, az: AlphaZeta) -> ResidueResult:
    n = inst.n
    if az.exact:
        if inst.mode == "multiplicative":
            prod = (Fraction(1), Fraction(0))
            for key, z in az.zeta.items():
                for _ in range(az.mults[key]):
                    prod = _gmul(prod, z)
            return ResidueResult(prod == (1, 0), prod)
        s = (sum(az.mults[k] * z[0] for k, z in az.zeta.items()),
             sum(az.mults[k] * z[1] for k, z in az.zeta.items()))
        if inst.mode == "additive":
            return ResidueResult(s == (0, 0), s)
        ok = s[1] == 0 and s[0].denominator == 1
        return ResidueResult(ok, s, int(s[0]) if ok else None)
    if inst.mode == "multiplicative":
        # log-sum keeps the product well scaled for large multiplicities
        logs = sum(az.mults[k] * cmath.log(complex(z)) for k, z in az.zeta.items())
        value = cmath.exp(logs)
        return ResidueResult(abs(value - 1) <= MULTIPLICATIVE_TOL, value)
    value = sum(az.mults[k] * complex(z) for k, z in az.zeta.items())
    if inst.mode == "additive":
        return ResidueResult(abs(value) <= ADDITIVE_TOL * n, value)
    nearest = round(value.real)
    ok = abs(value - nearest) <= INTEGER_TOL
    return ResidueResult(ok, value, int(nearest) if ok else None)


# -- flags and verdict ------------------------------------------------------------

def leg_multiplicities(alpha: Mapping, w: Sequence[int]) -> list[list[int]]:
    """m_ij = alpha_{i,j-1} - alpha_ij with alpha_i0 = alpha_0 and alpha_{i,w_i} = 0."""
    out = []
    a0 = alpha[0]
    for i, wi in enumerate(w, start=1):
        prev, m = a0, []
        for j in range(1, wi):
            x = alpha[(i, j)]
            m.append(prev - x)
            prev = x
        m.append(prev)
        if min(m) < 0:
            chain = [a0] + [alpha[(i, j)] for j in range(1, wi)] + [0]
            raise NonMonotoneFlag(f"leg {i} is not a nonincreasing flag: {chain}")
        out.append(m)
    return out


@lru_cache(maxsize=512)
def _star(w: tuple):
    return build_star(StarShape(w))


def dim_flag_product(alpha, w: Sequence[int]) -> int:
    """Dimension of the product of partial flag varieties cut out by alpha."""
    w = tuple(w)
    a = dims(_star(w), alpha)
    a0 = a[0]
    total = 0
    for m in leg_multiplicities(a, w):
        total += (a0 * a0 - sum(x * x for x in m)) // 2
    return total


NOTE_SUFFICIENT = "criterion is sufficient, not necessary: sufficient=false does not imply emptiness"
NOTE_ORDER = ("eigenspace convention: alpha_ij = n - (m_i1 + ... + m_ij), so m_ij = alpha_{i,j-1} - alpha_ij "
              "(trace-formula ordering)")
NOTE_BOUNDARY = "delta = 0 is a boundary case: the strict hypothesis delta > 0 fails"


def _zeta_out(z):
    if isinstance(z, tuple):
        return {"re": format_rational(z[0]), "im": format_rational(z[1])}
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _zeta_in(d):
    if isinstance(d["re"], str):
        return (parse_rational(d["re"]), parse_rational(d["im"]))
    return complex(d["re"], d["im"])


@dataclass(frozen=True)
class Verdict:
    mode: str
    n: int
    w: tuple
    alpha: dict
    zeta: dict
    delta: int
    p: int
    in_fundamental_region: bool
    fundamental_shortcut: bool
    residue_condition: ResidueResult
    sufficient: bool
    dim_flag: int
    expected_dim_solution_space: int
    expected_dim_conn_stack: int
    notes: tuple

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n": self.n,
            "w": list(self.w),
            "alpha": {vertex_key(v): x for v, x in self.alpha.items()},
            "zeta": {vertex_key(v): _zeta_out(z) for v, z in self.zeta.items()},
            "delta": self.delta,
            "p": self.p,
            "in_fundamental_region": self.in_fundamental_region,
            "fundamental_shortcut": self.fundamental_shortcut,
            "residue_condition": self.residue_condition.to_dict(),
            "sufficient": self.sufficient,
            "dim_flag": self.dim_flag,
            "expected_dim_solution_space": self.expected_dim_solution_space,
            "expected_dim_conn_stack": self.expected_dim_conn_stack,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Verdict":
        from .quiver import decode_vertex

        return cls(
            d["mode"], int(d["n"]), tuple(d["w"]),
            {decode_vertex(k): int(x) for k, x in d["alpha"].items()},
            {decode_vertex(k): _zeta_in(z) for k, z in d["zeta"].items()},
            int(d["delta"]), int(d["p"]),
            bool(d["in_fundamental_region"]), bool(d["fundamental_shortcut"]),
            ResidueResult.from_dict(d["residue_condition"]),
            bool(d["sufficient"]), int(d["dim_flag"]),
            int(d["expected_dim_solution_space"]), int(d["expected_dim_conn_stack"]),
            tuple(d["notes"]),
        )


def verdict(inst: DSInstance) -> Verdict:
    inst = normalize_classes(inst)
    az = build_alpha_zeta(inst)
    q = build_star(az.shape)
    d = delta(az.shape, az.alpha)
    fund = in_fundamental_region(q, az.alpha)
    shortcut = d >= 0
    res = residue_condition(inst, az)
    p = p_value(q, az.alpha)
    dfl = dim_flag_product(az.alpha, az.shape.w)
    notes = [NOTE_SUFFICIENT, NOTE_ORDER, *inst.notes]
    if fund == shortcut:
        notes.append(f"fundamental-region check and the delta >= 0 shortcut agree ({fund})")
    else:
        notes.append(f"fundamental-region check ({fund}) disagrees with the delta >= 0 shortcut ({shortcut})")
    if d == 0:
        notes.append(NOTE_BOUNDARY)
    if not res.met:
        notes.append(f"residue condition violated in {inst.mode} mode")
    n = inst.n
    return Verdict(
        mode=inst.mode,
        n=n,
        w=az.shape.w,
        alpha=az.alpha,
        zeta=az.zeta,
        delta=d,
        p=p,
        in_fundamental_region=fund,
        fundamental_shortcut=shortcut,
        residue_condition=res,
        sufficient=fund and d > 0 and res.met,
        dim_flag=dfl,
        expected_dim_solution_space=2 * dfl - n * n + 1,
        expected_dim_conn_stack=2 * p - 1,
        notes=tuple(notes),
    )


# -- parabolic weights --------------------------------------------------------------

@dataclass(frozen=True)
class StabilityData:
    """Weights theta[i][j-1] = theta_ij attached to the eigenspace of multiplicity m_ij.

    ``a`` is the parabolic slope used by :func:`theta_to_lambda`.
    """

    theta: tuple
    a: Fraction = Fraction(0)

    def __post_init__(self):
        th = tuple(tuple(Fraction(x) for x in leg) for leg in self.theta)
        for i, leg in enumerate(th, start=1):
            if not leg:
                raise InvalidInput(f"leg {i} has no weights")
            if leg[0] < 0 or leg[-1] >= 1:
                raise InvalidInput(f"leg {i} weights must lie in [0, 1)")
            if any(x >= y for x, y in zip(leg, leg[1:])):
                raise InvalidInput(f"leg {i} weights must be strictly increasing")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "a", Fraction(self.a))

    @property
    def w(self) -> tuple:
        return tuple(len(leg) for leg in self.theta)


def parabolic_degree(d: int, stab: StabilityData, alpha) -> Fraction:
    shape = StarShape(stab.w)
    a = dims(build_star(shape), alpha)
    m = leg_multiplicities(a, shape.w)
    return Fraction(d) + sum(
        (mij * th for leg_m, leg_t in zip(m, stab.theta) for mij, th in zip(leg_m, leg_t)), Fraction(0)
    )


def parabolic_slope(d: int, stab: StabilityData, alpha) -> Fraction:
    shape = StarShape(stab.w)
    a = dims(build_star(shape), alpha)
    if a[0] == 0:
        raise ZeroRank("slope of a rank-zero bundle")
    return parabolic_degree(d, stab, a) / a[0]


def theta_to_lambda(stab: StabilityData, w: Sequence[int] | None = None) -> dict:
    """King weights on the squid vertices; pairs to zero with (a_inf, a_inf + a_0, a_ij)."""
    if w is not None and tuple(w) != stab.w:
        raise InvalidInput(f"weights describe legs {stab.w}, expected {tuple(w)}")
    s = sum((leg[0] for leg in stab.theta), Fraction(0))
    lam = {INF: 1 - stab.a + s, 0: stab.a - s}
    for i, leg in enumerate(stab.theta, start=1):
        for j in range(1, len(leg)):
            lam[(i, j)] = leg[j - 1] - leg[j]
    return lam


def squid_dims(alpha_inf: int, alpha) -> dict:
    """alpha-hat = (alpha_inf, alpha_inf + alpha_0, alpha_ij) on the squid vertices."""
    out = {INF: alpha_inf, 0: alpha_inf + alpha[0]}
    out.update({v: x for v, x in alpha.items() if v != 0})
    return out
