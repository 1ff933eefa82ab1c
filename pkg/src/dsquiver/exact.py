"""Gaussian-rational scalars and exact linear algebra.

Scalars are elements of sympy's ``QQ_I`` domain. Ranks are computed over
``QQ`` through the real embedding ``a + bi -> [[a, -b], [b, a]]``, which
doubles every rank and is much faster than eliminating over ``QQ_I``.
"""

from __future__ import annotations

import re
from collections.abc import Sequence
from fractions import Fraction

from sympy import QQ, QQ_I
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.sdm import SDM

__all__ = [
    "QQ_I",
    "gq",
    "parse_gq",
    "format_gq",
    "parse_rational",
    "format_rational",
    "exact_matrix",
    "matrix_to_strings",
    "matrix_from_strings",
    "exact_rank",
    "nonzero_entries",
]

_RAT = r"\d+(?:/\d+)?"
_GQ_RE = re.compile(
    rf"^(?P<re>[+-]?{_RAT})?(?:(?P<sign>[+-])?(?P<im>{_RAT})?\s*i)?$"
)


def parse_rational(text: str) -> Fraction:
    """Parse ``"p"`` or ``"p/q"`` into a Fraction."""
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {text!r}") from exc


def format_rational(x) -> str:
    x = Fraction(int(x.numerator), int(x.denominator))
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def gq(value):
    """Coerce ``value`` to a ``QQ_I`` element.

    Accepts ints, Fractions, gmpy rationals, strings in ``"p/q+r/s i"`` form,
    existing ``QQ_I`` elements and Python complex/float values (converted
    exactly from their binary representation).
    """
    if isinstance(value, str):
        return parse_gq(value)
    if hasattr(value, "x") and hasattr(value, "y") and value in QQ_I:
        return value
    if isinstance(value, complex):
        return QQ_I(QQ.convert(Fraction(value.real)), QQ.convert(Fraction(value.imag)))
    if isinstance(value, float):
        value = Fraction(value)
    if isinstance(value, Fraction):
        return QQ_I(QQ(value.numerator, value.denominator), QQ(0))
    return QQ_I.convert(value)


def parse_gq(text: str):
    """Parse ``"p/q+r/s i"`` (either part optional, ``"i"`` alone allowed)."""
    s = re.sub(r"\s+", "", str(text))
    m = _GQ_RE.match(s)
    if not s or m is None or (m.group("re") is None and "i" not in s):
        raise ValueError(f"not a Gaussian rational: {text!r}")
    re_part = Fraction(m.group("re")) if m.group("re") else Fraction(0)
    im_part = Fraction(0)
    if s.endswith("i"):
        im_part = Fraction(m.group("im")) if m.group("im") else Fraction(1)
        if m.group("sign") == "-":
            im_part = -im_part
        elif m.group("sign") is None and m.group("re") is not None:
            # "3i" style with no operator: the regex bound the digits to re
            im_part, re_part = re_part, Fraction(0)
    return QQ_I(QQ(re_part.numerator, re_part.denominator),
                QQ(im_part.numerator, im_part.denominator))


def format_gq(z) -> str:
    """Canonical text form: ``"p/q"`` when real, else ``"p/q+r/s i"``."""
    z = gq(z)
    re_s = format_rational(z.x)
    if z.y == 0:
        return re_s
    im = Fraction(int(z.y.numerator), int(z.y.denominator))
    sign = "-" if im < 0 else "+"
    return f"{re_s}{sign}{format_rational(abs(im))} i"


def exact_matrix(rows: Sequence[Sequence], shape: tuple[int, int] | None = None) -> DomainMatrix:
    """Build a ``QQ_I`` DomainMatrix; ``shape`` is required for empty matrices."""
    rows = [[gq(v) for v in row] for row in rows]
    if shape is None:
        shape = (len(rows), len(rows[0]) if rows else 0)
    if shape[0] == 0 or shape[1] == 0:
        return DomainMatrix.zeros(shape, QQ_I)
    if len(rows) != shape[0] or any(len(r) != shape[1] for r in rows):
        raise ValueError(f"ragged matrix or wrong shape, expected {shape}")
    return DomainMatrix(rows, shape, QQ_I)


def matrix_to_strings(m: DomainMatrix) -> list[list[str]]:
    return [[format_gq(v) for v in row] for row in m.to_list()]


def matrix_from_strings(rows, shape: tuple[int, int]) -> DomainMatrix:
    return exact_matrix(rows, shape)


def exact_rank(entries: dict[tuple[int, int], object], shape: tuple[int, int]) -> int:
    """Rank over Q(i) of a sparse matrix given as ``{(row, col): QQ_I}``.

    Zero-valued entries may be present; they are dropped.
    """
    m, n = shape
    if m == 0 or n == 0:
        return 0
    real: dict[int, dict[int, object]] = {}
    for (r, c), z in entries.items():
        a, b = z.x, z.y
        if a:
            real.setdefault(2 * r, {})[2 * c] = a
            real.setdefault(2 * r + 1, {})[2 * c + 1] = a
        if b:
            real.setdefault(2 * r, {})[2 * c + 1] = -b
            real.setdefault(2 * r + 1, {})[2 * c] = b
    if not real:
        return 0
    sdm = SDM(real, (2 * m, 2 * n), QQ)
    return DomainMatrix.from_rep(sdm).rank() // 2


def nonzero_entries(m: DomainMatrix, row0: int = 0, col0: int = 0, scale=None):
    """Yield ``((row0 + i, col0 + j), scale * v)`` for the nonzero entries of ``m``."""
    for i, row in m.to_dod().items():
        for j, v in row.items():
            yield (row0 + i, col0 + j), v if scale is None else v * scale
