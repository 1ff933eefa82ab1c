"""Cotangent points of squid representations: moment map, symplectic form, targets.

A point carries a matrix ``x[a]`` (dims[head] x dims[tail]) and a dual
``xhat[a]`` (dims[tail] x dims[head]) for every arrow ``a``. The moment map is

    mu_v = sum_{head(a) = v} x_a xhat_a - sum_{tail(a) = v} xhat_a x_a,

which on a squid gives mu_inf = b0 bhat0 + b1 bhat1 and so on.
"""

from __future__ import annotations

import re
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInput, ResidueConditionViolated, ShapeMismatch
from .quiver import INF, Quiver, decode_vertex, dims, vertex_key

TRACE_TOL = 1e-9


def hat_name(name: str) -> str:
    m = re.fullmatch(r"b(\d+)", name)
    if m:
        return f"bhat{m.group(1)}"
    if name.startswith("c_"):
        return "chat_" + name[2:]
    return name + "hat"


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(d: Mapping, shape: tuple[int, int]) -> np.ndarray:
    try:
        out = np.zeros(shape, dtype=complex)
        if shape[0] and shape[1]:
            out += np.array(d["re"], dtype=float).reshape(shape)
            out += 1j * np.array(d.get("im", np.zeros(shape)), dtype=float).reshape(shape)
        return out
    except (KeyError, ValueError, TypeError) as exc:
        raise ShapeMismatch(f"bad matrix for shape {shape}: {exc}") from exc


@dataclass(frozen=True, eq=False)
class CotangentSquidPoint:
    quiver: Quiver
    dims: dict
    x: tuple
    xhat: tuple

    def __post_init__(self):
        d = dims(self.quiver, self.dims, allow_negative=False)
        object.__setattr__(self, "dims", d)
        x = tuple(np.asarray(m, dtype=complex) for m in self.x)
        xh = tuple(np.asarray(m, dtype=complex) for m in self.xhat)
        if len(x) != len(self.quiver.arrows) or len(xh) != len(self.quiver.arrows):
            raise ShapeMismatch("one matrix and one dual matrix per arrow are required")
        for (t, h), m, mh in zip(self.quiver.arrows, x, xh):
            if m.shape != (d[h], d[t]) or mh.shape != (d[t], d[h]):
                raise ShapeMismatch(
                    f"arrow {vertex_key(t)}->{vertex_key(h)}: got {m.shape} and {mh.shape}, "
                    f"need {(d[h], d[t])} and {(d[t], d[h])}"
                )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xhat", xh)

    def norm2(self) -> float:
        return float(sum(np.vdot(m, m).real for m in self.x + self.xhat))

    def to_dict(self) -> dict:
        mats = {}
        for name, m, mh in zip(self.quiver.names(), self.x, self.xhat):
            mats[name] = matrix_to_json(m)
            mats[hat_name(name)] = matrix_to_json(mh)
        return {"quiver": self.quiver.to_dict(), "dims": {vertex_key(v): n for v, n in self.dims.items()},
                "mats": mats}

    @classmethod
    def from_dict(cls, d: Mapping) -> "CotangentSquidPoint":
        try:
            q = Quiver.from_dict(d["quiver"])
            a = dims(q, {decode_vertex(k): int(v) for k, v in d["dims"].items()})
            x, xh = [], []
            for name, (t, h) in zip(q.names(), q.arrows):
                x.append(matrix_from_json(d["mats"][name], (a[h], a[t])))
                xh.append(matrix_from_json(d["mats"][hat_name(name)], (a[t], a[h])))
        except (KeyError, TypeError, AttributeError) as exc:
            raise InvalidInput(f"malformed point JSON: {exc}") from exc
        return cls(q, a, tuple(x), tuple(xh))


def zero_point(q: Quiver, a) -> CotangentSquidPoint:
    a = dims(q, a, allow_negative=False)
    return CotangentSquidPoint(
        q, a,
        tuple(np.zeros((a[h], a[t]), complex) for t, h in q.arrows),
        tuple(np.zeros((a[t], a[h]), complex) for t, h in q.arrows),
    )


def random_point(q: Quiver, a, rng: np.random.Generator, scale: float = 1.0) -> CotangentSquidPoint:
    a = dims(q, a, allow_negative=False)

    def g(shape):
        return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    return CotangentSquidPoint(
        q, a, tuple(g((a[h], a[t])) for t, h in q.arrows), tuple(g((a[t], a[h])) for t, h in q.arrows)
    )


def _check_same(X: CotangentSquidPoint, Y: CotangentSquidPoint):
    if X.quiver != Y.quiver or X.dims != Y.dims:
        raise ShapeMismatch("points live on different quivers or dimension vectors")


def moment_map(X: CotangentSquidPoint) -> dict:
    mu = {v: np.zeros((n, n), complex) for v, n in X.dims.items()}
    for (t, h), m, mh in zip(X.quiver.arrows, X.x, X.xhat):
        mu[h] += m @ mh
        mu[t] -= mh @ m
    return mu


def moment_differential(X: CotangentSquidPoint, Y: CotangentSquidPoint) -> dict:
    """Derivative of the moment map at X in direction Y."""
    _check_same(X, Y)
    dmu = {v: np.zeros((n, n), complex) for v, n in X.dims.items()}
    for (t, h), m, mh, y, yh in zip(X.quiver.arrows, X.x, X.xhat, Y.x, Y.xhat):
        dmu[h] += y @ mh + m @ yh
        dmu[t] -= yh @ m + mh @ y
    return dmu


def symplectic_form(X: CotangentSquidPoint, Y: CotangentSquidPoint) -> complex:
    """omega(X, Y) = sum_a tr(x_a yhat_a) - tr(y_a xhat_a)."""
    _check_same(X, Y)
    total = 0j
    for m, mh, y, yh in zip(X.x, X.xhat, Y.x, Y.xhat):
        total += np.trace(m @ yh) - np.trace(y @ mh)
    return complex(total)


def act(g: Mapping, X: CotangentSquidPoint) -> CotangentSquidPoint:
    """Blockwise action x_a -> g_h x_a g_t^-1, xhat_a -> g_t xhat_a g_h^-1."""
    inv = {v: np.linalg.inv(m) if m.size else m for v, m in g.items()}
    x, xh = [], []
    for (t, h), m, mh in zip(X.quiver.arrows, X.x, X.xhat):
        x.append(g[h] @ m @ inv[t])
        xh.append(g[t] @ mh @ inv[h])
    return CotangentSquidPoint(X.quiver, X.dims, tuple(x), tuple(xh))


def infinitesimal_action(xi: Mapping, X: CotangentSquidPoint) -> CotangentSquidPoint:
    x, xh = [], []
    for (t, h), m, mh in zip(X.quiver.arrows, X.x, X.xhat):
        x.append(xi[h] @ m - m @ xi[t])
        xh.append(xi[t] @ mh - mh @ xi[h])
    return CotangentSquidPoint(X.quiver, X.dims, tuple(x), tuple(xh))


def moment_jacobian(X: CotangentSquidPoint) -> np.ndarray:
    """Complex matrix of Y -> d mu_X(Y), rows = stacked mu blocks, cols = coordinates of Y."""
    q, a = X.quiver, X.dims
    cols = []
    shapes = [(a[h], a[t]) for t, h in q.arrows] + [(a[t], a[h]) for t, h in q.arrows]
    zero = zero_point(q, a)
    n_x = len(q.arrows)
    for slot, shape in enumerate(shapes):
        for r in range(shape[0]):
            for c in range(shape[1]):
                x = [m.copy() for m in zero.x]
                xh = [m.copy() for m in zero.xhat]
                target = x[slot] if slot < n_x else xh[slot - n_x]
                target[r, c] = 1.0
                Y = CotangentSquidPoint(q, a, tuple(x), tuple(xh))
                dmu = moment_differential(X, Y)
                cols.append(np.concatenate([dmu[v].ravel() for v in q.vertices]))
    rows = sum(n * n for n in a.values())
    if not cols:
        return np.zeros((rows, 0), complex)
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class CoadjointTarget:
    theta: dict
    dims: dict

    def trace(self) -> complex:
        return complex(sum(self.theta[v] * self.dims[v] for v in self.dims))

    def to_dict(self) -> dict:
        return {
            "theta": {vertex_key(v): {"re": complex(z).real, "im": complex(z).imag} for v, z in self.theta.items()},
            "dims": {vertex_key(v): n for v, n in self.dims.items()},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "CoadjointTarget":
        return cls(
            {decode_vertex(k): complex(z["re"], z["im"]) for k, z in d["theta"].items()},
            {decode_vertex(k): int(n) for k, n in d["dims"].items()},
        )


def theta_N(zeta: Mapping, alpha: Mapping, N: int = 0, *, tol: float = 1e-10) -> CoadjointTarget:
    """Target theta^N on the squid with dims (a_inf + N a0, a_inf + (N+1) a0, a_ij).

    ``zeta`` maps (i, j), j = 1..w_i, to the eigenvalue attached to the
    multiplicity m_ij = alpha_{i,j-1} - alpha_ij; ``alpha`` is the star
    vector. The residue sum sum m_ij zeta_ij must equal a nonnegative integer
    a_inf (= -deg E).
    """
    if N < 0 or int(N) != N:
        raise InvalidInput("N must be a nonnegative integer")
    legs: dict = {}
    for (i, j) in zeta:
        legs[i] = max(legs.get(i, 0), j)
    a0 = alpha[0]

    def al(i, j):
        if j == 0:
            return a0
        return alpha.get((i, j), 0)

    total = 0j
    for (i, j), z in zeta.items():
        total += (al(i, j - 1) - al(i, j)) * complex(z)
    a_inf = round(total.real)
    if abs(total - a_inf) > tol or a_inf < 0:
        raise ResidueConditionViolated(
            f"residue sum {total} is not a nonnegative integer"
        )
    s = sum(complex(zeta[(i, 1)]) for i in legs)
    theta = {INF: N + 1 + s, 0: -N - s}
    dm = {INF: a_inf + N * a0, 0: a_inf + (N + 1) * a0}
    for i in sorted(legs):
        for j in range(1, legs[i]):
            theta[(i, j)] = complex(zeta[(i, j)]) - complex(zeta[(i, j + 1)])
            dm[(i, j)] = alpha[(i, j)]
    target = CoadjointTarget(theta, dm)
    scale = 1.0 + sum(abs(t) * n for t, n in zip(theta.values(), dm.values()))
    if abs(target.trace()) > TRACE_TOL * scale:
        raise ResidueConditionViolated(f"theta^N trace {target.trace()} does not vanish")
    return target


def residual(X: CotangentSquidPoint, target: CoadjointTarget) -> float:
    if set(target.dims) != set(X.dims) or any(target.dims[v] != X.dims[v] for v in X.dims):
        raise ShapeMismatch("target dimensions differ from the point's")
    mu = moment_map(X)
    total = 0.0
    for v, m in mu.items():
        diff = m - target.theta[v] * np.eye(m.shape[0])
        total += float(np.vdot(diff, diff).real)
    return total
