from __future__ import annotations

import json

import numpy as np
import pytest
from scipy.linalg import expm
from sympy import QQ_I
from sympy.polys.matrices import DomainMatrix

from dsquiver.exceptions import ResidueConditionViolated, ShapeMismatch
from dsquiver.quiver import INF, Quiver, SquidShape, StarShape, build_squid
from dsquiver.replab import ExactRep, random_rep, stabilizer_dim
from dsquiver.symplectic import (
    CoadjointTarget,
    CotangentSquidPoint,
    act,
    infinitesimal_action,
    moment_differential,
    moment_jacobian,
    moment_map,
    random_point,
    residual,
    symplectic_form,
    theta_N,
    zero_point,
)


def squid(w=(2, 2, 2)):
    pts = [(1, 0), (0, 1), (1, 1), (1, 2), (1, 3), (1, 4)][: len(w)]
    return build_squid(SquidShape(StarShape(w), tuple(pts)))


def squid_dims(q, a_inf, a0, leg=1):
    d = {INF: a_inf, 0: a_inf + a0}
    d.update({v: leg for v in q.vertices if isinstance(v, tuple)})
    return d


def random_block(a, rng, scale=0.3):
    return {v: np.eye(n) + scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
            for v, n in a.items()}


def random_xi(a, rng):
    return {v: rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for v, n in a.items()}


def scaled(X, t, Y):
    return CotangentSquidPoint(X.quiver, X.dims, tuple(m + t * y for m, y in zip(X.x, Y.x)),
                               tuple(m + t * y for m, y in zip(X.xhat, Y.xhat)))


# -- moment map ---------------------------------------------------------------------

def test_moment_map_formula():
    q = squid((2, 2))
    a = squid_dims(q, 1, 1)
    X = random_point(q, a, np.random.default_rng(0))
    mu = moment_map(X)
    names = dict(zip(q.arrow_names, zip(X.x, X.xhat)))
    b0, bh0 = names["b0"]
    b1, bh1 = names["b1"]
    np.testing.assert_allclose(mu[INF], b0 @ bh0 + b1 @ bh1, atol=1e-14)
    c11, ch11 = names["c_1_1"]
    c21, ch21 = names["c_2_1"]
    np.testing.assert_allclose(mu[0], c11 @ ch11 + c21 @ ch21 - bh0 @ b0 - bh1 @ b1, atol=1e-14)
    np.testing.assert_allclose(mu[(1, 1)], -ch11 @ c11, atol=1e-14)


def test_zero_point():
    q = squid()
    a = squid_dims(q, 1, 2)
    mu = moment_map(zero_point(q, a))
    assert all(np.all(m == 0) for m in mu.values())


def test_trace_vanishes(rng):
    q = squid((2, 3, 2))
    a = {INF: 1, 0: 3, (1, 1): 1, (2, 1): 2, (2, 2): 1, (3, 1): 1}
    for _ in range(200):
        X = random_point(q, a, rng, scale=float(rng.uniform(0.1, 10)))
        tr = sum(np.trace(m) for m in moment_map(X).values())
        assert abs(tr) <= 1e-12 * max(X.norm2(), 1.0)


def test_equivariance(rng):
    q = squid((2, 2, 2))
    a = squid_dims(q, 1, 2)
    for _ in range(20):
        X = random_point(q, a, rng)
        g = random_block(a, rng)
        lhs = moment_map(act(g, X))
        mu = moment_map(X)
        for v in a:
            rhs = g[v] @ mu[v] @ np.linalg.inv(g[v])
            assert np.linalg.norm(lhs[v] - rhs) <= 1e-10 * max(np.linalg.norm(rhs), 1.0)


def test_shape_mismatch():
    q = squid()
    X = zero_point(q, squid_dims(q, 1, 2))
    Y = zero_point(q, squid_dims(q, 1, 1))
    with pytest.raises(ShapeMismatch):
        symplectic_form(X, Y)
    with pytest.raises(ShapeMismatch):
        CotangentSquidPoint(q, X.dims, X.x, X.x)


# -- symplectic form ------------------------------------------------------------------

def test_antisymmetry(rng):
    q = squid()
    a = squid_dims(q, 1, 2)
    for _ in range(100):
        X, Y = random_point(q, a, rng), random_point(q, a, rng)
        assert abs(symplectic_form(X, X)) <= 1e-12
        assert abs(symplectic_form(X, Y) + symplectic_form(Y, X)) <= 1e-12 * (1 + abs(symplectic_form(X, Y)))


def test_moment_differential_finite_differences(rng):
    q = squid((2, 3))
    a = {INF: 1, 0: 3, (1, 1): 1, (2, 1): 2, (2, 2): 1}
    h = 1e-5
    for _ in range(20):
        X, Y = random_point(q, a, rng), random_point(q, a, rng)
        plus, minus = moment_map(scaled(X, h, Y)), moment_map(scaled(X, -h, Y))
        d = moment_differential(X, Y)
        for v in a:
            fd = (plus[v] - minus[v]) / (2 * h)
            assert np.linalg.norm(fd - d[v]) <= 1e-6 * max(np.linalg.norm(d[v]), 1.0)


def test_moment_pairing_matches_symplectic_form(rng):
    q = squid()
    a = squid_dims(q, 1, 2)
    h = 1e-5
    for _ in range(20):
        X, Y = random_point(q, a, rng), random_point(q, a, rng)
        xi = random_xi(a, rng)
        plus, minus = moment_map(scaled(X, h, Y)), moment_map(scaled(X, -h, Y))
        pairing = sum(np.trace((plus[v] - minus[v]) / (2 * h) @ xi[v]) for v in a)
        rhs = symplectic_form(infinitesimal_action(xi, X), Y)
        assert abs(pairing - rhs) <= 1e-6 * max(abs(rhs), 1.0)


# -- rank of the differential versus the exact stabilizer --------------------------------

def doubled(q: Quiver) -> Quiver:
    return Quiver(q.vertices, q.arrows + tuple((h, t) for t, h in q.arrows))


def point_from_exact(q: Quiver, rep: ExactRep) -> CotangentSquidPoint:
    mats = [np.array([[complex(float(z.x), float(z.y)) for z in row] for row in m.to_list()],
                     dtype=complex).reshape(m.shape) for m in rep.mats]
    k = len(q.arrows)
    return CotangentSquidPoint(q, rep.dims, tuple(mats[:k]), tuple(mats[k:]))


@pytest.mark.parametrize("case", range(5))
def test_differential_rank_matches_stabilizer(case):
    q = squid((2, 2, 2)) if case < 3 else squid((2, 2))
    a = [squid_dims(q, 1, 1), squid_dims(q, 1, 2), squid_dims(q, 0, 2),
         squid_dims(q, 1, 1), squid_dims(q, 2, 1)][case]
    qq = doubled(q)
    rep = random_rep(qq, a, (case, 17), pool=5)
    if case == 4:
        # kill all maps so the stabilizer is large
        rep = ExactRep(qq, rep.dims, tuple(DomainMatrix.zeros(m.shape, QQ_I) for m in rep.mats))
    X = point_from_exact(q, rep)
    jac = moment_jacobian(X)
    s = np.linalg.svd(jac, compute_uv=False)
    rank = int(np.sum(s > 1e-9 * max(s.max(initial=0.0), 1.0)))
    assert rank == sum(n * n for n in a.values()) - 1 - stabilizer_dim(rep)


# -- theta^N and residuals --------------------------------------------------------------

def test_theta_zero():
    zeta = {(i, j): 0 for i in (1, 2, 3) for j in (1, 2)}
    alpha = {0: 2, (1, 1): 1, (2, 1): 1, (3, 1): 1}
    t = theta_N(zeta, alpha, 0)
    assert t.dims[INF] == 0 and t.dims[0] == 2
    assert t.theta[INF] == 1 and t.theta[0] == 0
    assert all(t.theta[v] == 0 for v in t.theta if isinstance(v, tuple))
    assert t.trace() == 0


@pytest.mark.parametrize("N", [0, 1, 3])
def test_theta_trace_five_points(N):
    zeta = {}
    for i in range(1, 6):
        zeta[(i, 1)] = 0.2 + 0.1j * (i - 3)
        zeta[(i, 2)] = -0.1j * (i - 3)
    alpha = {0: 2, **{(i, 1): 1 for i in range(1, 6)}}
    t = theta_N(zeta, alpha, N)
    assert t.dims[INF] == 1 + 2 * N and t.dims[0] == 1 + 2 * (N + 1)
    assert abs(t.trace()) <= 1e-12
    assert CoadjointTarget.from_dict(json.loads(json.dumps(t.to_dict()))) == t


def test_theta_violation():
    zeta = {(1, 1): 0.25, (1, 2): 0.25}
    with pytest.raises(ResidueConditionViolated):
        theta_N(zeta, {0: 2, (1, 1): 1}, 0)
    with pytest.raises(ResidueConditionViolated):
        theta_N({(1, 1): -1.0}, {0: 1}, 0)


def test_residual_examples(rng):
    q = squid((2, 2))
    a = {INF: 0, 0: 2, (1, 1): 1, (2, 1): 1}
    zero_t = CoadjointTarget({v: 0 for v in a}, a)
    assert residual(zero_point(q, a), zero_t) == 0
    t = CoadjointTarget({v: (1 if v == 0 else 0) for v in a}, a)
    assert residual(zero_point(q, a), t) == pytest.approx(2)
    with pytest.raises(ShapeMismatch):
        residual(zero_point(q, squid_dims(q, 1, 1)), t)


def test_residual_unitary_invariance(rng):
    q = squid()
    a = squid_dims(q, 1, 2)
    target = CoadjointTarget({v: complex(rng.standard_normal()) for v in a}, a)
    for _ in range(10):
        X = random_point(q, a, rng)
        u = {}
        for v, n in a.items():
            h = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            u[v] = expm(1j * (h + h.conj().T))
        r0, r1 = residual(X, target), residual(act(u, X), target)
        assert abs(r0 - r1) <= 1e-10 * max(r0, 1.0)


def test_point_json_round_trip(rng):
    q = squid()
    X = random_point(q, squid_dims(q, 1, 2), rng)
    d = json.loads(json.dumps(X.to_dict()))
    Y = CotangentSquidPoint.from_dict(d)
    assert all(np.array_equal(m, n) for m, n in zip(X.x + X.xhat, Y.x + Y.xhat))
