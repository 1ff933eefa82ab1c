"""Numerical Deligne-Simpson solver over products of conjugacy orbits.

Each matrix is A_i = g_i B_i g_i^-1 with B_i fixed (the diagonal spectrum
by default), so the spectra hold exactly at every iterate and only the sum
or product constraint is relaxed. A step moves every conjugator along the
exponential flow g_i <- exp(eta D_i) g_i, i.e. A_i <- exp(eta D_i) A_i exp(-eta D_i),
with D_i the normalized descent direction

    additive:        D_i = [A_i^H, S],            S = sum_j A_j
    multiplicative:  D_i = [A_i^H, L_i^H E R_i^H], E = A_1...A_k - I

where L_i and R_i are the products left and right of A_i.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed, effective_n_jobs
from scipy.linalg import expm
from scipy.optimize import linear_sum_assignment
from sklearn.base import BaseEstimator

from .exceptions import InvalidInput, NonConvergence, NotConverged, ResidueConditionViolated
from .frontend import DSInstance, build_alpha_zeta, residue_condition
from .symplectic import matrix_from_json, matrix_to_json

ARMIJO_C1 = 1e-4
MIN_STEP = 1e-20
MAX_STEP = 1e3
COND_RESET = 1e8
RANK_FACTOR = 1e3
GRAD_FLOOR = 1e-13


@dataclass(frozen=True)
class SolverOptions:
    starts: int = 16
    max_iter: int = 5000
    tol: float = 1e-16
    seed: int = 0
    step0: float = 0.1
    early_stop: bool = True

    def __post_init__(self):
        if self.starts < 1 or self.max_iter < 0:
            raise InvalidInput("starts must be >= 1 and max_iter >= 0")
        if not self.tol > 0 or not self.step0 > 0:
            raise InvalidInput("tol and step0 must be positive")

    def to_dict(self) -> dict:
        return {"starts": self.starts, "max_iter": self.max_iter, "tol": self.tol, "seed": self.seed,
                "step0": self.step0, "early_stop": self.early_stop}

    @classmethod
    def from_dict(cls, d: Mapping) -> "SolverOptions":
        known = {"starts", "max_iter", "tol", "seed", "step0", "early_stop"}
        extra = set(d) - known
        if extra:
            raise InvalidInput(f"unknown solver options: {sorted(extra)}")
        try:
            kw = {k: v for k, v in d.items()}
            for k in ("starts", "max_iter", "seed"):
                if k in kw:
                    if isinstance(kw[k], bool) or int(kw[k]) != kw[k]:
                        raise InvalidInput(f"{k} must be an integer")
                    kw[k] = int(kw[k])
            for k in ("tol", "step0"):
                if k in kw:
                    kw[k] = float(kw[k])
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            raise InvalidInput(f"bad solver options: {exc}") from exc


@dataclass(frozen=True, eq=False)
class OrbitPoint:
    conjugators: tuple
    bases: tuple

    @property
    def matrices(self) -> tuple:
        return tuple(g @ b @ np.linalg.inv(g) for g, b in zip(self.conjugators, self.bases))


@dataclass(frozen=True, eq=False)
class SolverResult:
    mode: str
    point: OrbitPoint
    residual: float
    objective: float
    iterations: int
    converged: bool
    start_index: int
    tangent_dim: int | None = None
    constraint_rank: int | None = None
    resets: int = 0
    history: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "residual": self.residual,
            "objective": self.objective,
            "iterations": self.iterations,
            "converged": self.converged,
            "start_index": self.start_index,
            "tangent_dim": self.tangent_dim,
            "constraint_rank": self.constraint_rank,
            "resets": self.resets,
            "matrices": [matrix_to_json(a) for a in self.point.matrices],
            "conjugators": [matrix_to_json(g) for g in self.point.conjugators],
            "bases": [matrix_to_json(b) for b in self.point.bases],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SolverResult":
        def mats(key):
            out = []
            for m in d[key]:
                n = len(m["re"])
                out.append(matrix_from_json(m, (n, n)))
            return tuple(out)

        return cls(
            d["mode"], OrbitPoint(mats("conjugators"), mats("bases")),
            float(d["residual"]), float(d["objective"]), int(d["iterations"]), bool(d["converged"]),
            int(d["start_index"]), d.get("tangent_dim"), d.get("constraint_rank"), int(d.get("resets", 0)),
        )


# -- objective and gradient -------------------------------------------------------

def _conjugate(gs, bases):
    return [g @ b @ np.linalg.inv(g) for g, b in zip(gs, bases)]


def _partial_products(As):
    n = As[0].shape[0]
    left = [np.eye(n, dtype=complex)]
    for A in As[:-1]:
        left.append(left[-1] @ A)
    right = [np.eye(n, dtype=complex)]
    for A in As[:0:-1]:
        right.append(A @ right[-1])
    return left, right[::-1]


def constraint_defect(mode: str, As: Sequence[np.ndarray]) -> np.ndarray:
    if mode == "additive":
        return sum(As[1:], As[0].copy())
    left, _ = _partial_products(As)
    return left[-1] @ As[-1] - np.eye(As[0].shape[0])


def objective_and_direction(mode: str, As: Sequence[np.ndarray]):
    """f and the steepest-descent generators D_i (unnormalized).

    Moving A_i along exp(eps D_i) decreases f at rate 2 sum ||D_i||^2.
    """
    E = constraint_defect(mode, As)
    f = float(np.vdot(E, E).real)
    if mode == "additive":
        D = [A.conj().T @ E - E @ A.conj().T for A in As]
    else:
        left, right = _partial_products(As)
        D = []
        for A, L, R in zip(As, left, right):
            M = L.conj().T @ E @ R.conj().T
            D.append(A.conj().T @ M - M @ A.conj().T)
    return f, D


def _eigen_blocks(base: np.ndarray):
    """Column groups sharing an eigenvalue, for diagonal bases; None otherwise."""
    if np.count_nonzero(base - np.diag(np.diag(base))):
        return None
    groups: dict = {}
    for idx, lam in enumerate(np.diag(base)):
        groups.setdefault(complex(lam), []).append(idx)
    return list(groups.values())


def _reset(g: np.ndarray, blocks) -> np.ndarray:
    """Orthonormalize each eigenspace block of g; leaves g B g^-1 unchanged."""
    g = g.copy()
    for cols in blocks:
        qm, _ = np.linalg.qr(g[:, cols])
        g[:, cols] = qm
    return g


def _run_start(mode, bases, g0, opts: SolverOptions, start_index: int, record: bool):
    gs = [np.array(g, dtype=complex) for g in g0]
    blocks = [_eigen_blocks(b) for b in bases]
    f, D = objective_and_direction(mode, _conjugate(gs, bases))
    eta = opts.step0
    history = [f] if record else []
    it = resets = 0
    while it < opts.max_iter and f > opts.tol:
        gnorm = float(np.sqrt(sum(np.vdot(d, d).real for d in D)))
        if gnorm <= GRAD_FLOOR or not np.isfinite(gnorm):
            # stationary up to rounding: Armijo would accept zero-progress steps forever
            break
        while True:
            trial = [expm((eta / gnorm) * d) @ g for d, g in zip(D, gs)]
            f_new, D_new = objective_and_direction(mode, _conjugate(trial, bases))
            if np.isfinite(f_new) and f_new < f and f_new <= f - ARMIJO_C1 * eta * 2.0 * gnorm:
                break
            eta *= 0.5
            if eta < MIN_STEP:
                break
        if eta < MIN_STEP:
            break
        gs, f, D = trial, f_new, D_new
        it += 1
        if record:
            history.append(f)
        for i, g in enumerate(gs):
            if blocks[i] is not None and np.linalg.cond(g) > COND_RESET:
                gs[i] = _reset(g, blocks[i])
                resets += 1
        eta = min(2.0 * eta, MAX_STEP)
    return SolverResult(
        mode=mode,
        point=OrbitPoint(tuple(gs), tuple(bases)),
        residual=float(np.sqrt(f)),
        objective=f,
        iterations=it,
        converged=bool(f <= opts.tol),
        start_index=start_index,
        resets=resets,
        history=tuple(history),
    )


def spectrum_bases(inst: DSInstance) -> list[np.ndarray]:
    out = []
    for c in inst.classes:
        diag = [e.value for e in c.eigenvalues for _ in range(e.mult)]
        out.append(np.diag(np.array(diag, dtype=complex)))
    return out


def initial_conjugators(n: int, k: int, seed: int, start_index: int) -> list[np.ndarray]:
    """Start 0 is the aligned start (identity conjugators); the rest are random."""
    if start_index == 0:
        return [np.eye(n, dtype=complex) for _ in range(k)]
    rng = np.random.default_rng([seed, start_index])
    return [(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2) for _ in range(k)]


def run_starts(mode: str, bases: Sequence[np.ndarray], opts: SolverOptions, *,
               n_jobs: int | None = None, record: bool = False,
               transform: np.ndarray | None = None) -> SolverResult:
    """Multi-start driver.

    With ``early_stop`` the lowest-index converged start wins and no later
    start is needed; otherwise every start runs and the smallest residual wins
    (ties to the lowest index). Both rules ignore scheduling order.
    ``transform`` right-multiplies every initial conjugator (test hook).
    """
    n, k = bases[0].shape[0], len(bases)

    def one(s):
        g0 = initial_conjugators(n, k, opts.seed, s)
        if transform is not None:
            g0 = [g @ transform for g in g0]
        return _run_start(mode, bases, g0, opts, s, record)

    parallel = n_jobs not in (None, 1)
    if opts.early_stop:
        width = effective_n_jobs(n_jobs) if parallel else 1
    else:
        width = opts.starts
    results: list[SolverResult] = []
    for lo in range(0, opts.starts, width):
        chunk = range(lo, min(opts.starts, lo + width))
        if parallel:
            results += Parallel(n_jobs=n_jobs)(delayed(one)(s) for s in chunk)
        else:
            results += [one(s) for s in chunk]
        if opts.early_stop and any(r.converged for r in results):
            break
    if opts.early_stop:
        conv = [r for r in results if r.converged]
        if conv:
            return min(conv, key=lambda r: r.start_index)
    return min(results, key=lambda r: (r.residual, r.start_index))


def _check_mode(inst: DSInstance, mode: str):
    if inst.mode != mode:
        raise InvalidInput(f"expected a {mode} instance, got {inst.mode}")
    res = residue_condition(inst, build_alpha_zeta(inst))
    if not res.met:
        raise ResidueConditionViolated(f"{mode} residue condition fails (value {res.value})")


def _finish(result: SolverResult, raise_on_failure: bool) -> SolverResult:
    if not result.converged and raise_on_failure:
        raise NonConvergence(f"best residual {result.residual:.3e} above tolerance", result)
    return result


def solve_additive(inst: DSInstance, opts: SolverOptions | None = None, *, n_jobs: int | None = None,
                   record: bool = False, raise_on_failure: bool = False) -> SolverResult:
    opts = opts or SolverOptions()
    _check_mode(inst, "additive")
    return _finish(run_starts("additive", spectrum_bases(inst), opts, n_jobs=n_jobs, record=record),
                   raise_on_failure)


def solve_multiplicative(inst: DSInstance, opts: SolverOptions | None = None, *, n_jobs: int | None = None,
                         record: bool = False, raise_on_failure: bool = False) -> SolverResult:
    opts = opts or SolverOptions()
    _check_mode(inst, "multiplicative")
    return _finish(run_starts("multiplicative", spectrum_bases(inst), opts, n_jobs=n_jobs, record=record),
                   raise_on_failure)


# -- certification --------------------------------------------------------------------

def numerical_rank(m: np.ndarray, n: int) -> tuple[int, float]:
    """Rank with threshold n * eps * sigma_max * 1e3, and the gap sigma_r / sigma_{r+1}."""
    if m.size == 0:
        return 0, float("inf")
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0:
        return 0, float("inf")
    thresh = n * np.finfo(float).eps * s[0] * RANK_FACTOR
    r = int(np.sum(s > thresh))
    gap = float("inf") if r == len(s) else (float(s[r - 1] / s[r]) if s[r] > 0 else float("inf"))
    return r, gap


@dataclass(frozen=True)
class TangentReport:
    tangent_dim: int
    constraint_rank: int
    orbit_dims: tuple
    min_gap: float


def _orbit_tangent_basis(A: np.ndarray):
    n = A.shape[0]
    eye = np.eye(n)
    # row-major vec: vec(XA - AX) = (I kron A^T - A kron I) vec(X)
    ad = np.kron(eye, A.T) - np.kron(A, eye)
    u, s, _ = np.linalg.svd(ad)
    r, gap = numerical_rank(ad, n)
    return u[:, :r], r, gap


def tangent_analysis(result: SolverResult) -> TangentReport:
    if not result.converged:
        raise NotConverged("tangent dimension needs a converged result")
    As = result.point.matrices
    n = As[0].shape[0]
    blocks, dims_, gaps = [], [], []
    if result.mode == "multiplicative":
        left, right = _partial_products(list(As))
    for i, A in enumerate(As):
        basis, r, gap = _orbit_tangent_basis(A)
        dims_.append(r)
        gaps.append(gap)
        if result.mode == "multiplicative":
            basis = np.kron(left[i], right[i].T) @ basis
        blocks.append(basis)
    J = np.hstack(blocks)
    rank, gap = numerical_rank(J, n)
    gaps.append(gap)
    return TangentReport(sum(dims_) - rank, rank, tuple(dims_), min(gaps))


def tangent_dimension(result: SolverResult, inst: DSInstance | None = None) -> tuple[int, int]:
    rep = tangent_analysis(result)
    return rep.tangent_dim, rep.constraint_rank


def with_tangent(result: SolverResult) -> SolverResult:
    if not result.converged:
        return result
    td, cr = tangent_dimension(result)
    return replace(result, tangent_dim=td, constraint_rank=cr)


def certify(result: SolverResult, inst: DSInstance, tol: float = 1e-8) -> bool:
    """Spectra match the classes and the constraint residual is within ``tol``."""
    As = result.point.matrices
    if len(As) != inst.k:
        return False
    for A, c in zip(As, inst.classes):
        target = np.array([e.value for e in c.eigenvalues for _ in range(e.mult)], dtype=complex)
        if A.shape != (len(target), len(target)):
            return False
        ev = np.linalg.eigvals(A)
        cost = np.abs(ev[:, None] - target[None, :])
        r, cidx = linear_sum_assignment(cost)
        if cost[r, cidx].max(initial=0.0) > tol:
            return False
    E = constraint_defect(result.mode, list(As))
    return bool(np.linalg.norm(E) <= tol)


# -- estimator ------------------------------------------------------------------------

class OrbitSolver(BaseEstimator):
    """Estimator wrapper: ``fit`` takes a DSInstance (or its JSON dict).

    Fitted attributes: ``result_``, ``matrices_``, ``residual_``,
    ``converged_``, ``n_iter_``, ``tangent_dim_``, ``constraint_rank_``.
    """

    def __init__(self, starts=16, max_iter=5000, tol=1e-16, seed=0, step0=0.1, early_stop=True,
                 n_jobs=None):
        self.starts = starts
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed
        self.step0 = step0
        self.early_stop = early_stop
        self.n_jobs = n_jobs

    def _options(self) -> SolverOptions:
        return SolverOptions(self.starts, self.max_iter, self.tol, self.seed, self.step0, self.early_stop)

    def fit(self, X, y=None):
        from .validation import check_instance

        inst = check_instance(X)
        if inst.mode == "additive":
            res = solve_additive(inst, self._options(), n_jobs=self.n_jobs)
        elif inst.mode == "multiplicative":
            res = solve_multiplicative(inst, self._options(), n_jobs=self.n_jobs)
        else:
            raise InvalidInput("connection-mode instances have no matrix solver")
        res = with_tangent(res)
        self.instance_ = inst
        self.result_ = res
        self.matrices_ = res.point.matrices
        self.residual_ = res.residual
        self.converged_ = res.converged
        self.n_iter_ = res.iterations
        self.tangent_dim_ = res.tangent_dim
        self.constraint_rank_ = res.constraint_rank
        return self

    def certify(self, tol: float = 1e-8) -> bool:
        return certify(self.result_, self.instance_, tol)

    def score(self, X=None, y=None) -> float:
        """Negative residual, so larger is better."""
        return -self.residual_
