"""Box-constrained maximization of the 2D directivity over wire reactances.

The objective for a target angle ``theta_o`` is

    D(X) = |F(theta_o)|^2 / sum_i w_i |F(theta_i)|^2

with ``F = C u + f_src`` and ``A(X) u = b``.  Only the wire diagonals of
``A`` depend on ``X`` (``dA/dX_n = -1j`` there), so one transposed solve
with the LU factors of ``A`` gives every sensitivity:

    g = (conj(F_o) c_o - D sum_i w_i conj(F_i) C_i) / P
    A^T lam = g
    dD/dX_n = -2 Im(sum_{p in wire n} lam_p u_p)

Only the wire block of ``A`` changes with ``X``, so ground and cell
unknowns are eliminated once and the solves above act on the small
Schur-complement system.

The default search is a projected trust-region Newton ascent with the
exact Hessian, which is cheap here (one back-substitution per wire).
Variables sitting on a bound with the gradient pointing out of the box
are frozen for the step.  A projected L-BFGS ascent with an Armijo
backtracking search is kept as an alternative.  Both accept only uphill
steps.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg as sla

from . import radiation, vsie
from .errors import SolverError, ValidationError
from .geometry import WIRE, DesignSpec, build_scene

DEFAULT_MAX_ITER = 200
DEFAULT_TOL = 1e-6
DEFAULT_RESTARTS = 8
DEFAULT_SCREEN = 64  # random candidates ranked per restart
DEFAULT_SEED = 0
MEMORY = 8
ARMIJO_C1 = 1e-4
MAX_BACKTRACKS = 40
FIRST_STEP_FRACTION = 0.02  # of the box width, for the first (steepest-ascent) step
DEFAULT_METHOD = "newton"
TR_INITIAL_FRACTION = 0.05  # initial trust radius, as a fraction of the box width
TR_ACCEPT = 0.01
TR_BISECTIONS = 100


@dataclass(frozen=True, eq=False)
class DesignVector:
    """Wire reactances in ohm/sq together with their box bounds."""

    X: np.ndarray
    bounds: Tuple[float, float]

    def __post_init__(self):
        lo, hi = self.bounds
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValidationError(f"bounds must be finite, got {self.bounds}")
        if lo > hi:
            raise ValidationError(f"empty feasible box: X_min={lo} > X_max={hi}")
        x = np.array(self.X, dtype=float).reshape(-1)
        if np.any(x < lo) or np.any(x > hi):
            raise ValidationError(f"design vector leaves the box [{lo}, {hi}]")
        x.setflags(write=False)
        object.__setattr__(self, "X", x)
        object.__setattr__(self, "bounds", (float(lo), float(hi)))

    @classmethod
    def clamped(cls, X, bounds) -> "DesignVector":
        lo, hi = bounds
        if lo > hi:
            raise ValidationError(f"empty feasible box: X_min={lo} > X_max={hi}")
        return cls(np.clip(np.asarray(X, dtype=float), lo, hi), bounds)

    @property
    def m(self) -> int:
        return self.X.size

    def mirrored(self) -> "DesignVector":
        """Reactances of the y -> -y mirrored design."""
        return DesignVector(self.X[::-1].copy(), self.bounds)


@dataclass(frozen=True, eq=False)
class RestartResult:
    index: int
    start: np.ndarray
    X: np.ndarray
    D: float
    iterations: int
    converged: bool
    iterates: List[Tuple[int, float, float]]


@dataclass(frozen=True, eq=False)
class OptimizationReport:
    theta_o: float
    iterates: List[Tuple[int, float, float]]
    final_X: DesignVector
    final_D: float
    final_pattern: radiation.RadiationPattern
    converged: bool
    wall_time: float
    rng_seed: int
    best_restart: int
    restarts: List[RestartResult] = field(repr=False)

    @property
    def iterations(self) -> int:
        return self.iterates[-1][0] if self.iterates else 0


class DirectivityProblem:
    """Objective, adjoint gradient and Hessian for one (spec, theta_o).

    Ground and cell unknowns do not depend on ``X``, so the system is
    reduced once onto the wire unknowns with a Schur complement.  Every
    later evaluation factors only the small wire block.
    """

    def __init__(self, spec: DesignSpec, theta_o: float,
                 sample_count: int = radiation.DEFAULT_SAMPLE_COUNT, scene=None):
        if not -90.0 <= theta_o <= 90.0:
            raise ValidationError(f"theta_o must lie in [-90, 90] degrees, got {theta_o}")
        self.spec = spec
        self.theta_o = float(theta_o)
        self.scene = build_scene(spec) if scene is None else scene
        self.bounds = tuple(float(b) for b in spec.reactance_bounds)
        self.theta = radiation.angle_grid(sample_count)
        self.weights = radiation.trapezoid_weights(self.theta)

        A0 = vsie.assemble(self.scene, np.zeros(self.scene.n_wires)).A
        rhs = vsie.excitation(self.scene)
        C, f_src = radiation.radiation_operator(self.scene, self.theta)
        c_o, f_o = radiation.radiation_operator(self.scene, self.theta_o)
        w = np.flatnonzero(self.scene.kind == WIRE)
        o = np.flatnonzero(self.scene.kind != WIRE)
        self._wire_of_row = self.scene.wire_index[w]
        if o.size:
            lu_oo = sla.lu_factor(A0[np.ix_(o, o)])
            K = sla.lu_solve(lu_oo, A0[np.ix_(o, w)])
            y0 = sla.lu_solve(lu_oo, rhs[o])
            self.S = A0[np.ix_(w, w)] - A0[np.ix_(w, o)] @ K
            self.rhs = rhs[w] - A0[np.ix_(w, o)] @ y0
            self.C = C[:, w] - C[:, o] @ K
            self.f_src = f_src + C[:, o] @ y0
            self.c_o = c_o[0, w] - c_o[0, o] @ K
            self.f_o = f_o[0] + c_o[0, o] @ y0
        else:
            self.S, self.rhs = A0, rhs
            self.C, self.f_src, self.c_o, self.f_o = C, f_src, c_o[0], f_o[0]
        self.n_evaluations = 0

    @property
    def n(self) -> int:
        return self.scene.n_wires

    def check_feasible(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape != (self.n,):
            raise ValidationError(f"design vector has length {X.size}, expected {self.n}")
        lo, hi = self.bounds
        if np.any(X < lo) or np.any(X > hi):
            raise ValidationError(f"design vector leaves the box [{lo}, {hi}]")
        return X

    def _solve(self, X):
        A = self.S.copy()
        A[np.diag_indices_from(A)] -= 1j * X[self._wire_of_row]
        lu_piv = vsie.factorize(A, design=X)
        u = sla.lu_solve(lu_piv, self.rhs)
        res = np.linalg.norm(A @ u - self.rhs) / np.linalg.norm(self.rhs)
        if res > vsie.RESIDUAL_LIMIT:
            raise SolverError(f"relative residual {res:.3g} exceeds {vsie.RESIDUAL_LIMIT:g}", design=X)
        return lu_piv, u

    def _forward(self, X):
        lu_piv, u = self._solve(X)
        F = self.C @ u + self.f_src
        a = self.c_o @ u + self.f_o
        P = float(self.weights @ np.abs(F) ** 2)
        return lu_piv, u, F, a, P

    def evaluate(self, X, with_gradient: bool = True):
        """Return ``(D, dD/dX)``; the gradient is ``None`` when not requested."""
        X = self.check_feasible(X)
        self.n_evaluations += 1
        lu_piv, u, F, a, P = self._forward(X)
        D = float(abs(a) ** 2 / P)
        if not with_gradient:
            return D, None
        g = (np.conj(a) * self.c_o - D * ((self.weights * np.conj(F)) @ self.C)) / P
        lam = sla.lu_solve(lu_piv, g, trans=1)
        grad = np.zeros(self.n)
        np.add.at(grad, self._wire_of_row, -2.0 * np.imag(lam * u))
        return D, grad

    def evaluate_hessian(self, X):
        """Return ``(D, gradient, Hessian)``.

        The current sensitivities ``du/dX_m = A^-1 (j E_m u)`` reuse the LU
        factors, so the exact Hessian costs ``n`` extra back-substitutions.
        """
        X = self.check_feasible(X)
        self.n_evaluations += 1
        lu_piv, u, F, a, P = self._forward(X)
        w = self.weights
        N = abs(a) ** 2
        D = float(N / P)
        g = (np.conj(a) * self.c_o - D * ((w * np.conj(F)) @ self.C)) / P
        lam = sla.lu_solve(lu_piv, g, trans=1)
        E = np.zeros((u.size, self.n), dtype=complex)
        E[np.arange(u.size), self._wire_of_row] = 1j * u
        du = sla.lu_solve(lu_piv, E)
        grad = 2.0 * np.real(g @ du)
        da = self.c_o @ du
        dF = self.C @ du
        N1 = 2.0 * np.real(np.conj(a) * da)
        P1 = 2.0 * np.real((w * np.conj(F)) @ dF)
        N2 = 2.0 * np.real(np.outer(np.conj(da), da))
        P2 = 2.0 * np.real(dF.conj().T @ (w[:, None] * dF))
        T = np.zeros((self.n, self.n), dtype=complex)
        np.add.at(T, self._wire_of_row, 1j * lam[:, None] * du)
        H = (2.0 * np.real(T + T.T)
             + (N2 * P - N * P2) / P ** 2
             - (np.outer(N1, P1) + np.outer(P1, N1)) / P ** 2
             + 2.0 * N * np.outer(P1, P1) / P ** 3)
        return D, grad, 0.5 * (H + H.T)

    def objective(self, X) -> float:
        return self.evaluate(X, with_gradient=False)[0]

    def gradient(self, X) -> np.ndarray:
        return self.evaluate(X)[1]

    def currents(self, X) -> vsie.CurrentSolution:
        return vsie.solve_design(self.scene, self.check_feasible(X))


def objective(spec: DesignSpec, X, theta_o: float) -> float:
    """2D directivity toward ``theta_o`` of the design loaded with ``X``."""
    return DirectivityProblem(spec, theta_o).objective(X)


def gradient(spec: DesignSpec, X, theta_o: float) -> np.ndarray:
    """Adjoint gradient of :func:`objective` with respect to ``X``."""
    return DirectivityProblem(spec, theta_o).gradient(X)


def finite_difference_gradient(problem: DirectivityProblem, X, step: float = 0.5) -> np.ndarray:
    """Central differences with a one-sided fallback at the bounds."""
    X = problem.check_feasible(X)
    lo, hi = problem.bounds
    out = np.empty(problem.n)
    for n in range(problem.n):
        up, down = X.copy(), X.copy()
        up[n] = min(X[n] + step, hi)
        down[n] = max(X[n] - step, lo)
        out[n] = (problem.objective(up) - problem.objective(down)) / (up[n] - down[n])
    return out


def _free_mask(X, g, bounds):
    # a coordinate is blocked when it sits on a bound and ascent would leave the box
    lo, hi = bounds
    return ~(((X <= lo) & (g < 0)) | ((X >= hi) & (g > 0)))


def projected_gradient_norm(X, g, bounds) -> float:
    """Max-norm of the gradient restricted to coordinates free to move uphill."""
    free = _free_mask(X, g, bounds)
    return float(np.max(np.abs(g[free]), initial=0.0))


def stationarity_certificate(X, g, bounds, tol) -> np.ndarray:
    """Per-coordinate flag: interior with ``|g| < tol`` or on a bound with ``g`` pointing out."""
    lo, hi = bounds
    interior_ok = (X > lo) & (X < hi) & (np.abs(g) < tol)
    bound_ok = ((X <= lo) & (g <= tol)) | ((X >= hi) & (g >= -tol))
    return interior_ok | bound_ok


def _two_loop(q, s_hist, y_hist):
    # L-BFGS inverse-Hessian product for the minimization of -D
    alphas = []
    q = q.copy()
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        a = (s @ q) / (y @ s)
        alphas.append(a)
        q -= a * y
    s, y = s_hist[-1], y_hist[-1]
    q *= (s @ y) / (y @ y)
    for (s, y), a in zip(zip(s_hist, y_hist), reversed(alphas)):
        b = (y @ q) / (y @ s)
        q += (a - b) * s
    return q


def ascend_lbfgs(problem: DirectivityProblem, X0, max_iter: int = DEFAULT_MAX_ITER,
                 tol: float = DEFAULT_TOL, memory: int = MEMORY):
    """Projected L-BFGS ascent from ``X0``.

    Returns ``(X, D, grad, iterates, converged)``; ``iterates`` lists
    ``(iteration, D, max projected gradient)`` for the start and every
    accepted step, with ``D`` non-decreasing.
    """
    lo, hi = problem.bounds
    x = np.clip(np.asarray(X0, dtype=float), lo, hi)
    D, g = problem.evaluate(x)
    pg = projected_gradient_norm(x, g, problem.bounds)
    iterates = [(0, D, pg)]
    s_hist, y_hist = [], []
    width = max(hi - lo, 1e-12)
    converged = pg < tol
    it = 0
    while not converged and it < max_iter:
        free = _free_mask(x, g, problem.bounds)
        # work with f = -D so the textbook minimization formulas apply
        grad_f = np.where(free, -g, 0.0)
        if s_hist:
            d = -_two_loop(grad_f, [np.where(free, s, 0) for s in s_hist],
                           [np.where(free, y, 0) for y in y_hist])
            d[~free] = 0.0
            if not (d @ grad_f < 0):
                d = -grad_f
                s_hist.clear()
                y_hist.clear()
        else:
            d = -grad_f
        if not s_hist:
            d *= FIRST_STEP_FRACTION * width / max(np.max(np.abs(d)), 1e-300)

        accepted = False
        alpha = 1.0
        for _ in range(MAX_BACKTRACKS):
            x_try = np.clip(x + alpha * d, lo, hi)
            step = x_try - x
            if not np.any(step):
                break
            try:
                D_try, g_try = problem.evaluate(x_try)
            except SolverError:
                alpha *= 0.5
                continue
            if D_try >= D + ARMIJO_C1 * (g @ step) and D_try >= D:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            if s_hist:
                # curvature model went stale: retry once from steepest ascent
                s_hist.clear()
                y_hist.clear()
                continue
            break

        it += 1
        s_vec = x_try - x
        y_vec = -(g_try - g)
        if s_vec @ y_vec > 1e-12 * np.linalg.norm(s_vec) * np.linalg.norm(y_vec):
            s_hist.append(s_vec)
            y_hist.append(y_vec)
            if len(s_hist) > memory:
                s_hist.pop(0)
                y_hist.pop(0)
        x, D, g = x_try, D_try, g_try
        pg = projected_gradient_norm(x, g, problem.bounds)
        iterates.append((it, D, pg))
        converged = pg < tol
    return x, D, g, iterates, converged


def trust_region_step(g, H, delta):
    """Maximize ``g.s + s.H.s / 2`` subject to ``|s| <= delta``.

    Solved exactly in the eigenbasis of ``H`` with bisection on the shift.
    """
    if not delta > 0:
        return np.zeros_like(g)
    evals, V = np.linalg.eigh(-H)
    c = V.T @ g
    scale = max(1.0, float(np.max(np.abs(evals))))

    def step(mu):
        return V @ (c / (evals + mu))

    if evals[0] > 0:
        s = step(0.0)
        if np.linalg.norm(s) <= delta:
            return s
    mu_lo = max(0.0, -evals[0]) + 1e-12 * scale
    mu_hi = mu_lo + np.linalg.norm(g) / delta + scale
    for _ in range(TR_BISECTIONS):
        mu = 0.5 * (mu_lo + mu_hi)
        if np.linalg.norm(step(mu)) > delta:
            mu_lo = mu
        else:
            mu_hi = mu
    return step(mu_hi)


def ascend_newton(problem: DirectivityProblem, X0, max_iter: int = DEFAULT_MAX_ITER,
                  tol: float = DEFAULT_TOL):
    """Projected trust-region Newton ascent with the exact Hessian.

    Blocked coordinates are frozen, the step is solved on the free ones
    and projected onto the box.  A step is kept only when ``D`` increases
    and the quadratic model predicted at least a small part of the gain.
    Same return convention as :func:`ascend_lbfgs`.
    """
    lo, hi = problem.bounds
    x = np.clip(np.asarray(X0, dtype=float), lo, hi)
    D, g, H = problem.evaluate_hessian(x)
    pg = projected_gradient_norm(x, g, problem.bounds)
    iterates = [(0, D, pg)]
    delta = TR_INITIAL_FRACTION * max(hi - lo, 1e-12)
    converged = pg < tol
    it = 0
    while not converged and it < max_iter:
        free = _free_mask(x, g, problem.bounds)
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            s = np.zeros_like(x)
            s[free] = trust_region_step(g[free], H[np.ix_(free, free)], delta)
            x_try = np.clip(x + s, lo, hi)
            step = x_try - x
            size = np.linalg.norm(step)
            if size == 0.0:
                break
            predicted = g @ step + 0.5 * step @ H @ step
            try:
                D_try, g_try, H_try = problem.evaluate_hessian(x_try)
            except SolverError:
                delta = 0.25 * size
                continue
            rho = (D_try - D) / predicted if predicted > 0 else -1.0
            if rho < 0.25:
                delta = 0.25 * size
            elif rho > 0.75 and size > 0.99 * delta:
                delta *= 2.0
            if D_try > D and rho > TR_ACCEPT:
                accepted = True
                break
        if not accepted:
            break
        it += 1
        x, D, g, H = x_try, D_try, g_try, H_try
        pg = projected_gradient_norm(x, g, problem.bounds)
        iterates.append((it, D, pg))
        converged = pg < tol
    return x, D, g, iterates, converged


METHODS = {"newton": ascend_newton, "lbfgs": ascend_lbfgs}


def ascend(problem: DirectivityProblem, X0, max_iter: int = DEFAULT_MAX_ITER,
           tol: float = DEFAULT_TOL, method: str = DEFAULT_METHOD):
    """Local ascent from ``X0`` with the named method (``newton`` or ``lbfgs``)."""
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; choose from {sorted(METHODS)}")
    return METHODS[method](problem, X0, max_iter=max_iter, tol=tol)


def starting_points(n: int, bounds, restarts: int, seed: int) -> np.ndarray:
    """Seeded uniform starting designs, one row per restart."""
    rng = np.random.default_rng(seed)
    return rng.uniform(bounds[0], bounds[1], size=(restarts, n))


def screened_starting_points(problem: DirectivityProblem, restarts: int, seed: int,
                             screen: int = DEFAULT_SCREEN) -> np.ndarray:
    """The ``restarts`` best of ``restarts * screen`` seeded uniform candidates.

    Ranking uses the objective only.  Ties keep the draw order.
    """
    candidates = starting_points(problem.n, problem.bounds, restarts * screen, seed)
    if screen == 1:
        return candidates
    D = np.array([problem.objective(x) for x in candidates])
    order = np.argsort(-D, kind="stable")
    return candidates[order[:restarts]]


def maximize_directivity(spec: DesignSpec, theta_o: float, max_iter: int = DEFAULT_MAX_ITER,
                         tol: float = DEFAULT_TOL, restarts: int = DEFAULT_RESTARTS,
                         seed: int = DEFAULT_SEED,
                         sample_count: int = radiation.DEFAULT_SAMPLE_COUNT,
                         starts: Optional[np.ndarray] = None,
                         problem: Optional[DirectivityProblem] = None,
                         method: str = DEFAULT_METHOD,
                         screen: int = DEFAULT_SCREEN) -> OptimizationReport:
    """Maximize the 2D directivity toward ``theta_o`` from several seeded starts.

    The best run wins; ties go to the lowest restart index.
    """
    t0 = time.perf_counter()
    lo, hi = spec.reactance_bounds
    if lo > hi:
        raise ValidationError(f"empty feasible box: X_min={lo} > X_max={hi}")
    if restarts < 1:
        raise ValidationError(f"restarts must be >= 1, got {restarts}")
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; choose from {sorted(METHODS)}")
    if screen < 1:
        raise ValidationError(f"screen must be >= 1, got {screen}")
    if problem is None:
        problem = DirectivityProblem(spec, theta_o, sample_count)
    elif problem.theta_o != float(theta_o):
        raise ValidationError(f"problem targets {problem.theta_o} deg, not {theta_o} deg")
    if starts is None:
        starts = screened_starting_points(problem, restarts, seed, screen)
    results = []
    for i, x0 in enumerate(np.atleast_2d(starts)):
        x, D, _, iterates, conv = ascend(problem, x0, max_iter=max_iter, tol=tol, method=method)
        results.append(RestartResult(i, np.array(x0), x, D, iterates[-1][0], conv, iterates))
    best = max(results, key=lambda r: (r.D, -r.index))
    currents = problem.currents(best.X)
    pattern = radiation.sample_pattern(currents, sample_count)
    return OptimizationReport(
        theta_o=float(theta_o),
        iterates=best.iterates,
        final_X=DesignVector(best.X, problem.bounds),
        final_D=best.D,
        final_pattern=pattern,
        converged=best.converged,
        wall_time=time.perf_counter() - t0,
        rng_seed=int(seed),
        best_restart=best.index,
        restarts=results,
    )
