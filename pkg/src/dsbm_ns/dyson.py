"""Coupled Dyson system: solver, density evaluation, and scaling structure.

The central object is the positive pair (v, w) solving

    1/v = eta + S w + tau / (eta + S^t v),
    1/w = eta + S^t v + tau / (eta + S w),

entrywise, with plain matrix action and normalized averages <f> = mean(f).
At eta = 0 the pair is unique once <v> = <w> is imposed, and exists for
tau in (0, rho(S)).

Two independent density routes are provided.  ``density_sigma`` evaluates
the bulk density at z through the eta = 0 solution and the analytic
tau-derivative of u = v / (S^t v): differentiating the log-potential of the
Hermitized model gives sigma = (1/pi) d/dtau [ tau <u> ], and the
derivative is obtained exactly from one small linear solve, not by finite
differences.  ``density_sigma_via_integral`` integrates <v(tau, eta)> over
eta (adaptive quadrature on a log grid plus an analytic O(1/eta^2) tail)
and applies a five-point finite-difference Laplacian in z; it serves as
the independent oracle for the first route.

The solver runs a damped fixed-point stage in log-coordinates to enter the
Newton basin, then Newton's method on the log-domain residual; an
eta-continuation ladder is the fallback.  Plain damped iteration alone
contracts like 1 - O(tau^kappa) and cannot reach tight tolerances at
extreme tau.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .blockgraph import LHD, PREC, BlockRelationGraph
from .errors import (
    DomainViolationError,
    NegativeArgumentError,
    NonConvergenceError,
    QuadratureFailureError,
    SingularKernelError,
    TauOutOfRangeError,
)
from .kernels import STATUS_OK, get_kernels, log_matrix
from .structure import NormalForm, VarianceProfile, spectral_radius

__all__ = [
    "DysonParams",
    "DysonSolution",
    "DensityEvaluation",
    "ExponentProfile",
    "ScalingCheck",
    "VariationalReport",
    "cached_spectral_radius",
    "solve_dyson",
    "density_sigma",
    "density_sigma_via_integral",
    "exponent_profile",
    "scaling_check",
    "functional_J",
    "verify_variational",
    "edge_weights",
    "minmax_defect",
    "successor_weight_slack",
]

_rho_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def cached_spectral_radius(m: VarianceProfile) -> tuple[float, np.ndarray]:
    """spectral_radius with per-profile memoization (identity-keyed)."""
    hit = _rho_cache.get(m)
    if hit is None:
        hit = spectral_radius(m)
        _rho_cache[m] = hit
    return hit


@dataclass
class DysonParams:
    """Solver parameters; eta = 0 requires tau < rho(S)."""

    tau: float
    eta: float = 0.0
    tol: float = 1e-12
    max_iter: int = 200_000
    damping: float = 0.5

    def __post_init__(self):
        if not (self.tau > 0):
            raise TauOutOfRangeError(f"tau must be positive, got {self.tau}")
        if self.eta < 0:
            raise ValueError(f"eta must be nonnegative, got {self.eta}")
        if not (0 < self.damping <= 1):
            raise ValueError(f"damping must be in (0, 1], got {self.damping}")


@dataclass(eq=False)
class DysonSolution:
    """Positive solution pair with convergence diagnostics.

    ``residual`` is the max relative defect |v * rhs_v - 1|, |w * rhs_w - 1|
    over components; ``normalized`` records that <v> = <w> was enforced
    (always the case for eta = 0 solves).
    """

    v: np.ndarray
    w: np.ndarray
    tau: float
    eta: float
    residual: float
    iterations: int
    normalized: bool

    def identity_defects(self, m: VarianceProfile) -> dict:
        """Relative defects of the eta = 0 solution identities.

        one_lhs: componentwise 1 = w * S^t v + tau * v / (S^t v);
        vw_symmetry: entrywise v * (S w) = w * (S^t v).
        """
        s = m.entries
        sw = s @ self.w
        stv = s.T @ self.v
        one_lhs = np.abs(self.w * stv + self.tau * self.v / stv - 1.0).max()
        lhs = self.v * sw
        rhs = self.w * stv
        sym = np.abs(lhs - rhs).max() / np.abs(lhs).max()
        return {"one_lhs": float(one_lhs), "vw_symmetry": float(sym)}


_FP_STAGE_ITERS = 4000
_FP_COARSE_TOL = 1e-2
_NEWTON_ITERS = 100
_LADDER_START = 1.0
_LADDER_RATIO = 0.25
_LADDER_FLOOR = 1e-4


def _solve_logs(s, log_s, log_st, tau, eta, tol, max_iter, damping, x0, y0):
    """Three-stage solve in log-coordinates; returns (x, y, defect, iters)."""
    kernels = get_kernels()
    fixed_point = kernels["fixed_point"]
    newton = kernels["newton"]
    st = np.ascontiguousarray(s.T)

    total = 0

    def attempt(x, y, at_eta):
        nonlocal total
        x, y, defect, it, status = fixed_point(
            log_s, log_st, tau, at_eta, x, y, damping, 0.01,
            max(tol, _FP_COARSE_TOL), min(max_iter, _FP_STAGE_ITERS))
        total += it
        if status == STATUS_OK and _FP_COARSE_TOL <= tol:
            return x, y, defect, True
        try:
            x, y, defect, it, status = newton(s, st, tau, at_eta, x, y, tol, _NEWTON_ITERS)
        except np.linalg.LinAlgError:
            return x, y, defect, False
        total += it
        return x, y, defect, status == STATUS_OK and defect <= tol

    x, y, defect, ok = attempt(x0.copy(), y0.copy(), eta)
    if ok:
        return x, y, defect, total

    # eta-continuation ladder, warm-started downward to the target
    level = _LADDER_START
    x = np.full_like(x0, -np.log1p(level))
    y = x.copy()
    while level > max(eta, _LADDER_FLOOR):
        x, y, defect, _ = attempt(x, y, level)
        level *= _LADDER_RATIO
    x, y, defect, ok = attempt(x, y, eta)
    if ok:
        return x, y, defect, total
    raise NonConvergenceError(
        f"Dyson solver failed at tau={tau:.3e}, eta={eta:.3e}: residual {defect:.3e}",
        residual=float(defect), iterations=total)


def solve_dyson(m: VarianceProfile, p: DysonParams,
                warm_start: DysonSolution | tuple | None = None) -> DysonSolution:
    """Solve the coupled system at (tau, eta) to the requested tolerance.

    At eta = 0 the iterate is rescaled every step by sqrt(<w>/<v>) so the
    returned pair satisfies <v> = <w> exactly; tau must then lie strictly
    below rho(S).  ``warm_start`` accepts a previous solution (or a (v, w)
    pair) from a nearby parameter point.
    """
    if p.eta == 0.0:
        rho, _ = cached_spectral_radius(m)
        if p.tau >= rho:
            raise TauOutOfRangeError(
                f"eta = 0 needs tau < rho(S) = {rho:.6g}, got tau = {p.tau:.6g}")
    if warm_start is None:
        x0 = np.full(m.K, -np.log1p(p.eta))
        y0 = x0.copy()
    else:
        pair = (warm_start.v, warm_start.w) if isinstance(warm_start, DysonSolution) else warm_start
        x0 = np.log(np.asarray(pair[0], dtype=float))
        y0 = np.log(np.asarray(pair[1], dtype=float))
    s = np.ascontiguousarray(m.entries)
    x, y, defect, iters = _solve_logs(
        s, log_matrix(s), log_matrix(s.T), p.tau, p.eta,
        p.tol, p.max_iter, p.damping, x0, y0)
    return DysonSolution(v=np.exp(x), w=np.exp(y), tau=p.tau, eta=p.eta,
                         residual=float(defect), iterations=iters,
                         normalized=(p.eta == 0.0))


@dataclass(eq=False)
class DensityEvaluation:
    """Bulk density value at a point, with the solution profile behind it."""

    z: complex
    sigma: float
    vhat: np.ndarray
    method: str
    residual: float
    fr_eig_min: float | None = None
    fr_eig_max: float | None = None


_FR_CHECK_TOL = 1e-9


def _density_from_solution(m: VarianceProfile, sol: DysonSolution) -> tuple[float, np.ndarray, float, float]:
    """sigma = (1/pi) d/dtau [ tau <u> ] with u = v/(S^t v), evaluated
    analytically.

    Differentiating the Dyson system in tau gives a linear system for the
    scaled log-derivatives (tau dlog v/dtau, tau dlog w/dtau) whose matrix
    entries are all bounded by 1; at eta = 0 it is rank-deficient along the
    scaling gauge (constant (+1, -1) direction), which the observable is
    invariant under, so the minimum-norm solution is taken.  Also verifies
    the stationarity contract of the symmetrized kernel matrix F_r built
    from the solution: F_r vhat = vhat with top eigenvalue 1.
    """
    s = m.entries
    k = m.K
    v, w = sol.v, sol.w
    tau = sol.tau
    a = s.T @ v
    b = s @ w
    u = v / a                      # == w / b == 1/(ab + tau)
    g = tau * u                    # == 1 - v*b at the solution, all-positive form
    vhat = np.sqrt(v * b)

    fr = 0.5 * (s * np.outer(v / vhat, w / vhat) + s.T * np.outer(w / vhat, v / vhat))
    fixed_defect = np.abs(fr @ vhat - vhat).max() / np.abs(vhat).max()
    if fixed_defect > _FR_CHECK_TOL:
        raise NonConvergenceError(
            f"kernel matrix stationarity defect {fixed_defect:.3e} exceeds "
            f"{_FR_CHECK_TOL:.0e}; solution is not accurate enough",
            residual=fixed_defect)
    eigs = np.linalg.eigvalsh(fr)
    if abs(eigs[-1] - 1.0) > _FR_CHECK_TOL or eigs[0] < -1.0 - _FR_CHECK_TOL:
        raise SingularKernelError(
            f"kernel matrix spectrum [{eigs[0]:.6g}, {eigs[-1]:.6g}] outside [-1, 1]")

    c1 = (g / a)[:, None] * (s.T * v[None, :])
    c2 = (g / b)[:, None] * (s * w[None, :])
    e1 = v[:, None] * s * w[None, :]
    e2 = w[:, None] * s.T * v[None, :]
    sys = np.block([[c1 - np.eye(k), -e1], [-e2, c2 - np.eye(k)]])
    rhs = np.concatenate([g, g])
    deriv, *_ = np.linalg.lstsq(sys, rhs, rcond=1e-12)
    dt, et = deriv[:k], deriv[k:]
    core = v * b - w * (s.T @ (v * dt)) - v * (s @ (w * et))
    sigma = float(np.mean(u * core) / np.pi)
    if not np.isfinite(sigma) or sigma <= 0:
        raise SingularKernelError(
            f"density evaluation produced sigma = {sigma} at tau = {tau:.3e}")
    return sigma, vhat, float(eigs[0]), float(eigs[-1])


def density_sigma(m: VarianceProfile, z: complex, tol: float = 1e-12) -> DensityEvaluation:
    """Bulk density at z via the eta = 0 solution (0 < |z|^2 < rho(S))."""
    tau = abs(z) ** 2
    rho, _ = cached_spectral_radius(m)
    if not 0 < tau < rho:
        raise TauOutOfRangeError(
            f"|z|^2 = {tau:.6g} outside the bulk (0, rho(S) = {rho:.6g})")
    sol = solve_dyson(m, DysonParams(tau=tau, eta=0.0, tol=tol))
    sigma, vhat, lo, hi = _density_from_solution(m, sol)
    return DensityEvaluation(z=complex(z), sigma=sigma, vhat=vhat,
                             method="QuadraticForm", residual=sol.residual,
                             fr_eig_min=lo, fr_eig_max=hi)


_QUAD_TOL = 1e-11
_TAIL_CUTOFF = 1e5


def _eta_integral(m: VarianceProfile, tau: float, tol: float) -> float:
    """integral over eta of (<v(tau, eta)> - 1/(1+eta)).

    Adaptive quadrature on [0, 1] and, through the substitution eta = e^u,
    on a logarithmic grid up to the cutoff; beyond it the integrand is
    log(1 + 1/eta) - (<S 1> + tau)/eta^3 + O(eta^-4) and is integrated
    analytically.  Solves are warm-started from the previous evaluation.
    """
    state: dict = {"pair": None}

    def integrand(eta):
        sol = solve_dyson(m, DysonParams(tau=tau, eta=eta, tol=tol),
                          warm_start=state["pair"])
        state["pair"] = (sol.v, sol.w)
        return float(np.mean(sol.v) - 1.0 / (1.0 + eta))

    try:
        low, err_low = quad(integrand, 0.0, 1.0, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=300)
        high, err_high = quad(lambda uu: integrand(np.exp(uu)) * np.exp(uu),
                              0.0, np.log(_TAIL_CUTOFF),
                              epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=300)
    except NonConvergenceError as exc:
        raise QuadratureFailureError(f"eta-integral solver failure: {exc}") from exc
    if err_low + err_high > 1e-8:
        raise QuadratureFailureError(
            f"eta-integral error estimate {err_low + err_high:.3e} too large at tau={tau:.3e}")
    tail = np.log1p(1.0 / _TAIL_CUTOFF) - (np.mean(m.entries.sum(axis=1)) + tau) / (2 * _TAIL_CUTOFF ** 2)
    return low + high + float(tail)


def density_sigma_via_integral(m: VarianceProfile, z: complex,
                               h: float | None = None,
                               tol: float = 1e-12) -> DensityEvaluation:
    """Independent density oracle: eta-integral plus 5-point Laplacian in z.

    ``h`` is the finite-difference step; the default scales with |z| and
    keeps the truncation error near 1e-5 relative in the bulk interior.
    """
    tau = abs(z) ** 2
    rho, _ = cached_spectral_radius(m)
    if not 0 < tau < rho:
        raise TauOutOfRangeError(
            f"|z|^2 = {tau:.6g} outside the bulk (0, rho(S) = {rho:.6g})")
    if h is None:
        h = max(1e-3, 0.01 * abs(z))
    if h <= 0 or h >= abs(z):
        raise ValueError(f"finite-difference step h = {h} must lie in (0, |z|)")

    zc = complex(z)
    values: dict = {}
    for point in (zc + h, zc - h, zc + 1j * h, zc - 1j * h, zc):
        t = abs(point) ** 2
        if t not in values:
            values[t] = _eta_integral(m, t, tol)
    laplacian = (values[abs(zc + h) ** 2] + values[abs(zc - h) ** 2]
                 + values[abs(zc + 1j * h) ** 2] + values[abs(zc - 1j * h) ** 2]
                 - 4.0 * values[abs(zc) ** 2]) / h ** 2
    sigma = -laplacian / (2.0 * np.pi)
    if not np.isfinite(sigma) or sigma <= 0:
        raise QuadratureFailureError(
            f"integral route produced sigma = {sigma} at |z| = {abs(z):.3e}")
    sol = solve_dyson(m, DysonParams(tau=tau, eta=0.0, tol=tol))
    return DensityEvaluation(z=zc, sigma=float(sigma), vhat=np.sqrt(sol.v * (m.entries @ sol.w)),
                             method="IntegralLaplacian", residual=sol.residual)


@dataclass(eq=False)
class ExponentProfile:
    """Power-law structure of block averages along a decreasing tau grid.

    ``f`` holds the raw ratios -log<v~_k>/log tau per grid point (L rows);
    ``f_hat`` is the two-point log-log slope at the smallest tau pair,
    which cancels multiplicative constants and is the quantity that
    converges.  ``delta`` is min over LHD edges of f_hat[k] - f_hat[l]
    (None when the graph has no LHD edges) and ``weights`` maps each edge
    to its empirical weight.
    """

    tau_grid: np.ndarray
    f: np.ndarray
    f_hat: np.ndarray
    delta: float | None
    weights: dict
    vtilde_means: np.ndarray
    wtilde_means: np.ndarray

    @property
    def delta_hat(self) -> float:
        return min(self.weights.values())


def edge_weights(f_hat: np.ndarray, graph: BlockRelationGraph) -> dict:
    """Empirical edge weights: f_hat[k] - f_hat[l] on LHD edges, plus one on
    PREC-only edges (dual-labeled edges ride their LHD label)."""
    out = {}
    for (l, k), labels in graph.edges.items():
        w = float(f_hat[k] - f_hat[l])
        out[(l, k)] = w if LHD in labels else w + 1.0
    return out


def minmax_defect(f_hat: np.ndarray, graph: BlockRelationGraph) -> np.ndarray:
    """Componentwise defect of the min-max averaging relation satisfied by
    the limiting exponents:

        f_k = ((max of incoming f_l over LHD, f_l - 1 over PREC)
             + (min of outgoing f_l over LHD, f_l + 1 over PREC)) / 2.
    """
    L = graph.L
    defects = np.empty(L)
    for k in range(L):
        upper = -np.inf
        lower = np.inf
        for (l, kk), labels in graph.edges.items():
            if kk == k:
                if LHD in labels:
                    upper = max(upper, f_hat[l])
                if PREC in labels:
                    upper = max(upper, f_hat[l] - 1.0)
            if l == k:
                if LHD in labels:
                    lower = min(lower, f_hat[kk])
                if PREC in labels:
                    lower = min(lower, f_hat[kk] + 1.0)
        defects[k] = abs(f_hat[k] - 0.5 * (upper + lower))
    return defects


def successor_weight_slack(weights: dict, graph: BlockRelationGraph) -> float:
    """Largest violation of the successor property: every edge (l, k) should
    admit an outgoing edge at k of no larger weight.  Nonpositive when the
    property holds exactly."""
    worst = -np.inf
    for (l, k) in graph.edges:
        succ = min(weights[(kk, p)] for (kk, p) in graph.edges if kk == k)
        worst = max(worst, succ - weights[(l, k)])
    return float(worst)


def _grid_solutions(m: VarianceProfile, tau_grid: np.ndarray, tol: float) -> list:
    sols = []
    warm = None
    for tau in tau_grid:
        sol = solve_dyson(m, DysonParams(tau=float(tau), eta=0.0, tol=tol), warm_start=warm)
        warm = sol
        sols.append(sol)
    return sols


def _validate_grid(m: VarianceProfile, tau_grid) -> np.ndarray:
    grid = np.asarray(tau_grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) >= 0):
        raise ValueError("tau grid must be strictly decreasing with at least two points")
    rho, _ = cached_spectral_radius(m)
    if grid[0] >= rho / 2:
        raise TauOutOfRangeError(
            f"tau grid must stay below rho(S)/2 = {rho / 2:.6g}, got max {grid[0]:.6g}")
    return grid


def exponent_profile(m: VarianceProfile, tau_grid, nf: NormalForm | None = None,
                     graph: BlockRelationGraph | None = None,
                     tol: float = 1e-12) -> ExponentProfile:
    """Block-averaged exponents along a decreasing tau grid (max < rho/2)."""
    from .blockgraph import build_block_graph
    from .structure import normal_form

    grid = _validate_grid(m, tau_grid)
    if nf is None:
        nf = normal_form(m)
    if graph is None:
        graph = build_block_graph(nf)

    sols = _grid_solutions(m, grid, tol)
    L = nf.L
    n = len(grid)
    vmeans = np.empty((L, n))
    wmeans = np.empty((L, n))
    for j, sol in enumerate(sols):
        vmeans[:, j] = nf.block_means(nf.tilde_rows(sol.v))
        wmeans[:, j] = nf.block_means(nf.tilde_cols(sol.w))
    log_tau = np.log(grid)
    f = -np.log(vmeans) / log_tau[None, :]
    f_hat = -(np.log(vmeans[:, -1]) - np.log(vmeans[:, -2])) / (log_tau[-1] - log_tau[-2])

    lhd_pairs = [(l, k) for (l, k), labels in graph.edges.items() if LHD in labels]
    delta = min(float(f_hat[k] - f_hat[l]) for l, k in lhd_pairs) if lhd_pairs else None
    return ExponentProfile(tau_grid=grid, f=f, f_hat=f_hat, delta=delta,
                           weights=edge_weights(f_hat, graph),
                           vtilde_means=vmeans, wtilde_means=wmeans)


@dataclass(eq=False)
class ScalingCheck:
    """Least-squares slopes of log<1 - v*Sw> and log<v*w> against log tau."""

    slope_one_minus: float
    slope_vw: float
    tau_grid: np.ndarray
    one_minus_means: np.ndarray
    vw_means: np.ndarray


_GAP_FLOOR = 64 * np.finfo(float).eps


def scaling_check(m: VarianceProfile, tau_grid, tol: float = 1e-12) -> ScalingCheck:
    """Fit the scaling exponents of <1 - v*Sw> (limit kappa) and <v*w>
    (limit kappa - 1) over a decreasing tau grid.

    The gap 1 - v*Sw is formed by literal subtraction.  A component is
    flagged as a solver failure (NegativeArgumentError) only when it comes
    out nonpositive while the equivalent all-positive expression
    tau*v/(S^t v) says it should have been representable; below that floor
    the subtraction is roundoff-dominated by construction and the component
    is simply carried into the average.
    """
    grid = _validate_grid(m, tau_grid)
    sols = _grid_solutions(m, grid, tol)
    s = m.entries
    one_minus = np.empty(len(grid))
    vw = np.empty(len(grid))
    for j, sol in enumerate(sols):
        gap = 1.0 - sol.v * (s @ sol.w)
        reference = grid[j] * sol.v / (s.T @ sol.v)
        bad = (gap <= 0) & (reference > _GAP_FLOOR)
        if np.any(bad) or gap.mean() <= 0:
            raise NegativeArgumentError(
                f"1 - v*Sw nonpositive at tau = {grid[j]:.3e} "
                f"(components {np.flatnonzero(bad).tolist()})")
        one_minus[j] = gap.mean()
        vw[j] = np.mean(sol.v * sol.w)
    log_tau = np.log(grid)
    slope_gap = float(np.polyfit(log_tau, np.log(one_minus), 1)[0])
    slope_vw = float(np.polyfit(log_tau, np.log(vw), 1)[0])
    return ScalingCheck(slope_one_minus=slope_gap, slope_vw=slope_vw,
                        tau_grid=grid, one_minus_means=one_minus, vw_means=vw)


def functional_J(m: VarianceProfile, tau: float, x) -> float:
    """Scale-invariant functional <tau*x/(S^t x)> - <log(tau*x/(S^t x))>,
    defined for 0 < x < (1/tau) S^t x componentwise; always >= 1."""
    x = np.asarray(x, dtype=float)
    if x.shape != (m.K,):
        raise ValueError(f"x must have shape ({m.K},)")
    bad = np.flatnonzero(~(x > 0))
    if bad.size:
        raise DomainViolationError(int(bad[0]))
    ratio = tau * x / (m.entries.T @ x)
    bad = np.flatnonzero(ratio >= 1.0)
    if bad.size:
        raise DomainViolationError(int(bad[0]))
    return float(np.mean(ratio) - np.mean(np.log(ratio)))


@dataclass(eq=False)
class VariationalReport:
    """Outcome of random probing of the variational characterization of v."""

    j_solution: float
    j_perron: float
    perron_bound: float
    min_gap: float
    violations: int
    trials: int


def verify_variational(m: VarianceProfile, tau: float, trials: int = 1000,
                       seed: int = 0, tol: float = 1e-12,
                       slack: float = 1e-10) -> VariationalReport:
    """Check that the solver's v minimizes the functional.

    Feasible probes are rejection-sampled log-uniform vectors; the Perron
    vector of S^t is always probed as well (its functional value has the
    closed form tau/rho - log(tau/rho), an upper bound for the minimum).
    """
    rho, perron = cached_spectral_radius(m)
    if not 0 < tau < rho:
        raise TauOutOfRangeError(f"tau = {tau:.6g} outside (0, rho = {rho:.6g})")
    sol = solve_dyson(m, DysonParams(tau=tau, eta=0.0, tol=tol))
    j_v = functional_J(m, tau, sol.v)
    j_perron = functional_J(m, tau, perron)
    bound = tau / rho - np.log(tau / rho)

    rng = np.random.default_rng(seed)
    min_gap = j_perron - j_v
    violations = int(j_perron < j_v - slack)
    accepted = 0
    attempts = 0
    while accepted < trials:
        attempts += 1
        if attempts > 1000 * trials:
            raise NonConvergenceError(
                f"rejection sampling stalled: {accepted}/{trials} feasible probes")
        x = np.exp(rng.uniform(-3.0, 3.0, size=m.K))
        try:
            j_x = functional_J(m, tau, x)
        except DomainViolationError:
            continue
        accepted += 1
        gap = j_x - j_v
        min_gap = min(min_gap, gap)
        if gap < -slack:
            violations += 1
    return VariationalReport(j_solution=j_v, j_perron=j_perron,
                             perron_bound=float(bound), min_gap=float(min_gap),
                             violations=violations, trials=trials)
