# -*- coding: utf-8 -*-
"""
Regression solvers: independent Lasso, Group Lasso and Dirty baselines,
and the alternating multi-subject solver coupling nonnegative source
parts through unbalanced-transport barycenters, optionally with
per-subject noise standard deviation estimation.

All coordinate-descent kernels run under numba and keep residuals
incrementally; stopping is controlled by coordinate-wise optimality
(KKT) residuals.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .uot import SinkhornParams, unbalanced_barycenter


class SolverError(RuntimeError):
    """Numerical failure inside a solver."""


class DivergenceError(SolverError):
    """A coordinate update left the feasible range."""

    def __init__(self, coordinate):
        self.coordinate = int(coordinate)
        super().__init__("coordinate %d diverged (unbounded or non-finite update)"
                         % coordinate)


class DescentError(SolverError):
    """The outer objective increased, which convexity forbids."""


@njit(cache=True, nogil=True)
def _lasso_cd(LT, Y, lam, x, max_iter, tol):
    """Cyclic coordinate descent for the signed Lasso.

    LT is the transposed design (p, n); x is updated in place. Returns
    (sweeps, kkt_residual).
    """
    p, n = LT.shape
    R = Y.copy()
    for j in range(p):
        if x[j] != 0.0:
            for i in range(n):
                R[i] -= x[j] * LT[j, i]
    colnorm = np.empty(p)
    for j in range(p):
        acc = 0.0
        for i in range(n):
            acc += LT[j, i] * LT[j, i]
        colnorm[j] = acc / n
    kkt = np.inf
    for sweep in range(1, max_iter + 1):
        for j in range(p):
            cj = colnorm[j]
            if cj == 0.0:
                continue
            dot = 0.0
            for i in range(n):
                dot += LT[j, i] * R[i]
            rho = dot / n + cj * x[j]
            if rho > lam:
                new = (rho - lam) / cj
            elif rho < -lam:
                new = (rho + lam) / cj
            else:
                new = 0.0
            delta = new - x[j]
            if delta != 0.0:
                for i in range(n):
                    R[i] -= delta * LT[j, i]
                x[j] = new
        kkt = 0.0
        for j in range(p):
            dot = 0.0
            for i in range(n):
                dot += LT[j, i] * R[i]
            g = dot / n
            if x[j] > 0.0:
                viol = abs(g - lam)
            elif x[j] < 0.0:
                viol = abs(g + lam)
            else:
                viol = abs(g) - lam
                if viol < 0.0:
                    viol = 0.0
            if viol > kkt:
                kkt = viol
        if kkt <= tol:
            return sweep, kkt
    return max_iter, kkt


@njit(cache=True, nogil=True)
def _nonneg_cd(LT, Y, m, kappa, lam, x, max_iter, tol):
    """Proximal coordinate descent for the nonnegative marginal-coupled
    subproblem

        min_{x >= 0} 1/(2n) ||Y - L x||^2 + kappa (<x, 1> - <m, log x>)
                     + lam <x, 1>.

    Coordinates with m_j > 0 take the positive root of their optimality
    quadratic; m_j = 0 coordinates use the one-sided soft threshold.
    Returns (status, sweeps, kkt): status 0 on success, j + 1 if
    coordinate j diverged.
    """
    p, n = LT.shape
    R = Y.copy()
    for j in range(p):
        if x[j] != 0.0:
            for i in range(n):
                R[i] -= x[j] * LT[j, i]
    colnorm = np.empty(p)
    for j in range(p):
        acc = 0.0
        for i in range(n):
            acc += LT[j, i] * LT[j, i]
        colnorm[j] = acc / n
    shift = kappa + lam
    kkt = np.inf
    for sweep in range(1, max_iter + 1):
        for j in range(p):
            cj = colnorm[j]
            dot = 0.0
            for i in range(n):
                dot += LT[j, i] * R[i]
            rho = dot / n + cj * x[j]
            if not np.isfinite(rho):
                return j + 1, sweep, np.inf
            km = kappa * m[j]
            if cj > 0.0:
                if km > 0.0:
                    bcoef = shift - rho
                    disc = bcoef * bcoef + 4.0 * cj * km
                    new = (-bcoef + np.sqrt(disc)) / (2.0 * cj)
                else:
                    new = rho - shift
                    if new > 0.0:
                        new /= cj
                    else:
                        new = 0.0
            else:
                slope = shift - rho
                if km > 0.0:
                    if slope <= 0.0:
                        return j + 1, sweep, np.inf
                    new = km / slope
                else:
                    if slope < 0.0:
                        return j + 1, sweep, np.inf
                    new = 0.0
            if not np.isfinite(new):
                return j + 1, sweep, np.inf
            delta = new - x[j]
            if delta != 0.0:
                for i in range(n):
                    R[i] -= delta * LT[j, i]
                x[j] = new
        kkt = 0.0
        for j in range(p):
            dot = 0.0
            for i in range(n):
                dot += LT[j, i] * R[i]
            g = dot / n
            if x[j] > 0.0:
                grad = shift - g
                if m[j] > 0.0:
                    grad -= kappa * m[j] / x[j]
                viol = abs(grad)
            else:
                viol = g - shift
                if viol < 0.0:
                    viol = 0.0
            if viol > kkt:
                kkt = viol
        if kkt <= tol:
            return 0, sweep, kkt
    return 0, max_iter, kkt


@njit(cache=True, nogil=True)
def _row_norm_root(rho, cs, lam):
    """Positive root t of sum_s (rho_s / (c_s t + lam))^2 = 1 by bisection."""
    S = rho.shape[0]
    hi = 0.0
    for s in range(S):
        t = abs(rho[s]) / lam if cs[s] == 0.0 else (abs(rho[s]) - lam) / cs[s]
        if t > hi:
            hi = t
    if hi <= 0.0:
        hi = 1.0
    # make sure the bracket contains the root
    for _ in range(200):
        h = 0.0
        for s in range(S):
            d = cs[s] * hi + lam
            h += (rho[s] / d) ** 2
        if h < 1.0:
            break
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        h = 0.0
        for s in range(S):
            d = cs[s] * mid + lam
            h += (rho[s] / d) ** 2
        if h > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * (1.0 + hi):
            break
    return 0.5 * (lo + hi)


@njit(cache=True, nogil=True)
def _group_sweep(LT, R, X, colnorm, lam, n):
    """One cyclic pass of row-wise block updates for the l21 penalty."""
    S, p, _ = LT.shape
    rho = np.empty(S)
    for j in range(p):
        allzero = True
        for s in range(S):
            dot = 0.0
            for i in range(n):
                dot += LT[s, j, i] * R[s, i]
            rho[s] = dot / n + colnorm[s, j] * X[j, s]
            if rho[s] != 0.0 or colnorm[s, j] != 0.0:
                allzero = False
        if allzero:
            continue
        norm_rho = 0.0
        for s in range(S):
            norm_rho += rho[s] * rho[s]
        norm_rho = np.sqrt(norm_rho)
        if norm_rho <= lam:
            for s in range(S):
                delta = -X[j, s]
                if delta != 0.0:
                    for i in range(n):
                        R[s, i] -= delta * LT[s, j, i]
                    X[j, s] = 0.0
        else:
            t = _row_norm_root(rho, colnorm[:, j], lam)
            for s in range(S):
                new = rho[s] * t / (colnorm[s, j] * t + lam)
                delta = new - X[j, s]
                if delta != 0.0:
                    for i in range(n):
                        R[s, i] -= delta * LT[s, j, i]
                    X[j, s] = new


@njit(cache=True, nogil=True)
def _group_kkt(LT, R, X, lam, n):
    S, p, _ = LT.shape
    kkt = 0.0
    g = np.empty(S)
    for j in range(p):
        for s in range(S):
            dot = 0.0
            for i in range(n):
                dot += LT[s, j, i] * R[s, i]
            g[s] = dot / n
        norm_x = 0.0
        for s in range(S):
            norm_x += X[j, s] * X[j, s]
        norm_x = np.sqrt(norm_x)
        if norm_x > 0.0:
            viol = 0.0
            for s in range(S):
                r = g[s] - lam * X[j, s] / norm_x
                viol += r * r
            viol = np.sqrt(viol)
        else:
            norm_g = 0.0
            for s in range(S):
                norm_g += g[s] * g[s]
            viol = np.sqrt(norm_g) - lam
            if viol < 0.0:
                viol = 0.0
        if viol > kkt:
            kkt = viol
    return kkt


@njit(cache=True, nogil=True)
def _group_cd(LT, Y, lam, X, max_iter, tol):
    S, p, n = LT.shape
    R = np.empty((S, n))
    colnorm = np.empty((S, p))
    for s in range(S):
        for i in range(n):
            R[s, i] = Y[s, i]
        for j in range(p):
            acc = 0.0
            for i in range(n):
                acc += LT[s, j, i] * LT[s, j, i]
            colnorm[s, j] = acc / n
            if X[j, s] != 0.0:
                for i in range(n):
                    R[s, i] -= X[j, s] * LT[s, j, i]
    kkt = np.inf
    for sweep in range(1, max_iter + 1):
        _group_sweep(LT, R, X, colnorm, lam, n)
        kkt = _group_kkt(LT, R, X, lam, n)
        if kkt <= tol:
            return sweep, kkt
    return max_iter, kkt


@njit(cache=True, nogil=True)
def _dirty_cd(LT, Y, lam_shared, lam_specific, C, E, max_iter, tol):
    """Alternating block coordinate descent for the two-part model."""
    S, p, n = LT.shape
    R = np.empty((S, n))
    colnorm = np.empty((S, p))
    for s in range(S):
        for i in range(n):
            R[s, i] = Y[s, i]
        for j in range(p):
            acc = 0.0
            for i in range(n):
                acc += LT[s, j, i] * LT[s, j, i]
            colnorm[s, j] = acc / n
            w = C[j, s] + E[j, s]
            if w != 0.0:
                for i in range(n):
                    R[s, i] -= w * LT[s, j, i]
    kkt = np.inf
    for sweep in range(1, max_iter + 1):
        _group_sweep(LT, R, C, colnorm, lam_shared, n)
        # lasso pass over the specific parts
        for s in range(S):
            for j in range(p):
                cj = colnorm[s, j]
                if cj == 0.0:
                    continue
                dot = 0.0
                for i in range(n):
                    dot += LT[s, j, i] * R[s, i]
                rho = dot / n + cj * E[j, s]
                if rho > lam_specific:
                    new = (rho - lam_specific) / cj
                elif rho < -lam_specific:
                    new = (rho + lam_specific) / cj
                else:
                    new = 0.0
                delta = new - E[j, s]
                if delta != 0.0:
                    for i in range(n):
                        R[s, i] -= delta * LT[s, j, i]
                    E[j, s] = new
        kkt = _group_kkt(LT, R, C, lam_shared, n)
        for s in range(S):
            for j in range(p):
                dot = 0.0
                for i in range(n):
                    dot += LT[s, j, i] * R[s, i]
                g = dot / n
                if E[j, s] > 0.0:
                    viol = abs(g - lam_specific)
                elif E[j, s] < 0.0:
                    viol = abs(g + lam_specific)
                else:
                    viol = abs(g) - lam_specific
                    if viol < 0.0:
                        viol = 0.0
                if viol > kkt:
                    kkt = viol
        if kkt <= tol:
            return sweep, kkt
    return max_iter, kkt


def _as_design(L):
    L = np.asarray(L, dtype=np.float64)
    if L.ndim != 2:
        raise ValueError("leadfield must be a 2-D matrix")
    return np.ascontiguousarray(L.T)


def solve_lasso(Y, L, lam, x_init=None, cd_tol=1e-6, cd_max_iter=2000):
    """l1-penalized least squares ``1/(2n) ||Y - L x||^2 + lam ||x||_1``.

    Solved by cyclic coordinate descent until the coordinate-wise
    optimality residual drops below ``cd_tol``.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    LT = _as_design(L)
    Y = np.asarray(Y, dtype=np.float64)
    p = LT.shape[0]
    x = np.zeros(p) if x_init is None else np.asarray(x_init, dtype=np.float64).copy()
    _lasso_cd(LT, Y, float(lam), x, int(cd_max_iter), float(cd_tol))
    return x


def lasso_critical_lam(Y, L):
    """Smallest lam for which the Lasso solution is identically zero."""
    L = np.asarray(L, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    return float(np.abs(L.T @ Y).max() / L.shape[0])


def _stack_multitask(Ys, Ls):
    S = len(Ys)
    if S == 0 or len(Ls) != S:
        raise ValueError("need matching nonempty observation and leadfield lists")
    n, p = np.asarray(Ls[0]).shape
    LT = np.empty((S, p, n))
    Y = np.empty((S, n))
    for s in range(S):
        Lm = np.asarray(Ls[s], dtype=np.float64)
        if Lm.shape != (n, p):
            raise ValueError("leadfield %d has shape %s, expected %s"
                             % (s, Lm.shape, (n, p)))
        LT[s] = Lm.T
        Y[s] = np.asarray(Ys[s], dtype=np.float64)
    return LT, Y


def solve_group_lasso(Ys, Ls, lam, cd_tol=1e-6, cd_max_iter=2000):
    """Multi-task regression with the row-wise l21 mixed-norm penalty.

    Block coordinate descent over coefficient rows; every subject may have
    its own design matrix. Returns the (p, S) coefficient matrix.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    LT, Y = _stack_multitask(Ys, Ls)
    X = np.zeros((LT.shape[1], LT.shape[0]))
    _group_cd(LT, Y, float(lam), X, int(cd_max_iter), float(cd_tol))
    return X


def group_critical_lam(Ys, Ls):
    """Smallest lam for which the Group Lasso solution is identically zero."""
    rows = np.stack([np.asarray(L).T @ np.asarray(Y) / np.asarray(L).shape[0]
                     for Y, L in zip(Ys, Ls)], axis=1)
    return float(np.sqrt((rows ** 2).sum(axis=1)).max())


@dataclass
class DirtySolution:
    common: np.ndarray
    specific: np.ndarray

    @property
    def coefficients(self):
        return self.common + self.specific


def solve_dirty(Ys, Ls, lam_shared, lam_specific, cd_tol=1e-6, cd_max_iter=2000):
    """Two-part multi-task model: a row-sparse common part (l21 penalty)
    plus subject-specific parts (l1 penalty), fitted by alternating block
    coordinate descent on the shared residuals.
    """
    if lam_shared < 0 or lam_specific < 0:
        raise ValueError("penalties must be >= 0")
    LT, Y = _stack_multitask(Ys, Ls)
    p, S = LT.shape[1], LT.shape[0]
    C = np.zeros((p, S))
    E = np.zeros((p, S))
    _dirty_cd(LT, Y, float(lam_shared), float(lam_specific), C, E,
              int(cd_max_iter), float(cd_tol))
    return DirtySolution(C, E)


@dataclass
class SignedSource:
    """Signed coefficient vector stored as nonnegative parts."""

    pos: np.ndarray
    neg: np.ndarray

    @property
    def dense(self):
        return self.pos - self.neg

    @classmethod
    def from_dense(cls, x):
        x = np.asarray(x, dtype=np.float64)
        return cls(np.maximum(x, 0.0), np.maximum(-x, 0.0))


def _dense_coeffs(x):
    return x.dense if isinstance(x, SignedSource) else np.asarray(x, dtype=np.float64)


def update_sigma(Y, L, x, sigma0):
    """Residual-based noise scale, floored at ``sigma0``.

    Returns ``max(||Y - L x||_2 / sqrt(n), sigma0)``: the empirical
    standard deviation estimate clipped from below by the constraint
    floor.
    """
    if sigma0 <= 0:
        raise ValueError("sigma0 must be > 0")
    Y = np.asarray(Y, dtype=np.float64)
    L = np.asarray(L, dtype=np.float64)
    r = Y - L @ _dense_coeffs(x)
    return max(float(np.linalg.norm(r)) / np.sqrt(L.shape[0]), float(sigma0))


def solve_subproblem(Y, L, m, kappa, lam_eff, x_init=None,
                     cd_tol=1e-6, cd_max_iter=2000):
    """Nonnegative coordinate-descent solve of the marginal-coupled
    subproblem

        min_{x >= 0} 1/(2n) ||Y - L x||^2
                     + kappa (<x, 1> - <m, log x>) + lam_eff ||x||_1.

    Whenever ``m_j > 0`` the log barrier keeps ``x_j`` strictly positive.
    Raises ``DivergenceError`` when a coordinate update is unbounded.
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    m = np.asarray(m, dtype=np.float64)
    if (m < 0).any():
        raise ValueError("marginal m must be nonnegative")
    LT = _as_design(L)
    Y = np.asarray(Y, dtype=np.float64)
    p = LT.shape[0]
    x = np.zeros(p) if x_init is None else np.asarray(x_init, dtype=np.float64).copy()
    status, _, _ = _nonneg_cd(LT, Y, m, float(kappa), float(lam_eff), x,
                              int(cd_max_iter), float(cd_tol))
    if status != 0:
        raise DivergenceError(status - 1)
    return x


@dataclass
class MWEConfig:
    """Hyperparameters of the transport-coupled multi-subject solver.

    ``mu`` weights the transport coupling, ``lam`` the l1 penalty;
    ``epsilon``/``gamma`` parameterize the unbalanced transport metric.
    With ``concomitant`` the per-subject noise scale is inferred (floored
    at ``sigma0``, which defaults to ``alpha * min_s ||Y_s|| / sqrt(n)``);
    otherwise it is frozen at one.
    """

    mu: float
    lam: float
    epsilon: float
    gamma: float
    sigma0: float = None
    alpha: float = 0.01
    concomitant: bool = True
    outer_tol: float = 1e-5
    outer_max_iter: int = 200
    cd_tol: float = 1e-6
    cd_max_iter: int = 2000
    sinkhorn_tol: float = 1e-6
    sinkhorn_max_iter: int = 5000
    barycenter_floor: float = 1e-10

    def __post_init__(self):
        if self.mu < 0 or self.lam < 0:
            raise ValueError("mu and lam must be >= 0")
        if self.epsilon <= 0 or self.gamma <= 0:
            raise ValueError("epsilon and gamma must be > 0")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        if self.sigma0 is not None and self.sigma0 <= 0:
            raise ValueError("sigma0 must be > 0")

    def sinkhorn_params(self):
        return SinkhornParams(self.epsilon, self.gamma,
                              max_iter=self.sinkhorn_max_iter,
                              tol=self.sinkhorn_tol)


@dataclass
class MWESolution:
    """Joint solver output: per-subject signed sources and noise scales,
    the two part barycenters and the outer objective trace."""

    sources: list
    sigmas: np.ndarray
    barycenters: tuple
    objective_trace: list
    converged: bool
    n_iter: int
    sinkhorn_converged: bool = True
    trace_components: list = field(default_factory=list, repr=False)

    @property
    def coefficients(self):
        return np.column_stack([s.dense for s in self.sources])


def _resolve_sigma0(config, Ys, n):
    if config.sigma0 is not None:
        return float(config.sigma0)
    norms = [np.linalg.norm(y) / np.sqrt(n) for y in Ys]
    sigma0 = config.alpha * min(norms)
    if sigma0 <= 0:
        raise ValueError("cannot derive sigma0 from all-zero observations; "
                         "set MWEConfig.sigma0 explicitly")
    return float(sigma0)


def solve_mwe(dataset, geometry, config):
    """Alternating minimization of the joint multi-subject objective.

    Per outer iteration each subject's positive part, negative part and
    (when concomitant) noise scale are updated by exact block
    minimizations, after which the two barycenter problems are re-solved
    by simultaneous scaling iterations, refreshing the left marginals
    that couple the subjects. The recorded objective includes the full
    transport values (kernel mass constant included) and is monotonically
    non-increasing; any increase raises ``DescentError``.

    Parameters
    ----------
    dataset : MultiSubjectDataset (or any object with ``observations`` and
        ``leadfields`` sequences)
    geometry : Geometry (or a prebuilt GibbsKernel)
    config : MWEConfig

    Returns
    -------
    MWESolution
    """
    Ys = [np.asarray(y, dtype=np.float64) for y in dataset.observations]
    Ls = [np.asarray(L, dtype=np.float64) for L in dataset.leadfields]
    S = len(Ys)
    n, p = Ls[0].shape
    LTs = [np.ascontiguousarray(L.T) for L in Ls]
    kernel = geometry.gibbs(config.epsilon) if hasattr(geometry, "gibbs") else geometry
    if kernel.n != p:
        raise ValueError("geometry has %d vertices but leadfields have %d columns"
                         % (kernel.n, p))
    sparams = config.sinkhorn_params()
    sqrt_n = np.sqrt(n)

    concomitant = config.concomitant
    sigma0 = _resolve_sigma0(config, Ys, n) if concomitant else 1.0
    sigmas = (np.array([max(np.linalg.norm(y) / sqrt_n, sigma0) for y in Ys])
              if concomitant else np.ones(S))

    xp = np.zeros((p, S))
    xn = np.zeros((p, S))
    floor = config.barycenter_floor
    bary_p = np.full(p, floor)
    bary_n = np.full(p, floor)
    mp = np.full((p, S), floor)
    mn = np.full((p, S), floor)
    warm_p = warm_n = None
    ot_values = np.zeros(S)

    trace = []
    components = []
    converged = False
    sinkhorn_ok = True
    n_iter = 0
    kappa_base = config.mu * config.gamma / S

    for it in range(1, config.outer_max_iter + 1):
        n_iter = it
        for s in range(S):
            kappa = kappa_base * sigmas[s]
            lam_eff = config.lam * sigmas[s]
            target = Ys[s] + Ls[s] @ xn[:, s]
            status, _, _ = _nonneg_cd(LTs[s], target, mp[:, s], kappa, lam_eff,
                                      xp[:, s], config.cd_max_iter, config.cd_tol)
            if status != 0:
                raise DivergenceError(status - 1)
            target = Ls[s] @ xp[:, s] - Ys[s]
            status, _, _ = _nonneg_cd(LTs[s], target, mn[:, s], kappa, lam_eff,
                                      xn[:, s], config.cd_max_iter, config.cd_tol)
            if status != 0:
                raise DivergenceError(status - 1)
            if concomitant:
                r = Ys[s] - Ls[s] @ (xp[:, s] - xn[:, s])
                sigmas[s] = max(np.linalg.norm(r) / sqrt_n, sigma0)

        if config.mu > 0:
            res_p = unbalanced_barycenter(list(xp.T), kernel, sparams,
                                          warm_start=warm_p)
            res_n = unbalanced_barycenter(list(xn.T), kernel, sparams,
                                          warm_start=warm_n)
            mp, bary_p, warm_p = res_p.left_marginals, res_p.barycenter, res_p
            mn, bary_n, warm_n = res_n.left_marginals, res_n.barycenter, res_n
            sinkhorn_ok = sinkhorn_ok and res_p.converged and res_n.converged
            ot_values = res_p.values + res_n.values

        data_fit = 0.0
        for s in range(S):
            r = Ys[s] - Ls[s] @ (xp[:, s] - xn[:, s])
            data_fit += float(r @ r) / (2.0 * n * sigmas[s]) + sigmas[s] / 2.0
        ot_term = config.mu * float(ot_values.sum()) / S if config.mu > 0 else 0.0
        l1_term = config.lam * float(xp.sum() + xn.sum())
        obj = data_fit + ot_term + l1_term
        trace.append(obj)
        components.append({"iteration": it, "objective": obj,
                           "data_fit": data_fit, "ot_term": ot_term,
                           "l1_term": l1_term, "sigmas": sigmas.copy()})
        if len(trace) >= 2:
            prev = trace[-2]
            if obj > prev + 1e-10 * max(1.0, abs(prev)):
                raise DescentError(
                    "objective increased from %r to %r at outer iteration %d"
                    % (prev, obj, it))
            if prev - obj <= config.outer_tol * max(abs(prev), 1e-300):
                converged = True
                break

    sources = [SignedSource(xp[:, s].copy(), xn[:, s].copy()) for s in range(S)]
    return MWESolution(sources, sigmas, (bary_p, bary_n), trace, converged,
                       n_iter, sinkhorn_ok, components)


def solve_mtw(dataset, geometry, config):
    """Transport-coupled solver with the noise scale frozen at one for
    every subject (the non-concomitant variant)."""
    return solve_mwe(dataset, geometry, replace(config, concomitant=False))


def write_objective_trace_csv(solution, path):
    """Persist the outer objective trace as CSV.

    Columns: iteration, objective, data_fit, ot_term, l1_term, then one
    sigma column per subject.
    """
    S = len(solution.sigmas)
    with open(path, "w") as f:
        f.write("iteration,objective,data_fit,ot_term,l1_term,"
                + ",".join("sigma_%d" % s for s in range(S)) + "\n")
        for row in solution.trace_components:
            f.write("%d,%r,%r,%r,%r," % (row["iteration"], row["objective"],
                                         row["data_fit"], row["ot_term"],
                                         row["l1_term"]))
            f.write(",".join("%r" % float(v) for v in row["sigmas"]) + "\n")
