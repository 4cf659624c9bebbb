# -*- coding: utf-8 -*-
"""
Entropic unbalanced optimal transport.

Implements the KL-form unbalanced transport objective

    W(a, b) = min_{P >= 0}  eps * kl(P | K) + gamma * kl(P 1 | a)
                                            + gamma * kl(P^T 1 | b)

solved by generalized Sinkhorn scaling iterations, its barycenter over a
collection of measures, the signed extension (positive and negative parts
transported separately), and the exact Kantorovich linear program used for
earth-mover evaluation metrics.

Values always report the full KL objective, including the constant kernel
mass term sum(K) contributed by kl(P | K); the degenerate case of two zero
measures short-circuits to W = 0 by convention. Transport plans are never
materialized: every quantity is derived from the scaling vectors and the
implied marginals.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy import sparse


class UOTError(ValueError):
    """Invalid input to a transport operation."""


class SinkhornNumericalError(RuntimeError):
    """Scaling iterations produced non-finite values."""

    def __init__(self, iteration, detail=""):
        self.iteration = int(iteration)
        msg = "numerical failure in Sinkhorn scalings at iteration %d" % iteration
        if detail:
            msg += " (%s)" % detail
        super().__init__(msg)


def _check_measure(x, name="measure"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise UOTError("%s must be a vector" % name)
    if not np.all(np.isfinite(x)):
        raise UOTError("%s has non-finite entries" % name)
    if (x < 0).any():
        raise UOTError("%s has negative entries" % name)
    return x


def kl_divergence(x, y):
    """Generalized KL divergence ``<x, log(x/y)> + <y - x, 1>``.

    Conventions: ``0 log(0/0) = 0`` and ``0 log 0 = 0``; if some ``y_i = 0``
    while ``x_i > 0`` the divergence is ``+inf``. Negative entries raise.
    """
    x = _check_measure(x, "x")
    y = _check_measure(y, "y")
    if x.shape != y.shape:
        raise UOTError("x and y must have the same length")
    pos = x > 0
    if np.any(pos & (y == 0)):
        return np.inf
    out = np.zeros_like(x)
    out[pos] = x[pos] * np.log(x[pos] / y[pos])
    return float(out.sum() + (y - x).sum())


def _kl_terms(m, target):
    """kl(m | target) for strictly matching supports (no +inf checks)."""
    pos = m > 0
    s = float(np.sum(m[pos] * np.log(m[pos] / target[pos])))
    return s + float((target - m).sum())


@dataclass
class SinkhornParams:
    """Parameters of the generalized scaling iterations.

    ``epsilon`` is the entropic scale (same unit as the cost matrix, cm),
    ``gamma`` the marginal relaxation weight. The derived exponent
    ``psi = gamma / (gamma + epsilon)`` lies in (0, 1). Convergence is
    declared when the relative l-inf change of both scaling vectors drops
    below ``tol``. Scalings whose log magnitude exceeds ``log_threshold``
    are absorbed into the kernel (log-domain stabilization).
    """

    epsilon: float
    gamma: float
    max_iter: int = 5000
    tol: float = 1e-6
    log_threshold: float = 250.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise UOTError("epsilon must be > 0")
        if self.gamma <= 0:
            raise UOTError("gamma must be > 0")
        if self.tol <= 0:
            raise UOTError("tol must be > 0")
        if self.max_iter < 1:
            raise UOTError("max_iter must be >= 1")

    @property
    def psi(self):
        return self.gamma / (self.gamma + self.epsilon)


@dataclass
class SinkhornState:
    """Converged (or truncated) scaling vectors in log domain.

    ``log_u`` and ``log_v`` store the true log scalings over the full
    space, with ``-inf`` marking entries outside the support of the input
    measures. ``trace`` holds (iteration, objective, residual) rows when
    tracing was requested.
    """

    log_u: np.ndarray
    log_v: np.ndarray
    converged: bool
    n_iter: int
    trace: list = field(default=None, repr=False)


def _rel_change(new, old):
    denom = max(np.abs(new).max(), np.abs(old).max(), 1.0)
    return float(np.abs(new - old).max() / denom)


def _pair_objective(eps, gamma, sum_k, m_row, m_col, log_u, log_v, a, b):
    """Full KL objective at the implicit plan, via its marginals."""
    plan_term = 0.0
    pos = m_row > 0
    plan_term += float(np.sum(m_row[pos] * log_u[pos]))
    pos = m_col > 0
    plan_term += float(np.sum(m_col[pos] * log_v[pos]))
    plan_term += sum_k - float(m_row.sum())
    return eps * plan_term + gamma * _kl_terms(m_row, a) + gamma * _kl_terms(m_col, b)


def sinkhorn_unbalanced(a, b, kernel, params, record_trace=False):
    """Solve the unbalanced transport problem between two measures.

    Parameters
    ----------
    a, b : arrays, shape (p,)
        Nonnegative measures (no normalization required).
    kernel : GibbsKernel
        Kernel built from the cost matrix at ``params.epsilon``.
    params : SinkhornParams
    record_trace : bool
        When True, log (iteration, objective, residual) at every step.

    Returns
    -------
    state : SinkhornState
    value : float
        Full KL objective at the implicit plan; 0.0 when both measures are
        zero (by convention), and the zero-plan objective when exactly one
        of them is zero.
    """
    a = _check_measure(a, "a")
    b = _check_measure(b, "b")
    p = kernel.n
    if a.shape != (p,) or b.shape != (p,):
        raise UOTError("measures must match the kernel dimension %d" % p)
    if abs(kernel.epsilon - params.epsilon) > 1e-12 * max(1.0, params.epsilon):
        raise UOTError("kernel epsilon %g does not match params epsilon %g"
                       % (kernel.epsilon, params.epsilon))

    eps, gamma = params.epsilon, params.gamma
    neg_inf = np.full(p, -np.inf)
    mass_a, mass_b = a.sum(), b.sum()
    if mass_a == 0.0 and mass_b == 0.0:
        return SinkhornState(neg_inf.copy(), neg_inf.copy(), True, 0), 0.0
    if mass_a == 0.0 or mass_b == 0.0:
        # the only feasible plan is zero
        value = eps * kernel.total + gamma * (mass_a + mass_b)
        return SinkhornState(neg_inf.copy(), neg_inf.copy(), True, 0), float(value)

    rows = np.flatnonzero(a > 0)
    cols = np.flatnonzero(b > 0)
    asub, bsub = a[rows], b[cols]
    K = kernel.K[np.ix_(rows, cols)]
    Msub = kernel.cost[np.ix_(rows, cols)]

    psi = params.psi
    damp = 1.0 / (gamma + eps)
    u = np.ones(len(rows))
    v = np.ones(len(cols))
    alpha = np.zeros(len(rows))
    beta = np.zeros(len(cols))
    fa = np.ones(len(rows))  # exp(-alpha / (gamma + eps))
    fb = np.ones(len(cols))
    converged = False
    trace = [] if record_trace else None
    n_iter = 0

    for it in range(1, params.max_iter + 1):
        n_iter = it
        u_prev, v_prev = u, v
        Kv = K @ v
        if (Kv == 0).any():
            raise SinkhornNumericalError(it, "kernel-scaling product underflowed")
        u = (asub / Kv) ** psi * fa
        Ktu = K.T @ u
        if (Ktu == 0).any():
            raise SinkhornNumericalError(it, "kernel-scaling product underflowed")
        v = (bsub / Ktu) ** psi * fb
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise SinkhornNumericalError(it)

        err = max(_rel_change(u, u_prev), _rel_change(v, v_prev))
        if record_trace:
            m_row = u * (K @ v)
            m_col = v * (K.T @ u)
            obj = _pair_objective(eps, gamma, kernel.total, m_row, m_col,
                                  np.log(u) + alpha / eps, np.log(v) + beta / eps,
                                  asub, bsub)
            trace.append((it, obj, err))
        if err <= params.tol:
            converged = True
            break
        if (np.abs(np.log(u)).max() > params.log_threshold
                or np.abs(np.log(v)).max() > params.log_threshold):
            alpha = alpha + eps * np.log(u)
            beta = beta + eps * np.log(v)
            K = np.exp((alpha[:, None] + beta[None, :] - Msub) / eps)
            u = np.ones(len(rows))
            v = np.ones(len(cols))
            fa = np.exp(-alpha * damp)
            fb = np.exp(-beta * damp)

    m_row = u * (K @ v)
    m_col = v * (K.T @ u)
    log_u_sub = np.log(u) + alpha / eps
    log_v_sub = np.log(v) + beta / eps
    value = _pair_objective(eps, gamma, kernel.total, m_row, m_col,
                            log_u_sub, log_v_sub, asub, bsub)
    log_u = neg_inf.copy()
    log_v = neg_inf.copy()
    log_u[rows] = log_u_sub
    log_v[cols] = log_v_sub
    return SinkhornState(log_u, log_v, converged, n_iter, trace), float(value)


def left_marginal(state, kernel):
    """Row marginal ``P 1`` of the implicit plan, without materializing P."""
    with np.errstate(over="ignore"):
        u = np.exp(state.log_u)
        v = np.exp(state.log_v)
    return u * (kernel.K @ v)


def signed_wasserstein(a, b, kernel, params):
    """Signed extension: transport positive parts and negative parts apart.

    Returns ``W(a+, b+) + W(a-, b-)`` where ``a+ = max(a, 0)`` and
    ``a- = max(-a, 0)``. On nonnegative inputs this reduces to the plain
    unbalanced distance.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _, w_pos = sinkhorn_unbalanced(np.maximum(a, 0), np.maximum(b, 0), kernel, params)
    _, w_neg = sinkhorn_unbalanced(np.maximum(-a, 0), np.maximum(-b, 0), kernel, params)
    return w_pos + w_neg


@dataclass
class BarycenterResult:
    """Output of the simultaneous multi-problem scaling iterations.

    ``left_marginals[:, s]`` is the row marginal of subject ``s``'s implicit
    plan; ``values[s]`` its full KL objective against the barycenter.
    """

    barycenter: np.ndarray
    left_marginals: np.ndarray
    values: np.ndarray
    log_u: np.ndarray
    log_v: np.ndarray
    converged: bool
    n_iter: int


def unbalanced_barycenter(measures, kernel, params, weights=None, warm_start=None):
    """Barycenter of measures under the unbalanced transport objective.

    Minimizes ``sum_s w_s W(measures[s], q)`` over the barycenter ``q`` by
    running all scaling problems simultaneously; the barycenter update is
    the ``(1 - psi)``-power mean of the per-problem back-projected scalings,
    which is the stationarity condition of the joint objective in ``q``.

    Parameters
    ----------
    measures : sequence of arrays, shape (p,)
        Nonnegative measures (at least one).
    kernel : GibbsKernel
    params : SinkhornParams
    weights : array, shape (S,), optional
        Barycentric weights, default uniform ``1/S``.
    warm_start : BarycenterResult, optional
        Previous result whose scalings seed the iterations.

    Returns
    -------
    BarycenterResult
    """
    if len(measures) == 0:
        raise UOTError("need at least one measure")
    A = np.column_stack([_check_measure(m, "measure") for m in measures])
    p, S = A.shape
    if p != kernel.n:
        raise UOTError("measures must match the kernel dimension %d" % kernel.n)
    if weights is None:
        weights = np.full(S, 1.0 / S)
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (S,) or (weights < 0).any():
            raise UOTError("weights must be S nonnegative numbers")

    eps, gamma, psi = params.epsilon, params.gamma, params.psi
    damp = 1.0 / (gamma + eps)
    support = A > 0
    active = support.any(axis=0)
    if not active.any():
        zero = np.zeros(p)
        return BarycenterResult(zero, np.zeros((p, S)), np.zeros(S),
                                np.full((p, S), -np.inf), np.full((p, S), -np.inf),
                                True, 0)

    U = support.astype(np.float64)  # ones on supports, zeros elsewhere
    V = np.ones((p, S)) * active
    alpha = np.zeros((p, S))
    beta = np.zeros((p, S))
    Ks = [kernel.K] * S  # per-subject stabilized kernels, shared until absorbed
    q = np.zeros(p)
    if warm_start is not None and warm_start.log_u.shape == (p, S):
        alpha = np.where(np.isfinite(warm_start.log_u), eps * warm_start.log_u, 0.0)
        beta = np.where(np.isfinite(warm_start.log_v), eps * warm_start.log_v, 0.0)
        for s in range(S):
            if alpha[:, s].any() or beta[:, s].any():
                Ks[s] = np.exp((alpha[:, s][:, None] + beta[:, s][None, :]
                                - kernel.cost) / eps)
        q = np.asarray(warm_start.barycenter, dtype=np.float64).copy()
    fa = np.exp(-alpha * damp)
    fb = np.exp(-beta * damp)

    converged = False
    n_iter = 0
    KV = np.empty((p, S))
    KtU = np.empty((p, S))
    for it in range(1, params.max_iter + 1):
        n_iter = it
        U_prev, q_prev = U, q
        for s in range(S):
            KV[:, s] = Ks[s] @ V[:, s]
        if (support & (KV == 0)).any():
            raise SinkhornNumericalError(it, "kernel-scaling product underflowed")
        with np.errstate(divide="ignore", invalid="ignore"):
            U = np.where(support, (A / KV) ** psi * fa, 0.0)
        for s in range(S):
            KtU[:, s] = Ks[s].T @ U[:, s]
        if (active[None, :] & (KtU == 0)).any():
            raise SinkhornNumericalError(it, "kernel-scaling product underflowed")
        # true back-projections K^T U_s carry the beta absorption factor
        with np.errstate(divide="ignore", invalid="ignore"):
            proj = np.where(active[None, :], KtU ** (1.0 - psi) * fb, 0.0)
        q = (proj @ weights) ** (1.0 / (1.0 - psi))
        if not np.all(np.isfinite(q)) or (q == 0).any():
            raise SinkhornNumericalError(it, "barycenter iterate degenerate")
        with np.errstate(divide="ignore", invalid="ignore"):
            V = np.where(active[None, :], (q[:, None] / KtU) ** psi * fb, 0.0)
        if not (np.all(np.isfinite(U)) and np.all(np.isfinite(V))):
            raise SinkhornNumericalError(it)

        err = max(_rel_change(U, U_prev), _rel_change(q, q_prev))
        if err <= params.tol:
            converged = True
            break
        for s in range(S):
            if not active[s]:
                continue
            sup = support[:, s]
            lu = np.log(U[sup, s])
            lv = np.log(V[:, s])
            if max(np.abs(lu).max(), np.abs(lv).max()) > params.log_threshold:
                alpha[sup, s] += eps * lu
                beta[:, s] += eps * lv
                Ks[s] = np.exp((alpha[:, s][:, None] + beta[:, s][None, :]
                                - kernel.cost) / eps)
                U[sup, s] = 1.0
                V[:, s] = 1.0
                fa[:, s] = np.exp(-alpha[:, s] * damp)
                fb[:, s] = np.exp(-beta[:, s] * damp)

    marginals = np.empty((p, S))
    col_marginals = np.empty((p, S))
    for s in range(S):
        marginals[:, s] = U[:, s] * (Ks[s] @ V[:, s])
        col_marginals[:, s] = V[:, s] * (Ks[s].T @ U[:, s])
    with np.errstate(divide="ignore"):
        log_u = np.where(U > 0, np.log(np.where(U > 0, U, 1.0)) + alpha / eps, -np.inf)
        log_v = np.where(V > 0, np.log(np.where(V > 0, V, 1.0)) + beta / eps, -np.inf)

    values = np.empty(S)
    for s in range(S):
        if not active[s]:
            values[s] = eps * kernel.total + gamma * q.sum()
            marginals[:, s] = 0.0
            continue
        values[s] = _pair_objective(eps, gamma, kernel.total, marginals[:, s],
                                    col_marginals[:, s], log_u[:, s], log_v[:, s],
                                    A[:, s], q)
    return BarycenterResult(q, marginals, values, log_u, log_v, converged, n_iter)


def exact_kantorovich(a, b, M):
    """Exact Kantorovich transport cost between balanced histograms.

    Solves ``min <P, M>`` over nonnegative plans with row marginal ``a``
    and column marginal ``b`` (equal total mass required, tolerance 1e-9)
    restricted to the supports of the histograms, using the HiGHS simplex
    solver. Returns the optimal cost.
    """
    a = _check_measure(a, "a")
    b = _check_measure(b, "b")
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != a.shape[0] or M.shape[1] != b.shape[0]:
        raise UOTError("cost matrix shape does not match the histograms")
    sa, sb = a.sum(), b.sum()
    if abs(sa - sb) > 1e-9 * max(1.0, sa, sb):
        raise UOTError("histograms must carry equal mass (|%g - %g| too large); "
                       "normalize before calling" % (sa, sb))
    if sa == 0.0:
        return 0.0
    if a.shape == b.shape and np.array_equal(a, b):
        return 0.0
    # drop negligible support (relative 1e-12) so the LP is well scaled,
    # then rebalance the masses exactly
    rows = np.flatnonzero(a > 1e-12 * a.max())
    cols = np.flatnonzero(b > 1e-12 * b.max())
    a = a.copy()
    b = b.copy()
    a[np.setdiff1d(np.arange(a.shape[0]), rows)] = 0.0
    b[np.setdiff1d(np.arange(b.shape[0]), cols)] = 0.0
    a *= (sa + sb) / (2.0 * a.sum())
    b *= (sa + sb) / (2.0 * b.sum())
    m, n = len(rows), len(cols)
    c = M[np.ix_(rows, cols)].ravel()
    A_rows = sparse.kron(sparse.eye(m, format="csr"), np.ones((1, n)), format="csr")
    A_cols = sparse.kron(np.ones((1, m)), sparse.eye(n, format="csr"), format="csr")
    A_eq = sparse.vstack([A_rows, A_cols], format="csr")
    b_eq = np.concatenate([a[rows], b[cols]])
    # with matched masses the last column constraint is implied by the rest;
    # dropping it sidesteps presolve failures on the rank-deficient system
    res = linprog(c, A_eq=A_eq[:-1], b_eq=b_eq[:-1], bounds=(0, None), method="highs")
    if not res.success:
        raise SinkhornNumericalError(0, "transport LP failed: %s" % res.message)
    return float(res.fun)


def write_trace_csv(trace, path):
    """Persist an iteration trace as CSV (iteration, objective, residual)."""
    with open(path, "w") as f:
        f.write("iteration,objective,residual\n")
        for it, obj, err in trace:
            f.write("%d,%r,%r\n" % (it, obj, err))
