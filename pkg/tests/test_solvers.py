import numpy as np
import pytest

from otmtr import geometry, simulate, solvers
from otmtr.solvers import (DescentError, DivergenceError, MWEConfig,
                           SignedSource, lasso_critical_lam, solve_dirty,
                           solve_group_lasso, solve_lasso, solve_mtw,
                           solve_mwe, solve_subproblem, update_sigma)


def _random_problem(seed, n=25, p=40, k=3, noise=0.05):
    rng = np.random.default_rng(seed)
    L = rng.standard_normal((n, p))
    x = np.zeros(p)
    x[rng.choice(p, k, replace=False)] = rng.uniform(1, 3, k) * rng.choice([-1, 1], k)
    Y = L @ x + noise * rng.standard_normal(n)
    return Y, L, x


def test_lasso_above_critical_is_zero():
    Y, L, _ = _random_problem(0)
    lam_max = lasso_critical_lam(Y, L)
    assert np.all(solve_lasso(Y, L, lam_max * 1.0001) == 0.0)
    # subgradient optimality of the zero solution
    assert np.abs(L.T @ Y / L.shape[0]).max() <= lam_max * 1.0001


def test_lasso_unregularized_square_system():
    rng = np.random.default_rng(1)
    L = rng.standard_normal((8, 8)) + 4 * np.eye(8)
    Y = rng.standard_normal(8)
    x = solve_lasso(Y, L, 0.0, cd_tol=1e-14, cd_max_iter=200000)
    assert np.abs(x - np.linalg.solve(L, Y)).max() < 1e-8


def test_lasso_orthogonal_design_soft_threshold():
    rng = np.random.default_rng(2)
    p = 12
    Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    L = np.sqrt(p) * Q
    Y = rng.standard_normal(p)
    lam = 0.25
    x = solve_lasso(Y, L, lam, cd_tol=1e-14, cd_max_iter=10000)
    rho = L.T @ Y / p
    assert np.abs(x - np.sign(rho) * np.maximum(np.abs(rho) - lam, 0)).max() < 1e-12


def test_lasso_kkt_residual():
    Y, L, _ = _random_problem(3)
    lam = 0.2 * lasso_critical_lam(Y, L)
    x = solve_lasso(Y, L, lam, cd_tol=1e-10, cd_max_iter=50000)
    g = L.T @ (Y - L @ x) / L.shape[0]
    viol = np.where(x != 0, np.abs(g - lam * np.sign(x)),
                    np.maximum(np.abs(g) - lam, 0.0))
    assert viol.max() <= 1e-10


def test_group_lasso_single_task_reduces_to_lasso():
    Y, L, _ = _random_problem(4)
    lam = 0.3
    xg = solve_group_lasso([Y], [L], lam, cd_tol=1e-12, cd_max_iter=20000)
    xl = solve_lasso(Y, L, lam, cd_tol=1e-12, cd_max_iter=20000)
    assert np.abs(xg[:, 0] - xl).max() < 1e-8


def test_group_lasso_critical_value():
    Ys, Ls = [], []
    for s in range(3):
        Y, L, _ = _random_problem(10 + s)
        Ys.append(Y)
        Ls.append(L)
    lam_max = solvers.group_critical_lam(Ys, Ls)
    assert np.all(solve_group_lasso(Ys, Ls, lam_max * 1.001) == 0.0)
    assert np.any(solve_group_lasso(Ys, Ls, lam_max * 0.95) != 0.0)


def test_group_lasso_identical_tasks_identical_columns():
    Y, L, _ = _random_problem(5)
    X = solve_group_lasso([Y] * 4, [L] * 4, 0.2, cd_tol=1e-12)
    assert np.abs(X - X[:, :1]).max() == 0.0


def test_dirty_limiting_cases():
    Ys, Ls = [], []
    for s in range(3):
        Y, L, _ = _random_problem(20 + s)
        Ys.append(Y)
        Ls.append(L)
    big = 1e9
    sol = solve_dirty(Ys, Ls, 0.25, big, cd_tol=1e-12, cd_max_iter=20000)
    Xg = solve_group_lasso(Ys, Ls, 0.25, cd_tol=1e-12, cd_max_iter=20000)
    assert np.all(sol.specific == 0.0)
    assert np.abs(sol.coefficients - Xg).max() < 1e-9
    sol2 = solve_dirty(Ys, Ls, big, 0.25, cd_tol=1e-12, cd_max_iter=20000)
    assert np.all(sol2.common == 0.0)
    for s in range(3):
        xl = solve_lasso(Ys[s], Ls[s], 0.25, cd_tol=1e-12, cd_max_iter=20000)
        assert np.abs(sol2.coefficients[:, s] - xl).max() < 1e-9
    sol3 = solve_dirty(Ys, Ls, big, big)
    assert np.all(sol3.coefficients == 0.0)


def test_update_sigma():
    L = np.eye(4)
    x = SignedSource.from_dense(np.zeros(4))
    assert update_sigma(np.zeros(4), L, x, 0.1) == 0.1
    # residual (1,1,1,1): ||r||_2 / sqrt(n) = 2 / 2 = 1
    r = np.ones(4)
    assert update_sigma(r, L, x, 0.1) == pytest.approx(1.0)
    assert update_sigma(10 * r, L, x, 1.0) == pytest.approx(10.0)
    # constraint inactive at five times the floor
    assert update_sigma(r, L, x, 0.2) == pytest.approx(5 * 0.2)
    with pytest.raises(ValueError):
        update_sigma(r, L, x, 0.0)


def test_subproblem_scalar_quadratic_grid_oracle():
    for y, kappa, lam, m in [(2.0, 0.5, 0.3, 0.7), (0.3, 1.0, 0.1, 0.2),
                             (-1.0, 0.2, 0.5, 1.5)]:
        x = solve_subproblem(np.array([y]), np.array([[1.0]]), np.array([m]),
                             kappa, lam, cd_tol=1e-14)[0]
        # the positive root of t^2 + (kappa + lam - y) t - kappa m = 0
        bcoef = kappa + lam - y
        root = (-bcoef + np.sqrt(bcoef ** 2 + 4 * kappa * m)) / 2.0
        assert x == pytest.approx(root, abs=1e-12)
        grid = np.linspace(max(root - 1e-3, 1e-12), root + 1e-3, 20001)
        f = 0.5 * (y - grid) ** 2 + kappa * (grid - m * np.log(grid)) + lam * grid
        assert abs(x - grid[np.argmin(f)]) < 1e-6


def test_subproblem_zero_case_and_positivity():
    rng = np.random.default_rng(6)
    L = rng.standard_normal((5, 8))
    assert np.all(solve_subproblem(np.zeros(5), L, np.zeros(8), 0.5, 0.1) == 0.0)
    m = np.zeros(8)
    m[[1, 4]] = [0.3, 0.9]
    x = solve_subproblem(np.zeros(5), L, m, 0.5, 0.1, cd_tol=1e-12)
    assert np.all(x[m > 0] > 0.0)
    assert np.all(x >= 0.0)


def test_subproblem_kappa_zero_matches_nonnegative_lasso():
    rng = np.random.default_rng(7)
    n, p = 30, 20
    L = rng.standard_normal((n, p))
    x_true = np.zeros(p)
    x_true[[2, 9]] = [2.0, 1.5]  # nonnegative truth
    Y = L @ x_true + 0.01 * rng.standard_normal(n)
    lam = 0.05 * lasso_critical_lam(Y, L)
    x = solve_subproblem(Y, L, np.zeros(p), 0.0, lam, cd_tol=1e-12,
                         cd_max_iter=50000)
    xl = solve_lasso(Y, L, lam, cd_tol=1e-12, cd_max_iter=50000)
    if np.all(xl >= 0):
        assert np.abs(x - xl).max() < 1e-8


def test_subproblem_divergence_reports_coordinate():
    # overflowing data drives the coordinate update non-finite
    L = np.array([[1e200], [1e200], [1e200]])
    Y = np.full(3, 1e200)
    with pytest.raises(DivergenceError) as err:
        solve_subproblem(Y, L, np.zeros(1), 0.0, 0.0)
    assert err.value.coordinate == 0


def test_subproblem_smooth_gradient_finite_differences():
    rng = np.random.default_rng(8)
    n, p = 15, 10
    L = rng.standard_normal((n, p))
    Y = rng.standard_normal(n)
    m = rng.random(p)
    kappa, lam = 0.3, 0.2

    def f(x):
        r = Y - L @ x
        return (0.5 / n) * (r @ r) + kappa * (x.sum() - m @ np.log(x)) + lam * x.sum()

    worst = 0.0
    for _ in range(20):
        x = rng.uniform(0.5, 2.0, p)
        g = L.T @ (L @ x - Y) / n + kappa + lam - kappa * m / x
        h = 1e-6
        for j in range(p):
            e = np.zeros(p)
            e[j] = h
            fd = (f(x + e) - f(x - e)) / (2 * h)
            worst = max(worst, abs(fd - g[j]) / max(abs(fd), 1e-12))
    assert worst < 1e-5


def _small_dataset(seed, S=3, n=20, geo=None):
    cfg = simulate.SimConfig(n_subjects=S, n_sensors=n,
                             n_sources=geo.n_sources, q_active=2,
                             snr=4.0, seed=seed)
    return simulate.make_dataset(cfg, geo)


def test_mwe_decoupling_matches_lasso(small_grid):
    ds, _ = _small_dataset(7, geo=small_grid)
    lam = 0.3 * max(lasso_critical_lam(y, L)
                    for y, L in zip(ds.observations, ds.leadfields))
    config = MWEConfig(mu=0.0, lam=lam, epsilon=1.0, gamma=1.0,
                       concomitant=False, outer_tol=1e-13, outer_max_iter=1000,
                       cd_tol=1e-11, cd_max_iter=50000)
    sol = solve_mtw(ds, small_grid, config)
    for s in range(3):
        xl = solve_lasso(ds.observations[s], ds.leadfields[s], lam,
                         cd_tol=1e-12, cd_max_iter=50000)
        assert np.abs(sol.sources[s].dense - xl).max() < 1e-6


def test_mwe_identical_subjects_identical_solutions(small_grid):
    ds, _ = _small_dataset(9, S=1, geo=small_grid)
    Y, L = ds.observations[0], ds.leadfields[0]
    replicated = simulate.MultiSubjectDataset([L] * 3, [Y] * 3)
    lam = 0.25 * lasso_critical_lam(Y, L) / (np.linalg.norm(Y) / np.sqrt(len(Y)))
    config = MWEConfig(mu=0.05, lam=lam, epsilon=1.5, gamma=6.0,
                       outer_tol=1e-8, outer_max_iter=300)
    sol = solve_mwe(replicated, small_grid, config)
    X = sol.coefficients
    assert np.abs(X - X[:, :1]).max() < 1e-10
    assert np.abs(sol.sigmas - sol.sigmas[0]).max() < 1e-12


def test_mwe_zero_data(small_grid):
    ds, _ = _small_dataset(11, geo=small_grid)
    zero = simulate.MultiSubjectDataset(ds.leadfields,
                                        [np.zeros(20)] * 3)
    config = MWEConfig(mu=0.4, lam=0.1, epsilon=1.0, gamma=4.0, sigma0=0.05)
    sol = solve_mwe(zero, small_grid, config)
    assert max(np.abs(s.dense).max() for s in sol.sources) < 1e-8
    assert np.all(sol.sigmas == 0.05)


def test_mwe_objective_trace_monotone(small_grid):
    ds, _ = _small_dataset(13, geo=small_grid)
    n = 20
    scale = np.mean([lasso_critical_lam(y, L) / (np.linalg.norm(y) / np.sqrt(n))
                     for y, L in zip(ds.observations, ds.leadfields)])
    config = MWEConfig(mu=0.02, lam=0.4 * scale, epsilon=1.5, gamma=9.0,
                       outer_tol=1e-7, outer_max_iter=400)
    sol = solve_mwe(ds, small_grid, config)
    tr = np.array(sol.objective_trace)
    assert np.all(np.diff(tr) <= 1e-10 * np.maximum(1.0, np.abs(tr[:-1])))
    assert sol.converged


def test_mwe_complementarity(small_grid):
    ds, _ = _small_dataset(17, geo=small_grid)
    n = 20
    scale = np.mean([lasso_critical_lam(y, L) / (np.linalg.norm(y) / np.sqrt(n))
                     for y, L in zip(ds.observations, ds.leadfields)])
    # tight-marginal regime: the plans track the sources closely and the
    # off-sign floors collapse
    config = MWEConfig(mu=0.005, lam=0.45 * scale, epsilon=0.5, gamma=25.0,
                       outer_tol=1e-8, outer_max_iter=500)
    sol = solve_mwe(ds, small_grid, config)
    amax = max(np.abs(s.dense).max() for s in sol.sources)
    overlap = max(np.minimum(s.pos, s.neg).max() for s in sol.sources)
    assert overlap <= 1e-8 * amax


def test_mwe_scaling_contract(small_grid):
    ds, _ = _small_dataset(19, geo=small_grid)
    lam = 0.1
    c = 10.0
    base = MWEConfig(mu=0.0, lam=lam, epsilon=1.0, gamma=1.0, sigma0=0.5,
                     outer_tol=1e-12, outer_max_iter=500, cd_tol=1e-12,
                     cd_max_iter=50000)
    sol1 = solve_mwe(ds, small_grid, base)
    scaled_ds = simulate.MultiSubjectDataset(
        ds.leadfields, [c * y for y in ds.observations])
    scaled = MWEConfig(mu=0.0, lam=lam, epsilon=1.0, gamma=1.0, sigma0=0.5 * c,
                       outer_tol=1e-12, outer_max_iter=500, cd_tol=1e-12,
                       cd_max_iter=50000)
    sol2 = solve_mwe(scaled_ds, small_grid, scaled)
    assert np.abs(sol2.coefficients - c * sol1.coefficients).max() < 1e-5 * c
    assert np.abs(sol2.sigmas - c * sol1.sigmas).max() < 1e-8 * c


def test_mtw_matches_mwe_support_on_equal_noise(small_grid):
    ds, _ = _small_dataset(23, S=4, n=50, geo=small_grid)
    n = 50
    scale_conc = np.mean([lasso_critical_lam(y, L) / (np.linalg.norm(y) / np.sqrt(n))
                          for y, L in zip(ds.observations, ds.leadfields)])
    kw = dict(epsilon=1.5, gamma=9.0, outer_tol=1e-8, outer_max_iter=500)
    mwe = solve_mwe(ds, small_grid, MWEConfig(mu=0.02, lam=0.4 * scale_conc, **kw))
    # matched hyperparameters: the frozen-noise solver sees the effective
    # penalties the adaptive one converged to (both kappa and the l1
    # weight carry the noise scale)
    sig = float(np.mean(mwe.sigmas))
    mtw = solve_mtw(ds, small_grid,
                    MWEConfig(mu=0.02 * sig, lam=0.4 * scale_conc * sig, **kw))
    agree = 0
    total = 0
    for s in range(ds.n_subjects):
        a = np.abs(mwe.sources[s].dense) > 1e-2 * np.abs(mwe.coefficients).max()
        b = np.abs(mtw.sources[s].dense) > 1e-2 * np.abs(mtw.coefficients).max()
        agree += int((a == b).sum())
        total += a.size
    assert agree / total >= 0.9


def test_objective_trace_csv(tmp_path, small_grid):
    ds, _ = _small_dataset(29, geo=small_grid)
    config = MWEConfig(mu=0.02, lam=0.05, epsilon=1.5, gamma=9.0,
                       outer_tol=1e-6, outer_max_iter=100)
    sol = solve_mwe(ds, small_grid, config)
    path = tmp_path / "trace.csv"
    solvers.write_objective_trace_csv(sol, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("iteration,objective,data_fit,ot_term,l1_term,sigma_0")
    assert len(lines) == len(sol.objective_trace) + 1


def test_signed_source_roundtrip():
    x = np.array([1.5, -2.0, 0.0])
    src = SignedSource.from_dense(x)
    assert np.array_equal(src.dense, x)
    assert np.all(src.pos >= 0) and np.all(src.neg >= 0)
