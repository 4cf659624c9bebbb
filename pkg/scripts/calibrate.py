"""Coarse hyperparameter scan at benchmark scale to pick default grids."""
import time
import numpy as np

from otmtr import solvers, geometry, simulate, metrics

mesh = geometry.grid_mesh(10, 20, spacing=1.0)  # p=200, 9x19 cm
geo = geometry.Geometry(mesh)
geo.labels = geometry.make_label_partition(mesh, 10, seed=11)
M = geo.cost
print("median M:", np.median(M), "max M:", M.max())

def run_trial(S, trial, mu, eps, gam, lam_frac, concomitant=True):
    cfg = simulate.SimConfig(n_subjects=S, n_sensors=50, n_sources=200, q_active=3,
                             snr=4.0, seed=1000 * trial + S, shared_leadfield=False)
    ds, truth = simulate.make_dataset(cfg, geo)
    n = 50
    lam_scaled = np.mean([solvers.lasso_critical_lam(y, L) / max(np.linalg.norm(y) / np.sqrt(n), 1e-12)
                          for y, L in zip(ds.observations, ds.leadfields)])
    conf = solvers.MWEConfig(mu=mu, lam=lam_frac * lam_scaled, epsilon=eps, gamma=gam,
                             concomitant=concomitant, outer_tol=1e-4, outer_max_iter=100)
    t0 = time.time()
    sol = solvers.solve_mwe(ds, geo, conf)
    dt = time.time() - t0
    X = sol.coefficients
    rep = metrics.evaluate([X[:, s] for s in range(S)], truth.sources, M)
    return rep, sol, dt, ds, truth

def lasso_best(S, trial):
    cfg = simulate.SimConfig(n_subjects=S, n_sensors=50, n_sources=200, q_active=3,
                             snr=4.0, seed=1000 * trial + S, shared_leadfield=False)
    ds, truth = simulate.make_dataset(cfg, geo)
    best = None
    for frac in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6):
        est = [solvers.solve_lasso(ds.observations[s], ds.leadfields[s],
                                   frac * solvers.lasso_critical_lam(ds.observations[s], ds.leadfields[s]))
               for s in range(S)]
        rep = metrics.evaluate(est, truth.sources, M)
        row = (frac, rep.auc, rep.emd, rep.mse)
        if best is None or rep.auc > best[1]:
            best = row
        print("   lasso frac=%.1f auc=%.3f emd=%.2f mse=%.3f" % row)
    return best

print("=== Lasso baseline S=4 trial 0 ===")
lb = lasso_best(4, 0)
print("best lasso:", lb)

print("=== MWE scan S=4 trial 0 ===")
for mu in (0.002, 0.01, 0.05, 0.2):
    for eps, gam in ((1.0, 10.0), (2.0, 20.0)):
        for lf in (0.2, 0.35):
            try:
                rep, sol, dt, ds, truth = run_trial(4, 0, mu, eps, gam, lf)
                comp = max(np.minimum(s.pos, s.neg).max() for s in sol.sources)
                amax = np.abs(sol.coefficients).max()
                print("mu=%-6g eps=%g gam=%g lf=%.2f: auc=%.3f emd=%.2f mse=%.3f "
                      "%.1fs it=%d conv=%s comp=%.1e amax=%.1f sig=%.2f"
                      % (mu, eps, gam, lf, rep.auc, rep.emd, rep.mse, dt, sol.n_iter,
                         sol.converged, comp / max(amax, 1e-12), amax, sol.sigmas.mean()))
            except Exception as e:
                print("mu=%g eps=%g gam=%g lf=%.2f FAILED: %s" % (mu, eps, gam, lf, e))
