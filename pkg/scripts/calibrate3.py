"""MWE vs Lasso at benchmark scale, small-mu regime, gamma >> epsilon."""
import time
import numpy as np

from otmtr import solvers, geometry, simulate, metrics

mesh = geometry.grid_mesh(10, 20, spacing=1.0)
geo = geometry.Geometry(mesh)
geo.labels = geometry.make_label_partition(mesh, 10, seed=11)
M = geo.cost

def lasso_eval(ds, truth, S):
    best = None
    for frac in (0.15, 0.25, 0.35, 0.5):
        est = [solvers.solve_lasso(ds.observations[s], ds.leadfields[s],
                frac * solvers.lasso_critical_lam(ds.observations[s], ds.leadfields[s]))
               for s in range(S)]
        rep = metrics.evaluate(est, truth.sources, M)
        if best is None or rep.auc > best["auc"]:
            best = {"auc": rep.auc, "emd_at_best_auc": rep.emd}
        if "emd" not in best or rep.emd < best["emd"]:
            best["emd"] = rep.emd
    return best

for S in (4, 8):
    for trial in (0, 1):
        cfg = simulate.SimConfig(n_subjects=S, n_sensors=50, n_sources=200, q_active=3,
                                 snr=4.0, seed=1000 * trial + S, shared_leadfield=False,
                                 leadfield_smoothness_cm=1.0, leadfield_mix_angle_deg=40.0)
        ds, truth = simulate.make_dataset(cfg, geo)
        lb = lasso_eval(ds, truth, S)
        print(f"S={S} trial={trial} lasso best: auc={lb['auc']:.3f} emd={lb['emd']:.2f}")
        n = 50
        for mu in (0.001, 0.003, 0.01, 0.03):
            for eps, gam in ((1.0, 20.0),):
                for lf in (0.2, 0.35):
                    conf = solvers.MWEConfig(mu=mu, lam=lf * np.mean(
                        [solvers.lasso_critical_lam(y, L) / max(np.linalg.norm(y)/np.sqrt(n), 1e-12)
                         for y, L in zip(ds.observations, ds.leadfields)]),
                        epsilon=eps, gamma=gam, concomitant=True,
                        outer_tol=1e-4, outer_max_iter=150)
                    t0 = time.time()
                    try:
                        sol = solvers.solve_mwe(ds, geo, conf)
                        X = sol.coefficients
                        rep = metrics.evaluate([X[:, s] for s in range(S)], truth.sources, M)
                        comp = max(np.minimum(s.pos, s.neg).max() for s in sol.sources)
                        amax = max(np.abs(X).max(), 1e-12)
                        print("  mu=%-6g lf=%.2f: auc=%.3f emd=%.2f mse=%.2f %4.1fs it=%3d "
                              "comp=%.0e amax=%.1f" % (mu, lf, rep.auc, rep.emd, rep.mse,
                              time.time()-t0, sol.n_iter, comp/amax, amax))
                    except Exception as e:
                        print("  mu=%g lf=%.2f FAILED: %s" % (mu, lf, str(e)[:90]))
