"""Confirm the winning regime across trials and subject counts."""
import numpy as np

from otmtr import solvers, geometry, simulate, metrics

mesh = geometry.grid_mesh(10, 20, spacing=1.0)
geo = geometry.Geometry(mesh)
geo.labels = geometry.make_label_partition(mesh, 10, seed=11)
M = geo.cost
n = 50

def thresh(x, rel=0.01):
    out = x.copy()
    if np.abs(out).max() > 0:
        out[np.abs(out) < rel * np.abs(out).max()] = 0.0
    return out

def lasso_best(ds, truth, S):
    best_auc, best_emd = -1.0, np.inf
    for frac in (0.2, 0.3, 0.4, 0.55, 0.7):
        est = [thresh(solvers.solve_lasso(ds.observations[s], ds.leadfields[s],
                frac * solvers.lasso_critical_lam(ds.observations[s], ds.leadfields[s])))
               for s in range(S)]
        rep = metrics.evaluate(est, truth.sources, M)
        best_auc = max(best_auc, rep.auc)
        best_emd = min(best_emd, rep.emd)
    return best_auc, best_emd

def mwe_best(ds, truth, S):
    ls = np.mean([solvers.lasso_critical_lam(y, L) / max(np.linalg.norm(y)/np.sqrt(n), 1e-12)
                  for y, L in zip(ds.observations, ds.leadfields)])
    best_auc, best_emd = -1.0, np.inf
    for eps in (1.5, 2.5):
        psi = 0.65
        gam = eps * psi / (1 - psi)
        for kf in (0.15, 0.3, 0.5):
            for lf in (0.5, 0.7, 0.9):
                lam = lf * ls
                mu = kf * lam * S / gam
                conf = solvers.MWEConfig(mu=mu, lam=lam, epsilon=eps, gamma=gam,
                                         concomitant=True, outer_tol=1e-4,
                                         outer_max_iter=150)
                sol = solvers.solve_mwe(ds, geo, conf)
                X = sol.coefficients
                rep = metrics.evaluate([thresh(X[:, s]) for s in range(S)],
                                       truth.sources, M)
                best_auc = max(best_auc, rep.auc)
                best_emd = min(best_emd, rep.emd)
    return best_auc, best_emd

rows = {2: [], 8: []}
for trial in range(5):
    for S in (2, 8):
        cfg = simulate.SimConfig(n_subjects=S, n_sensors=n, n_sources=200, q_active=3,
                                 snr=4.0, seed=1000 * trial + S, shared_leadfield=False,
                                 leadfield_smoothness_cm=0.7, leadfield_mix_angle_deg=30.0)
        ds, truth = simulate.make_dataset(cfg, geo)
        la, le = lasso_best(ds, truth, S)
        ma, me = mwe_best(ds, truth, S)
        rows[S].append((la, le, ma, me))
        print("trial %d S=%d: lasso auc=%.3f emd=%.2f | mwe auc=%.3f emd=%.2f | %s"
              % (trial, S, la, le, ma, me,
                 "WIN" if (ma > la and me < le) else "loss"))

for S in (2, 8):
    arr = np.array(rows[S])
    print("S=%d means: lasso auc=%.3f emd=%.2f | mwe auc=%.3f emd=%.2f"
          % (S, *arr.mean(axis=0)))
