"""Bigger labels, more distinct leadfields, two-gamma MWE grid."""
import numpy as np

from otmtr import solvers, geometry, simulate, metrics

mesh = geometry.grid_mesh(10, 20, spacing=1.0)
geo = geometry.Geometry(mesh)
geo.labels = geometry.make_label_partition(mesh, 5, seed=11)  # ~40 verts/label
M = geo.cost
n = 50

LASSO_FRACS = (0.2, 0.3, 0.4, 0.55, 0.7)
# (gamma_over_eps, kf, lf)
MWE_CELLS = [
    (7.33, 0.02, 0.45), (7.33, 0.02, 0.6), (7.33, 0.02, 0.75), (7.33, 0.02, 0.9),
    (7.33, 0.3, 0.45), (7.33, 0.3, 0.6), (7.33, 0.3, 0.75),
    (7.33, 1.0, 0.3), (7.33, 1.0, 0.45),
    (7.33, 2.5, 0.2), (7.33, 2.5, 0.28),
    (1.86, 0.3, 0.45), (1.86, 0.3, 0.6),    # psi=0.65 recruit cells
    (1.86, 1.0, 0.3), (1.86, 1.0, 0.45),
]
EPS = 2.0

def thresh(x, rel=0.01):
    out = x.copy()
    if np.abs(out).max() > 0:
        out[np.abs(out) < rel * np.abs(out).max()] = 0.0
    return out

def score(est, truth):
    return metrics.evaluate([thresh(e) for e in est], truth.sources, M)

rows = {2: [], 8: []}
gl_rows = []
for trial in range(6):
    for S in (2, 8):
        cfg = simulate.SimConfig(n_subjects=S, n_sensors=n, n_sources=200, q_active=3,
                                 snr=4.0, seed=1000 * trial + S, shared_leadfield=False,
                                 leadfield_smoothness_cm=0.7, leadfield_mix_angle_deg=55.0)
        ds, truth = simulate.make_dataset(cfg, geo)
        la, le = -1.0, np.inf
        for frac in LASSO_FRACS:
            est = [solvers.solve_lasso(ds.observations[s], ds.leadfields[s],
                    frac * solvers.lasso_critical_lam(ds.observations[s], ds.leadfields[s]))
                   for s in range(S)]
            rep = score(est, truth)
            la, le = max(la, rep.auc), min(le, rep.emd)
        ga = -1.0
        if S == 8:
            glmax = solvers.group_critical_lam(ds.observations, ds.leadfields)
            for frac in LASSO_FRACS:
                X = solvers.solve_group_lasso(ds.observations, ds.leadfields, frac * glmax)
                rep = score([X[:, s] for s in range(S)], truth)
                ga = max(ga, rep.auc)
        ls = np.mean([solvers.lasso_critical_lam(y, L) / max(np.linalg.norm(y)/np.sqrt(n), 1e-12)
                      for y, L in zip(ds.observations, ds.leadfields)])
        ma, me = -1.0, np.inf
        for ratio, kf, lf in MWE_CELLS:
            gam = EPS * ratio
            lam = lf * ls
            conf = solvers.MWEConfig(mu=kf * lam * S / gam, lam=lam, epsilon=EPS,
                                     gamma=gam, concomitant=True, outer_tol=1e-4,
                                     outer_max_iter=150)
            sol = solvers.solve_mwe(ds, geo, conf)
            rep = score([sol.coefficients[:, s] for s in range(S)], truth)
            ma, me = max(ma, rep.auc), min(me, rep.emd)
        rows[S].append((la, le, ma, me))
        msg = ""
        if S == 8:
            gl_rows.append((ga, ma))
            msg = " | GL %.3f %s" % (ga, "ok" if ga <= ma else "ABOVE")
        print("trial %d S=%d: lasso %.3f/%.2f | mwe %.3f/%.2f %s%s"
              % (trial, S, la, le, ma, me,
                 "WIN" if (ma > la and me < le) else "loss", msg))

for S in (2, 8):
    arr = np.array(rows[S])
    print("S=%d means: lasso auc=%.3f emd=%.2f | mwe auc=%.3f emd=%.2f"
          % (S, *arr.mean(axis=0)))
gl = np.array(gl_rows)
print("GL mean auc: %.3f vs MWE %.3f" % (gl[:, 0].mean(), gl[:, 1].mean()))
