# -*- coding: utf-8 -*-
"""
Benchmark runner: generates trial datasets, fits every model over its
hyperparameter grid, scores against ground truth and aggregates across
trials with confidence intervals.

Cells (trial x subject count x model x grid point) are independent units
of work, executed by a thread pool, persisted individually under a
content hash so interrupted sweeps resume without recomputation, and
assembled into deterministic CSV reports.
"""

import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import stats

from . import geometry, metrics, simulate, solvers
from .schemas import AggregateRow, BestRow, CellResult, ExperimentSpec


class ExperimentError(RuntimeError):
    """A non-recoverable failure of the benchmark run."""


def build_geometry(sim_spec):
    """Geometry (mesh, costs, labels) described by a simulation spec."""
    if sim_spec.mesh.path:
        mesh = geometry.Mesh.from_off(sim_spec.mesh.path)
    else:
        mesh = geometry.grid_mesh(sim_spec.mesh.rows, sim_spec.mesh.cols,
                                  sim_spec.mesh.spacing_cm)
    if mesh.n_vertices != sim_spec.n_sources:
        raise ExperimentError("mesh has %d vertices but n_sources=%d"
                              % (mesh.n_vertices, sim_spec.n_sources))
    geo = geometry.Geometry(mesh)
    geo.labels = geometry.make_label_partition(mesh, sim_spec.n_labels,
                                               sim_spec.labels_seed)
    return geo


def _trial_seed(spec, trial, n_subjects):
    # stable per (experiment seed, trial, subject count)
    return int(np.random.SeedSequence([spec.seed, trial, n_subjects])
               .generate_state(1)[0] % (2 ** 31))


def _trial_config(spec, trial, n_subjects):
    sim = spec.sim
    return simulate.SimConfig(
        n_subjects=n_subjects, n_sensors=sim.n_sensors, n_sources=sim.n_sources,
        q_active=sim.q_active, overlap_fraction=sim.overlap_fraction,
        amp_range=tuple(sim.amp_range), sign_prob=sim.sign_prob, snr=sim.snr,
        shared_leadfield=(spec.leadfield_mode == "shared"),
        seed=_trial_seed(spec, trial, n_subjects),
        leadfield_smoothness_cm=sim.leadfield_smoothness_cm,
        leadfield_mix_angle_deg=sim.leadfield_mix_angle_deg)


def model_grid(model):
    """Expand a model spec into an ordered list of grid-point dicts."""
    points = []
    if model.name == "lasso":
        points = [{"lambda_frac": lf} for lf in model.lambda_fracs]
    elif model.name == "group_lasso":
        points = [{"lambda_frac": lf} for lf in model.lambda_fracs]
    elif model.name == "dirty":
        for lf in model.lambda_fracs:
            for sf in model.specific_fracs:
                points.append({"shared_frac": lf, "specific_frac": sf})
    else:  # mtw / mwe
        couplings = (model.coupling_fracs if model.coupling_fracs is not None
                     else [None] * len(model.mu))
        for ef in model.epsilon_fracs:
            for gr in model.gamma_ratios:
                for ci, cf in enumerate(couplings):
                    for lf in model.lambda_fracs:
                        point = {"lambda_frac": lf, "epsilon_frac": ef,
                                 "gamma_ratio": gr}
                        if cf is None:
                            point["mu"] = model.mu[ci]
                        else:
                            point["coupling_frac"] = cf
                        points.append(point)
    return points


def _threshold(x, rel):
    out = np.asarray(x, dtype=np.float64).copy()
    peak = np.abs(out).max()
    if peak > 0:
        out[np.abs(out) < rel * peak] = 0.0
    return out


def _fit_cell(spec, geo, dataset, truth, model, point):
    """Fit one grid point and return per-subject estimates."""
    Ys, Ls = dataset.observations, dataset.leadfields
    S = len(Ys)
    n = Ls[0].shape[0]
    solver = spec.solver
    name = model.name

    if name == "lasso":
        lams = [point["lambda_frac"] * solvers.lasso_critical_lam(Ys[s], Ls[s])
                for s in range(S)]
        est = [solvers.solve_lasso(Ys[s], Ls[s], lams[s], cd_tol=solver.cd_tol,
                                   cd_max_iter=solver.cd_max_iter)
               for s in range(S)]
        return est, {}
    if name == "group_lasso":
        lam = point["lambda_frac"] * solvers.group_critical_lam(Ys, Ls)
        X = solvers.solve_group_lasso(Ys, Ls, lam, cd_tol=solver.cd_tol,
                                      cd_max_iter=solver.cd_max_iter)
        return [X[:, s] for s in range(S)], {"lambda": lam}
    if name == "dirty":
        lam_sh = point["shared_frac"] * solvers.group_critical_lam(Ys, Ls)
        lam_sp = (point["specific_frac"]
                  * max(solvers.lasso_critical_lam(Ys[s], Ls[s]) for s in range(S)))
        sol = solvers.solve_dirty(Ys, Ls, lam_sh, lam_sp, cd_tol=solver.cd_tol,
                                  cd_max_iter=solver.cd_max_iter)
        X = sol.coefficients
        return [X[:, s] for s in range(S)], {"lambda_shared": lam_sh,
                                             "lambda_specific": lam_sp}

    # transport-coupled models
    concomitant = name == "mwe"
    epsilon = point["epsilon_frac"] * float(np.median(geo.cost))
    gamma = point["gamma_ratio"] * epsilon
    if concomitant:
        scale = float(np.mean(
            [solvers.lasso_critical_lam(y, L) / max(np.linalg.norm(y) / np.sqrt(n), 1e-300)
             for y, L in zip(Ys, Ls)]))
    else:
        scale = float(np.mean([solvers.lasso_critical_lam(y, L)
                               for y, L in zip(Ys, Ls)]))
    lam = point["lambda_frac"] * scale
    if "mu" in point:
        mu = point["mu"]
    else:
        mu = point["coupling_frac"] * lam * S / gamma
    config = solvers.MWEConfig(
        mu=mu, lam=lam, epsilon=epsilon, gamma=gamma, concomitant=concomitant,
        outer_tol=solver.outer_tol, outer_max_iter=solver.outer_max_iter,
        cd_tol=solver.cd_tol, cd_max_iter=solver.cd_max_iter,
        sinkhorn_tol=solver.sinkhorn_tol, sinkhorn_max_iter=solver.sinkhorn_max_iter)
    sol = (solvers.solve_mwe if concomitant else solvers.solve_mtw)(dataset, geo, config)
    X = sol.coefficients
    extras = {"mu": mu, "lambda": lam, "epsilon": epsilon, "gamma": gamma,
              "outer_iterations": sol.n_iter,
              "sinkhorn_converged": sol.sinkhorn_converged}
    return [X[:, s] for s in range(S)], extras


def cell_hash(spec, trial, n_subjects, model_name, point):
    """Content hash identifying one cell of the sweep."""
    payload = {
        "sim": spec.sim.model_dump(),
        "solver": spec.solver.model_dump(),
        "leadfield_mode": spec.leadfield_mode,
        "score_threshold": spec.score_threshold,
        "seed": spec.seed,
        "trial": trial,
        "n_subjects": n_subjects,
        "model": model_name,
        "point": point,
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


class _DatasetCache:
    """Per-(trial, subject count) dataset cache shared across workers."""

    def __init__(self, spec, geo):
        self.spec = spec
        self.geo = geo
        self._lock = threading.Lock()
        self._data = {}

    def get(self, trial, n_subjects):
        key = (trial, n_subjects)
        with self._lock:
            if key not in self._data:
                cfg = _trial_config(self.spec, trial, n_subjects)
                self._data[key] = simulate.make_dataset(cfg, self.geo)
            return self._data[key]


def _run_cell(spec, geo, cache, cell):
    trial, n_subjects, model, gi, point = cell
    started = time.time()
    try:
        dataset, truth = cache.get(trial, n_subjects)
        est, extras = _fit_cell(spec, geo, dataset, truth, model, point)
        est = [_threshold(e, spec.score_threshold) for e in est]
        report = metrics.evaluate(est, truth.sources, geo.cost)
        params = dict(point)
        params.update({k: v for k, v in extras.items()})
        return CellResult(trial=trial, n_subjects=n_subjects, model=model.name,
                          grid_index=gi, params=params, auc=report.auc,
                          emd=report.emd, mse=report.mse,
                          per_subject=report.per_subject,
                          seconds=time.time() - started)
    except Exception as exc:  # error rows keep the sweep going
        return CellResult(trial=trial, n_subjects=n_subjects, model=model.name,
                          grid_index=gi, params=dict(point), status="error",
                          error="%s: %s" % (type(exc).__name__, exc),
                          seconds=time.time() - started)


def _confidence(values):
    values = np.asarray(values, dtype=np.float64)
    mean = float(values.mean())
    if values.size < 2 or np.allclose(values, values[0]):
        return mean, mean, mean
    half = float(stats.t.ppf(0.975, values.size - 1)
                 * values.std(ddof=1) / np.sqrt(values.size))
    return mean, mean - half, mean + half


def aggregate(results, spec):
    """Across-trial means with 95% confidence bounds per grid point."""
    groups = {}
    for r in results:
        if r.status != "ok":
            continue
        groups.setdefault((r.model, r.n_subjects, r.grid_index), []).append(r)
    rows = []
    for (model, n_subjects, gi) in sorted(groups):
        cells = groups[(model, n_subjects, gi)]
        auc = _confidence([c.auc for c in cells])
        emd = _confidence([c.emd for c in cells])
        mse = _confidence([c.mse for c in cells])
        params = {k: v for k, v in cells[0].params.items()
                  if k in ("lambda_frac", "shared_frac", "specific_frac",
                           "coupling_frac", "mu", "epsilon_frac", "gamma_ratio")}
        rows.append(AggregateRow(
            model=model, n_subjects=n_subjects, grid_index=gi, params=params,
            n_trials=len(cells), auc_mean=auc[0], auc_lo=auc[1], auc_hi=auc[2],
            emd_mean=emd[0], emd_lo=emd[1], emd_hi=emd[2],
            mse_mean=mse[0], mse_lo=mse[1], mse_hi=mse[2]))
    return rows


def best_scores(rows, metric):
    """Best grid value per (model, subject count).

    AUC is maximized; earth-mover distance and MSE are minimized.
    """
    if metric not in ("auc", "emd", "mse"):
        raise ValueError("unknown metric %r (want auc, emd or mse)" % metric)
    key = metric + "_mean"
    table = {}
    for row in rows:
        cur = table.get((row.model, row.n_subjects))
        value = getattr(row, key)
        better = (cur is None or
                  (value > cur.value if metric == "auc" else value < cur.value))
        if better:
            table[(row.model, row.n_subjects)] = BestRow(
                model=row.model, n_subjects=row.n_subjects, metric=metric,
                value=value, grid_index=row.grid_index, params=row.params)
    return [table[k] for k in sorted(table)]


def _fmt(x):
    return "" if x is None else repr(float(x))


def _write_cells_csv(path, results):
    with open(path, "w", newline="") as f:
        f.write("trial,subject_count,model,grid_index,subject,auc,emd_cm,mse,"
                "status,params\n")
        for r in sorted(results, key=lambda c: (c.model, c.n_subjects, c.trial,
                                                c.grid_index)):
            params = json.dumps(r.params, sort_keys=True).replace(",", ";")
            if r.status != "ok":
                f.write("%d,%d,%s,%d,,,,,error,%s\n"
                        % (r.trial, r.n_subjects, r.model, r.grid_index, params))
                continue
            for s, per in enumerate(r.per_subject):
                f.write("%d,%d,%s,%d,%d,%s,%s,%s,ok,%s\n"
                        % (r.trial, r.n_subjects, r.model, r.grid_index, s,
                           _fmt(per["auc"]), _fmt(per["emd"]), _fmt(per["mse"]),
                           params))


def _write_aggregate_csv(path, rows):
    with open(path, "w", newline="") as f:
        f.write("model,subject_count,grid_index,n_trials,"
                "auc_mean,auc_lo,auc_hi,emd_mean,emd_lo,emd_hi,"
                "mse_mean,mse_lo,mse_hi,params\n")
        for r in rows:
            f.write("%s,%d,%d,%d,%s,%s,%s,%s,%s,%s,%s,%s,%s,%s\n" % (
                r.model, r.n_subjects, r.grid_index, r.n_trials,
                _fmt(r.auc_mean), _fmt(r.auc_lo), _fmt(r.auc_hi),
                _fmt(r.emd_mean), _fmt(r.emd_lo), _fmt(r.emd_hi),
                _fmt(r.mse_mean), _fmt(r.mse_lo), _fmt(r.mse_hi),
                json.dumps(r.params, sort_keys=True).replace(",", ";")))


def _write_best_csv(path, rows):
    with open(path, "w", newline="") as f:
        f.write("model,subject_count,metric,value,grid_index,params\n")
        for r in rows:
            f.write("%s,%d,%s,%s,%d,%s\n" % (
                r.model, r.n_subjects, r.metric, _fmt(r.value), r.grid_index,
                json.dumps(r.params, sort_keys=True).replace(",", ";")))


class ExperimentReport:
    """In-memory handle over a finished (or resumed) run."""

    def __init__(self, spec, results, rows, output_dir):
        self.spec = spec
        self.results = results
        self.aggregate_rows = rows
        self.output_dir = output_dir

    def best(self, metric):
        return best_scores(self.aggregate_rows, metric)


def run_experiment(spec, threads=1, resume=False, progress=None):
    """Execute the full benchmark described by ``spec``.

    Every cell in the (trial x subject count x model x grid point) cross
    product produces either a result row or an error row. Completed cells
    found on disk are reused when ``resume`` is set. Outputs are written
    to ``spec.output_dir``: per-cell JSON under ``cells/``, per-subject
    rows in ``cells.csv``, across-trial summaries in ``aggregate.csv``,
    per-metric winners in ``best_<metric>.csv`` and a run manifest.

    Returns an ``ExperimentReport``.
    """
    if isinstance(spec, dict):
        spec = ExperimentSpec.model_validate(spec)
    if not spec.output_dir:
        raise ExperimentError("spec.output_dir is required")
    out = spec.output_dir
    cells_dir = os.path.join(out, "cells")
    os.makedirs(cells_dir, exist_ok=True)

    geo = build_geometry(spec.sim)
    cache = _DatasetCache(spec, geo)

    cells = []
    for model in spec.models:
        grid = model_grid(model)
        for n_subjects in spec.subject_counts:
            for trial in range(spec.trials):
                for gi, point in enumerate(grid):
                    cells.append((trial, n_subjects, model, gi, point))

    started = time.time()
    results = [None] * len(cells)
    done_count = [0]
    lock = threading.Lock()

    def work(idx):
        trial, n_subjects, model, gi, point = cells[idx]
        h = cell_hash(spec, trial, n_subjects, model.name, point)
        path = os.path.join(cells_dir, h + ".json")
        if resume and os.path.exists(path):
            with open(path) as f:
                result = CellResult.model_validate(json.load(f))
        else:
            result = _run_cell(spec, geo, cache, cells[idx])
            tmp = path + ".tmp"
            with open(tmp, "w") as f:
                json.dump(result.model_dump(), f, sort_keys=True)
            os.replace(tmp, path)
        results[idx] = result
        with lock:
            done_count[0] += 1
            if progress:
                progress(done_count[0], len(cells))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(len(cells))))
    else:
        for idx in range(len(cells)):
            work(idx)

    rows = aggregate(results, spec)
    _write_cells_csv(os.path.join(out, "cells.csv"), results)
    _write_aggregate_csv(os.path.join(out, "aggregate.csv"), rows)
    for metric in ("auc", "emd", "mse"):
        _write_best_csv(os.path.join(out, "best_%s.csv" % metric),
                        best_scores(rows, metric))
    manifest = {
        "spec": spec.model_dump(),
        "n_cells": len(cells),
        "n_errors": sum(1 for r in results if r.status != "ok"),
        "elapsed_seconds": time.time() - started,
        "versions": {"otmtr": _package_version(), "numpy": np.__version__},
    }
    with open(os.path.join(out, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return ExperimentReport(spec, results, rows, out)


def load_report(output_dir):
    """Rebuild a report handle from a finished run directory."""
    with open(os.path.join(output_dir, "manifest.json")) as f:
        manifest = json.load(f)
    spec = ExperimentSpec.model_validate(manifest["spec"])
    cells_dir = os.path.join(output_dir, "cells")
    results = []
    for name in sorted(os.listdir(cells_dir)):
        if name.endswith(".json"):
            with open(os.path.join(cells_dir, name)) as f:
                results.append(CellResult.model_validate(json.load(f)))
    rows = aggregate(results, spec)
    return ExperimentReport(spec, results, rows, output_dir)


def _package_version():
    try:
        from importlib.metadata import version
        return version("otmtr")
    except Exception:
        return "unknown"
