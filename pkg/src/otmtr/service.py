# -*- coding: utf-8 -*-
"""
HTTP front for the toolkit: submit benchmark sweeps as background jobs,
poll their progress, fetch reports, and run small one-shot solves.
"""

import tempfile
import threading
import uuid

import numpy as np
from fastapi import FastAPI, HTTPException

from . import experiments, solvers, uot
from .geometry import GibbsKernel, gibbs_kernel
from .schemas import (ExperimentSpec, JobStatus, LassoRequest, LassoResponse,
                      MWERequest, MWEResponse, WassersteinRequest,
                      WassersteinResponse)
from .simulate import MultiSubjectDataset


class JobRegistry:
    """In-process registry of experiment jobs, one worker thread each."""

    def __init__(self):
        self._lock = threading.Lock()
        self._jobs = {}

    def submit(self, spec, threads=1):
        job_id = uuid.uuid4().hex[:12]
        if not spec.output_dir:
            spec.output_dir = tempfile.mkdtemp(prefix="otmtr-job-")
        status = JobStatus(job_id=job_id, state="pending",
                           output_dir=spec.output_dir)
        with self._lock:
            self._jobs[job_id] = {"status": status, "report": None, "spec": spec}

        def progress(done, total):
            with self._lock:
                status.completed_cells = done
                status.total_cells = total

        def run():
            with self._lock:
                status.state = "running"
            try:
                report = experiments.run_experiment(spec, threads=threads,
                                                    resume=True,
                                                    progress=progress)
                with self._lock:
                    self._jobs[job_id]["report"] = report
                    status.state = "done"
            except Exception as exc:
                with self._lock:
                    status.state = "failed"
                    status.error = "%s: %s" % (type(exc).__name__, exc)

        worker = threading.Thread(target=run, daemon=True)
        with self._lock:
            self._jobs[job_id]["thread"] = worker
        worker.start()
        return status

    def get(self, job_id):
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise KeyError(job_id)
        return job

    def statuses(self):
        with self._lock:
            return [j["status"] for j in self._jobs.values()]


def create_app():
    """Build the FastAPI application with a fresh job registry."""
    app = FastAPI(title="otmtr service",
                  description="Multi-task sparse regression with "
                              "optimal-transport coupling")
    registry = JobRegistry()
    app.state.registry = registry

    @app.get("/health")
    def health():
        return {"status": "ok", "version": experiments._package_version()}

    @app.post("/experiments", response_model=JobStatus)
    def submit_experiment(spec: ExperimentSpec, threads: int = 1):
        return registry.submit(spec, threads=threads)

    @app.get("/experiments", response_model=list[JobStatus])
    def list_experiments():
        return registry.statuses()

    @app.get("/experiments/{job_id}", response_model=JobStatus)
    def experiment_status(job_id: str):
        try:
            return registry.get(job_id)["status"]
        except KeyError:
            raise HTTPException(404, "unknown job %s" % job_id)

    def _finished(job_id):
        try:
            job = registry.get(job_id)
        except KeyError:
            raise HTTPException(404, "unknown job %s" % job_id)
        if job["status"].state != "done":
            raise HTTPException(409, "job %s is %s" % (job_id, job["status"].state))
        return job["report"]

    @app.get("/experiments/{job_id}/aggregate")
    def experiment_aggregate(job_id: str):
        report = _finished(job_id)
        return [row.model_dump() for row in report.aggregate_rows]

    @app.get("/experiments/{job_id}/best")
    def experiment_best(job_id: str, metric: str = "auc"):
        report = _finished(job_id)
        try:
            rows = report.best(metric)
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        return [row.model_dump() for row in rows]

    @app.post("/solvers/lasso", response_model=LassoResponse)
    def solve_lasso_endpoint(req: LassoRequest):
        x = solvers.solve_lasso(np.asarray(req.observations),
                                np.asarray(req.leadfield), req.lam)
        return LassoResponse(coefficients=x.tolist())

    @app.post("/solvers/mwe", response_model=MWEResponse)
    def solve_mwe_endpoint(req: MWERequest):
        dataset = MultiSubjectDataset(
            [np.asarray(L, dtype=np.float64) for L in req.leadfields],
            [np.asarray(y, dtype=np.float64) for y in req.observations])
        kernel = gibbs_kernel(np.asarray(req.cost, dtype=np.float64), req.epsilon)
        config = solvers.MWEConfig(mu=req.mu, lam=req.lam, epsilon=req.epsilon,
                                   gamma=req.gamma, concomitant=req.concomitant,
                                   sigma0=req.sigma0, outer_tol=req.outer_tol,
                                   outer_max_iter=req.outer_max_iter)
        sol = solvers.solve_mwe(dataset, kernel, config)
        return MWEResponse(coefficients=sol.coefficients.tolist(),
                           sigmas=sol.sigmas.tolist(),
                           objective_trace=list(sol.objective_trace),
                           converged=sol.converged,
                           sinkhorn_converged=sol.sinkhorn_converged)

    @app.post("/uot/wasserstein", response_model=WassersteinResponse)
    def wasserstein_endpoint(req: WassersteinRequest):
        kernel = gibbs_kernel(np.asarray(req.cost, dtype=np.float64), req.epsilon)
        params = uot.SinkhornParams(req.epsilon, req.gamma,
                                    max_iter=req.max_iter, tol=req.tol)
        try:
            state, value = uot.sinkhorn_unbalanced(np.asarray(req.a),
                                                   np.asarray(req.b),
                                                   kernel, params)
        except uot.UOTError as exc:
            raise HTTPException(422, str(exc))
        return WassersteinResponse(value=value, converged=state.converged,
                                   iterations=state.n_iter)

    return app


app = create_app()
