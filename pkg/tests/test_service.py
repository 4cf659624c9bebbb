import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from otmtr import geometry, solvers, uot
from otmtr.service import create_app


@pytest.fixture()
def client():
    with TestClient(create_app()) as c:
        yield c


def test_health(client):
    payload = client.get("/health").json()
    assert payload["status"] == "ok"


def test_lasso_endpoint_matches_library(client):
    rng = np.random.default_rng(0)
    L = rng.standard_normal((10, 6))
    y = rng.standard_normal(10)
    resp = client.post("/solvers/lasso", json={
        "observations": y.tolist(), "leadfield": L.tolist(), "lam": 0.1})
    assert resp.status_code == 200
    x = np.array(resp.json()["coefficients"])
    ref = solvers.solve_lasso(y, L, 0.1)
    assert np.abs(x - ref).max() < 1e-12


def test_wasserstein_endpoint_matches_library(client):
    M = [[0.0, 1.0], [1.0, 0.0]]
    resp = client.post("/uot/wasserstein", json={
        "a": [1.0, 0.3], "b": [0.4, 1.2], "cost": M,
        "epsilon": 0.5, "gamma": 1.0, "tol": 1e-10})
    assert resp.status_code == 200
    body = resp.json()
    kernel = geometry.gibbs_kernel(np.array(M), 0.5)
    params = uot.SinkhornParams(0.5, 1.0, tol=1e-10)
    _, ref = uot.sinkhorn_unbalanced(np.array([1.0, 0.3]), np.array([0.4, 1.2]),
                                     kernel, params)
    assert body["value"] == pytest.approx(ref, rel=1e-9)
    assert body["converged"]


def test_wasserstein_endpoint_rejects_negative(client):
    resp = client.post("/uot/wasserstein", json={
        "a": [-1.0, 0.3], "b": [0.4, 1.2], "cost": [[0.0, 1.0], [1.0, 0.0]],
        "epsilon": 0.5, "gamma": 1.0})
    assert resp.status_code == 422


def test_mwe_endpoint_runs(client):
    rng = np.random.default_rng(1)
    mesh = geometry.grid_mesh(3, 4)
    M = geometry.build_geodesic_costs(mesh)
    p, n, S = 12, 8, 2
    Ls = [rng.standard_normal((n, p)) for _ in range(S)]
    x = np.zeros(p)
    x[3] = 2.0
    Ys = [L @ x + 0.05 * rng.standard_normal(n) for L in Ls]
    resp = client.post("/solvers/mwe", json={
        "observations": [y.tolist() for y in Ys],
        "leadfields": [L.tolist() for L in Ls],
        "cost": M.tolist(), "mu": 0.01, "lam": 0.05,
        "epsilon": 1.0, "gamma": 5.0})
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["coefficients"]) == p
    assert len(body["coefficients"][0]) == S
    assert len(body["sigmas"]) == S
    trace = body["objective_trace"]
    assert all(b <= a + 1e-10 * max(1, abs(a)) for a, b in zip(trace, trace[1:]))


def test_experiment_job_lifecycle(client, tmp_path):
    spec = {
        "seed": 4, "trials": 1, "subject_counts": [2],
        "leadfield_mode": "individual",
        "sim": {"n_sensors": 12, "n_sources": 24, "q_active": 2,
                "n_labels": 3, "labels_seed": 5,
                "mesh": {"rows": 4, "cols": 6}},
        "models": [{"name": "lasso", "lambda_fracs": [0.3, 0.6]}],
        "output_dir": str(tmp_path / "job_out"),
    }
    resp = client.post("/experiments", json=spec)
    assert resp.status_code == 200
    job_id = resp.json()["job_id"]

    deadline = time.time() + 120
    state = None
    while time.time() < deadline:
        state = client.get(f"/experiments/{job_id}").json()
        if state["state"] in ("done", "failed"):
            break
        time.sleep(0.2)
    assert state["state"] == "done", state
    assert state["completed_cells"] == state["total_cells"] == 2

    rows = client.get(f"/experiments/{job_id}/aggregate").json()
    assert len(rows) == 2
    best = client.get(f"/experiments/{job_id}/best", params={"metric": "emd"}).json()
    assert len(best) == 1 and best[0]["metric"] == "emd"
    assert client.get(f"/experiments/{job_id}/best",
                      params={"metric": "bogus"}).status_code == 422
    listing = client.get("/experiments").json()
    assert any(j["job_id"] == job_id for j in listing)


def test_unknown_job_404(client):
    assert client.get("/experiments/deadbeef").status_code == 404
    assert client.get("/experiments/deadbeef/aggregate").status_code == 404
