# -*- coding: utf-8 -*-
"""
Pydantic models shared by the experiment runner, the CLI and the HTTP
service: benchmark specifications, solver settings and report rows.
"""

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator


class MeshSpec(BaseModel):
    """Synthetic grid mesh, or a path to an OFF file."""

    rows: int = 10
    cols: int = 20
    spacing_cm: float = 1.0
    path: Optional[str] = None


class SimSpec(BaseModel):
    """Benchmark generation settings (one draw per trial and subject count)."""

    n_sensors: int = 50
    n_sources: int = 200
    q_active: int = 3
    overlap_fraction: float = 0.5
    amp_range: Tuple[float, float] = (20.0, 30.0)
    sign_prob: float = 0.5
    snr: float = 4.0
    leadfield_smoothness_cm: float = 0.7
    leadfield_mix_angle_deg: float = 30.0
    n_labels: int = 10
    labels_seed: int = 11
    mesh: MeshSpec = Field(default_factory=MeshSpec)


class SolverSpec(BaseModel):
    """Iteration budgets and tolerances applied to every model fit."""

    outer_tol: float = 1e-4
    outer_max_iter: int = 150
    cd_tol: float = 1e-6
    cd_max_iter: int = 2000
    sinkhorn_tol: float = 1e-6
    sinkhorn_max_iter: int = 5000


class ModelSpec(BaseModel):
    """One model plus its hyperparameter grid.

    ``lambda_fracs`` are fractions of the model's critical penalty (the
    smallest value with an all-zero solution). For the transport-coupled
    models the grid is the product of ``lambda_fracs``, ``coupling_fracs``
    (relative coupling strength; the absolute ``mu`` weight is derived per
    fit as ``frac * lam * S / gamma`` and logged), ``epsilon_fracs``
    (fractions of the median geodesic distance) and ``gamma_ratios``
    (gamma / epsilon). Absolute ``mu`` values may be given instead of
    ``coupling_fracs``.
    """

    name: Literal["lasso", "group_lasso", "dirty", "mtw", "mwe"]
    lambda_fracs: List[float] = Field(default_factory=lambda: [0.2, 0.3, 0.4, 0.55, 0.7])
    # dirty model only
    specific_fracs: Optional[List[float]] = None
    # transport-coupled models only
    coupling_fracs: Optional[List[float]] = None
    mu: Optional[List[float]] = None
    epsilon_fracs: List[float] = Field(default_factory=lambda: [0.23])
    gamma_ratios: List[float] = Field(default_factory=lambda: [7.33])

    @model_validator(mode="after")
    def _defaults(self):
        if self.name == "dirty" and self.specific_fracs is None:
            self.specific_fracs = [0.3, 0.5, 0.7]
        if self.name in ("mtw", "mwe") and self.coupling_fracs is None and self.mu is None:
            self.coupling_fracs = [0.02, 0.3, 1.0, 2.5]
        if self.name in ("mtw", "mwe") and not self.lambda_fracs:
            raise ValueError("transport models need a lambda grid")
        return self


def default_models():
    return [
        ModelSpec(name="lasso"),
        ModelSpec(name="group_lasso"),
        ModelSpec(name="dirty"),
        ModelSpec(name="mtw", lambda_fracs=[0.28, 0.45, 0.6, 0.75, 0.9]),
        ModelSpec(name="mwe", lambda_fracs=[0.28, 0.45, 0.6, 0.75, 0.9]),
    ]


class ExperimentSpec(BaseModel):
    """Full benchmark description; everything a run needs to reproduce."""

    seed: int = 0
    trials: int = 1
    subject_counts: List[int] = Field(default_factory=lambda: [2, 4, 8])
    leadfield_mode: Literal["shared", "individual"] = "individual"
    sim: SimSpec = Field(default_factory=SimSpec)
    solver: SolverSpec = Field(default_factory=SolverSpec)
    models: List[ModelSpec] = Field(default_factory=default_models)
    score_threshold: float = 0.01
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.subject_counts:
            raise ValueError("subject_counts must be nonempty")
        if not self.models:
            raise ValueError("at least one model is required")
        return self


class CellResult(BaseModel):
    """Outcome of one (trial, subject count, model, grid point) fit."""

    trial: int
    n_subjects: int
    model: str
    grid_index: int
    params: dict
    status: Literal["ok", "error"] = "ok"
    error: Optional[str] = None
    auc: Optional[float] = None
    emd: Optional[float] = None
    mse: Optional[float] = None
    per_subject: Optional[List[dict]] = None
    seconds: Optional[float] = None


class AggregateRow(BaseModel):
    """Across-trial mean and 95% confidence bounds for one grid point."""

    model: str
    n_subjects: int
    grid_index: int
    params: dict
    n_trials: int
    auc_mean: float
    auc_lo: float
    auc_hi: float
    emd_mean: float
    emd_lo: float
    emd_hi: float
    mse_mean: float
    mse_lo: float
    mse_hi: float


class BestRow(BaseModel):
    """Best grid value of one metric for a (model, subject count) pair."""

    model: str
    n_subjects: int
    metric: str
    value: float
    grid_index: int
    params: dict


class JobStatus(BaseModel):
    job_id: str
    state: Literal["pending", "running", "done", "failed"]
    total_cells: int = 0
    completed_cells: int = 0
    error: Optional[str] = None
    output_dir: Optional[str] = None


class WassersteinRequest(BaseModel):
    """One-shot unbalanced transport evaluation between two measures."""

    a: List[float]
    b: List[float]
    cost: List[List[float]]
    epsilon: float
    gamma: float
    max_iter: int = 5000
    tol: float = 1e-6


class WassersteinResponse(BaseModel):
    value: float
    converged: bool
    iterations: int


class LassoRequest(BaseModel):
    observations: List[float]
    leadfield: List[List[float]]
    lam: float


class LassoResponse(BaseModel):
    coefficients: List[float]


class MWERequest(BaseModel):
    """One-shot multi-subject solve on an explicit cost matrix."""

    observations: List[List[float]]
    leadfields: List[List[List[float]]]
    cost: List[List[float]]
    mu: float
    lam: float
    epsilon: float
    gamma: float
    concomitant: bool = True
    sigma0: Optional[float] = None
    outer_tol: float = 1e-5
    outer_max_iter: int = 200


class MWEResponse(BaseModel):
    coefficients: List[List[float]]
    sigmas: List[float]
    objective_trace: List[float]
    converged: bool
    sinkhorn_converged: bool
