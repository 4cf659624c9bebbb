# -*- coding: utf-8 -*-
"""
otmtr: multi-task sparse regression with unbalanced optimal-transport
coupling, per-task noise estimation, baselines, synthetic benchmarks and
evaluation metrics.
"""

from .geometry import (Geometry, GibbsKernel, LabelPartition, Mesh,
                       build_geodesic_costs, gibbs_kernel, grid_mesh,
                       make_label_partition)
from .metrics import MetricReport, evaluate, mse, signed_emd, signed_pr_auc
from .simulate import (GroundTruth, MultiSubjectDataset, SimConfig, add_noise,
                       generate_leadfields, generate_sources, make_dataset)
from .solvers import (MWEConfig, MWESolution, SignedSource, solve_dirty,
                      solve_group_lasso, solve_lasso, solve_mtw, solve_mwe,
                      solve_subproblem, update_sigma)
from .uot import (BarycenterResult, SinkhornParams, SinkhornState,
                  exact_kantorovich, kl_divergence, left_marginal,
                  signed_wasserstein, sinkhorn_unbalanced,
                  unbalanced_barycenter)

__all__ = [
    "GibbsKernel", "Geometry", "LabelPartition", "Mesh",
    "build_geodesic_costs", "gibbs_kernel", "grid_mesh",
    "make_label_partition",
    "MetricReport", "evaluate", "mse", "signed_emd", "signed_pr_auc",
    "GroundTruth", "MultiSubjectDataset", "SimConfig", "add_noise",
    "generate_leadfields", "generate_sources", "make_dataset",
    "MWEConfig", "MWESolution", "SignedSource", "solve_dirty",
    "solve_group_lasso", "solve_lasso", "solve_mtw", "solve_mwe",
    "solve_subproblem", "update_sigma",
    "BarycenterResult", "SinkhornParams", "SinkhornState",
    "exact_kantorovich", "kl_divergence", "left_marginal",
    "signed_wasserstein", "sinkhorn_unbalanced", "unbalanced_barycenter",
]
