"""6-trial dry run of the acceptance benchmark through the engine."""
import time

from otmtr.experiments import run_experiment
from otmtr.schemas import ExperimentSpec, MeshSpec, ModelSpec, SimSpec

spec = ExperimentSpec(
    seed=20260810,
    trials=6,
    subject_counts=[2, 8],
    leadfield_mode="individual",
    sim=SimSpec(n_sensors=50, n_sources=200, q_active=3, overlap_fraction=0.5,
                snr=4.0, leadfield_smoothness_cm=0.7,
                leadfield_mix_angle_deg=30.0, n_labels=10, labels_seed=11,
                mesh=MeshSpec(rows=10, cols=20, spacing_cm=1.0)),
    models=[
        ModelSpec(name="lasso", lambda_fracs=[0.2, 0.3, 0.4, 0.55, 0.7]),
        ModelSpec(name="group_lasso", lambda_fracs=[0.2, 0.3, 0.4, 0.55, 0.7]),
        ModelSpec(name="mwe", lambda_fracs=[0.28, 0.45, 0.6, 0.75, 0.9],
                  coupling_fracs=[0.02, 0.3, 1.0, 2.5]),
    ],
    output_dir="/tmp/dryrun_acc")

t0 = time.time()
report = run_experiment(spec, threads=2)
print("elapsed %.1f s, errors: %d" % (
    time.time() - t0, sum(1 for r in report.results if r.status != "ok")))
for r in report.results:
    if r.status != "ok":
        print("  ERR", r.model, r.params, r.error[:90])

for metric in ("auc", "emd"):
    for row in report.best(metric):
        print("best %s: %-12s S=%d -> %.4f  %s"
              % (metric, row.model, row.n_subjects, row.value, row.params))
