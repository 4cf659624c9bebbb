import json

import pytest

from otmtr import cli


def _spec_payload(output_dir):
    return {
        "seed": 9, "trials": 1, "subject_counts": [2],
        "leadfield_mode": "individual",
        "sim": {"n_sensors": 12, "n_sources": 24, "q_active": 2,
                "n_labels": 3, "labels_seed": 5,
                "mesh": {"rows": 4, "cols": 6}},
        "models": [{"name": "lasso", "lambda_fracs": [0.3, 0.6]}],
        "output_dir": str(output_dir),
    }


def test_run_and_report(tmp_path, capsys):
    spec_path = tmp_path / "spec.json"
    out_dir = tmp_path / "results"
    spec_path.write_text(json.dumps(_spec_payload(out_dir)))

    assert cli.main(["run", str(spec_path), "--quiet"]) == 0
    captured = capsys.readouterr()
    assert "completed 2 cells" in captured.out
    assert (out_dir / "aggregate.csv").exists()

    assert cli.main(["report", str(out_dir), "--metric", "emd"]) == 0
    captured = capsys.readouterr()
    assert "lasso" in captured.out

    csv_out = tmp_path / "best.csv"
    assert cli.main(["report", str(out_dir), "--metric", "auc",
                     "--csv", str(csv_out)]) == 0
    assert csv_out.exists()


def test_run_with_output_dir_override(tmp_path, capsys):
    payload = _spec_payload(tmp_path / "ignored")
    payload.pop("output_dir")
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(payload))
    out = tmp_path / "override"
    assert cli.main(["run", str(spec_path), "--output-dir", str(out),
                     "--quiet", "--resume"]) == 0
    assert (out / "manifest.json").exists()


def test_run_requires_output_dir(tmp_path):
    payload = _spec_payload(tmp_path / "x")
    payload.pop("output_dir")
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(payload))
    with pytest.raises(SystemExit):
        cli.main(["run", str(spec_path)])


def test_resume_reuses_cells(tmp_path, capsys):
    spec_path = tmp_path / "spec.json"
    out_dir = tmp_path / "results"
    spec_path.write_text(json.dumps(_spec_payload(out_dir)))
    assert cli.main(["run", str(spec_path), "--quiet"]) == 0
    capsys.readouterr()
    first = (out_dir / "cells").glob("*.json")
    stamps = {p.name: p.stat().st_mtime_ns for p in first}
    assert cli.main(["run", str(spec_path), "--quiet", "--resume"]) == 0
    for p in (out_dir / "cells").glob("*.json"):
        assert p.stat().st_mtime_ns == stamps[p.name]
