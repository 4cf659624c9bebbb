# -*- coding: utf-8 -*-
"""
Command line entry points.

``run`` executes a benchmark spec locally (or submits it to a running
service with ``--server``), ``report`` prints per-metric winners from a
finished run directory, and ``serve`` starts the HTTP service.
"""

import argparse
import json
import sys
import time

from .schemas import ExperimentSpec


def _load_spec(path, output_dir=None):
    with open(path) as f:
        payload = json.load(f)
    spec = ExperimentSpec.model_validate(payload)
    if output_dir:
        spec.output_dir = output_dir
    if not spec.output_dir:
        raise SystemExit("an output directory is required "
                         "(spec.output_dir or --output-dir)")
    return spec


def _cmd_run(args):
    spec = _load_spec(args.spec, args.output_dir)
    if args.server:
        return _run_remote(spec, args)
    from . import experiments

    def progress(done, total):
        if args.quiet:
            return
        sys.stderr.write("\r%d/%d cells" % (done, total))
        sys.stderr.flush()

    report = experiments.run_experiment(spec, threads=args.threads,
                                        resume=args.resume, progress=progress)
    if not args.quiet:
        sys.stderr.write("\n")
    errors = sum(1 for r in report.results if r.status != "ok")
    print("completed %d cells (%d errors); reports in %s"
          % (len(report.results), errors, report.output_dir))
    return 0


def _run_remote(spec, args):
    import httpx

    base = args.server.rstrip("/")
    with httpx.Client(base_url=base, timeout=60.0) as client:
        resp = client.post("/experiments", json=spec.model_dump(),
                           params={"threads": args.threads})
        resp.raise_for_status()
        job = resp.json()
        job_id = job["job_id"]
        print("submitted job %s" % job_id)
        while True:
            status = client.get("/experiments/%s" % job_id).json()
            if not args.quiet:
                sys.stderr.write("\r%s %d/%d" % (status["state"],
                                                 status["completed_cells"],
                                                 status["total_cells"]))
                sys.stderr.flush()
            if status["state"] in ("done", "failed"):
                break
            time.sleep(1.0)
        if not args.quiet:
            sys.stderr.write("\n")
        if status["state"] == "failed":
            print("job failed: %s" % status.get("error"))
            return 1
        print("job done; reports in %s" % status["output_dir"])
        return 0


def _cmd_report(args):
    from . import experiments

    report = experiments.load_report(args.results_dir)
    rows = report.best(args.metric)
    header = ("model", "subjects", args.metric, "params")
    print("%-12s %-8s %-12s %s" % header)
    for row in rows:
        print("%-12s %-8d %-12.6g %s" % (row.model, row.n_subjects, row.value,
                                         json.dumps(row.params, sort_keys=True)))
    if args.csv:
        from .experiments import _write_best_csv
        _write_best_csv(args.csv, rows)
        print("wrote %s" % args.csv)
    return 0


def _cmd_serve(args):
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="otmtr",
        description="Multi-task sparse regression benchmarks with "
                    "optimal-transport coupling")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a benchmark spec (JSON)")
    p_run.add_argument("spec", help="path to the experiment spec JSON")
    p_run.add_argument("--output-dir", default=None,
                       help="override spec.output_dir")
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--resume", action="store_true",
                       help="reuse completed cells found in the output dir")
    p_run.add_argument("--server", default=None,
                       help="submit to a running service instead of "
                            "executing locally (URL)")
    p_run.add_argument("--quiet", action="store_true")
    p_run.set_defaults(func=_cmd_run)

    p_rep = sub.add_parser("report", help="print best scores of a finished run")
    p_rep.add_argument("results_dir")
    p_rep.add_argument("--metric", choices=("auc", "emd", "mse"), default="auc")
    p_rep.add_argument("--csv", default=None, help="also write the table as CSV")
    p_rep.set_defaults(func=_cmd_report)

    p_srv = sub.add_parser("serve", help="start the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.set_defaults(func=_cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
