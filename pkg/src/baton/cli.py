"""Command-line harness: ``baton run`` for one scenario, ``baton sweep`` for parameter studies.

Sweep seeds follow a counter scheme: repeat ``j`` of every axis value uses
seed ``SeedSequence([root, j]).generate_state(1)[0]``, so all values of an
axis see the same trajectories, noise and masks (common random numbers) and
any cell can be rerun alone with ``baton run --seed <seed>``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from baton import __version__, kernels
from baton.config import ScenarioConfig, load_config, override
from baton.errors import BatonError, InvalidConfig
from baton.experiment import csi_traces, run_scenario
from baton.matrices import parse_mask
from baton.metrics import summarize_runs
from baton.sim import TraceKind, default_links

SWEEP_AXES = ("cdc", "links", "shape", "feature_rate", "velocity", "predictors", "mask", "noise")
SWEEP_CSV_VERSION = 1


def sweep_seed(root: int, repeat: int) -> int:
    return int(np.random.SeedSequence([int(root), int(repeat)]).generate_state(1)[0])


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="TOML scenario file (defaults apply otherwise)")
    p.add_argument("--out", type=Path, default=Path("baton-out"), help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--cdc", type=float, help="communication duty cycle in (0, 1]")
    p.add_argument("--shape", help="trace shape: " + ", ".join(k.value for k in TraceKind))
    p.add_argument("--links", type=int, help="number of receivers in the default layout (1-4)")
    p.add_argument("--mask", help="uniform | burst:<seconds> | outage:<links>")
    p.add_argument("--tracker", choices=("inverse", "learned"))
    p.add_argument("--model", help="weights file for the learned tracker")
    p.add_argument("--predictors", help="pred1 | pred2 | pred3 | pred12 | pred13 | full")
    p.add_argument("--features", choices=("direct", "csi"))
    p.add_argument("--noise", type=float, help="PLCR noise std (m/s) for direct features")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="baton", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"baton {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario and write all artifacts")
    _add_common(run)
    run.add_argument("--dump-csi", action="store_true", help="also write the per-link CSI recordings")
    sweep = sub.add_parser("sweep", help="repeat scenarios across values of one axis")
    _add_common(sweep)
    sweep.add_argument("--sweep", required=True, metavar="AXIS=V1,V2,...",
                       help="axis is one of " + ", ".join(SWEEP_AXES))
    sweep.add_argument("--repeats", type=int, default=5)
    sweep.add_argument("--workers", type=int, default=1)
    return parser


def config_from_args(args) -> ScenarioConfig:
    config = load_config(args.config) if args.config else ScenarioConfig()
    return override(config, seed=args.seed, cdc=args.cdc, shape=args.shape, links=args.links,
                    mask=parse_mask(args.mask) if args.mask else None, tracker=args.tracker,
                    model_path=args.model, predictors=args.predictors, features=args.features, noise=args.noise)


def parse_sweep(text: str):
    axis, sep, values = text.partition("=")
    axis = axis.strip().lower()
    if not sep or axis not in SWEEP_AXES:
        raise InvalidConfig(f"--sweep wants AXIS=V1,V2,... with AXIS one of {', '.join(SWEEP_AXES)}")
    items = [v.strip() for v in values.split(",") if v.strip()]
    if not items:
        raise InvalidConfig("--sweep needs at least one value")
    convert = {"cdc": float, "links": int, "feature_rate": float, "velocity": float, "noise": float}.get(axis, str)
    try:
        return axis, [convert(v) for v in items]
    except ValueError:
        raise InvalidConfig(f"bad value in --sweep {text!r}") from None


def apply_axis(config: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    if axis == "links":
        return replace(config, links=tuple(default_links(value)))
    if axis == "velocity":
        return replace(config, speed=value)
    if axis == "mask":
        return replace(config, mask=parse_mask(value))
    return override(config, **{axis: value})


def _file_list(out: Path, names) -> dict:
    return {name: str(out / name) for name in names}


def cmd_run(args) -> int:
    config = config_from_args(args)
    started = time.perf_counter()
    run = run_scenario(config)
    elapsed = time.perf_counter() - started
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    run.truth.to_csv(out / "truth.csv")
    run.result.trace.to_csv(out / "estimate.csv")
    run.full.to_csv(out / "features_full.csv")
    run.raw.to_csv(out / "features_raw.csv")
    run.result.filled.to_csv(out / "features_filled.csv")
    run.report.to_json(out / "report.json")
    run.report.to_csv(out / "report.csv")
    names = ["truth.csv", "estimate.csv", "features_full.csv", "features_raw.csv", "features_filled.csv",
             "report.json", "report.csv"]
    if args.dump_csi:
        for n, trace in enumerate(csi_traces(config, run.truth, run.seeds["noise"])):
            name = f"csi_link{config.links[n].link_id}.bin"
            (out / name).write_bytes(trace.to_bytes())
            names.append(name)
    manifest = {
        "config": config.to_dict(),
        "seeds": run.seeds,
        "versions": _versions(),
        "outputs": _file_list(out, names + ["manifest.json"]),
        "timings": {"scenario_seconds": elapsed},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"median error {run.report.median:.3f} m, PLCR MSE {run.report.plcr_mse:.4f} (m/s)^2 -> {out}")
    return 0


def _sweep_cell(job):
    axis, value, repeat, seed, config = job
    run = run_scenario(replace(apply_axis(config, axis, value), seed=seed))
    return axis, value, repeat, seed, run.report


def cmd_sweep(args) -> int:
    config = config_from_args(args)
    axis, values = parse_sweep(args.sweep)
    if args.repeats < 1:
        raise InvalidConfig("--repeats must be at least 1")
    for v in values:
        apply_axis(config, axis, v)  # validate every value before any work
    jobs = [(axis, v, j, sweep_seed(config.seed, j), config) for v in values for j in range(args.repeats)]
    started = time.perf_counter()
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_cell, jobs))
    else:
        results = [_sweep_cell(job) for job in jobs]
    elapsed = time.perf_counter() - started
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(_sweep_rows(results))
    (out / "sweep_summary.csv").write_text(_sweep_summary(axis, values, results))
    manifest = {
        "config": config.to_dict(),
        "sweep": {"axis": axis, "values": values, "repeats": args.repeats,
                  "seeds": [sweep_seed(config.seed, j) for j in range(args.repeats)]},
        "versions": _versions(),
        "outputs": _file_list(out, ["sweep.csv", "sweep_summary.csv", "manifest.json"]),
        "timings": {"sweep_seconds": elapsed, "workers": args.workers},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(_sweep_summary(axis, values, results), end="")
    return 0


def _sweep_rows(results) -> str:
    buf = io.StringIO()
    buf.write(f"# baton.sweep v{SWEEP_CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["axis", "value", "repeat", "seed", "median_error", "mean_error", "plcr_mse"])
    for axis, value, repeat, seed, rep in results:
        w.writerow([axis, value, repeat, seed, repr(rep.median), repr(rep.mean), repr(rep.plcr_mse)])
    return buf.getvalue()


def _sweep_summary(axis, values, results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["axis", "value", "runs", "pooled_median_error", "median_of_run_means", "mean_plcr_mse"])
    for v in values:
        s = summarize_runs(r for a, val, _, _, r in results if val == v)
        w.writerow([axis, v, s["runs"], f"{s['pooled_median_error']:.6f}", f"{s['median_of_run_means']:.6f}",
                    f"{s['mean_plcr_mse']:.6f}"])
    return buf.getvalue()


def _versions() -> dict:
    import scipy

    return {"baton": __version__, "kernels": kernels.BACKEND, "numpy": np.__version__,
            "scipy": scipy.__version__, "python": platform.python_version()}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return cmd_run(args) if args.command == "run" else cmd_sweep(args)
    except BatonError as e:
        print(f"baton: error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
