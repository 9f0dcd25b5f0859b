"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (or ``python
tests/test_acceptance.py``); the verdict lines are repeated in the terminal
summary.  The statistical criteria share one cached 20-seed x 6-shape suite.
"""
import math
import sys
import time
from functools import lru_cache

import numpy as np
import pytest

from baton import csi
from baton.config import ScenarioConfig
from baton.errors import DegenerateGeometry, TooShort
from baton.experiment import run_scenario
from baton.geometry import KinematicState, LinkGeometry, forward_plcr, fresnel_coefficients
from baton.matrices import (Burst, FeatureMatrix, LinkOutage, apply_cdc_mask, observation_matrix,
                            reliability_weight)
from baton.metrics import peak_then_decline
from baton.predict import Case, PredictionBundle, integrate, pred2_proportionate, pred3_model_based
from baton.sim import NAMED_SHAPES, default_links
from baton.stap import stap_run
from baton.track import TrackerConfig
from baton.trajectory import Trajectory

SEEDS = range(20)
RESULTS = []


def verdict(number, title, ok, detail, elapsed=None):
    timing = f" [{elapsed:.1f}s]" if elapsed is not None else ""
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}{timing}"
    RESULTS.append(line)
    print(line)
    return ok


@lru_cache(maxsize=None)
def suite(cdc=0.2, predictors="full", mask="uniform"):
    reports = []
    for shape in NAMED_SHAPES:
        for seed in SEEDS:
            config = ScenarioConfig(shape=shape, seed=seed, cdc=cdc, predictors=predictors, mask=mask)
            reports.append(run_scenario(config).report)
    return tuple(reports)


def pooled_median(reports):
    return float(np.median(np.concatenate([r.errors for r in reports])))


# ----------------------------------------------------------------- 1

def _equation_examples():
    apex = LinkGeometry((-1.0, 0.0), (1.0, 0.0))
    rel = lambda a, b: math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)
    checks = {
        "w(0)=1": reliability_weight(0, 10) == 1.0,
        "w(T_w/2)=0.25": rel(reliability_weight(5, 10), 0.25),
        "w(T_w)=0": reliability_weight(10, 10) == 0.0,
    }
    col = np.array([[1.0], [np.nan], [np.nan], [2.0], [np.nan]])
    checks["carry forward"] = observation_matrix(FeatureMatrix(col, np.isfinite(col))).values[:, 0].tolist() == [
        1.0, 1.0, 1.0, 2.0, 2.0]
    empty = np.full((3, 1), np.nan)
    checks["never observed stays unavailable"] = not observation_matrix(
        FeatureMatrix(empty, np.zeros((3, 1), bool))).available.any()

    def two(r1, r2):
        v = np.array([r1, r2], dtype=float)
        return FeatureMatrix(v, np.isfinite(v))

    checks["P2=3"] = rel(pred2_proportionate(two([2.0, 4.0], [np.nan, 6.0]), 1, 0), 3.0)
    checks["P2 absent on missing row"] = pred2_proportionate(two([2.0, 4.0], [np.nan, np.nan]), 1, 0) is None
    checks["P2 denominator guard"] = pred2_proportionate(two([2.0, 0.01], [np.nan, 6.0]), 1, 0) is None
    ax, ay = fresnel_coefficients(apex, (0.0, 1.0))
    checks["a=(0, sqrt2)"] = abs(ax) < 1e-12 and rel(ay, math.sqrt(2))
    try:
        fresnel_coefficients(apex, (-1.0, 0.0))
        checks["endpoint degenerate"] = False
    except DegenerateGeometry:
        checks["endpoint degenerate"] = True
    checks["tangential r=0"] = abs(forward_plcr(apex, KinematicState((0.0, 1.0), (1.0, 0.0)))) < 1e-12
    checks["normal r=sqrt2"] = rel(forward_plcr(apex, KinematicState((0.0, 1.0), (0.0, 1.0))), math.sqrt(2))
    checks["stationary r=0"] = forward_plcr(apex, KinematicState((0.3, 2.0), (0.0, 0.0))) == 0.0
    checks["pred3 tangential"] = abs(pred3_model_based(Trajectory([[-0.1, 1.0], [0.0, 1.0]]), apex)) < 1e-12
    checks["pred3 stationary"] = pred3_model_based(Trajectory([[0.2, 0.2], [0.2, 0.2]]), apex) == 0.0
    try:
        pred3_model_based(Trajectory([[0.0, 0.0]]), apex)
        checks["pred3 too short"] = False
    except TooShort:
        checks["pred3 too short"] = True
    checks["case i"] = integrate(PredictionBundle(1.3, 0.0, 1.0, Case.OBSERVED)) == 1.3
    checks["case ii"] = rel(integrate(PredictionBundle(1.0, 0.0, 0.25, Case.CROSSLINK, pred2=2.0)), 1.75)
    checks["case iii"] = rel(integrate(PredictionBundle(5.0, 0.7, 0.0, Case.ALLMISSING)), 0.7)
    return checks


def test_criterion_01_equation_examples():
    t0 = time.perf_counter()
    checks = _equation_examples()
    failed = [k for k, v in checks.items() if not v]
    elapsed = time.perf_counter() - t0
    ok = not failed and elapsed < 5
    verdict(1, "equation-level examples", ok, f"{len(checks) - len(failed)}/{len(checks)} pass"
            + (f", failing: {failed}" if failed else ""), elapsed)
    assert ok


# ----------------------------------------------------------------- 2

def test_criterion_02_ratio_invariance():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    links = default_links(4)
    worst, done = 0.0, 0
    while done < 1000:
        pos = tuple(rng.uniform(-2.3, 2.3, 2))
        v = rng.uniform(-2, 2, 2)
        k = rng.uniform(0.25, 4.0)
        a, b = rng.choice(4, 2, replace=False)
        la, lb = links[a], links[b]
        ra1 = forward_plcr(la, KinematicState(pos, tuple(v)))
        rb1 = forward_plcr(lb, KinematicState(pos, tuple(v)))
        # ratios near 0/0 are ill-conditioned in floating point, not a model property
        if min(abs(ra1), abs(rb1)) < 0.05 * np.hypot(*v):
            continue
        ra2 = forward_plcr(la, KinematicState(pos, tuple(k * v)))
        rb2 = forward_plcr(lb, KinematicState(pos, tuple(k * v)))
        worst = max(worst, abs(ra2 / rb2 - ra1 / rb1) / abs(ra1 / rb1))
        done += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 5
    verdict(2, "cross-link ratio invariance", ok, f"1000 cases, worst relative deviation {worst:.2e}", elapsed)
    assert ok


# ----------------------------------------------------------------- 3

def test_criterion_03_csi_round_trip():
    t0 = time.perf_counter()
    quiet = csi.NoiseConfig(kappa_step=0.0)
    t = np.arange(2000) / csi.SAMPLE_RATE
    worst_bins = 0.0
    for r in (-1.8, -1.0, -0.4, 0.4, 1.0, 1.8):
        series = csi.extract_plcr(csi.synthesize_from_path_length(5.0 + r * t, quiet))
        if not series.valid.all():
            worst_bins = math.inf
            break
        worst_bins = max(worst_bins, float(np.max(np.abs(series.values - r))) / series.plcr_resolution)
    L = 5.0 + 0.9 * t
    kappa = np.cumsum(np.random.default_rng(3).normal(0, 0.3, L.size))
    drift = csi.extract_plcr(csi.synthesize_from_path_length(L, quiet, kappa=kappa))
    clean = csi.extract_plcr(csi.synthesize_from_path_length(L, quiet, kappa=np.zeros_like(L)))
    bit_exact = drift.values.tobytes() == clean.values.tobytes()
    elapsed = time.perf_counter() - t0
    ok = worst_bins <= 1.0 and bit_exact and elapsed < 30
    verdict(3, "CSI round trip", ok, f"worst error {worst_bins:.2f} bins, kappa cancellation "
            f"{'bit-exact' if bit_exact else 'NOT bit-exact'}", elapsed)
    assert ok


# ----------------------------------------------------------------- 4

def test_criterion_04_oracle_tracking():
    t0 = time.perf_counter()
    medians = {s.value: run_scenario(ScenarioConfig(shape=s, cdc=1.0, noise=0.0)).report.median
               for s in NAMED_SHAPES}
    elapsed = time.perf_counter() - t0
    ok = max(medians.values()) < 0.05 and elapsed < 30
    verdict(4, "oracle tracking", ok, ", ".join(f"{k} {v:.4f} m" for k, v in medians.items()), elapsed)
    assert ok


# ----------------------------------------------------------------- 5

@pytest.mark.slow
def test_criterion_05_deficiency_sweep():
    t0 = time.perf_counter()
    levels = (0.1, 0.2, 0.3, 0.4)
    med = [pooled_median(suite(cdc=c)) for c in levels]
    inversions = sum(med[j] > med[i] for i in range(4) for j in range(i + 1, 4))
    elapsed = time.perf_counter() - t0
    ok = med[1] <= 0.50 and inversions <= 1 and elapsed < 300
    verdict(5, "STAP under deficiency", ok, ", ".join(f"CDC {c:.0%} {m:.3f} m" for c, m in zip(levels, med))
            + f"; {inversions} inversion(s)", elapsed)
    assert ok


# ----------------------------------------------------------------- 6

@pytest.mark.slow
def test_criterion_06_predictor_ablation():
    t0 = time.perf_counter()
    mse = {mode: float(np.mean([r.plcr_mse for r in suite(predictors=mode)]))
           for mode in ("full", "pred1", "pred2", "pred3")}
    elapsed = time.perf_counter() - t0
    ok = all(mse["full"] < mse[m] for m in ("pred1", "pred2", "pred3")) and elapsed < 300
    verdict(6, "predictor ablation", ok, ", ".join(f"{k} {v:.4f}" for k, v in mse.items()) + " (m/s)^2", elapsed)
    assert ok


# ----------------------------------------------------------------- 7

@pytest.mark.slow
def test_criterion_07_self_correction():
    t0 = time.perf_counter()
    reports = suite()
    frac = float(np.mean([peak_then_decline(r.bucket_means) for r in reports]))
    curve = np.mean([r.bucket_means for r in reports], axis=0)
    elapsed = time.perf_counter() - t0
    ok = frac >= 0.8
    verdict(7, "self-correction", ok, f"{frac:.0%} of {len(reports)} runs peak within 3 s and decline; "
            f"mean curve peaks at {0.5 * (int(np.argmax(curve)) + 1):.1f} s", elapsed)
    assert ok


# ----------------------------------------------------------------- 8

def test_criterion_08_causality_and_determinism():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    links = default_links(4)
    run = run_scenario(ScenarioConfig(shape="tripleturn", seed=4))
    cfg = TrackerConfig(initial_position=tuple(run.truth.positions[0]))
    base = stap_run(run.raw, links, cfg, keep_snapshots=True)
    causal = True
    for k in (11, 25, 40, 63, 79):
        vals, mask = run.raw.values.copy(), run.raw.mask.copy()
        mask[k:] = rng.random(mask[k:].shape) < 0.5
        vals[k:] = np.where(mask[k:], rng.normal(0, 1.5, vals[k:].shape), np.nan)
        other = stap_run(FeatureMatrix(vals, mask), links, cfg, keep_snapshots=True)
        causal &= np.array_equal(base.filled.values[:k], other.filled.values[:k], equal_nan=True)
        causal &= all(np.array_equal(a.positions, b.positions)
                      for a, b in zip(base.snapshots, other.snapshots) if len(a) <= k)
    config = ScenarioConfig(shape="straight", cdc=0.2, seed=7)
    a, b = run_scenario(config).report, run_scenario(config).report
    deterministic = a.to_json() == b.to_json() and a.to_csv() == b.to_csv()
    elapsed = time.perf_counter() - t0
    ok = causal and deterministic and elapsed < 60
    verdict(8, "causality and determinism", ok, f"past unchanged under future edits: {causal}; "
            f"byte-identical reruns: {deterministic}", elapsed)
    assert ok


# ----------------------------------------------------------------- 9

@pytest.mark.slow
def test_criterion_09_degradation_structure():
    t0 = time.perf_counter()
    burst = [pooled_median(suite(mask=f"burst:{s}")) for s in (1, 2, 3)]
    outage = [pooled_median(suite(mask=f"outage:{k}")) for k in (1, 2)]
    elapsed = time.perf_counter() - t0
    ok = burst[0] < burst[1] < burst[2] and outage[0] < outage[1] and elapsed < 300
    verdict(9, "degradation structure", ok, "burst 1/2/3 s " + "/".join(f"{m:.3f}" for m in burst)
            + " m, outage 1/2 links " + "/".join(f"{m:.3f}" for m in outage) + " m", elapsed)
    assert ok


# ----------------------------------------------------------------- 10

def test_criterion_10_throughput():
    config = ScenarioConfig(shape="eightshape", seed=1)
    run_scenario(config)  # warm caches
    t0 = time.perf_counter()
    run_scenario(config)
    per_second = (time.perf_counter() - t0) / config.duration
    verdict(10, "throughput (non-blocking)", per_second < 1.0,
            f"{per_second * 1e3:.1f} ms of processing per second of 4-link data")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
