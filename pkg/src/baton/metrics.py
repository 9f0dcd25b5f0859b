"""Tracking-error and PLCR-accuracy metrics, and the per-run report."""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from baton.errors import InvalidBucket, LengthMismatch, ShapeMismatch
from baton.matrices import FeatureMatrix
from baton.trajectory import Trajectory

CDF_STEP = 0.05
REPORT_VERSION = 1


class MseScope(str, enum.Enum):
    MISSING = "missing"
    ALL = "all"


@dataclass(frozen=True, eq=False)
class TrackingErrors:
    errors: np.ndarray
    median: float
    mean: float
    max: float
    cdf_thresholds: np.ndarray
    cdf: np.ndarray


def tracking_errors(estimate: Trajectory, truth: Trajectory, cdf_step: float = CDF_STEP) -> TrackingErrors:
    """Per-slot Euclidean error with summaries and an empirical CDF on a ``cdf_step`` grid."""
    if len(estimate) != len(truth):
        raise LengthMismatch(f"estimate has {len(estimate)} slots, truth has {len(truth)}")
    if not math.isclose(estimate.slot_duration, truth.slot_duration):
        raise LengthMismatch("estimate and truth use different slot durations")
    e = np.hypot(*(estimate.positions - truth.positions).T)
    if e.size == 0:
        return TrackingErrors(e, math.nan, math.nan, math.nan, np.zeros(0), np.zeros(0))
    top = max(cdf_step, math.ceil(float(e.max()) / cdf_step - 1e-9) * cdf_step)
    grid = np.round(np.arange(0.0, top + cdf_step / 2, cdf_step), 10)
    cdf = np.searchsorted(np.sort(e), grid, side="right") / e.size
    return TrackingErrors(e, float(np.median(e)), float(e.mean()), float(e.max()), grid, cdf)


def _scope_mask(raw_mask: np.ndarray, scope) -> np.ndarray:
    scope = MseScope(scope)
    return ~raw_mask if scope is MseScope.MISSING else np.ones_like(raw_mask, dtype=bool)


def plcr_mse(filled: FeatureMatrix, truth: FeatureMatrix, scope=MseScope.MISSING,
             raw_mask: Optional[np.ndarray] = None) -> float:
    """Mean squared PLCR error in (m/s)^2 over the chosen cells.

    The missing-cells scope uses ``raw_mask`` when given, otherwise the mask
    carried by ``filled``.  Cells left unknown (NaN) are skipped.
    """
    if filled.values.shape != truth.values.shape:
        raise ShapeMismatch(f"filled {filled.values.shape} vs truth {truth.values.shape}")
    mask = filled.mask if raw_mask is None else np.asarray(raw_mask, dtype=bool)
    sel = _scope_mask(mask, scope) & np.isfinite(filled.values) & np.isfinite(truth.values)
    if not sel.any():
        return math.nan
    return float(np.mean((filled.values[sel] - truth.values[sel]) ** 2))


def plcr_mse_per_link(filled: FeatureMatrix, truth: FeatureMatrix, scope=MseScope.MISSING,
                      raw_mask: Optional[np.ndarray] = None) -> np.ndarray:
    if filled.values.shape != truth.values.shape:
        raise ShapeMismatch(f"filled {filled.values.shape} vs truth {truth.values.shape}")
    mask = filled.mask if raw_mask is None else np.asarray(raw_mask, dtype=bool)
    sel = _scope_mask(mask, scope) & np.isfinite(filled.values) & np.isfinite(truth.values)
    sq = np.where(sel, (np.nan_to_num(filled.values) - np.nan_to_num(truth.values)) ** 2, 0.0)
    counts = sel.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, sq.sum(axis=0) / np.maximum(counts, 1), np.nan)


def error_over_time(errors, slot_duration: float, bucket: float = 0.5) -> np.ndarray:
    """Means over consecutive non-overlapping buckets; a trailing partial bucket is dropped."""
    ratio = bucket / slot_duration
    per = int(round(ratio))
    if per < 1 or not math.isclose(ratio, per, rel_tol=0, abs_tol=1e-9):
        raise InvalidBucket(f"bucket {bucket}s is not a whole number of {slot_duration}s slots")
    e = np.asarray(errors, dtype=np.float64)
    n = e.size // per
    return e[:n * per].reshape(n, per).mean(axis=1)


def peak_then_decline(series, slot_bucket: float = 0.5, peak_within: float = 3.0, tail: float = 2.0) -> bool:
    """Whether the series peaks early and its tail mean stays below that early peak."""
    s = np.asarray(series, dtype=np.float64)
    head = int(round(peak_within / slot_bucket))
    last = int(round(tail / slot_bucket))
    if s.size < head + 1 or s.size < last:
        return False
    early = s[:head].max()
    return bool(int(np.argmax(s)) < head and s[-last:].mean() < early)


def _clean(x):
    """JSON-safe plain Python value (NaN becomes null)."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if math.isnan(x) else x
    return x


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Everything measured on one run.  Contains no timings, so reruns serialize identically."""
    errors: np.ndarray
    slot_duration: float
    median: float
    mean: float
    max: float
    cdf_thresholds: np.ndarray
    cdf: np.ndarray
    plcr_mse: float
    plcr_mse_all: float
    plcr_mse_per_link: np.ndarray
    bucket_means: np.ndarray
    case_counts: dict = field(default_factory=dict)
    labels: dict = field(default_factory=dict)

    @classmethod
    def build(cls, estimate: Trajectory, truth: Trajectory, filled: FeatureMatrix, truth_features: FeatureMatrix,
              raw_mask: np.ndarray, cases: Optional[np.ndarray] = None, labels: Optional[dict] = None,
              bucket: float = 0.5) -> "EvalReport":
        te = tracking_errors(estimate, truth)
        counts = {}
        if cases is not None:
            names = {0: "observed", 1: "crosslink", 2: "allmissing", -1: "bootstrap"}
            counts = {names[int(c)]: int((cases == c).sum()) for c in (0, 1, 2, -1)}
        return cls(te.errors, truth.slot_duration, te.median, te.mean, te.max, te.cdf_thresholds, te.cdf,
                   plcr_mse(filled, truth_features, MseScope.MISSING, raw_mask),
                   plcr_mse(filled, truth_features, MseScope.ALL, raw_mask),
                   plcr_mse_per_link(filled, truth_features, MseScope.MISSING, raw_mask),
                   error_over_time(te.errors, truth.slot_duration, bucket), counts, dict(labels or {}))

    def to_dict(self) -> dict:
        return _clean({
            "version": REPORT_VERSION,
            "labels": self.labels,
            "slot_duration": self.slot_duration,
            "median_error": self.median,
            "mean_error": self.mean,
            "max_error": self.max,
            "plcr_mse_missing": self.plcr_mse,
            "plcr_mse_all": self.plcr_mse_all,
            "plcr_mse_per_link": self.plcr_mse_per_link,
            "case_counts": self.case_counts,
            "bucket_means": self.bucket_means,
            "cdf": {"thresholds": self.cdf_thresholds, "fraction": self.cdf},
            "errors": self.errors,
        })

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_csv(self, path=None) -> str:
        """Tidy table, one row per slot."""
        buf = io.StringIO()
        buf.write(f"# baton.eval_report v{REPORT_VERSION}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["slot", "time", "error"])
        for k, e in enumerate(self.errors):
            w.writerow([k, repr(round(k * self.slot_duration, 12)), repr(float(e))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def summarize_runs(reports) -> dict:
    """Pooled per-slot median and the median of per-run means over many reports."""
    reports = list(reports)
    if not reports:
        return {"runs": 0}
    pooled = np.concatenate([r.errors for r in reports])
    mse = np.array([r.plcr_mse for r in reports], dtype=np.float64)
    mse = mse[np.isfinite(mse)]
    return {
        "runs": len(reports),
        "pooled_median_error": float(np.median(pooled)),
        "median_of_run_means": float(np.median([r.mean for r in reports])),
        "mean_plcr_mse": float(mse.mean()) if mse.size else math.nan,
    }
