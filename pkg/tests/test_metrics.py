import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from baton.errors import InvalidBucket, LengthMismatch, ShapeMismatch
from baton.matrices import FeatureMatrix
from baton.metrics import (EvalReport, MseScope, error_over_time, peak_then_decline, plcr_mse, plcr_mse_per_link,
                           summarize_runs, tracking_errors)
from baton.trajectory import Trajectory


def _traj(n=20, offset=(0.0, 0.0)):
    pos = np.column_stack([np.linspace(0, 1, n), np.zeros(n)]) + offset
    return Trajectory(pos)


def test_identical_traces_have_zero_error():
    te = tracking_errors(_traj(), _traj())
    assert te.median == 0.0 and not te.errors.any()
    assert te.cdf[0] == 1.0


def test_constant_offset_median():
    assert tracking_errors(_traj(offset=(0.0, 0.3)), _traj()).median == pytest.approx(0.3)


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        tracking_errors(_traj(5), _traj(6))


@given(st.lists(st.floats(0, 3), min_size=1, max_size=40))
def test_cdf_monotone_and_reaches_one(offsets):
    truth = Trajectory(np.zeros((len(offsets), 2)))
    est = Trajectory(np.column_stack([offsets, np.zeros(len(offsets))]))
    te = tracking_errors(est, truth)
    assert np.all(np.diff(te.cdf) >= 0) and te.cdf[-1] == 1.0


def test_mse_examples():
    truth = FeatureMatrix.complete(np.arange(12.0).reshape(6, 2))
    mask = np.ones((6, 2), bool)
    mask[3, 1] = False
    filled = truth.with_values(truth.values)
    assert plcr_mse(filled, truth, raw_mask=mask) == 0.0
    off = truth.values.copy()
    off[3, 1] += 0.5
    assert plcr_mse(truth.with_values(off), truth, MseScope.MISSING, mask) == 0.25
    assert plcr_mse(truth.with_values(off), truth, MseScope.ALL, mask) == pytest.approx(0.25 / 12)
    assert plcr_mse_per_link(truth.with_values(off), truth, raw_mask=mask)[1] == 0.25


def test_mse_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        plcr_mse(FeatureMatrix.complete(np.zeros((3, 2))), FeatureMatrix.complete(np.zeros((3, 3))))


def test_buckets():
    assert error_over_time(np.full(40, 0.2), 0.1).tolist() == [0.2] * 8
    series = error_over_time(np.arange(10.0), 0.1, 0.5)
    assert series.tolist() == [2.0, 7.0]
    with pytest.raises(InvalidBucket):
        error_over_time(np.ones(10), 0.1, 0.25)


def test_peak_then_decline():
    rising_then_falling = [0.1, 0.3, 0.5, 0.4, 0.3, 0.2] + [0.2] * 10
    assert peak_then_decline(rising_then_falling)
    assert not peak_then_decline(np.linspace(0, 1, 16))


def _report():
    truth = _traj(20)
    est = _traj(20, (0.1, 0.0))
    full = FeatureMatrix.complete(np.ones((20, 2)))
    mask = np.random.default_rng(0).random((20, 2)) < 0.5
    return EvalReport.build(est, truth, full, full, mask, np.zeros((20, 2), np.int8), {"shape": "test"})


def test_report_serialization_is_stable(tmp_path):
    a, b = _report(), _report()
    assert a.to_json() == b.to_json()
    d = json.loads(a.to_json(tmp_path / "r.json"))
    assert d["median_error"] == pytest.approx(0.1) and d["case_counts"]["observed"] == 40
    assert a.to_csv().splitlines()[0] == "# baton.eval_report v1"


def test_summary():
    s = summarize_runs([_report(), _report()])
    assert s["runs"] == 2 and s["pooled_median_error"] == pytest.approx(0.1)
    assert summarize_runs([]) == {"runs": 0}
