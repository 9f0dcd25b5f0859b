"""Simultaneous tracking and predicting.

Rows of the raw PLCR matrix are completed one at a time.  Before row ``i`` is
written the tracker re-estimates the trace from rows ``0..i-1``; the trace's
last velocity feeds the model-based prediction for row ``i``, which is merged
with the carried observation and the cross-link prediction.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from baton import kernels
from baton.errors import InsufficientLinks, InvalidConfig, ScenarioTooShort
from baton.geometry import EPS_POS, LinkGeometry, link_arrays
from baton.matrices import FeatureMatrix, ReliabilityMatrix, observation_matrix, reliability_matrix
from baton.predict import EPS_DEN, MAX_RATIO, Predictors
from baton.track import TrackerConfig, make_tracker
from baton.trajectory import Trajectory

NOT_FILLED = -1


@dataclass(frozen=True)
class StapConfig:
    t_w: int = 10
    eps_den: float = EPS_DEN
    max_ratio: float = MAX_RATIO
    predictors: Predictors = Predictors.FULL
    model_in_pred2: bool = True

    def __post_init__(self):
        object.__setattr__(self, "predictors", Predictors.parse(
            self.predictors.value if isinstance(self.predictors, Predictors) else self.predictors))
        if self.eps_den <= 0:
            raise InvalidConfig("eps_den must be positive")
        if self.max_ratio <= 0:
            raise InvalidConfig("max_ratio must be positive")


@dataclass(frozen=True, eq=False)
class StapState:
    """Loop variables.  Rows ``< cursor`` of ``p`` are final; ``len(trace) == cursor - 1``."""
    p: FeatureMatrix
    p1: FeatureMatrix
    r: ReliabilityMatrix
    trace: Trajectory
    cursor: int
    cases: np.ndarray
    pred2: np.ndarray
    pred3: np.ndarray
    config: StapConfig = field(default_factory=StapConfig)


@dataclass(frozen=True, eq=False)
class StapResult:
    trace: Trajectory
    filled: FeatureMatrix
    cases: np.ndarray
    pred2: np.ndarray
    pred3: np.ndarray
    snapshots: tuple = ()

    @property
    def diagnostics(self) -> dict:
        return {"cases": self.cases, "pred2": self.pred2, "pred3": self.pred3, "snapshots": self.snapshots}


def _prefix(p: FeatureMatrix, rows: int) -> FeatureMatrix:
    return FeatureMatrix(p.values[:rows], p.mask[:rows], p.slot_duration, p.link_ids)


def _frozen_copy(a: np.ndarray) -> np.ndarray:
    a = a.copy()
    a.setflags(write=False)
    return a


def initial_state(p_raw: FeatureMatrix, links: Sequence[LinkGeometry], tracker,
                  config: StapConfig = StapConfig()) -> StapState:
    n_f = tracker.config.n_f
    t_slots = p_raw.slot_count
    if len(links) != p_raw.link_count:
        raise InvalidConfig(f"{len(links)} links for a {p_raw.link_count}-column matrix")
    if p_raw.link_count < 2:
        raise InsufficientLinks("2-D tracking needs at least two links")
    if t_slots <= n_f:
        raise ScenarioTooShort(f"{t_slots} slots do not exceed the {n_f}-slot bootstrap")
    p1 = observation_matrix(p_raw)
    # a prefix where fewer than two links have spoken yet holds still rather than failing
    boot = tracker.bootstrap(_prefix(p1, n_f), strict=False)
    values = p_raw.values.copy()
    values[:n_f] = p1.values[:n_f]
    cases = np.full(p_raw.values.shape, NOT_FILLED, dtype=np.int8)
    cases[:n_f][p_raw.mask[:n_f]] = kernels.CASE_OBSERVED
    nan = np.full(p_raw.values.shape, np.nan)
    return StapState(p_raw.with_values(values), p1, reliability_matrix(p_raw, config.t_w),
                     boot.prefix(n_f - 1), n_f, cases, nan, nan.copy(), config)


def stap_step(state: StapState, links: Sequence[LinkGeometry], tracker) -> StapState:
    """Fill row ``state.cursor`` and return the advanced state."""
    i = state.cursor
    p = state.p
    if i >= p.slot_count:
        raise InvalidConfig("every row is already filled")
    cfg = state.config
    trace = tracker.predict(_prefix(p, i), state.trace)
    pos = trace.positions
    v = (pos[-1] - pos[-2]) / trace.slot_duration if len(trace) >= 2 else np.zeros(2)
    tx, rx = link_arrays(links)
    A, st = kernels.fresnel_matrix(tx, rx, float(pos[-1, 0]), float(pos[-1, 1]), EPS_POS)
    pred3 = np.ascontiguousarray(A @ v if st == kernels.STATUS_OK else np.zeros(p.link_count))
    mask = np.ascontiguousarray(p.mask[i], dtype=np.uint8)
    obs = np.ascontiguousarray(np.where(p.mask[i], p.values[i], 0.0))
    p1_row = state.p1.values[i]
    p1_avail = np.ascontiguousarray(np.isfinite(p1_row), dtype=np.uint8)
    out, case, p2 = kernels.fill_row(obs, mask, np.ascontiguousarray(np.nan_to_num(p1_row)), p1_avail,
                                     np.ascontiguousarray(state.r.weights[i]), pred3,
                                     np.ascontiguousarray(p.values[i - 1]), bool(cfg.model_in_pred2),
                                     float(cfg.eps_den), float(cfg.max_ratio),
                                     cfg.predictors.kernel_mode)
    values = p.values.copy()
    values[i] = out
    cases = state.cases.copy()
    cases[i] = case
    pred2 = state.pred2.copy()
    pred2[i] = p2
    pred3_all = state.pred3.copy()
    pred3_all[i] = pred3
    return replace(state, p=p.with_values(values), trace=trace, cursor=i + 1,
                   cases=_frozen_copy(cases), pred2=_frozen_copy(pred2), pred3=_frozen_copy(pred3_all))


def stap_run(p_raw: FeatureMatrix, links: Sequence[LinkGeometry], tracker_config: TrackerConfig,
             config: Optional[StapConfig] = None, keep_snapshots: bool = False) -> StapResult:
    """Complete ``p_raw`` row by row while tracking; return the final trace and matrix."""
    config = config or StapConfig()
    tracker = make_tracker(links, tracker_config)
    state = initial_state(p_raw, links, tracker, config)
    snapshots = []
    while state.cursor < p_raw.slot_count:
        state = stap_step(state, links, tracker)
        if keep_snapshots:
            snapshots.append(state.trace)
    final = tracker.predict(state.p, state.trace)
    return StapResult(final, state.p, state.cases, state.pred2, state.pred3, tuple(snapshots))
