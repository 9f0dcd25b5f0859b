"""Trackers turning a (partially reconstructed) PLCR matrix prefix into positions.

The default tracker inverts the linear forward model slot by slot and
integrates the velocities from a known start.  Each call re-solves a trailing
refinement window from a frozen anchor, then nudges that window by a small
position offset fitted to the raw observations, which lets early errors shrink
as more measurements arrive.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from baton import kernels
from baton.errors import (DegenerateGeometry, InsufficientLinks, InvalidConfig, LengthMismatch,
                          SingularSystem)
from baton.geometry import EPS_POS, V_MAX, LinkGeometry, link_arrays
from baton.matrices import FeatureMatrix
from baton.trajectory import Trajectory, diff_velocities  # noqa: F401  (re-exported)


class TrackerKind(str, enum.Enum):
    INVERSE = "inverse"
    LEARNED = "learned"

    @classmethod
    def parse(cls, name) -> "TrackerKind":
        if isinstance(name, cls):
            return name
        aliases = {"modelinversion": "inverse", "learnedregressor": "learned"}
        key = str(name).strip().lower().replace("_", "")
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise InvalidConfig(f"unknown tracker {name!r}; choose inverse or learned") from None


@dataclass(frozen=True)
class TrackerConfig:
    """Tracker settings.

    ``initial_position`` is the known start.  Alternatively ``prior_region``
    ``(xmin, xmax, ymin, ymax)`` may be given, in which case the start is its
    centre.  ``filled_weight`` is the least-squares weight of a predicted cell
    relative to a measured one.  ``correction_*`` control the offset fit that pulls the refinement
    window toward positions consistent with the raw observations; a gain of 0
    disables it.
    """
    kind: TrackerKind = TrackerKind.INVERSE
    initial_position: Optional[tuple[float, float]] = None
    prior_region: Optional[tuple[float, float, float, float]] = None
    regularization: float = 1e-3
    n_f: int = 10
    refine_window: int = 10
    v_max: float = V_MAX
    max_cond: float = 1e8
    fixed_point_iters: int = 4
    filled_weight: float = 1.0
    correction_window: int = 20
    correction_gain: float = 0.5
    correction_prior: float = 5.0
    correction_max_step: float = 0.1
    correction_iters: int = 3
    model: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", TrackerKind.parse(self.kind))
        if self.n_f < 2:
            raise InvalidConfig("n_f must be at least 2")
        if self.refine_window < 0 or self.correction_window < 0:
            raise InvalidConfig("window lengths must be non-negative")
        if self.regularization < 0:
            raise InvalidConfig("regularization must be non-negative")
        if not 0.0 < self.filled_weight <= 1.0:
            raise InvalidConfig("filled_weight must lie in (0, 1]")
        if self.v_max <= 0:
            raise InvalidConfig("v_max must be positive")
        if not 0.0 <= self.correction_gain <= 1.0:
            raise InvalidConfig("correction_gain must lie in [0, 1]")
        if self.initial_position is None and self.prior_region is None:
            raise InvalidConfig("give an initial position or a prior region")
        if self.initial_position is not None:
            object.__setattr__(self, "initial_position", tuple(float(c) for c in self.initial_position))
        if self.kind is TrackerKind.LEARNED and self.model is None:
            raise InvalidConfig("the learned tracker needs a trained model")

    @property
    def start(self) -> np.ndarray:
        if self.initial_position is not None:
            return np.array(self.initial_position, dtype=np.float64)
        x0, x1, y0, y1 = self.prior_region
        return np.array([(x0 + x1) / 2, (y0 + y1) / 2])


def _status_error(status: int, where: str) -> Exception:
    if status == kernels.STATUS_INSUFFICIENT:
        return InsufficientLinks(f"fewer than two links available {where}")
    if status == kernels.STATUS_SINGULAR:
        return SingularSystem(f"coefficient matrix is ill-conditioned {where}")
    return DegenerateGeometry(f"position lies on a link endpoint {where}")


def solve_velocity(plcr_row, available, position, links: Sequence[LinkGeometry],
                   regularization: float = 0.0, v_max: float = V_MAX, max_cond: float = 1e8) -> np.ndarray:
    """Least-squares velocity from one PLCR row at a given position.

    ``available`` is a per-link mask, or per-link weights (0 = unused).
    """
    tx, rx = link_arrays(links)
    A, st = kernels.fresnel_matrix(tx, rx, float(position[0]), float(position[1]), EPS_POS)
    if st == kernels.STATUS_OK:
        r = np.ascontiguousarray(np.nan_to_num(np.asarray(plcr_row, dtype=np.float64)))
        weight = np.ascontiguousarray(available, dtype=np.float64)
        vx, vy, st = kernels.solve_velocity(np.ascontiguousarray(A), r, weight,
                                            float(regularization), float(v_max), float(max_cond))
    if st != kernels.STATUS_OK:
        raise _status_error(st, f"at ({position[0]:g}, {position[1]:g})")
    return np.array([vx, vy])


def _rows(p: FeatureMatrix, start: int, stop: int, filled_weight: float):
    vals = p.values[start:stop]
    avail = np.isfinite(vals)
    weight = np.where(p.mask[start:stop], 1.0, np.where(avail, filled_weight, 0.0))
    return np.ascontiguousarray(np.where(avail, vals, 0.0)), np.ascontiguousarray(weight)


class ModelInversionTracker:
    def __init__(self, links: Sequence[LinkGeometry], config: TrackerConfig):
        self.links = tuple(links)
        self.config = config
        self._tx, self._rx = link_arrays(self.links)

    def _reckon(self, anchor, p: FeatureMatrix, start: int, stop: int, v_prev):
        c = self.config
        rows, weight = _rows(p, start, stop, c.filled_weight)
        return kernels.dead_reckon(np.ascontiguousarray(anchor, dtype=np.float64), rows, weight,
                                   self._tx, self._rx, p.slot_duration, c.regularization, c.v_max,
                                   c.max_cond, c.fixed_point_iters,
                                   np.ascontiguousarray(v_prev, dtype=np.float64), EPS_POS)

    def bootstrap(self, p1_prefix: FeatureMatrix, strict: bool = True) -> Trajectory:
        c = self.config
        n = p1_prefix.slot_count
        if strict and int(np.any(p1_prefix.available, axis=0).sum()) < 2:
            raise InsufficientLinks("fewer than two links carry any observation in the bootstrap prefix")
        pos = np.empty((n, 2))
        pos[0] = c.start
        if n > 1:
            pos[1:], _, _ = self._reckon(pos[0], p1_prefix, 1, n, np.zeros(2))
        return Trajectory(pos, p1_prefix.slot_duration)

    def predict(self, p_prefix: FeatureMatrix, previous: Trajectory) -> Trajectory:
        c = self.config
        t = p_prefix.slot_count
        if len(previous) != t - 1:
            raise LengthMismatch(f"previous trace has {len(previous)} slots, expected {t - 1}")
        if t < 2:
            return Trajectory(self.config.start[None, :], p_prefix.slot_duration)
        prev = previous.positions
        dt = p_prefix.slot_duration
        s = max(1, t - 1 - c.refine_window)
        v_prev = (prev[s - 1] - prev[s - 2]) / dt if s >= 2 else np.zeros(2)
        window, _, _ = self._reckon(prev[s - 1], p_prefix, s, t, v_prev)
        pos = np.vstack([prev[:s], window])
        if c.correction_gain > 0 and c.correction_window > 0:
            pos[s:] += self._offset(pos, p_prefix, s)
        return Trajectory(pos, dt)

    def _offset(self, pos: np.ndarray, p: FeatureMatrix, s: int) -> np.ndarray:
        """Ramped shift for slots ``s..t-1`` fitted to the raw observations."""
        c = self.config
        t = pos.shape[0]
        lo = max(1, t - c.correction_window)
        vel = np.empty((t - lo, 2))
        vel[:] = (pos[lo:] - pos[lo - 1:-1]) / p.slot_duration
        obs_mask = np.ascontiguousarray(p.mask[lo:t], dtype=np.uint8)
        r_obs = np.ascontiguousarray(np.where(p.mask[lo:t], p.values[lo:t], 0.0))
        dx, dy, used = kernels.offset_fit(np.ascontiguousarray(pos[lo:]), vel, r_obs, obs_mask,
                                          self._tx, self._rx, c.correction_prior, c.correction_iters, EPS_POS)
        if used == 0:
            return np.zeros(2)
        shift = c.correction_gain * np.array([dx, dy])
        norm = float(np.hypot(*shift))
        if norm > c.correction_max_step:
            shift *= c.correction_max_step / norm
        ramp = np.arange(1, t - s + 1, dtype=np.float64) / (t - s)
        return ramp[:, None] * shift[None, :]


class LearnedTracker:
    """Same interface, with per-slot velocities from a trained regressor."""

    def __init__(self, links: Sequence[LinkGeometry], config: TrackerConfig):
        self.links = tuple(links)
        self.config = config
        self.model = config.model
        if self.model.link_count != len(self.links):
            raise InvalidConfig(f"model expects {self.model.link_count} links, got {len(self.links)}")

    def _integrate(self, p: FeatureMatrix, stop: int) -> np.ndarray:
        vals = np.nan_to_num(p.values[:stop])
        return self.model.integrate(vals, self.config.start, self.links, p.slot_duration, self.config.v_max)

    def bootstrap(self, p1_prefix: FeatureMatrix, strict: bool = True) -> Trajectory:
        if strict and int(np.any(p1_prefix.available, axis=0).sum()) < 2:
            raise InsufficientLinks("fewer than two links carry any observation in the bootstrap prefix")
        return Trajectory(self._integrate(p1_prefix, p1_prefix.slot_count), p1_prefix.slot_duration)

    def predict(self, p_prefix: FeatureMatrix, previous: Trajectory) -> Trajectory:
        t = p_prefix.slot_count
        if len(previous) != t - 1:
            raise LengthMismatch(f"previous trace has {len(previous)} slots, expected {t - 1}")
        return Trajectory(self._integrate(p_prefix, t), p_prefix.slot_duration)


def make_tracker(links: Sequence[LinkGeometry], config: TrackerConfig):
    if config.kind is TrackerKind.LEARNED:
        return LearnedTracker(links, config)
    return ModelInversionTracker(links, config)


def bootstrap_trace(p1_prefix: FeatureMatrix, links: Sequence[LinkGeometry], config: TrackerConfig) -> Trajectory:
    """First ``N_f`` positions from observation-based values only."""
    return make_tracker(links, config).bootstrap(p1_prefix)


def predict_trace(p_prefix: FeatureMatrix, links: Sequence[LinkGeometry], config: TrackerConfig,
                  previous: Trajectory) -> Trajectory:
    """Extend ``previous`` (length ``t - 1``) to the ``t`` rows of ``p_prefix``."""
    return make_tracker(links, config).predict(p_prefix, previous)


def track_complete(p: FeatureMatrix, links: Sequence[LinkGeometry], config: TrackerConfig) -> Trajectory:
    """Run the tracker slot by slot over an already complete matrix."""
    tracker = make_tracker(links, config)
    n = min(config.n_f, p.slot_count)
    trace = tracker.bootstrap(_prefix(p, n))
    if n < p.slot_count:
        trace = trace.prefix(n - 1)
        for t in range(n, p.slot_count + 1):
            trace = tracker.predict(_prefix(p, t), trace)
    return trace


def _prefix(p: FeatureMatrix, rows: int) -> FeatureMatrix:
    return FeatureMatrix(p.values[:rows], p.mask[:rows], p.slot_duration, p.link_ids)
