"""Scenario construction: link layouts, trace shapes and ground-truth features."""
from __future__ import annotations

import enum
import math
from typing import Sequence

import numpy as np

from baton import geometry
from baton.errors import GenerationFailed, InvalidConfig
from baton.geometry import LinkGeometry
from baton.matrices import FeatureMatrix
from baton.trajectory import Trajectory, diff_velocities

TX_POSITION = (2.4, -2.4)
RX_POSITIONS = ((2.4, 2.4), (0.0, -2.4), (-2.4, 2.4), (-2.4, -2.4))
DEFAULT_AREA = (-2.4, 2.4, -2.4, 2.4)
# walks at up to 2 m/s rarely fit the link square for 8 s, so they get a larger room
WALK_AREA = (-4.0, 4.0, -4.0, 4.0)
CORNER_RADIUS = 0.25


class TraceKind(str, enum.Enum):
    STRAIGHT = "straight"
    TURN = "turn"
    CIRCLE = "circle"
    NSHAPE = "nshape"
    TRIPLETURN = "tripleturn"
    EIGHTSHAPE = "eightshape"
    SQUARE = "square"
    RANDOMWALK = "randomwalk"

    @classmethod
    def parse(cls, name) -> "TraceKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "").replace("_", "")
        try:
            return cls(key)
        except ValueError:
            raise InvalidConfig(f"unknown trace shape {name!r}; choose from "
                                f"{', '.join(k.value for k in cls)}") from None


# shapes compared in the evaluation figures
NAMED_SHAPES = (TraceKind.STRAIGHT, TraceKind.TURN, TraceKind.CIRCLE,
                TraceKind.NSHAPE, TraceKind.TRIPLETURN, TraceKind.EIGHTSHAPE)


class FeatureMode(str, enum.Enum):
    DIRECT = "direct"
    CSI = "csi"


def default_links(count: int = 4) -> list[LinkGeometry]:
    """One shared transmitter and the first ``count`` of four receivers."""
    if not 1 <= count <= len(RX_POSITIONS):
        raise InvalidConfig(f"the default layout has 1..{len(RX_POSITIONS)} receivers, asked for {count}")
    return [LinkGeometry(TX_POSITION, rx, i) for i, rx in enumerate(RX_POSITIONS[:count])]


# ------------------------------------------------------------ primitives

def _slot_count(duration: float, rate: float) -> int:
    t = duration * rate
    if t < 1 or abs(t - round(t)) > 1e-9:
        raise InvalidConfig(f"duration x feature_rate must be a positive integer, got {t}")
    return int(round(t))


def straight(start, heading: float, speed: float, duration: float, rate: float = 10.0) -> Trajectory:
    k = np.arange(_slot_count(duration, rate))
    s = speed * k / rate
    pos = np.column_stack([start[0] + s * math.cos(heading), start[1] + s * math.sin(heading)])
    return Trajectory(pos, 1.0 / rate)


def circle(center, radius: float, speed: float, duration: float, rate: float = 10.0,
           phase: float = -math.pi / 2) -> Trajectory:
    k = np.arange(_slot_count(duration, rate))
    theta = phase + speed * k / (rate * radius)
    pos = np.column_stack([center[0] + radius * np.cos(theta), center[1] + radius * np.sin(theta)])
    return Trajectory(pos, 1.0 / rate)


def _fillet(points: np.ndarray, radius: float, step: float = 0.01) -> np.ndarray:
    """Replace each interior polyline corner with a tangent circular arc."""
    out = [points[0]]
    for i in range(1, len(points) - 1):
        p0, p, p1 = points[i - 1], points[i], points[i + 1]
        d1 = (p - p0) / np.linalg.norm(p - p0)
        d2 = (p1 - p) / np.linalg.norm(p1 - p)
        turn = math.atan2(d1[0] * d2[1] - d1[1] * d2[0], float(d1 @ d2))
        if abs(turn) < 1e-9:
            out.append(p)
            continue
        tan_len = radius * math.tan(abs(turn) / 2)
        tan_len = min(tan_len, 0.45 * np.linalg.norm(p - p0), 0.45 * np.linalg.norm(p1 - p))
        r = tan_len / math.tan(abs(turn) / 2)
        a = p - d1 * tan_len
        side = 1.0 if turn > 0 else -1.0
        normal = np.array([-d1[1], d1[0]]) * side
        c = a + normal * r
        start_ang = math.atan2(a[1] - c[1], a[0] - c[0])
        n = max(2, int(math.ceil(abs(turn) * r / step)))
        for ang in start_ang + side * np.linspace(0.0, abs(turn), n):
            out.append(c + r * np.array([math.cos(ang), math.sin(ang)]))
    out.append(points[-1])
    return np.array(out)


def _densify(points: np.ndarray, step: float = 0.01) -> np.ndarray:
    out = [points[:1]]
    for a, b in zip(points[:-1], points[1:]):
        n = max(1, int(math.ceil(np.linalg.norm(b - a) / step)))
        out.append(a + (b - a) * np.linspace(0, 1, n + 1)[1:, None])
    return np.vstack(out)


def _shape_path(kind: TraceKind) -> tuple[np.ndarray, bool]:
    """Dense polyline for a canonical shape and whether it is closed."""
    if kind is TraceKind.CIRCLE:
        th = np.linspace(-math.pi / 2, 1.5 * math.pi, 2001)
        return np.column_stack([1.2 * np.cos(th), 1.2 * np.sin(th)]), True
    if kind is TraceKind.EIGHTSHAPE:
        th = np.linspace(0.0, 2 * math.pi, 4001)
        return np.column_stack([0.9 * np.sin(2 * th), 1.6 * np.sin(th)]), True
    corners = {
        TraceKind.STRAIGHT: [(-2.0, 0.3), (2.0, 0.3)],
        TraceKind.TURN: [(-1.8, -1.0), (0.8, -1.0), (0.8, 1.8)],
        TraceKind.NSHAPE: [(-1.5, -1.5), (-1.5, 1.5), (1.5, -1.5), (1.5, 1.5)],
        TraceKind.TRIPLETURN: [(-1.6, -1.4), (-1.6, 1.2), (0.0, 1.2), (0.0, -1.2), (1.6, -1.2)],
        TraceKind.SQUARE: [(-1.2, -1.2), (1.2, -1.2), (1.2, 1.2), (-1.2, 1.2), (-1.2, -1.2)],
    }[kind]
    pts = np.array(corners, dtype=np.float64)
    closed = kind is TraceKind.SQUARE
    if closed:
        # start mid-edge so every corner, including the seam, gets rounded
        mid = (pts[0] + pts[1]) / 2
        pts = np.vstack([mid, pts[1:], mid])
    return _densify(_fillet(pts, CORNER_RADIUS)), closed


def shape_length(kind: TraceKind) -> float:
    path, _ = _shape_path(TraceKind.parse(kind))
    return float(np.hypot(*np.diff(path, axis=0).T).sum())


def named_shape(kind, duration: float = 8.0, rate: float = 10.0, speed: float | None = None) -> Trajectory:
    """Sample a canonical shape at constant speed.

    Without ``speed`` the whole shape is traversed exactly once over the
    trace.  With ``speed`` closed shapes wrap around and open ones reverse at
    their ends.
    """
    kind = TraceKind.parse(kind)
    if kind is TraceKind.RANDOMWALK:
        raise InvalidConfig("random walks come from random_walk(), not named_shape()")
    path, closed = _shape_path(kind)
    seg = np.hypot(*np.diff(path, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    length = cum[-1]
    t_slots = _slot_count(duration, rate)
    if speed is None:
        s = np.linspace(0.0, length, t_slots)
    else:
        s = speed * np.arange(t_slots) / rate
        if closed:
            s = np.mod(s, length)
        else:
            s = np.mod(s, 2 * length)
            s = np.where(s > length, 2 * length - s, s)
    pos = np.column_stack([np.interp(s, cum, path[:, 0]), np.interp(s, cum, path[:, 1])])
    return Trajectory(pos, 1.0 / rate)


def random_walk(rng: np.random.Generator, duration: float = 8.0, rate: float = 10.0,
                area=WALK_AREA, speed_range=(0.5, 2.0), step_range=(0.4, 0.8),
                turn_range=(-math.radians(20), math.radians(20)), margin: float = 0.3,
                max_attempts: int = 1000) -> Trajectory:
    """Step-by-step walker with jittered speed/step length and bounded turns.

    Whole traces leaving ``area`` (shrunk by ``margin``) are discarded and
    regenerated.
    """
    t_slots = _slot_count(duration, rate)
    xmin, xmax, ymin, ymax = area
    lo = np.array([xmin + margin, ymin + margin])
    hi = np.array([xmax - margin, ymax - margin])
    if np.any(hi <= lo):
        raise GenerationFailed("area is smaller than the boundary margin")
    times = np.arange(t_slots) / rate
    for _ in range(max_attempts):
        pos = rng.uniform(lo, hi)
        heading = rng.uniform(-math.pi, math.pi)
        speed = rng.uniform(*speed_range)
        step = rng.uniform(*step_range)
        way_t, way_p = [0.0], [pos.copy()]
        t = 0.0
        while t < times[-1]:
            # small per-step variability around the walker's base gait
            v = float(np.clip(speed * rng.uniform(0.9, 1.1), speed_range[0], speed_range[1]))
            ln = float(np.clip(step * rng.uniform(0.9, 1.1), step_range[0], step_range[1]))
            heading += rng.uniform(*turn_range)
            pos = pos + ln * np.array([math.cos(heading), math.sin(heading)])
            t += ln / v
            way_t.append(t)
            way_p.append(pos.copy())
        wt = np.array(way_t)
        wp = np.array(way_p)
        traj = np.column_stack([np.interp(times, wt, wp[:, 0]), np.interp(times, wt, wp[:, 1])])
        if np.all(traj >= lo) and np.all(traj <= hi):
            return Trajectory(traj, 1.0 / rate)
    raise GenerationFailed(f"no trace stayed inside the area after {max_attempts} attempts")


def generate_trajectory(kind, seed: int = 0, duration: float = 8.0, rate: float = 10.0,
                        speed: float | None = None, **walk_kwargs) -> Trajectory:
    kind = TraceKind.parse(kind)
    if kind is TraceKind.RANDOMWALK:
        return random_walk(np.random.default_rng(seed), duration, rate, **walk_kwargs)
    return named_shape(kind, duration, rate, speed)


# --------------------------------------------------------------- features

def forward_matrix(trajectory: Trajectory, links: Sequence[LinkGeometry]) -> np.ndarray:
    """Noise-free PLCR per slot and link using backward-difference velocities."""
    vel = diff_velocities(trajectory)
    out = np.empty((len(trajectory), len(links)))
    for k, (p, v) in enumerate(zip(trajectory.positions, vel)):
        for n, lk in enumerate(links):
            ax, ay = geometry.fresnel_coefficients(lk, p)
            out[k, n] = ax * v[0] + ay * v[1]
    return out


def synthesize_features(trajectory: Trajectory, links: Sequence[LinkGeometry], noise_std: float = 0.0,
                        mode=FeatureMode.DIRECT, seed: int = 0, csi_noise=None) -> FeatureMatrix:
    """Complete ground-truth PLCR matrix for a trajectory.

    ``direct`` evaluates the forward model and adds Gaussian noise;
    ``csi`` synthesizes a CSI trace per link and runs the extraction chain.
    """
    mode = FeatureMode(mode)
    ids = tuple(lk.link_id for lk in links)
    if noise_std < 0:
        raise InvalidConfig("noise_std must be non-negative")
    if mode is FeatureMode.DIRECT:
        values = forward_matrix(trajectory, links)
        if noise_std > 0:
            values = values + np.random.default_rng(seed).normal(0.0, noise_std, values.shape)
        return FeatureMatrix.complete(values, trajectory.slot_duration, ids)
    from baton import csi

    cols = []
    for n, lk in enumerate(links):
        noise = csi_noise if csi_noise is not None else csi.NoiseConfig(seed=seed + n)
        trace = csi.synthesize_csi(trajectory, lk, noise)
        series = csi.extract_plcr(trace, csi.StftConfig(hop=trajectory.slot_duration))
        col = np.full(len(trajectory), np.nan)
        m = min(len(series.values), len(trajectory))
        col[:m] = np.where(series.valid[:m], series.values[:m], 0.0)
        cols.append(col)
    values = np.column_stack(cols)
    return FeatureMatrix(values, np.isfinite(values), trajectory.slot_duration, ids)
