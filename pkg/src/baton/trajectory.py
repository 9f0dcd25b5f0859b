"""Time-indexed 2-D positions on a fixed slot grid."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from baton.errors import InvalidConfig, TooShort

EPS_STEP = 0.05


@dataclass(frozen=True, eq=False)
class Trajectory:
    positions: np.ndarray
    slot_duration: float = 0.1

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.float64, copy=True, order="C").reshape(-1, 2)
        pos.setflags(write=False)
        if self.slot_duration <= 0:
            raise InvalidConfig("slot_duration must be positive")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "slot_duration", float(self.slot_duration))

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) * self.slot_duration

    def prefix(self, length: int) -> "Trajectory":
        return Trajectory(self.positions[:length], self.slot_duration)

    def step_lengths(self) -> np.ndarray:
        return np.hypot(*np.diff(self.positions, axis=0).T)

    def validate(self, v_max: float, eps_step: float = EPS_STEP) -> None:
        """Raise if any consecutive displacement exceeds ``v_max * slot + eps_step``."""
        if len(self) < 2:
            return
        worst = float(self.step_lengths().max())
        if worst > v_max * self.slot_duration + eps_step:
            raise InvalidConfig(f"step of {worst:.3f} m exceeds the {v_max} m/s speed cap")

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(f"# baton.trajectory v1 slot_duration={self.slot_duration!r}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["slot", "time", "x", "y"])
        for k, (x, y) in enumerate(self.positions):
            w.writerow([k, repr(round(k * self.slot_duration, 12)), repr(float(x)), repr(float(y))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        lines = Path(path).read_text().splitlines()
        slot = 0.1
        if lines[0].startswith("#"):
            slot = float(lines[0].rsplit("=", 1)[1])
            lines = lines[1:]
        rows = list(csv.DictReader(lines))
        return cls(np.array([[float(r["x"]), float(r["y"])] for r in rows]), slot)


def diff_velocities(trace: Trajectory) -> np.ndarray:
    """Backward-difference velocities; the first slot copies the second."""
    if len(trace) < 2:
        raise TooShort("need at least two positions to difference")
    v = np.empty_like(trace.positions)
    v[1:] = np.diff(trace.positions, axis=0) / trace.slot_duration
    v[0] = v[1]
    return v
