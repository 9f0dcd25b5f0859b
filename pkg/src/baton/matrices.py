"""PLCR feature matrices: missingness, observation fill and reliability weights."""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from baton.errors import InvalidCdc, InvalidConfig, InvalidHorizon, ShapeMismatch

CSV_MAGIC = "# baton.feature_matrix v1"


def _frozen(a: np.ndarray, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True, order="C")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """``T x N`` PLCR values (m/s) with an explicit observation mask.

    ``mask`` marks cells that were actually measured.  ``values`` may be NaN
    where nothing is known; filled matrices keep the raw mask so metrics can
    tell measured cells from predicted ones.
    """

    values: np.ndarray
    mask: np.ndarray
    slot_duration: float = 0.1
    link_ids: tuple[int, ...] = field(default=())

    def __post_init__(self):
        values = _frozen(self.values, np.float64)
        mask = _frozen(self.mask, bool)
        if values.ndim != 2 or values.shape != mask.shape:
            raise ShapeMismatch(f"values {values.shape} and mask {mask.shape} must be equal 2-D shapes")
        if np.any(mask & ~np.isfinite(values)):
            raise InvalidConfig("observed cells must hold finite values")
        if self.slot_duration <= 0:
            raise InvalidConfig("slot_duration must be positive")
        ids = tuple(int(i) for i in self.link_ids) or tuple(range(values.shape[1]))
        if len(ids) != values.shape[1]:
            raise ShapeMismatch(f"{len(ids)} link ids for {values.shape[1]} columns")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "slot_duration", float(self.slot_duration))
        object.__setattr__(self, "link_ids", ids)

    @classmethod
    def complete(cls, values, slot_duration: float = 0.1, link_ids=()) -> "FeatureMatrix":
        values = np.asarray(values, dtype=np.float64)
        return cls(values, np.ones(values.shape, dtype=bool), slot_duration, tuple(link_ids))

    @property
    def slot_count(self) -> int:
        return self.values.shape[0]

    @property
    def link_count(self) -> int:
        return self.values.shape[1]

    @property
    def available(self) -> np.ndarray:
        """Cells holding a usable value (observed or filled)."""
        return np.isfinite(self.values)

    def with_values(self, values) -> "FeatureMatrix":
        return FeatureMatrix(values, self.mask, self.slot_duration, self.link_ids)

    def select_links(self, columns: Sequence[int]) -> "FeatureMatrix":
        cols = list(columns)
        return FeatureMatrix(self.values[:, cols], self.mask[:, cols], self.slot_duration,
                             tuple(self.link_ids[c] for c in cols))

    def equals(self, other: "FeatureMatrix") -> bool:
        return (self.values.shape == other.values.shape
                and np.array_equal(self.mask, other.mask)
                and np.array_equal(self.values, other.values, equal_nan=True)
                and self.slot_duration == other.slot_duration)

    def to_csv(self, path: Union[str, Path, None] = None, zero_sentinel: bool = False) -> str:
        """Write the matrix as CSV and return the text.

        One column per link (header = link ids), one row per slot.  Unknown
        cells are empty, or ``0`` with ``zero_sentinel``.
        """
        buf = io.StringIO()
        buf.write(f"{CSV_MAGIC} slot_duration={self.slot_duration!r}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.link_ids)
        for row in self.values:
            w.writerow(["0" if zero_sentinel else "" if not math.isfinite(v) else repr(float(v))
                        for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source: Union[str, Path]) -> "FeatureMatrix":
        """Read :meth:`to_csv` output.  Non-empty cells are treated as observed."""
        text = Path(source).read_text() if not str(source).startswith(CSV_MAGIC) else str(source)
        lines = text.splitlines()
        slot = 0.1
        if lines and lines[0].startswith("#"):
            m = re.search(r"slot_duration=([0-9.eE+-]+)", lines[0])
            if m:
                slot = float(m.group(1))
            lines = lines[1:]
        rows = list(csv.reader(lines))
        if not rows:
            raise InvalidConfig("empty feature matrix CSV")
        ids = tuple(int(h) for h in rows[0])
        body = rows[1:]
        values = np.full((len(body), len(ids)), np.nan)
        for t, row in enumerate(body):
            if len(row) != len(ids):
                raise ShapeMismatch(f"row {t + 1} has {len(row)} cells, expected {len(ids)}")
            for n, cell in enumerate(row):
                if cell.strip():
                    values[t, n] = float(cell)
        return cls(values, np.isfinite(values), slot, ids)


@dataclass(frozen=True, eq=False)
class ReliabilityMatrix:
    weights: np.ndarray
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(self.weights, np.float64))


# ---------------------------------------------------------------- masking

@dataclass(frozen=True)
class UniformRandom:
    pass


@dataclass(frozen=True)
class Burst:
    """All links silent for ``duration`` seconds, on top of the uniform mask.

    ``start`` defaults to centering the burst in the trace.
    """
    duration: float
    start: float | None = None


@dataclass(frozen=True)
class LinkOutage:
    """``count`` links never observed; ``links`` defaults to the last columns."""
    count: int
    links: tuple[int, ...] | None = None


MaskPattern = Union[UniformRandom, Burst, LinkOutage]


def parse_mask(spec: str) -> MaskPattern:
    """Parse ``uniform``, ``burst:<seconds>`` or ``outage:<k>``."""
    spec = spec.strip().lower()
    if spec == "uniform":
        return UniformRandom()
    kind, _, arg = spec.partition(":")
    try:
        if kind == "burst":
            return Burst(float(arg))
        if kind == "outage":
            return LinkOutage(int(arg))
    except ValueError:
        pass
    raise InvalidConfig(f"bad mask pattern {spec!r}; expected uniform, burst:<sec> or outage:<k>")


def mask_to_str(pattern: MaskPattern) -> str:
    if isinstance(pattern, Burst):
        return f"burst:{pattern.duration:g}"
    if isinstance(pattern, LinkOutage):
        return f"outage:{pattern.count}"
    return "uniform"


def observed_count(cdc: float, slots: int) -> int:
    return int(math.ceil(cdc * slots - 1e-9))


def apply_cdc_mask(full: FeatureMatrix, cdc: float, pattern: MaskPattern = UniformRandom(),
                   seed: int = 0) -> FeatureMatrix:
    """Drop cells to emulate a communication duty cycle of ``cdc``.

    Every column keeps exactly ``ceil(cdc * T)`` cells under the uniform draw;
    burst and outage patterns remove further cells afterwards.  Dropped cells
    become NaN.
    """
    if not (0.0 < cdc <= 1.0) or not math.isfinite(cdc):
        raise InvalidCdc(f"cdc must lie in (0, 1], got {cdc}")
    t_slots, n_links = full.values.shape
    rng = np.random.default_rng(seed)
    keep = np.ones((t_slots, n_links), dtype=bool)
    if cdc < 1.0:
        k = observed_count(cdc, t_slots)
        for n in range(n_links):
            col = rng.random(t_slots) < cdc
            have = int(col.sum())
            if have > k:
                drop = rng.choice(np.flatnonzero(col), have - k, replace=False)
                col[drop] = False
            elif have < k:
                add = rng.choice(np.flatnonzero(~col), k - have, replace=False)
                col[add] = True
            keep[:, n] = col
    if isinstance(pattern, Burst):
        length = int(round(pattern.duration / full.slot_duration))
        if length < 0 or length > t_slots:
            raise InvalidConfig(f"burst of {pattern.duration}s does not fit in {t_slots} slots")
        if pattern.start is None:
            start = (t_slots - length) // 2
        else:
            start = int(round(pattern.start / full.slot_duration))
        keep[max(start, 0):max(start, 0) + length, :] = False
    elif isinstance(pattern, LinkOutage):
        cols = pattern.links if pattern.links is not None else tuple(range(n_links - pattern.count, n_links))
        if pattern.count < 0 or pattern.count > n_links or len(cols) != pattern.count:
            raise InvalidConfig(f"cannot silence {pattern.count} of {n_links} links")
        keep[:, list(cols)] = False
    keep &= full.mask
    values = np.where(keep, full.values, np.nan)
    return FeatureMatrix(values, keep, full.slot_duration, full.link_ids)


# ----------------------------------------------------------- fill & weights

def last_observed_index(mask: np.ndarray) -> np.ndarray:
    """Index of the latest observed row at or above each cell (-1 if none)."""
    t_slots = mask.shape[0]
    idx = np.where(mask, np.arange(t_slots)[:, None], -1)
    return np.maximum.accumulate(idx, axis=0)


def observation_matrix(p: FeatureMatrix) -> FeatureMatrix:
    """Carry the most recent observation of each link forward.

    Cells above a column's first observation stay NaN (unavailable).
    """
    last = last_observed_index(p.mask)
    cols = np.broadcast_to(np.arange(p.link_count), last.shape)
    filled = np.where(last >= 0, p.values[np.maximum(last, 0), cols], np.nan)
    # observed cells keep their own value even if the input carried fills there
    filled = np.where(p.mask, p.values, filled)
    return FeatureMatrix(filled, p.mask, p.slot_duration, p.link_ids)


def gap_lengths(mask: np.ndarray) -> np.ndarray:
    """Slots since the latest observation per cell; -1 before the first one."""
    last = last_observed_index(np.asarray(mask, dtype=bool))
    rows = np.arange(last.shape[0])[:, None]
    return np.where(last >= 0, rows - last, -1)


def reliability_weight(gap, t_w: int):
    """Quadratic decay ``(g / T_w - 1)^2`` of trust in a carried observation."""
    g = np.asarray(gap, dtype=np.float64)
    w = np.where(g == 0, 1.0, np.where((g > 0) & (g < t_w), (g / t_w - 1.0) ** 2, 0.0))
    return w if w.ndim else float(w)


def reliability_matrix(p: FeatureMatrix, t_w: int = 10) -> ReliabilityMatrix:
    if t_w < 1:
        raise InvalidHorizon(f"T_w must be at least 1 slot, got {t_w}")
    gaps = gap_lengths(p.mask)
    # never-observed cells get no trust at all
    w = np.where(gaps < 0, 0.0, reliability_weight(np.maximum(gaps, 0), t_w))
    return ReliabilityMatrix(w, int(t_w))
