"""The three PLCR predictors and their weighted integration."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from baton import geometry, kernels
from baton.errors import InvalidConfig, TooShort
from baton.geometry import KinematicState, LinkGeometry
from baton.matrices import FeatureMatrix
from baton.trajectory import Trajectory

EPS_DEN = 0.05
# largest plausible speed ratio between adjacent slots implied by a reference link
MAX_RATIO = 2.0


class Case(enum.IntEnum):
    OBSERVED = kernels.CASE_OBSERVED
    CROSSLINK = kernels.CASE_CROSSLINK
    ALLMISSING = kernels.CASE_ALLMISSING


class Predictors(str, enum.Enum):
    """Which predictions feed a missing cell (ablation variants)."""
    FULL = "full"
    PRED1 = "pred1"
    PRED2 = "pred2"
    PRED3 = "pred3"
    PRED12 = "pred12"
    PRED13 = "pred13"

    @property
    def kernel_mode(self) -> int:
        return {
            Predictors.FULL: kernels.MODE_FULL,
            Predictors.PRED1: kernels.MODE_PRED1,
            Predictors.PRED2: kernels.MODE_PRED2,
            Predictors.PRED3: kernels.MODE_PRED3,
            Predictors.PRED12: kernels.MODE_PRED12,
            Predictors.PRED13: kernels.MODE_PRED13,
        }[self]

    @classmethod
    def parse(cls, name) -> "Predictors":
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise InvalidConfig(f"unknown predictor set {name!r}; choose from "
                                f"{', '.join(p.value for p in cls)}") from None


@dataclass(frozen=True)
class PredictionBundle:
    pred1: float
    pred3: float
    weight_w: float
    case: Case
    pred2: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.weight_w <= 1.0:
            raise InvalidConfig(f"weight {self.weight_w} outside [0, 1]")
        if self.case is Case.OBSERVED and self.weight_w != 1.0:
            raise InvalidConfig("an observed cell always carries weight 1")


def pred2_proportionate(p: FeatureMatrix, t2: int, n1: int, model_plcr_at_t1=None,
                        eps_den: float = EPS_DEN, max_ratio: float = MAX_RATIO) -> Optional[float]:
    """Cross-link proportionate prediction of ``P(t2, n1)``.

    Scales the previous-slot value of ``n1`` by the ratio of an observed
    reference link at ``t2`` to its own previous-slot value.  The reference is
    the observed link with the largest previous-slot magnitude.  Previous-slot
    values come from ``model_plcr_at_t1`` when given, otherwise from row
    ``t2 - 1`` of ``p``.  Returns ``None`` when the reference fails the
    magnitude, sign or speed-ratio guard.
    """
    if t2 < 1:
        raise TooShort("the proportionate prediction needs a preceding row")
    prev = (np.asarray(model_plcr_at_t1, dtype=np.float64) if model_plcr_at_t1 is not None
            else np.ascontiguousarray(p.values[t2 - 1]))
    obs = np.ascontiguousarray(np.where(p.mask[t2], p.values[t2], 0.0))
    val = kernels.pred2_row(obs, np.ascontiguousarray(p.mask[t2], dtype=np.uint8),
                            np.ascontiguousarray(prev), int(n1), float(eps_den), float(max_ratio))
    return None if math.isnan(val) else float(val)


def model_plcr(position, velocity, links: Sequence[LinkGeometry]) -> np.ndarray:
    state = KinematicState(tuple(position), tuple(velocity))
    return np.array([geometry.forward_plcr(lk, state) for lk in links])


def pred3_model_based(partial_trace: Trajectory, link: LinkGeometry) -> float:
    """Forward-model PLCR at the last slot of ``partial_trace``.

    Used as the prediction for the following slot.
    """
    if len(partial_trace) < 2:
        raise TooShort("need two positions to difference a velocity")
    p = partial_trace.positions
    v = (p[-1] - p[-2]) / partial_trace.slot_duration
    return geometry.forward_plcr(link, KinematicState(tuple(p[-1]), tuple(v)))


def integrate(bundle: PredictionBundle) -> float:
    """Final value for one cell; a cross-link cell without Pred.2 uses Pred.3."""
    if bundle.case is Case.OBSERVED:
        return bundle.pred1
    w = bundle.weight_w
    if bundle.case is Case.CROSSLINK and bundle.pred2 is not None:
        return w * bundle.pred1 + (1.0 - w) * bundle.pred2
    return w * bundle.pred1 + (1.0 - w) * bundle.pred3
