"""Scenario configuration and its TOML loader.

Every key is optional; see the README for the full schema.  Unknown sections
or keys are rejected with a message naming the offending key and the allowed
ones, so typos do not silently fall back to defaults.
"""
from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from baton.errors import InvalidConfig
from baton.geometry import V_MAX, LinkGeometry, check_unique_ids
from baton.matrices import MaskPattern, UniformRandom, mask_to_str, parse_mask
from baton.predict import EPS_DEN, MAX_RATIO, Predictors
from baton.sim import FeatureMode, TraceKind, default_links

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class ScenarioConfig:
    shape: TraceKind = TraceKind.TURN
    duration: float = 8.0
    feature_rate: float = 10.0
    speed: Optional[float] = None
    area: Optional[tuple[float, float, float, float]] = None
    speed_range: tuple[float, float] = (0.5, 2.0)
    step_range: tuple[float, float] = (0.4, 0.8)
    turn_range: tuple[float, float] = (-math.radians(20), math.radians(20))
    links: tuple[LinkGeometry, ...] = field(default_factory=lambda: tuple(default_links(4)))
    features: FeatureMode = FeatureMode.DIRECT
    noise: float = 0.1
    cdc: float = 0.2
    mask: MaskPattern = UniformRandom()
    seed: int = 0
    tracker: str = "inverse"
    model_path: Optional[str] = None
    initial_position: Optional[tuple[float, float]] = None
    regularization: float = 1e-3
    n_f: Optional[int] = None
    refine_window: int = 10
    filled_weight: float = 1.0
    correction_gain: float = 0.5
    t_w: Optional[int] = None
    eps_den: float = EPS_DEN
    max_ratio: float = MAX_RATIO
    predictors: Predictors = Predictors.FULL
    model_in_pred2: bool = True
    bucket: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "shape", TraceKind.parse(self.shape))
        object.__setattr__(self, "features", FeatureMode(self.features))
        object.__setattr__(self, "predictors", Predictors.parse(
            self.predictors.value if isinstance(self.predictors, Predictors) else self.predictors))
        if isinstance(self.mask, str):
            object.__setattr__(self, "mask", parse_mask(self.mask))
        object.__setattr__(self, "links", tuple(self.links))
        if self.duration <= 0 or self.feature_rate <= 0:
            raise InvalidConfig("duration and feature_rate must be positive")
        slots = self.duration * self.feature_rate
        if abs(slots - round(slots)) > 1e-9:
            raise InvalidConfig(f"duration x feature_rate = {slots:g} is not a whole number of slots")
        lo, hi = self.speed_range
        if not 0 < lo <= hi <= V_MAX:
            raise InvalidConfig(f"speed_range must lie within (0, {V_MAX}] m/s")
        if self.speed is not None and not 0 < self.speed <= V_MAX:
            raise InvalidConfig(f"speed must lie within (0, {V_MAX}] m/s")
        if self.noise < 0:
            raise InvalidConfig("noise must be non-negative")
        if len(self.links) < 1:
            raise InvalidConfig("at least one link is required")
        check_unique_ids(self.links)

    @property
    def slot_duration(self) -> float:
        return 1.0 / self.feature_rate

    @property
    def slot_count(self) -> int:
        return int(round(self.duration * self.feature_rate))

    @property
    def bootstrap_slots(self) -> int:
        """N_f: slots in one second unless set explicitly."""
        return self.n_f if self.n_f is not None else max(2, int(round(self.feature_rate)))

    @property
    def horizon(self) -> int:
        return self.t_w if self.t_w is not None else self.bootstrap_slots

    def with_links(self, count: int) -> "ScenarioConfig":
        return replace(self, links=tuple(default_links(count)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shape"] = self.shape.value
        d["features"] = self.features.value
        d["predictors"] = self.predictors.value
        d["mask"] = mask_to_str(self.mask)
        d["links"] = [{"id": lk.link_id, "tx": list(lk.tx_position), "rx": list(lk.rx_position)}
                      for lk in self.links]
        return d


# TOML section -> {key: ScenarioConfig field}
SCHEMA = {
    "": {"seed": "seed"},
    "scenario": {"shape": "shape", "duration": "duration", "feature_rate": "feature_rate", "speed": "speed",
                 "area": "area"},
    "walk": {"speed_range": "speed_range", "step_range": "step_range", "turn_range_deg": "turn_range"},
    "links": {"count": None, "layout": None},
    "features": {"mode": "features", "noise": "noise"},
    "mask": {"cdc": "cdc", "pattern": "mask"},
    "tracker": {"kind": "tracker", "model_path": "model_path", "initial_position": "initial_position",
                "regularization": "regularization", "n_f": "n_f", "refine_window": "refine_window",
                "filled_weight": "filled_weight", "correction_gain": "correction_gain"},
    "stap": {"t_w": "t_w", "eps_den": "eps_den", "max_ratio": "max_ratio", "predictors": "predictors",
             "model_in_pred2": "model_in_pred2"},
    "metrics": {"bucket": "bucket"},
}
_TUPLES = {"area", "speed_range", "step_range", "initial_position"}


def _links_from(section: dict, where: str) -> tuple[LinkGeometry, ...]:
    if "layout" in section:
        out = []
        for i, item in enumerate(section["layout"]):
            extra = set(item) - {"tx", "rx", "id"}
            if extra:
                raise InvalidConfig(f"{where}: unknown key(s) {sorted(extra)} in links.layout[{i}]; "
                                    "allowed: id, rx, tx")
            try:
                out.append(LinkGeometry(tuple(item["tx"]), tuple(item["rx"]), int(item.get("id", i))))
            except KeyError as e:
                raise InvalidConfig(f"{where}: links.layout[{i}] is missing {e.args[0]!r}") from None
        return tuple(out)
    return tuple(default_links(int(section.get("count", 4))))


def config_from_mapping(data: dict, where: str = "<config>") -> ScenarioConfig:
    kwargs = {}
    for key, value in data.items():
        if isinstance(value, dict):
            if key not in SCHEMA or key == "":
                raise InvalidConfig(f"{where}: unknown section [{key}]; allowed: "
                                    + ", ".join(s for s in SCHEMA if s))
            allowed = SCHEMA[key]
            if key == "links":
                bad = set(value) - set(allowed)
                if bad:
                    raise InvalidConfig(f"{where}: unknown key(s) {sorted(bad)} in [links]; allowed: count, layout")
                kwargs["links"] = _links_from(value, where)
                continue
            for k, v in value.items():
                if k not in allowed:
                    raise InvalidConfig(f"{where}: unknown key {k!r} in [{key}]; allowed: "
                                        + ", ".join(sorted(allowed)))
                name = allowed[k]
                if k == "turn_range_deg":
                    v = tuple(math.radians(a) for a in v)
                elif name in _TUPLES:
                    v = tuple(v)
                kwargs[name] = v
        elif key in SCHEMA[""]:
            kwargs[SCHEMA[""][key]] = value
        else:
            raise InvalidConfig(f"{where}: unknown top-level key {key!r}; allowed: seed, or a section "
                                + ", ".join(f"[{s}]" for s in SCHEMA if s))
    try:
        return ScenarioConfig(**kwargs)
    except TypeError as e:
        raise InvalidConfig(f"{where}: {e}") from None


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except FileNotFoundError:
        raise InvalidConfig(f"config file {path} does not exist") from None
    except tomllib.TOMLDecodeError as e:
        raise InvalidConfig(f"{path}: {e}") from None
    return config_from_mapping(data, str(path))


def override(config: ScenarioConfig, **changes) -> ScenarioConfig:
    """Apply command-line style overrides; ``links`` may be a count."""
    changes = {k: v for k, v in changes.items() if v is not None}
    if "links" in changes and isinstance(changes["links"], int):
        changes["links"] = tuple(default_links(changes["links"]))
    known = {f.name for f in fields(ScenarioConfig)}
    bad = set(changes) - known
    if bad:
        raise InvalidConfig(f"unknown setting(s) {sorted(bad)}")
    return replace(config, **changes)
