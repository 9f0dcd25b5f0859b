"""One scenario end to end: simulate, mask, complete and score."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from baton import csi, sim
from baton.config import ScenarioConfig
from baton.errors import InvalidConfig
from baton.matrices import FeatureMatrix, apply_cdc_mask
from baton.metrics import EvalReport
from baton.stap import StapConfig, StapResult, stap_run
from baton.track import TrackerConfig, TrackerKind
from baton.trajectory import Trajectory


@dataclass(frozen=True, eq=False)
class ScenarioRun:
    config: ScenarioConfig
    seeds: dict
    truth: Trajectory
    full: FeatureMatrix
    raw: FeatureMatrix
    result: StapResult
    report: EvalReport


def derive_seeds(seed: int) -> dict:
    """Independent streams for trajectory, feature noise and masking from one seed."""
    trajectory, noise, mask = (int(s) for s in np.random.SeedSequence(int(seed)).generate_state(3))
    return {"root": int(seed), "trajectory": trajectory, "noise": noise, "mask": mask}


def make_trajectory(config: ScenarioConfig, seed: int) -> Trajectory:
    if config.shape is sim.TraceKind.RANDOMWALK:
        kwargs = dict(speed_range=config.speed_range, step_range=config.step_range, turn_range=config.turn_range)
        if config.area is not None:
            kwargs["area"] = config.area
        return sim.generate_trajectory(config.shape, seed, config.duration, config.feature_rate, **kwargs)
    return sim.generate_trajectory(config.shape, seed, config.duration, config.feature_rate, config.speed)


def tracker_config(config: ScenarioConfig, start) -> TrackerConfig:
    kind = TrackerKind.parse(config.tracker)
    model = None
    if kind is TrackerKind.LEARNED:
        from baton.regressor import LearnedRegressor

        if config.model_path is None:
            raise InvalidConfig("the learned tracker needs tracker.model_path")
        model = LearnedRegressor.load(config.model_path)
    initial = config.initial_position if config.initial_position is not None else tuple(start)
    return TrackerConfig(kind=kind, initial_position=initial, regularization=config.regularization,
                         n_f=config.bootstrap_slots, refine_window=config.refine_window,
                         filled_weight=config.filled_weight, correction_gain=config.correction_gain, model=model)


def run_scenario(config: ScenarioConfig) -> ScenarioRun:
    seeds = derive_seeds(config.seed)
    truth = make_trajectory(config, seeds["trajectory"])
    full = sim.synthesize_features(truth, config.links, config.noise if config.features is sim.FeatureMode.DIRECT
                                   else 0.0, mode=config.features, seed=seeds["noise"])
    raw = apply_cdc_mask(full, config.cdc, config.mask, seeds["mask"])
    stap_cfg = StapConfig(t_w=config.horizon, eps_den=config.eps_den, max_ratio=config.max_ratio,
                          predictors=config.predictors, model_in_pred2=config.model_in_pred2)
    result = stap_run(raw, config.links, tracker_config(config, truth.positions[0]), stap_cfg)
    labels = {"shape": config.shape.value, "cdc": config.cdc, "links": len(config.links), "seed": config.seed,
              "predictors": config.predictors.value, "tracker": str(config.tracker)}
    report = EvalReport.build(result.trace, truth, result.filled, full, raw.mask, result.cases, labels, config.bucket)
    return ScenarioRun(config, seeds, truth, full, raw, result, report)


def csi_traces(config: ScenarioConfig, truth: Trajectory, noise_seed: int) -> list:
    """The per-link CSI recordings behind the ``csi`` feature mode."""
    return [csi.synthesize_csi(truth, lk, csi.NoiseConfig(seed=noise_seed + n)) for n, lk in enumerate(config.links)]
