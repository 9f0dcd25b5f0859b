"""A small learned velocity regressor behind the tracker interface.

Training uses scikit-learn's multilayer perceptron; inference runs a plain
numpy forward pass over the extracted weights so a saved model needs nothing
but numpy to load.  Each slot's input is the last ``window`` PLCR rows plus
the Fresnel coefficients at the previous position, and the output is that
slot's velocity.  Positions follow by integration from the known start.

Binary format (little-endian): the 8-byte magic ``BTNREG1\\0``, a u32 header
length, a UTF-8 JSON header, then for every layer its weight matrix
(``fan_in x fan_out``, row-major) followed by its bias, all float64.
"""
from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from baton import kernels
from baton.errors import InvalidConfig, InvalidHyperparams, LengthMismatch
from baton.geometry import EPS_POS, V_MAX, LinkGeometry, link_arrays
from baton.matrices import FeatureMatrix
from baton.trajectory import Trajectory, diff_velocities

MAGIC = b"BTNREG1\x00"
FORMAT_VERSION = 1
ACTIVATIONS = ("tanh", "relu")


@dataclass(frozen=True)
class RegressorHyperparams:
    hidden: tuple[int, ...] = (32,)
    window: int = 2
    alpha: float = 1e-4
    max_iter: int = 2000
    activation: str = "tanh"
    validation_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if not self.hidden or min(self.hidden) < 1:
            raise InvalidHyperparams("every hidden layer needs at least one unit")
        if self.window < 1:
            raise InvalidHyperparams("window must be at least one row")
        if self.alpha < 0 or self.max_iter < 1:
            raise InvalidHyperparams("alpha must be >= 0 and max_iter >= 1")
        if self.activation not in ACTIVATIONS:
            raise InvalidHyperparams(f"activation must be one of {ACTIVATIONS}")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise InvalidHyperparams("validation_fraction must lie in [0, 1)")


def slot_features(values: np.ndarray, k: int, position, tx, rx, window: int, v_max: float) -> np.ndarray:
    """Input vector for slot ``k`` given the position at slot ``k - 1``."""
    rows = values[max(0, k - window + 1):k + 1]
    if rows.shape[0] < window:
        rows = np.vstack([np.zeros((window - rows.shape[0], values.shape[1])), rows])
    A, st = kernels.fresnel_matrix(tx, rx, float(position[0]), float(position[1]), EPS_POS)
    return np.concatenate([np.nan_to_num(rows).ravel() / v_max, A.ravel() / 2.0])


def _samples(p: FeatureMatrix, trace: Trajectory, tx, rx, window: int, v_max: float):
    pos = trace.positions
    vel = diff_velocities(trace)
    X = [slot_features(p.values, k, pos[k - 1], tx, rx, window, v_max) for k in range(1, len(trace))]
    return np.array(X), vel[1:] / v_max


class LearnedRegressor:
    def __init__(self, weights: Sequence[np.ndarray], biases: Sequence[np.ndarray], *, window: int,
                 link_count: int, activation: str = "tanh", v_max: float = V_MAX,
                 slot_duration: float = 0.1, validation_loss: float = math.nan):
        if len(weights) != len(biases) or not weights:
            raise InvalidConfig("weights and biases must pair up, one per layer")
        self.weights = [np.ascontiguousarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.ascontiguousarray(b, dtype=np.float64).ravel() for b in biases]
        self.window = int(window)
        self.link_count = int(link_count)
        self.activation = activation
        self.v_max = float(v_max)
        self.slot_duration = float(slot_duration)
        self.validation_loss = float(validation_loss)
        expected = self.window * self.link_count + 2 * self.link_count
        if self.weights[0].shape[0] != expected or self.weights[-1].shape[1] != 2:
            raise InvalidConfig(f"layer shapes do not fit {self.link_count} links and window {self.window}")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = np.asarray(x, dtype=np.float64)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < len(self.weights) - 1:
                h = np.tanh(h) if self.activation == "tanh" else np.maximum(h, 0.0)
        return h

    def integrate(self, values: np.ndarray, start, links: Sequence[LinkGeometry], slot_duration: float,
                  v_max: float = V_MAX) -> np.ndarray:
        """Positions for every row of ``values`` starting at ``start``."""
        tx, rx = link_arrays(links)
        pos = np.empty((values.shape[0], 2))
        pos[0] = start
        for k in range(1, values.shape[0]):
            v = self.forward(slot_features(values, k, pos[k - 1], tx, rx, self.window, self.v_max)) * self.v_max
            speed = float(np.hypot(*v))
            if speed > v_max:
                v *= v_max / speed
            pos[k] = pos[k - 1] + v * slot_duration
        return pos

    # ------------------------------------------------------------ persistence
    def to_bytes(self) -> bytes:
        header = json.dumps({
            "format": "baton.regressor", "version": FORMAT_VERSION, "dtype": "<f8",
            "layer_sizes": self.layer_sizes, "activation": self.activation, "window": self.window,
            "link_count": self.link_count, "v_max": self.v_max, "slot_duration": self.slot_duration,
            "validation_loss": None if math.isnan(self.validation_loss) else self.validation_loss,
        }, sort_keys=True).encode()
        body = b"".join(a.astype("<f8").tobytes() for w, b in zip(self.weights, self.biases) for a in (w, b))
        return MAGIC + struct.pack("<I", len(header)) + header + body

    @classmethod
    def from_bytes(cls, blob: bytes) -> "LearnedRegressor":
        if blob[:8] != MAGIC:
            raise InvalidConfig("not a baton regressor file")
        (hlen,) = struct.unpack("<I", blob[8:12])
        meta = json.loads(blob[12:12 + hlen].decode())
        if meta.get("version") != FORMAT_VERSION:
            raise InvalidConfig(f"unsupported regressor format version {meta.get('version')}")
        flat = np.frombuffer(blob[12 + hlen:], dtype="<f8")
        sizes = meta["layer_sizes"]
        weights, biases, at = [], [], 0
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            weights.append(flat[at:at + fan_in * fan_out].reshape(fan_in, fan_out).copy())
            at += fan_in * fan_out
            biases.append(flat[at:at + fan_out].copy())
            at += fan_out
        if at != flat.size:
            raise InvalidConfig("regressor payload size does not match its header")
        loss = meta.get("validation_loss")
        return cls(weights, biases, window=meta["window"], link_count=meta["link_count"],
                   activation=meta["activation"], v_max=meta["v_max"], slot_duration=meta["slot_duration"],
                   validation_loss=math.nan if loss is None else loss)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "LearnedRegressor":
        return cls.from_bytes(Path(path).read_bytes())


def train_regressor(dataset: Sequence[tuple[FeatureMatrix, Trajectory]], links: Sequence[LinkGeometry],
                    hyperparams: RegressorHyperparams = RegressorHyperparams(),
                    v_max: float = V_MAX) -> LearnedRegressor:
    """Fit a regressor on simulated ``(PLCR matrix, trace)`` pairs.

    The last ``validation_fraction`` of the pairs is held out for the reported
    validation loss (mean squared velocity error, (m/s)^2); with a single pair
    the training pair is scored instead.
    """
    from sklearn.neural_network import MLPRegressor

    if not dataset:
        raise InvalidConfig("the training set is empty")
    slot = dataset[0][0].slot_duration
    tx, rx = link_arrays(links)
    for p, trace in dataset:
        if p.link_count != len(links):
            raise InvalidConfig(f"matrix has {p.link_count} links, geometry has {len(links)}")
        if p.slot_count != len(trace):
            raise LengthMismatch(f"matrix has {p.slot_count} rows, trace has {len(trace)} slots")
        if p.slot_duration != slot or trace.slot_duration != slot:
            raise InvalidConfig("all samples must share one slot duration")
    n_val = int(math.floor(hyperparams.validation_fraction * len(dataset)))
    train = dataset[:len(dataset) - n_val] if n_val else dataset
    val = dataset[len(dataset) - n_val:] if n_val else dataset
    X, y = map(np.vstack, zip(*(_samples(p, t, tx, rx, hyperparams.window, v_max) for p, t in train)))
    model = MLPRegressor(hidden_layer_sizes=hyperparams.hidden, activation=hyperparams.activation,
                         solver="lbfgs", alpha=hyperparams.alpha, max_iter=hyperparams.max_iter,
                         random_state=hyperparams.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # lbfgs iteration-limit notices
        model.fit(X, y)
    reg = LearnedRegressor(model.coefs_, model.intercepts_, window=hyperparams.window, link_count=len(links),
                           activation=hyperparams.activation, v_max=v_max, slot_duration=slot)
    Xv, yv = map(np.vstack, zip(*(_samples(p, t, tx, rx, hyperparams.window, v_max) for p, t in val)))
    reg.validation_loss = float(np.mean(((reg.forward(Xv) - yv) * v_max) ** 2))
    return reg
