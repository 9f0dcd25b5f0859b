"""Synthetic CSI and the PLCR extraction front-end.

Two receive antennas share the same random phase drift ``kappa(t)``.
Conjugate multiplication of the pair removes it; the product is then
mean-subtracted, low-pass filtered to the Doppler band and fed to an STFT
whose dominant signed peak ``f_D`` gives ``r = -lambda * f_D``.
"""
from __future__ import annotations

import csv
import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

from baton.errors import AllZeroTrace, InvalidConfig, WindowTooLong
from baton.geometry import LinkGeometry
from baton.trajectory import Trajectory

SPEED_OF_LIGHT = 299_792_458.0
SAMPLE_RATE = 1000.0
CARRIER_FREQUENCY = 5.32e9
BINARY_MAGIC = b"BTNCSI1\x00"


@dataclass(frozen=True)
class NoiseConfig:
    """Channel composition for :func:`synthesize_csi`.

    ``noise_power`` is the variance of complex white noise per stream;
    ``kappa_step`` the per-sample std (rad) of the shared phase random walk.
    """
    noise_power: float = 0.0
    static_amplitude: float = 1.0
    reference_static_amplitude: float = 4.0
    dynamic_amplitude: float = 0.5
    reference_dynamic_ratio: float = 0.1
    extra_static_paths: int = 0
    kappa_step: float = 0.05
    seed: int = 0


@dataclass(frozen=True)
class StftConfig:
    window: float = 0.2
    hop: float = 0.1
    nfft: int = 1024
    band: float = 80.0
    filter_order: int = 4
    motion_threshold: float = 1e-3
    peak_to_median: float = 4.0


@dataclass(frozen=True, eq=False)
class CsiTrace:
    """Complex samples, one column per antenna, starting at time ``t0``."""
    samples: np.ndarray
    sample_rate: float = SAMPLE_RATE
    carrier_frequency: float = CARRIER_FREQUENCY
    t0: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.complex128)
        if s.ndim != 2 or s.shape[1] < 2:
            raise InvalidConfig("a CSI trace needs at least two antenna streams")
        object.__setattr__(self, "samples", s)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.shape[0]) / self.sample_rate

    def to_bytes(self) -> bytes:
        """Little-endian dump: magic, u32 header length, JSON header, complex128 samples."""
        header = json.dumps({"sample_rate": self.sample_rate, "carrier_frequency": self.carrier_frequency,
                             "t0": self.t0, "samples": self.samples.shape[0],
                             "streams": self.samples.shape[1], "dtype": "<c16"}).encode()
        body = self.samples.astype("<c16").tobytes()
        return BINARY_MAGIC + struct.pack("<I", len(header)) + header + body

    @classmethod
    def from_bytes(cls, blob: bytes) -> "CsiTrace":
        if blob[:8] != BINARY_MAGIC:
            raise InvalidConfig("not a baton CSI dump")
        (hlen,) = struct.unpack("<I", blob[8:12])
        meta = json.loads(blob[12:12 + hlen])
        data = np.frombuffer(blob[12 + hlen:], dtype="<c16").reshape(meta["samples"], meta["streams"])
        return cls(data.copy(), meta["sample_rate"], meta["carrier_frequency"], meta["t0"])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time"] + [f"{p}{a}" for a in range(self.samples.shape[1]) for p in ("re", "im")])
        for t, row in zip(self.times, self.samples):
            w.writerow([repr(float(t))] + [repr(float(x)) for z in row for x in (z.real, z.imag)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


@dataclass(frozen=True, eq=False)
class PlcrSeries:
    times: np.ndarray
    values: np.ndarray
    valid: np.ndarray
    bin_width: float = field(default=0.0)

    @property
    def plcr_resolution(self) -> float:
        """One frequency bin expressed in m/s."""
        return self.bin_width


@dataclass(frozen=True, eq=False)
class Spectrogram:
    times: np.ndarray
    frequencies: np.ndarray
    magnitude: np.ndarray


def synthesize_from_path_length(path_length, noise: NoiseConfig = NoiseConfig(),
                                sample_rate: float = SAMPLE_RATE,
                                carrier_frequency: float = CARRIER_FREQUENCY, t0: float = 0.0,
                                kappa=None) -> CsiTrace:
    """Two-antenna CSI for a reflected path of length ``path_length[j]`` at sample ``j``."""
    if noise.noise_power < 0:
        raise InvalidConfig("noise power must be non-negative")
    if noise.dynamic_amplitude <= 0:
        raise InvalidConfig("the dynamic path amplitude must be positive")
    L = np.asarray(path_length, dtype=np.float64)
    lam = SPEED_OF_LIGHT / carrier_frequency
    rng = np.random.default_rng(noise.seed)
    if kappa is None:
        kappa = np.cumsum(rng.normal(0.0, noise.kappa_step, L.shape[0]))
    drift = np.exp(-1j * np.asarray(kappa))
    static = complex(noise.static_amplitude)
    for _ in range(noise.extra_static_paths):
        static += rng.uniform(0.1, 0.5) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    dyn = noise.dynamic_amplitude * np.exp(-2j * np.pi * L / lam)
    ant1 = drift * (static + dyn)
    ant2 = drift * (noise.reference_static_amplitude + noise.reference_dynamic_ratio * dyn * np.exp(-0.7j))
    samples = np.column_stack([ant1, ant2])
    if noise.noise_power > 0:
        sigma = np.sqrt(noise.noise_power / 2)
        samples = samples + rng.normal(0, sigma, samples.shape) + 1j * rng.normal(0, sigma, samples.shape)
    return CsiTrace(samples, sample_rate, carrier_frequency, t0)


def _positions_at(trajectory: Trajectory, times: np.ndarray) -> np.ndarray:
    """Piecewise-linear position, extrapolated linearly past both ends."""
    slot = trajectory.slot_duration
    pos = trajectory.positions
    grid = np.arange(len(pos)) * slot
    out = np.column_stack([np.interp(times, grid, pos[:, 0]), np.interp(times, grid, pos[:, 1])])
    if len(pos) >= 2:
        v_first = (pos[1] - pos[0]) / slot
        v_last = (pos[-1] - pos[-2]) / slot
        before = times < 0
        after = times > grid[-1]
        out[before] = pos[0] + np.outer(times[before], v_first)
        out[after] = pos[-1] + np.outer(times[after] - grid[-1], v_last)
    return out


def synthesize_csi(trajectory: Trajectory, link: LinkGeometry, noise: NoiseConfig = NoiseConfig(),
                   sample_rate: float = SAMPLE_RATE, carrier_frequency: float = CARRIER_FREQUENCY,
                   window: float = 0.2) -> CsiTrace:
    """CSI for a person following ``trajectory`` across ``link``.

    The trace is offset so that STFT frame ``k`` (window ``window``, hop one
    slot) is centred on the middle of slot interval ``k``, the interval the
    backward-difference velocity of slot ``k`` describes.
    """
    slot = trajectory.slot_duration
    hop = int(round(slot * sample_rate))
    nper = int(round(window * sample_rate))
    n_samples = (len(trajectory) - 1) * hop + nper
    t0 = -0.5 * slot - 0.5 * nper / sample_rate
    times = t0 + np.arange(n_samples) / sample_rate
    p = _positions_at(trajectory, times)
    tx = np.asarray(link.tx_position)
    rx = np.asarray(link.rx_position)
    L = np.hypot(*(p - tx).T) + np.hypot(*(p - rx).T)
    return synthesize_from_path_length(L, noise, sample_rate, carrier_frequency, t0)


def conjugate_product(trace: CsiTrace, pair=(0, 1)) -> np.ndarray:
    a, b = pair
    return trace.samples[:, a] * np.conj(trace.samples[:, b])


def spectrogram(trace: CsiTrace, config: StftConfig = StftConfig()) -> Spectrogram:
    fs = trace.sample_rate
    nper = int(round(config.window * fs))
    hop = int(round(config.hop * fs))
    n = trace.samples.shape[0]
    if nper > n:
        raise WindowTooLong(f"STFT window of {nper} samples exceeds the {n}-sample trace")
    if hop < 1 or hop > nper:
        raise InvalidConfig("hop must be between one sample and the window length")
    x = conjugate_product(trace)
    x = x - x.mean()
    if config.band < fs / 2:
        sos = signal.butter(config.filter_order, config.band, fs=fs, output="sos")
        if n > 3 * (2 * len(sos) + 1):
            x = signal.sosfiltfilt(sos, x)
    f, t, Z = signal.stft(x, fs=fs, window="hann", nperseg=nper, noverlap=nper - hop,
                          nfft=max(config.nfft, nper), detrend=False, return_onesided=False,
                          boundary=None, padded=False)
    f = np.fft.fftshift(f)
    Z = np.fft.fftshift(Z, axes=0)
    return Spectrogram(trace.t0 + t, f, np.abs(Z))


def extract_plcr(trace: CsiTrace, config: StftConfig = StftConfig(), strict: bool = False) -> PlcrSeries:
    """PLCR per STFT frame from the dominant signed Doppler peak.

    Frames without dynamic energy are returned with ``valid`` false.  With
    ``strict`` an all-invalid trace raises :class:`AllZeroTrace`.
    """
    spec = spectrogram(trace, config)
    x = conjugate_product(trace)
    static_level = float(np.mean(np.abs(x)))
    band = np.abs(spec.frequencies) <= config.band
    mag = spec.magnitude[band]
    freqs = spec.frequencies[band]
    peak_idx = np.argmax(mag, axis=0)
    peak = mag[peak_idx, np.arange(mag.shape[1])]
    median = np.median(mag, axis=0)
    valid = (peak > config.motion_threshold * static_level) & (peak > config.peak_to_median * median)
    values = -trace.wavelength * freqs[peak_idx]
    bin_hz = trace.sample_rate / max(config.nfft, int(round(config.window * trace.sample_rate)))
    if strict and not valid.any():
        raise AllZeroTrace("no frame carries dynamic energy")
    return PlcrSeries(spec.times, np.where(valid, values, np.nan), valid, bin_hz * trace.wavelength)
