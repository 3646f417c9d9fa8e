"""Deterministic preprocessing: resample, band-pass, lead selection, normalisation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy import signal

from .ecg_io import EcgRecord
from .errors import ConfigError, EmptyRecordError, LeadError, NyquistError

KAISER_BETA = 8.0
TAPS_PER_PHASE = 64
CUTOFF_FRACTION = 0.45
STD_FLOOR = 1e-6


@dataclass
class PreprocessConfig:
    target_fs: Optional[float] = 150.0
    band: Optional[tuple] = (0.5, 50.0)
    filter_order: int = 6
    leads_keep: Optional[list] = field(default_factory=lambda: ["II"])
    normalize: str = "none"

    def __post_init__(self):
        if self.band is not None:
            self.band = tuple(float(b) for b in self.band)
        if self.leads_keep is not None:
            self.leads_keep = list(self.leads_keep)
        self.validate()

    def validate(self):
        if self.target_fs is not None and not self.target_fs > 0:
            raise ConfigError(f"target_fs must be positive, got {self.target_fs}")
        if self.filter_order not in (2, 4, 6, 8):
            raise ConfigError(f"filter_order must be one of 2, 4, 6, 8; got {self.filter_order}")
        if self.normalize not in ("none", "zscore"):
            raise ConfigError(f"normalize must be 'none' or 'zscore', got {self.normalize!r}")
        if self.band is not None:
            low, high = self.band
            if not 0 < low < high:
                raise ConfigError(f"band must satisfy 0 < low < high, got {self.band}")
            if self.target_fs is not None and high >= self.target_fs / 2:
                raise NyquistError(f"band high edge {high} Hz >= Nyquist of {self.target_fs} Hz")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["band"] = None if self.band is None else list(self.band)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocessConfig":
        return cls(**d)


def _rational(ratio: float) -> Fraction:
    return Fraction(ratio).limit_denominator(1000)


def design_antialias(up: int, down: int, fs_in: float, fs_out: float) -> np.ndarray:
    """Kaiser-windowed sinc prototype for a polyphase resampler (``64*up + 1`` taps)."""
    fs_up = fs_in * up
    cutoff = CUTOFF_FRACTION * min(fs_in, fs_out)
    numtaps = TAPS_PER_PHASE * up + 1
    return signal.firwin(numtaps, cutoff, window=("kaiser", KAISER_BETA), fs=fs_up)


def resample(rec: EcgRecord, target_fs: float) -> EcgRecord:
    if not target_fs > 0:
        raise ConfigError(f"target_fs must be positive, got {target_fs}")
    if rec.n_frames == 0:
        raise EmptyRecordError(f"record {rec.id!r} is empty")
    if target_fs == rec.fs:
        return rec.with_samples(rec.samples.copy())

    frac = _rational(target_fs / rec.fs)
    up, down = frac.numerator, frac.denominator
    h = design_antialias(up, down, rec.fs, target_fs)
    # resample_poly scales the prototype by ``up`` to restore unit passband gain
    out = signal.resample_poly(rec.samples, up, down, axis=1, window=h)
    n_out = int(round(rec.n_frames * target_fs / rec.fs))
    if out.shape[1] >= n_out:
        out = out[:, :n_out]
    else:
        out = np.pad(out, ((0, 0), (0, n_out - out.shape[1])), mode="edge")
    return rec.with_samples(out, fs=float(target_fs))


def butter_sos(low: float, high: float, order: int, fs: float) -> np.ndarray:
    """Second-order sections of an order-``order`` Butterworth band-pass."""
    if high >= fs / 2:
        raise NyquistError(f"high edge {high} Hz >= Nyquist ({fs / 2} Hz)")
    if not 0 < low < high:
        raise ConfigError(f"need 0 < low < high, got ({low}, {high})")
    if order % 2 or order < 2:
        raise ConfigError(f"band-pass order must be even, got {order}")
    return signal.butter(order // 2, [low, high], btype="bandpass", output="sos", fs=fs)


def bandpass(rec: EcgRecord, low: float, high: float, order: int = 6) -> EcgRecord:
    """Zero-phase (forward-backward) Butterworth band-pass applied per lead."""
    sos = butter_sos(low, high, order, rec.fs)
    padlen = min(3 * (2 * len(sos) + 1), rec.n_frames - 1)
    out = signal.sosfiltfilt(sos, rec.samples, axis=1, padlen=padlen)
    return rec.with_samples(out)


def select_leads(rec: EcgRecord, names: Sequence[str]) -> EcgRecord:
    missing = [n for n in names if n not in rec.leads]
    if missing:
        raise LeadError(f"record {rec.id!r} has no lead(s) {missing}; available {rec.leads}")
    idx = [rec.leads.index(n) for n in names]
    return rec.with_samples(rec.samples[idx].copy(), leads=list(names))


def zscore(rec: EcgRecord) -> EcgRecord:
    mean = rec.samples.mean(axis=1, keepdims=True)
    std = np.maximum(rec.samples.std(axis=1, keepdims=True), STD_FLOOR)
    return rec.with_samples((rec.samples - mean) / std)


def preprocess(rec: EcgRecord, cfg: PreprocessConfig) -> EcgRecord:
    """Resample, band-pass, select leads, then optionally z-score, in that order."""
    out = rec
    if cfg.target_fs is not None:
        out = resample(out, cfg.target_fs)
    if cfg.band is not None:
        out = bandpass(out, cfg.band[0], cfg.band[1], cfg.filter_order)
    if cfg.leads_keep is not None:
        out = select_leads(out, cfg.leads_keep)
    if cfg.normalize == "zscore":
        out = zscore(out)
    return out
