"""Rule-driven manual attention weights, point-wise weighting and augmentation.

Weights are plain 1-D float arrays of length frameC, shared by every lead.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .ecg_io import EcgRecord
from .errors import BoundsError, ConfigError, LengthError, ShapeError
from .fiducials import Beat, FiducialSet

REGIONS = ("P", "QRS", "T", "ST")


@dataclass(frozen=True)
class DiseaseRule:
    name: str
    region: str
    in_weight: float = 1.0
    base_weight: float = 0.3

    def __post_init__(self):
        if self.region not in REGIONS:
            raise ConfigError(f"region must be one of {REGIONS}, got {self.region!r}")
        if not 0 < self.base_weight <= self.in_weight <= 1:
            raise ConfigError(
                f"need 0 < base_weight <= in_weight <= 1, got {self.base_weight}, {self.in_weight}")

    def span(self, beat: Beat):
        """Inclusive (start, end) of this rule's region in ``beat``, or None if absent."""
        if self.region == "P":
            return (beat.p_onset, beat.p_offset) if beat.has_p else None
        if self.region == "QRS":
            return beat.qrs_onset, beat.qrs_offset
        if self.region == "T":
            return (beat.t_onset, beat.t_offset) if beat.has_t else None
        return (beat.qrs_offset, beat.t_offset) if beat.has_t else None

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "DiseaseRule":
        return cls(**json.loads(text))


RULES = {
    "apc": DiseaseRule("APC", "P", 1.0, 0.3),
    "stt": DiseaseRule("ST-T", "ST", 1.0, 0.3),
}


def get_rule(name_or_path: str) -> DiseaseRule:
    """Look up a registered rule, or read a custom one from a JSON file."""
    if name_or_path in RULES:
        return RULES[name_or_path]
    path = Path(name_or_path)
    if path.exists():
        return DiseaseRule.from_json(path.read_text())
    raise ConfigError(f"unknown rule {name_or_path!r}; expected one of {sorted(RULES)} or a JSON file")


def manual_weights(fid: FiducialSet, rule: DiseaseRule, n_frames: int) -> np.ndarray:
    w = np.full(n_frames, rule.base_weight, dtype=np.float64)
    for beat in fid.beats:
        span = rule.span(beat)
        if span is None:
            continue
        lo, hi = span
        if lo < 0 or hi >= n_frames:
            raise BoundsError(f"region [{lo}, {hi}] outside [0, {n_frames})")
        w[lo:hi + 1] = rule.in_weight
    return w


def apply_weights(rec: EcgRecord, w) -> EcgRecord:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or len(w) != rec.n_frames:
        raise ShapeError(f"weights of shape {w.shape} do not match {rec.n_frames} frames")
    return rec.with_samples(rec.samples * w[None, :])


def augment_segment(rec: EcgRecord, w, out_len: int, rng: np.random.Generator):
    """Crop the record and its weights to the same random window of ``out_len`` frames."""
    w = np.asarray(w, dtype=np.float64)
    if len(w) != rec.n_frames:
        raise ShapeError(f"weights of length {len(w)} do not match {rec.n_frames} frames")
    if out_len > rec.n_frames or out_len < 1:
        raise LengthError(f"out_len {out_len} not in [1, {rec.n_frames}]")
    start = int(rng.integers(0, rec.n_frames - out_len + 1))
    stop = start + out_len
    return rec.with_samples(rec.samples[:, start:stop].copy()), w[start:stop].copy()


def augment_noise(rec: EcgRecord, sigma_mv: float, rng: np.random.Generator) -> EcgRecord:
    if sigma_mv < 0:
        raise ConfigError(f"sigma must be non-negative, got {sigma_mv}")
    if sigma_mv == 0:
        return rec.with_samples(rec.samples.copy())
    return rec.with_samples(rec.samples + rng.normal(0.0, sigma_mv, size=rec.samples.shape))
