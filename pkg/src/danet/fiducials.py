"""Per-beat fiducial points shared by the generator truth and the delineator."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

BOUNDARIES = ("p_onset", "p_offset", "qrs_onset", "qrs_offset", "t_onset", "t_offset")


@dataclass
class Beat:
    r_peak: int
    qrs_onset: int
    qrs_offset: int
    p_onset: Optional[int] = None
    p_offset: Optional[int] = None
    t_onset: Optional[int] = None
    t_offset: Optional[int] = None

    @property
    def has_p(self) -> bool:
        return self.p_onset is not None and self.p_offset is not None

    @property
    def has_t(self) -> bool:
        return self.t_onset is not None and self.t_offset is not None

    def ordered_points(self) -> list[int]:
        """Present boundaries in physiological order (P, QRS, T)."""
        pts = []
        if self.has_p:
            pts += [self.p_onset, self.p_offset]
        pts += [self.qrs_onset, self.qrs_offset]
        if self.has_t:
            pts += [self.t_onset, self.t_offset]
        return pts

    def is_consistent(self) -> bool:
        pts = self.ordered_points()
        ordered = all(a < b for a, b in zip(pts, pts[1:]))
        return ordered and self.qrs_onset <= self.r_peak <= self.qrs_offset

    def to_dict(self) -> dict:
        return {k: (None if v is None else int(v)) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "Beat":
        return cls(**{k: d.get(k) for k in ("r_peak", "qrs_onset", "qrs_offset",
                                            "p_onset", "p_offset", "t_onset", "t_offset")})


@dataclass
class FiducialSet:
    """Ordered beats of one single-lead signal; indices are zero-based samples at ``fs``."""

    fs: float
    beats: list[Beat] = field(default_factory=list)

    def __len__(self):
        return len(self.beats)

    def boundary(self, name: str) -> list[int]:
        return [getattr(b, name) for b in self.beats if getattr(b, name) is not None]

    def max_index(self) -> int:
        pts = [p for b in self.beats for p in b.ordered_points()]
        return max(pts) if pts else -1

    def rescaled(self, fs: float) -> "FiducialSet":
        """Map every index onto a grid sampled at ``fs`` (rounded to the nearest sample)."""
        ratio = fs / self.fs
        beats = []
        for b in self.beats:
            d = {k: (None if v is None else int(round(v * ratio))) for k, v in b.to_dict().items()}
            beats.append(Beat.from_dict(d))
        return FiducialSet(fs=float(fs), beats=beats)

    def to_dict(self) -> dict:
        return {"fs": self.fs, "beats": [b.to_dict() for b in self.beats]}

    @classmethod
    def from_dict(cls, d: dict) -> "FiducialSet":
        return cls(fs=float(d["fs"]), beats=[Beat.from_dict(b) for b in d["beats"]])


# the generator's ground truth uses the same schema
FiducialTruth = FiducialSet
