"""P-QRS-T delineation for a single-lead signal.

R peaks come from a Pan-Tompkins style detector; QRS limits from a slope
threshold search around each R; P and T from the dominant smoothed bump in
windows anchored on the QRS limits. Every threshold is relative to the signal,
so results do not depend on amplitude scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import find_peaks

from .errors import ConfigError, LengthError
from .fiducials import BOUNDARIES, Beat, FiducialSet


@dataclass(frozen=True)
class DelineatorConfig:
    mwi_ms: float = 150.0
    refractory_ms: float = 200.0
    t_discrimination_ms: float = 360.0
    qrs_search_ms: float = 100.0
    qrs_slope_frac: float = 0.10
    qrs_quiet_ms: float = 14.0
    p_window_ms: tuple = (280.0, 40.0)     # before QRS onset: (far, near)
    t_window_ms: tuple = (60.0, 450.0)     # after QRS offset: (near, far)
    t_next_guard_ms: float = 40.0
    smooth_ms: float = 14.0
    edge_frac: float = 0.05
    noise_mad_factor: float = 2.0
    min_wave_rel: float = 0.02             # wave amplitude floor, relative to QRS amplitude


DEFAULT_CONFIG = DelineatorConfig()


def _ms(ms: float, fs: float) -> int:
    return max(1, int(round(ms * fs / 1000.0)))


def _moving_average(x: np.ndarray, width: int) -> np.ndarray:
    if width <= 1:
        return x.astype(np.float64, copy=True)
    kernel = np.ones(width) / width
    return np.convolve(x, kernel, mode="same")


def _mwi_signal(x: np.ndarray, fs: float, cfg: DelineatorConfig) -> np.ndarray:
    # centred five-point derivative, squared, then integrated over ``mwi_ms``
    deriv = np.convolve(x, np.array([1.0, 2.0, 0.0, -2.0, -1.0]) / 8.0, mode="same")
    return _moving_average(deriv * deriv, _ms(cfg.mwi_ms, fs))


def detect_r_peaks(x, fs: float, cfg: DelineatorConfig = DEFAULT_CONFIG) -> list[int]:
    """Return strictly increasing R-peak indices (local maxima of ``|x|``)."""
    x = np.asarray(x, dtype=np.float64)
    if not fs > 0:
        raise ConfigError(f"fs must be positive, got {fs}")
    if len(x) < fs:
        raise LengthError(f"signal of {len(x)} samples is shorter than 1 s at {fs} Hz")
    if not np.any(x != x[0]):
        return []

    mwi = _mwi_signal(x, fs, cfg)
    refractory = _ms(cfg.refractory_ms, fs)
    cand, _ = find_peaks(mwi, distance=refractory)
    if len(cand) == 0:
        return []
    heights = mwi[cand]
    slope = np.abs(np.gradient(x))
    half_mwi = _ms(cfg.mwi_ms, fs) // 2

    learn = cand < 2 * fs
    spk = 0.25 * heights[learn].max() if learn.any() else 0.25 * heights.max()
    npk = 0.5 * float(np.mean(mwi[: int(2 * fs)]))
    thr = npk + 0.25 * (spk - npk)

    accepted: list[int] = []
    rr_hist: list[int] = []
    rejected: list[int] = []

    def max_slope(c):
        lo, hi = max(0, c - half_mwi), min(len(x), c + half_mwi + 1)
        return slope[lo:hi].max()

    for i, c in enumerate(cand):
        h = heights[i]
        if h > thr:
            if accepted and c - accepted[-1] < _ms(cfg.t_discrimination_ms, fs) \
                    and max_slope(c) < 0.5 * max_slope(accepted[-1]):
                npk = 0.125 * h + 0.875 * npk
            else:
                if accepted:
                    rr = c - accepted[-1]
                    # search back over a long gap for a missed beat
                    if rr_hist and rr > 1.66 * np.mean(rr_hist[-8:]):
                        gap = [j for j in rejected
                               if accepted[-1] + refractory <= cand[j] <= c - refractory
                               and heights[j] > 0.5 * thr]
                        if gap:
                            j = max(gap, key=lambda j: heights[j])
                            accepted.append(int(cand[j]))
                            spk = 0.25 * heights[j] + 0.75 * spk
                    rr_hist.append(c - accepted[-1])
                accepted.append(int(c))
                spk = 0.125 * h + 0.875 * spk
        else:
            rejected.append(i)
            npk = 0.125 * h + 0.875 * npk
        thr = npk + 0.25 * (spk - npk)

    # move each integrator peak onto the largest |x| nearby
    radius = _ms(cfg.mwi_ms / 2.0, fs)
    absx = np.abs(x - np.median(x))
    peaks: list[int] = []
    for c in accepted:
        lo, hi = max(0, c - radius), min(len(x), c + radius + 1)
        r = lo + int(np.argmax(absx[lo:hi]))
        if not peaks or r > peaks[-1]:
            peaks.append(r)
    return peaks


def _quiet_run(slope: np.ndarray, start: int, stop: int, step: int, thr: float, run: int) -> Optional[int]:
    """First index from ``start`` toward ``stop`` opening a run of ``run`` sub-threshold slopes."""
    k = start
    while (step < 0 and k >= stop) or (step > 0 and k <= stop):
        ok = True
        for j in range(run):
            idx = k + step * j
            if idx < 0 or idx >= len(slope) or slope[idx] >= thr:
                ok = False
                break
        if ok:
            return k
        k += step
    return None


def _find_wave(xs: np.ndarray, resid: np.ndarray, lo: int, hi: int, qrs_amp: float,
               cfg: DelineatorConfig):
    """Largest smoothed bump in ``[lo, hi]`` as (onset, offset), or None."""
    if hi - lo < 2:
        return None
    seg = xs[lo:hi + 1]
    dev = seg - np.median(seg)
    k = int(np.argmax(np.abs(dev)))
    amp = abs(dev[k])
    r = resid[lo:hi + 1]
    noise = 1.4826 * np.median(np.abs(r - np.median(r)))
    if not (amp > cfg.noise_mad_factor * noise and amp > cfg.min_wave_rel * qrs_amp):
        return None
    signed = dev * np.sign(dev[k])
    level = cfg.edge_frac * amp
    on = k
    while on > 0 and signed[on - 1] >= level:
        on -= 1
    off = k
    while off < len(seg) - 1 and signed[off + 1] >= level:
        off += 1
    if off <= on:
        return None
    return lo + on, lo + off


def delineate(x, fs: float, cfg: DelineatorConfig = DEFAULT_CONFIG) -> FiducialSet:
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    r_peaks = detect_r_peaks(x, fs, cfg)
    if not r_peaks:
        return FiducialSet(fs=fs, beats=[])

    slope = np.abs(np.gradient(x))
    xs = _moving_average(x, _ms(cfg.smooth_ms, fs) | 1)
    resid = x - xs
    search = _ms(cfg.qrs_search_ms, fs)
    half = max(1, search // 2)
    quiet = max(1, _ms(cfg.qrs_quiet_ms, fs))

    beats: list[Beat] = []
    amps: list[float] = []
    for r in r_peaks:
        lo, hi = max(0, r - half), min(n, r + half + 1)
        thr = cfg.qrs_slope_frac * slope[lo:hi].max()
        on = _quiet_run(slope, r - 1, max(0, r - search), -1, thr, quiet)
        off = _quiet_run(slope, r + 1, min(n - 1, r + search), 1, thr, quiet)
        on = max(0, r - search) if on is None else on
        off = min(n - 1, r + search) if off is None else off
        if beats and on <= beats[-1].qrs_offset:
            on = beats[-1].qrs_offset + 1
        if not on < r < off:
            on, off = min(on, r - 1), max(off, r + 1)
            if on < 0 or off >= n or (beats and on <= beats[-1].qrs_offset):
                continue
        local = x[max(0, r - search):min(n, r + search + 1)]
        amps.append(abs(x[r] - np.median(local)))
        beats.append(Beat(r_peak=r, qrs_onset=on, qrs_offset=off))

    t_near, t_far = (_ms(v, fs) for v in cfg.t_window_ms)
    guard = _ms(cfg.t_next_guard_ms, fs)
    for i, b in enumerate(beats):
        lo = b.qrs_offset + t_near
        hi = b.qrs_offset + t_far
        if i + 1 < len(beats):
            hi = min(hi, beats[i + 1].qrs_onset - guard)
        hi = min(hi, n - 1)
        wave = _find_wave(xs, resid, lo, hi, amps[i], cfg)
        if wave is not None:
            b.t_onset, b.t_offset = wave

    p_far, p_near = (_ms(v, fs) for v in cfg.p_window_ms)
    for i, b in enumerate(beats):
        lo = max(0, b.qrs_onset - p_far)
        hi = b.qrs_onset - p_near
        if i > 0:
            prev = beats[i - 1]
            lo = max(lo, (prev.t_offset if prev.has_t else prev.qrs_offset) + 1)
        wave = _find_wave(xs, resid, lo, hi, amps[i], cfg)
        if wave is not None:
            b.p_onset, b.p_offset = wave

    return FiducialSet(fs=fs, beats=beats)


@dataclass
class BoundaryStats:
    n_truth: int
    n_pred: int
    matched: int
    errors: list = field(default_factory=list)

    @property
    def sensitivity(self) -> float:
        return self.matched / self.n_truth if self.n_truth else 0.0

    @property
    def precision(self) -> float:
        return self.matched / self.n_pred if self.n_pred else 0.0


@dataclass
class MatchReport:
    tol_samples: float
    boundaries: dict

    @property
    def matched(self) -> int:
        return sum(s.matched for s in self.boundaries.values())

    @property
    def n_truth(self) -> int:
        return sum(s.n_truth for s in self.boundaries.values())

    @property
    def n_pred(self) -> int:
        return sum(s.n_pred for s in self.boundaries.values())

    @property
    def sensitivity(self) -> float:
        return self.matched / self.n_truth if self.n_truth else 0.0

    @property
    def precision(self) -> float:
        return self.matched / self.n_pred if self.n_pred else 0.0

    def merge(self, other: "MatchReport") -> "MatchReport":
        merged = {}
        for name in BOUNDARIES:
            a, b = self.boundaries[name], other.boundaries[name]
            merged[name] = BoundaryStats(a.n_truth + b.n_truth, a.n_pred + b.n_pred,
                                         a.matched + b.matched, a.errors + b.errors)
        return MatchReport(self.tol_samples, merged)

    def to_dict(self) -> dict:
        return {
            "tol_samples": self.tol_samples,
            "sensitivity": self.sensitivity,
            "precision": self.precision,
            "boundaries": {k: {"n_truth": s.n_truth, "n_pred": s.n_pred, "matched": s.matched,
                               "sensitivity": s.sensitivity, "precision": s.precision}
                           for k, s in self.boundaries.items()},
        }


def _greedy_match(pred: list[int], truth: list[int], tol: float):
    pairs = sorted((abs(p - t), i, j) for i, p in enumerate(pred)
                   for j, t in enumerate(truth) if abs(p - t) <= tol)
    used_p, used_t, errs = set(), set(), []
    for d, i, j in pairs:
        if i in used_p or j in used_t:
            continue
        used_p.add(i)
        used_t.add(j)
        errs.append(pred[i] - truth[j])
    return len(errs), errs


def fiducial_stats(pred: FiducialSet, truth: FiducialSet, tol_ms: float) -> MatchReport:
    """Per-boundary sensitivity/precision under greedy nearest matching within ``tol_ms``."""
    if pred.fs != truth.fs:
        raise ConfigError(f"sampling rates differ: predicted {pred.fs} Hz vs truth {truth.fs} Hz")
    tol = tol_ms * truth.fs / 1000.0
    stats = {}
    for name in BOUNDARIES:
        p, t = pred.boundary(name), truth.boundary(name)
        matched, errs = _greedy_match(p, t, tol)
        stats[name] = BoundaryStats(len(t), len(p), matched, errs)
    return MatchReport(tol, stats)
