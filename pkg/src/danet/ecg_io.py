"""ECG record/label file I/O and the synthetic APC/Non-APC generator."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DuplicateError,
    EmptyRecordError,
    FormatError,
    LabelError,
    ParameterError,
    ParseError,
)
from .fiducials import Beat, FiducialSet, FiducialTruth

APC = "APC"
NON_APC = "NonAPC"
LABELS = (APC, NON_APC)

TIANCHI_FS = 500.0


@dataclass
class EcgRecord:
    """Multi-lead record; ``samples`` is leads x frames in millivolts."""

    id: str
    fs: float
    leads: list[str]
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.leads = list(self.leads)
        if self.samples.ndim != 2:
            raise ParameterError(f"samples must be 2-D (leads x frames), got shape {self.samples.shape}")
        if self.samples.shape[1] == 0:
            raise EmptyRecordError(f"record {self.id!r} has no samples")
        if self.samples.shape[0] != len(self.leads) or not self.leads:
            raise ParameterError(
                f"{self.samples.shape[0]} sample rows but {len(self.leads)} lead names")
        if not self.fs > 0:
            raise ParameterError(f"fs must be positive, got {self.fs}")
        if not np.all(np.isfinite(self.samples)):
            raise ParameterError(f"record {self.id!r} contains non-finite samples")

    @property
    def n_leads(self) -> int:
        return self.samples.shape[0]

    @property
    def n_frames(self) -> int:
        return self.samples.shape[1]

    def with_samples(self, samples, fs=None, leads=None) -> "EcgRecord":
        return EcgRecord(self.id, self.fs if fs is None else fs,
                         self.leads if leads is None else leads, samples)


@dataclass(frozen=True)
class LabelEntry:
    record_id: str
    label: str

    def __post_init__(self):
        if not self.record_id:
            raise LabelError("empty record_id")
        if self.label not in LABELS:
            raise LabelError(f"unknown label {self.label!r} for record {self.record_id!r}")

    @property
    def is_apc(self) -> bool:
        return self.label == APC


# --------------------------------------------------------------------------- records

def _meta_path(csv_path: Path) -> Path:
    own = csv_path.with_suffix(".meta.json")
    if own.exists():
        return own
    return csv_path.parent / "meta.json"


def _parse_rows(lines, delimiter, n_cols, first_line_no):
    rows = []
    for r, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        cells = line.split(delimiter) if delimiter else line.split()
        if len(cells) != n_cols:
            raise ParseError(
                f"row {r} (line {first_line_no + r - 1}): expected {n_cols} columns, got {len(cells)}",
                row=r, col=None)
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            col = next(i for i, c in enumerate(cells, start=1) if not _is_float(c))
            raise ParseError(
                f"row {r}, column {col} (line {first_line_no + r - 1}): "
                f"non-numeric value {cells[col - 1].strip()!r}", row=r, col=col) from None
    return rows


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _parse_header(line: str, delimiter) -> list[str]:
    names = [c.strip() for c in (line.split(delimiter) if delimiter else line.split())]
    if not names or any(not n for n in names):
        raise FormatError(f"malformed header {line.strip()!r}: empty lead name")
    if len(set(names)) != len(names):
        raise FormatError(f"malformed header {line.strip()!r}: duplicate lead names")
    if all(_is_float(n) for n in names):
        raise FormatError(f"malformed header {line.strip()!r}: expected lead names, got numbers")
    return names


def load_record(path, format: str = "csv", *, delimiter: Optional[str] = None,
                fs: Optional[float] = None, record_id: Optional[str] = None) -> EcgRecord:
    """Read a record file and return it as leads x frames.

    ``csv`` files carry lead names on the first line, one sample per row, and a
    sidecar ``<stem>.meta.json`` (or ``meta.json``) holding ``fs`` and ``id``.
    ``tianchi_txt`` files are whitespace separated with a header line and a
    fixed 500 Hz rate; pass ``delimiter`` for other separators.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].strip():
        raise FormatError(f"{path}: missing header line")

    if format == "csv":
        delim = delimiter or ","
        meta = {}
        meta_file = _meta_path(path)
        if meta_file.exists():
            meta = json.loads(meta_file.read_text())
        rate = fs if fs is not None else meta.get("fs")
        if rate is None:
            raise FormatError(f"{path}: no sampling rate (missing meta.json and no fs given)")
        rid = record_id or meta.get("id") or path.stem
    elif format == "tianchi_txt":
        delim = delimiter
        rate = fs if fs is not None else TIANCHI_FS
        rid = record_id or path.stem
    else:
        raise FormatError(f"unknown record format {format!r}")

    leads = _parse_header(lines[0], delim)
    rows = _parse_rows(lines[1:], delim, len(leads), first_line_no=2)
    if not rows:
        raise EmptyRecordError(f"{path}: no sample rows")
    samples = np.array(rows, dtype=np.float64).T
    return EcgRecord(str(rid), float(rate), leads, samples)


def save_record(rec: EcgRecord, path) -> Path:
    """Write ``rec`` as CSV plus a ``<stem>.meta.json`` sidecar. Returns the CSV path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(rec.leads) + "\n")
        for row in rec.samples.T:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    path.with_suffix(".meta.json").write_text(json.dumps({"id": rec.id, "fs": rec.fs}))
    return path


# --------------------------------------------------------------------------- labels

def load_labels(path) -> list[LabelEntry]:
    path = Path(path)
    entries: list[LabelEntry] = []
    seen = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["record_id", "label"]:
            raise FormatError(f"{path}: expected header 'record_id,label', got {header}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"{path} line {line_no}: expected 2 columns", row=line_no - 1)
            rid, label = row[0].strip(), row[1].strip()
            if rid in seen:
                raise DuplicateError(f"{path} line {line_no}: duplicate record_id {rid!r}")
            seen.add(rid)
            entries.append(LabelEntry(rid, label))
    return entries


def save_labels(entries: Sequence[LabelEntry], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("record_id,label\n")
        for e in entries:
            fh.write(f"{e.record_id},{e.label}\n")
    return path


# --------------------------------------------------------------------------- truth files

def save_truth(truth: dict[str, FiducialSet], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"records": {rid: fid.to_dict() for rid, fid in truth.items()}}
    path.write_text(json.dumps(doc, indent=1))
    return path


def load_truth(path) -> dict[str, FiducialSet]:
    doc = json.loads(Path(path).read_text())
    return {rid: FiducialSet.from_dict(d) for rid, d in doc["records"].items()}


# --------------------------------------------------------------------------- synthesis

# nominal per-lead projection gains; unknown leads get 1.0
LEAD_GAINS = {"I": 0.6, "II": 1.0, "III": 0.5, "aVR": -0.8, "aVL": 0.3, "aVF": 0.7,
              "V1": -0.4, "V2": 0.5, "V3": 0.8, "V4": 1.1, "V5": 1.0, "V6": 0.8}

_TEN_PCT = math.sqrt(2.0 * math.log(10.0))  # Gaussian half-width at 10% of peak, in sigmas


@dataclass
class SynthParams:
    fs: float = 150.0
    duration: float = 10.0
    rr_mean: float = 0.8
    rr_jitter: float = 0.02          # uniform +/- seconds
    p_amp: float = 0.15
    p_width_ms: float = 40.0
    qrs_amp: float = 1.0
    qrs_width_ms: float = 80.0
    t_amp: float = 0.3
    t_width_ms: float = 120.0
    pr_ms: float = 160.0             # P centre to R
    rt_ms: float = 230.0             # R to T centre
    apc: bool = False
    prematurity: float = 0.6
    apc_pause: float = 1.25          # RR after the premature beat, in units of rr_mean
    apc_p_amp_scale: float = -0.8    # premature P morphology: amplitude factor
    apc_p_width_scale: float = 1.0
    noise_sigma: float = 0.0
    seed: int = 0
    leads: tuple = ("II",)
    record_id: str = "synth"

    def validate(self):
        n = self.duration * self.fs
        if not self.fs > 0 or not self.duration > 0:
            raise ParameterError("fs and duration must be positive")
        if abs(n - round(n)) > 1e-9:
            raise ParameterError(f"duration*fs = {n} is not an integer")
        widths = (self.p_width_ms + self.qrs_width_ms + self.t_width_ms) / 1000.0
        if not self.rr_mean > widths:
            raise ParameterError(f"rr_mean {self.rr_mean} s must exceed summed wave widths {widths} s")
        if not self.qrs_amp > 0:
            raise ParameterError(f"qrs_amp must be positive, got {self.qrs_amp}")
        if not 0.0 < self.prematurity < 1.0:
            raise ParameterError(f"prematurity must be in (0, 1), got {self.prematurity}")
        if self.rr_jitter < 0 or self.noise_sigma < 0:
            raise ParameterError("rr_jitter and noise_sigma must be non-negative")
        if not self.leads:
            raise ParameterError("at least one lead required")

    @property
    def n_frames(self) -> int:
        return int(round(self.duration * self.fs))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["leads"] = list(self.leads)
        return d


def _gauss(t, centre, sigma):
    return np.exp(-0.5 * ((t - centre) / sigma) ** 2)


def _span(component: np.ndarray, offset: int, n_frames: int):
    """First/last grid index where |component| reaches 10% of its peak."""
    mag = np.abs(component)
    peak = mag.max()
    if peak <= 0:
        return None
    idx = np.flatnonzero(mag >= 0.1 * peak)
    lo, hi = offset + int(idx[0]), offset + int(idx[-1])
    if lo < 0 or hi >= n_frames:
        return None
    return lo, hi


def _schedule(p: SynthParams, rng: np.random.Generator):
    """R-peak times (s) and the index of the premature beat (or None)."""
    lead_in = (p.pr_ms + p.p_width_ms) / 1000.0
    tail = (p.rt_ms + p.t_width_ms) / 1000.0
    first = max(0.5 * p.rr_mean, lead_in + 0.05)
    max_beats = int(p.duration / (p.prematurity * p.rr_mean)) + 3
    jitter = rng.uniform(-p.rr_jitter, p.rr_jitter, size=max_beats) if p.rr_jitter > 0 \
        else np.zeros(max_beats)

    def build(apc_index):
        times = [first + jitter[0]]
        for k in range(1, max_beats):
            if apc_index is not None and k == apc_index:
                rr = p.prematurity * p.rr_mean
            elif apc_index is not None and k == apc_index + 1:
                rr = p.apc_pause * p.rr_mean
            else:
                rr = p.rr_mean + jitter[k]
            if times[-1] + rr + tail >= p.duration:
                break
            times.append(times[-1] + rr)
        return times

    times = build(None)
    if len(times) < 2:
        raise ParameterError(f"duration {p.duration} s too short for two beats at rr_mean {p.rr_mean} s")
    if not p.apc:
        return times, None
    if len(times) < 4:
        raise ParameterError("duration too short to place a premature beat with a following pause")
    apc_index = int(rng.integers(1, len(times) - 2))
    times = build(apc_index)
    while apc_index + 1 >= len(times):
        apc_index -= 1
        times = build(apc_index)
    return times, apc_index


def synth_record(params: SynthParams):
    """Generate one record from Gaussian P, triphasic QRS and T bumps.

    Returns ``(EcgRecord, FiducialTruth, LabelEntry)``. Truth spans are the grid
    samples where each noiseless wave component reaches 10% of its own peak.
    """
    params.validate()
    rng = np.random.default_rng(params.seed)
    fs = params.fs
    n = params.n_frames
    r_times, apc_index = _schedule(params, rng)

    sig_p = params.p_width_ms / 1000.0 / (2 * _TEN_PCT)
    sig_t = params.t_width_ms / 1000.0 / (2 * _TEN_PCT)
    sig_q = params.qrs_width_ms / 1000.0 / 10.0
    q_off = 0.3 * params.qrs_width_ms / 1000.0

    clean = np.zeros(n)
    beats = []
    half = int(math.ceil(0.6 * fs))  # local support window for each bump
    for k, r in enumerate(r_times):
        p_amp, p_sig = params.p_amp, sig_p
        if k == apc_index:
            p_amp *= params.apc_p_amp_scale
            p_sig *= params.apc_p_width_scale
        p_c = r - params.pr_ms / 1000.0
        t_c = r + params.rt_ms / 1000.0
        parts = {
            "p": (p_c, lambda t: p_amp * _gauss(t, p_c, p_sig)),
            "qrs": (r, lambda t: params.qrs_amp * (
                -0.2 * _gauss(t, r - q_off, sig_q) + _gauss(t, r, sig_q) - 0.3 * _gauss(t, r + q_off, sig_q))),
            "t": (t_c, lambda t: params.t_amp * _gauss(t, t_c, sig_t)),
        }
        spans = {}
        for name, (centre, fn) in parts.items():
            c = int(round(centre * fs))
            lo = max(0, c - half)
            hi = min(n, c + half + 1)
            comp = fn(np.arange(lo, hi) / fs)
            clean[lo:hi] += comp
            spans[name] = _span(comp, lo, n) if np.any(comp) else None
        qrs = spans["qrs"]
        beat = Beat(r_peak=int(round(r * fs)), qrs_onset=qrs[0], qrs_offset=qrs[1])
        if spans["p"] is not None:
            beat.p_onset, beat.p_offset = spans["p"]
        if spans["t"] is not None:
            beat.t_onset, beat.t_offset = spans["t"]
        beats.append(beat)

    leads = list(params.leads)
    gains = np.array([LEAD_GAINS.get(name, 1.0) for name in leads])
    samples = gains[:, None] * clean[None, :]
    if params.noise_sigma > 0:
        samples = samples + rng.normal(0.0, params.noise_sigma, size=samples.shape)

    rec = EcgRecord(params.record_id, fs, leads, samples)
    truth = FiducialTruth(fs=fs, beats=beats)
    label = LabelEntry(params.record_id, APC if params.apc else NON_APC)
    return rec, truth, label


def synth_dataset(n: int, apc_fraction: float, base: SynthParams, seed: int, out_dir):
    """Write ``n`` synthetic records under ``out_dir``.

    Layout: ``records/<id>/record.csv`` (+ ``meta.json``), ``labels.csv`` and
    ``truth.json``. Exactly ``round(n * apc_fraction)`` records are APC.
    Returns ``(records_dir, labels_path, truth_path)``.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    if not 0.0 <= apc_fraction <= 1.0:
        raise ParameterError("apc_fraction must be in [0, 1]")
    out = Path(out_dir)
    records_dir = out / "records"
    try:
        records_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {records_dir}: {exc}") from exc
    if not os.access(records_dir, os.W_OK):
        raise OSError(f"directory {records_dir} is not writable")

    n_apc = int(math.floor(n * apc_fraction + 0.5))
    master = np.random.default_rng(seed)
    is_apc = np.zeros(n, dtype=bool)
    is_apc[master.permutation(n)[:n_apc]] = True
    child_seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]

    width = max(5, len(str(n - 1)))
    labels, truth = [], {}
    for i in range(n):
        rid = f"rec{i:0{width}d}"
        params = replace(base, apc=bool(is_apc[i]), seed=child_seeds[i], record_id=rid)
        rec, fid, lab = synth_record(params)
        rec_dir = records_dir / rid
        rec_dir.mkdir(exist_ok=True)
        save_record(rec, rec_dir / "record.csv")
        (rec_dir / "record.meta.json").rename(rec_dir / "meta.json")
        labels.append(lab)
        truth[rid] = fid
    labels_path = save_labels(labels, out / "labels.csv")
    truth_path = save_truth(truth, out / "truth.json")
    return records_dir, labels_path, truth_path


def record_path(records_dir, record_id: str) -> Path:
    """Locate a record's CSV in either supported layout."""
    base = Path(records_dir)
    nested = base / record_id / "record.csv"
    if nested.exists():
        return nested
    return base / f"{record_id}.csv"
