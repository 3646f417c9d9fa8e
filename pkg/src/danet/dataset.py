"""Turn record files plus labels into arrays ready for training."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .attention import DiseaseRule, RULES, manual_weights
from .delineator import DEFAULT_CONFIG, DelineatorConfig, delineate
from .ecg_io import EcgRecord, load_labels, load_record, record_path
from .errors import DataError, ShapeError
from .signal_pipeline import PreprocessConfig, preprocess


@dataclass
class Dataset:
    ids: list
    x: np.ndarray                      # (n, leads, frames)
    y: Optional[np.ndarray] = None     # (n,) 1.0 = APC
    w1: Optional[np.ndarray] = None    # (n, frames) manual weights
    fiducials: Optional[list] = None
    fs: float = 150.0

    def __post_init__(self):
        if self.x.ndim != 3 or len(self.x) != len(self.ids):
            raise ShapeError(f"x must be (n, leads, frames) with n == {len(self.ids)}, got {self.x.shape}")
        if self.y is not None and len(self.y) != len(self.ids):
            raise ShapeError("labels and records differ in count")
        if self.w1 is not None and self.w1.shape != (self.x.shape[0], self.x.shape[2]):
            raise ShapeError(f"manual weights {self.w1.shape} do not match records {self.x.shape}")

    def __len__(self):
        return len(self.ids)

    @property
    def n_frames(self) -> int:
        return self.x.shape[2]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset([self.ids[i] for i in idx], self.x[idx],
                       None if self.y is None else self.y[idx],
                       None if self.w1 is None else self.w1[idx],
                       None if self.fiducials is None else [self.fiducials[i] for i in idx],
                       self.fs)


def delineation_lead(rec: EcgRecord) -> int:
    return rec.leads.index("II") if "II" in rec.leads else 0


def prepare_record(rec: EcgRecord, cfg: PreprocessConfig, rule: DiseaseRule = RULES["apc"],
                   delin_cfg: DelineatorConfig = DEFAULT_CONFIG):
    """Preprocess, delineate the preprocessed lead, and build manual weights.

    Fiducial indices live on the preprocessed sample grid.
    """
    pre = preprocess(rec, cfg)
    fid = delineate(pre.samples[delineation_lead(pre)], pre.fs, delin_cfg)
    w1 = manual_weights(fid, rule, pre.n_frames)
    return pre, fid, w1


def _prepare_path(args):
    path, fmt, cfg, rule, delin_cfg = args
    pre, fid, w1 = prepare_record(load_record(path, fmt), cfg, rule, delin_cfg)
    return pre.samples, pre.fs, fid, w1


def from_records(records: list, labels: Optional[list], cfg: PreprocessConfig,
                 rule: DiseaseRule = RULES["apc"], delin_cfg: DelineatorConfig = DEFAULT_CONFIG) -> Dataset:
    xs, w1s, fids, fs = [], [], [], cfg.target_fs
    for rec in records:
        pre, fid, w1 = prepare_record(rec, cfg, rule, delin_cfg)
        xs.append(pre.samples)
        w1s.append(w1)
        fids.append(fid)
        fs = pre.fs
    y = None if labels is None else np.array([1.0 if l.is_apc else 0.0 for l in labels])
    return _stack([r.id for r in records], xs, y, w1s, fids, fs)


def _stack(ids, xs, y, w1s, fids, fs) -> Dataset:
    shapes = {x.shape for x in xs}
    if len(shapes) != 1:
        raise DataError(f"records differ in shape after preprocessing: {sorted(shapes)}")
    return Dataset(list(ids), np.stack(xs), y, np.stack(w1s), fids, fs)


def load_dataset(records_dir, labels_path, cfg: PreprocessConfig, rule: DiseaseRule = RULES["apc"],
                 delin_cfg: DelineatorConfig = DEFAULT_CONFIG, fmt: str = "csv", jobs: int = 1) -> Dataset:
    """Load every labelled record, preprocess and delineate it.

    With ``jobs > 1`` records are processed in worker processes; output order
    always follows the labels file.
    """
    labels = load_labels(labels_path)
    if not labels:
        raise DataError(f"{labels_path}: no labelled records")
    paths = []
    for lab in labels:
        p = record_path(records_dir, lab.record_id)
        if not p.exists():
            raise DataError(f"record file for {lab.record_id!r} not found under {records_dir}")
        paths.append(p)
    tasks = [(p, fmt, cfg, rule, delin_cfg) for p in paths]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_prepare_path, tasks, chunksize=16))
    else:
        results = [_prepare_path(t) for t in tasks]
    y = np.array([1.0 if l.is_apc else 0.0 for l in labels])
    return _stack([l.record_id for l in labels], [r[0] for r in results], y,
                  [r[3] for r in results], [r[2] for r in results], results[0][1])
