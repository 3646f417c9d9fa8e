"""Confusion-matrix metrics (APC is the positive class) and report formatting."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ecg_io import APC
from .errors import DanetError, ShapeError


class EmptyMatrixError(DanetError):
    exit_code = 3


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.tn + self.fp

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class MetricsReport:
    se: float
    sp: float
    acc: float
    f_apc: float
    f_nonapc: float
    f_avg: float
    undefined: list = field(default_factory=list)   # rates whose denominator was zero

    def to_dict(self) -> dict:
        return asdict(self)

    def row(self) -> list[float]:
        return [self.se, self.sp, self.acc, self.f_apc, self.f_nonapc, self.f_avg]


def _as_binary(labels) -> np.ndarray:
    out = []
    for lab in labels:
        if isinstance(lab, str):
            out.append(1 if lab == APC else 0)
        else:
            out.append(1 if int(lab) == 1 else 0)
    return np.array(out, dtype=np.int64)


def confusion(probs: Sequence[float], labels: Sequence, threshold: float = 0.5) -> ConfusionMatrix:
    """Tally predictions; APC is predicted iff prob > threshold (strictly)."""
    probs = np.asarray(probs, dtype=np.float64).reshape(-1)
    y = _as_binary(labels)
    if len(probs) != len(y):
        raise ShapeError(f"{len(probs)} probabilities but {len(y)} labels")
    pred = probs > threshold
    pos = y == 1
    return ConfusionMatrix(tp=int(np.sum(pred & pos)), fp=int(np.sum(pred & ~pos)),
                           tn=int(np.sum(~pred & ~pos)), fn=int(np.sum(~pred & pos)))


def _ratio(num, den, name, undefined):
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def _f_score(precision, recall):
    return 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Se, Sp, Acc and both class F-scores; any 0/0 rate is reported as 0 and flagged."""
    if cm.total == 0:
        raise EmptyMatrixError("confusion matrix is empty")
    undefined: list[str] = []
    se = _ratio(cm.tp, cm.tp + cm.fn, "se", undefined)
    sp = _ratio(cm.tn, cm.tn + cm.fp, "sp", undefined)
    acc = (cm.tp + cm.tn) / cm.total
    ppv = _ratio(cm.tp, cm.tp + cm.fp, "ppv", undefined)
    npv = _ratio(cm.tn, cm.tn + cm.fn, "npv", undefined)
    f_apc = _f_score(ppv, se)
    f_non = _f_score(npv, sp)
    return MetricsReport(se, sp, acc, f_apc, f_non, (f_apc + f_non) / 2.0, undefined)


COLUMNS = ("Se", "Sp", "Acc", "F_APC", "F_NonAPC", "F_AVG")


def format_table(rows: dict) -> str:
    """Model name -> MetricsReport as a fixed-width table of percentages."""
    width = max([len("Model")] + [len(k) for k in rows])
    lines = ["  ".join(["Model".ljust(width)] + [c.rjust(8) for c in COLUMNS])]
    for name, rep in rows.items():
        cells = [f"{100 * v:.2f}%".rjust(8) for v in rep.row()]
        lines.append("  ".join([name.ljust(width)] + cells))
    return "\n".join(lines)


def report_json(rows: dict, extra: Optional[dict] = None) -> str:
    doc = {name: rep.to_dict() for name, rep in rows.items()}
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2)


# --------------------------------------------------------------------------- model evaluation

MODEL_KINDS = ("baseline", "danet", "danet-h")


def _fit_frames(x: np.ndarray, frames: int) -> np.ndarray:
    """Centre-crop records longer than the classifier input."""
    n = x.shape[-1]
    if n == frames:
        return x
    if n < frames:
        raise ShapeError(f"records have {n} frames, model expects {frames}")
    start = (n - frames) // 2
    return x[..., start:start + frames]


def predict_probs(kind: str, model, data, batch: int = 256) -> np.ndarray:
    """APC probabilities for every record in ``data`` (a Dataset)."""
    from .models import DanetModel

    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    if kind == "danet" and not isinstance(model, DanetModel):
        raise ValueError("kind 'danet' needs a DanetModel")
    clf = model.classifier if isinstance(model, DanetModel) else model
    frames = clf.cfg.input_frames
    out = []
    for start in range(0, len(data), batch):
        xb = _fit_frames(data.x[start:start + batch], frames)
        if kind == "danet-h":
            if data.w1 is None:
                raise ValueError("DANet-h evaluation needs manual weights")
            xb = xb * _fit_frames(data.w1[start:start + batch], frames)[:, None, :]
        out.append(model.predict(xb))
    return np.concatenate(out) if out else np.zeros(0)


def evaluate(kind: str, model, data, threshold: float = 0.5):
    """Run the forward pass for ``kind`` over ``data``; returns (MetricsReport, probabilities)."""
    if data.y is None:
        raise ValueError("evaluation needs labels")
    probs = predict_probs(kind, model, data)
    return metrics(confusion(probs, data.y, threshold)), probs
