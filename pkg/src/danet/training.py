"""Three-stage DANet training plus DANet-h and baseline CNN training.

Every stage gets a fresh Adam state. Mini-batch order is a permutation drawn
from ``(seed, epoch)``; the last short batch is kept.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import nn
from .dataset import Dataset
from .errors import DataError, NumericError, SequencingError
from .evaluation import evaluate
from .models import Classifier, DanetModel, Enhancer, save_checkpoint
from .nn import functional as F

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    batch_size: int = 256
    epochs: int = 100
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    seed: int = 0
    shuffle: bool = True
    aug_noise_sigma: float = 0.0          # augmentation is off unless > 0
    aug_segment_len: Optional[int] = None
    checkpoint_every: int = 0
    checkpoint_dir: Optional[str] = None
    best_on_validation: bool = False      # stage 3 only

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class StageReport:
    stage: str
    losses: list
    wall_time: float = 0.0
    validation: Optional[dict] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def write(self, out_dir, prefix: str = "") -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rep = out / f"{prefix}report.json"
        rep.write_text(json.dumps(self.to_dict(), indent=2))
        curve = out / f"{prefix}losses.csv"
        with open(curve, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "loss"])
            for i, v in enumerate(self.losses, start=1):
                w.writerow([i, repr(v)])
        return rep, curve


def _stage_of(model) -> int:
    return getattr(model, "stage", 0)


def _augment(xb: np.ndarray, cfg: TrainConfig, rng: np.random.Generator, wb=None):
    if cfg.aug_segment_len is not None and cfg.aug_segment_len < xb.shape[-1]:
        start = int(rng.integers(0, xb.shape[-1] - cfg.aug_segment_len + 1))
        xb = xb[..., start:start + cfg.aug_segment_len]
        if wb is not None:
            wb = wb[..., start:start + cfg.aug_segment_len]
    if cfg.aug_noise_sigma > 0:
        xb = xb + rng.normal(0.0, cfg.aug_noise_sigma, size=xb.shape)
    return xb, wb


def _fit(params, batch_loss, n: int, cfg: TrainConfig, stage: str, on_epoch=None) -> list[float]:
    """Generic mini-batch loop; ``batch_loss(idx, rng)`` returns a scalar Tensor."""
    opt = nn.Adam(params, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    losses = []
    for epoch in range(cfg.epochs):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(n) if cfg.shuffle else np.arange(n)
        aug_rng = np.random.default_rng([cfg.seed, epoch, 1])
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            opt.zero_grad()
            loss = batch_loss(idx, aug_rng)
            value = float(loss.data)
            if not np.isfinite(value):
                raise NumericError(f"{stage}: non-finite loss at epoch {epoch + 1}, batch starting {start}")
            loss.backward()
            for p in params:
                if p.grad is not None and not np.all(np.isfinite(p.grad)):
                    raise NumericError(f"{stage}: non-finite gradient in {p.name} at epoch {epoch + 1}")
            opt.step()
            total += value * len(idx)
        losses.append(total / n)
        log.debug("%s epoch %d/%d loss %.6f", stage, epoch + 1, cfg.epochs, losses[-1])
        if on_epoch is not None:
            on_epoch(epoch, losses[-1])
    return losses


def _periodic_checkpoint(model, cfg: TrainConfig, tag: str):
    def hook(epoch, _loss):
        if cfg.checkpoint_every and cfg.checkpoint_dir and (epoch + 1) % cfg.checkpoint_every == 0:
            save_checkpoint(model, Path(cfg.checkpoint_dir) / f"ckpt-{tag}-epoch{epoch + 1:03d}.dant", tag=tag)
    return hook


def enhancer_mse(enhancer: Enhancer, data: Dataset, batch: int = 256) -> float:
    total = 0.0
    for start in range(0, len(data), batch):
        w2 = enhancer.weights(data.x[start:start + batch])
        total += float(np.sum((w2 - data.w1[start:start + batch]) ** 2))
    return total / data.w1.size


def constant_mse(train_w1: np.ndarray, data: Dataset) -> float:
    """MSE of predicting the training-set mean weight everywhere."""
    return float(np.mean((data.w1 - train_w1.mean()) ** 2))


def _require_w1(data: Dataset, frames: Optional[int] = None):
    if data.w1 is None:
        raise DataError("manual attention weights are required for this stage")
    if data.w1.shape != (len(data), data.x.shape[-1]):
        raise DataError(f"manual weights {data.w1.shape} do not match records {data.x.shape}")


def pretrain_enhancer(model, data: Dataset, cfg: TrainConfig, val: Optional[Dataset] = None) -> StageReport:
    """Stage 1: fit enhancer output to the manual weights under MSE."""
    _require_w1(data)
    enhancer = model.enhancer if isinstance(model, DanetModel) else model
    params = enhancer.parameters()
    x, target = data.x, data.w1[:, None, :]

    def batch_loss(idx, rng):
        xb, wb = _augment(x[idx], cfg, rng, target[idx])
        return F.mse_loss(enhancer(xb), wb)

    t0 = time.perf_counter()
    losses = _fit(params, batch_loss, len(data), cfg, "stage-1", _periodic_checkpoint(model, cfg, "stage-1"))
    if isinstance(model, DanetModel):
        model.stage = 1
    report = StageReport("stage-1", losses, time.perf_counter() - t0)
    if val is not None:
        _require_w1(val)
        report.validation = {"mse": enhancer_mse(enhancer, val),
                             "constant_mse": constant_mse(data.w1, val)}
    return report


def _validation(kind, model, val):
    if val is None or val.y is None:
        return None
    rep, _ = evaluate(kind, model, val)
    return rep.to_dict()


def _train_classifier(classifier: Classifier, inputs: np.ndarray, y: np.ndarray, cfg: TrainConfig,
                      stage: str, ckpt_model=None) -> list[float]:
    params = classifier.parameters()

    def batch_loss(idx, rng):
        xb, _ = _augment(inputs[idx], cfg, rng)
        return F.bce_loss(classifier(xb), y[idx])

    hook = _periodic_checkpoint(ckpt_model or classifier, cfg, stage)
    return _fit(params, batch_loss, len(y), cfg, stage, hook)


def _require_labels(data: Dataset):
    if data.y is None:
        raise DataError("labels are required for supervised training")


def train_stage2(model: DanetModel, data: Dataset, cfg: TrainConfig, val: Optional[Dataset] = None) -> StageReport:
    """Stage 2: enhancer frozen, classifier trained on x * w2 under BCE.

    The frozen enhancer's weights are computed once for the whole training set.
    """
    if _stage_of(model) != 1:
        raise SequencingError(f"stage 2 needs a stage-1 model, got {model.stage_tag}")
    _require_labels(data)
    t0 = time.perf_counter()
    model.enhancer.set_trainable(False)
    try:
        w2 = np.concatenate([model.enhancer.weights(data.x[s:s + 256]) for s in range(0, len(data), 256)])
        inputs = data.x * w2[:, None, :]
        losses = _train_classifier(model.classifier, inputs, data.y, cfg, "stage-2", model)
    finally:
        model.enhancer.set_trainable(True)
    model.stage = 2
    return StageReport("stage-2", losses, time.perf_counter() - t0, _validation("danet", model, val))


def train_stage3(model: DanetModel, data: Dataset, cfg: TrainConfig, val: Optional[Dataset] = None) -> StageReport:
    """Stage 3: fine-tune enhancer and classifier jointly under BCE."""
    if _stage_of(model) != 2:
        raise SequencingError(f"stage 3 needs a stage-2 model, got {model.stage_tag}")
    _require_labels(data)
    model.set_trainable(True)
    params = model.parameters()
    x, y = data.x, data.y
    best = {"score": -np.inf, "state": None, "epoch": None}

    def batch_loss(idx, rng):
        xb, _ = _augment(x[idx], cfg, rng)
        return F.bce_loss(model(xb), y[idx])

    periodic = _periodic_checkpoint(model, cfg, "stage-3")

    def on_epoch(epoch, loss):
        periodic(epoch, loss)
        if cfg.best_on_validation and val is not None:
            rep, _ = evaluate("danet", model, val)
            if rep.f_avg > best["score"]:
                best.update(score=rep.f_avg, state=model.state(), epoch=epoch + 1)

    t0 = time.perf_counter()
    losses = _fit(params, batch_loss, len(data), cfg, "stage-3", on_epoch)
    extra = {}
    if best["state"] is not None:
        model.load_state(best["state"])
        extra = {"best_epoch": best["epoch"], "best_val_f_avg": best["score"]}
    model.stage = 3
    return StageReport("stage-3", losses, time.perf_counter() - t0, _validation("danet", model, val), extra)


def train_danet_h(classifier: Classifier, data: Dataset, cfg: TrainConfig, val: Optional[Dataset] = None) -> StageReport:
    """Hard-coded attention: train the classifier on x * w1."""
    _require_w1(data)
    _require_labels(data)
    t0 = time.perf_counter()
    losses = _train_classifier(classifier, data.x * data.w1[:, None, :], data.y, cfg, "danet-h")
    return StageReport("danet-h", losses, time.perf_counter() - t0, _validation("danet-h", classifier, val))


def train_baseline(classifier: Classifier, data: Dataset, cfg: TrainConfig, val: Optional[Dataset] = None) -> StageReport:
    """Plain CNN on the preprocessed records."""
    _require_labels(data)
    t0 = time.perf_counter()
    losses = _train_classifier(classifier, data.x, data.y, cfg, "baseline")
    return StageReport("baseline", losses, time.perf_counter() - t0, _validation("baseline", classifier, val))
