"""Waveform enhancer, classifier, and their DANet / DANet-h compositions.

Enhancer: pairs of dilated convolutions with a skip from each pair's input to
its output (projected 1x1 when the channel count changes), then a 1x1 head and
a sigmoid, so it emits one weight per frame.

Classifier: (conv, ReLU, max-pool) x 3, flatten, dense + ReLU, dense + sigmoid.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import nn
from .ecg_io import EcgRecord
from .errors import ConfigError, CorruptionError, FormatError, ShapeError
from .nn import functional as F

MAGIC = b"DANT"
VERSION = 1

STAGE_TAGS = {0: "stage-0", 1: "stage-1", 2: "stage-2", 3: "stage-3"}


@dataclass
class EnhancerConfig:
    in_channels: int = 1
    n_dilated_layers: int = 4
    filters: int = 6
    kernel: int = 9
    dilation: int = 7
    head_filters: int = 1
    head_kernel: int = 1
    zero_init_residual: bool = False

    def validate(self):
        if self.in_channels < 1 or self.filters < 1:
            raise ConfigError("channel counts must be positive")
        if self.n_dilated_layers < 2 or self.n_dilated_layers % 2:
            raise ConfigError(f"n_dilated_layers must be an even number >= 2, got {self.n_dilated_layers}")
        if self.kernel % 2 == 0 or self.head_kernel % 2 == 0:
            raise ConfigError("kernel sizes must be odd")
        if self.dilation < 1:
            raise ConfigError("dilation must be >= 1")
        if self.head_filters != 1:
            raise ConfigError("head must have exactly one filter (one weight per frame)")

    def receptive_field(self) -> int:
        return 1 + self.n_dilated_layers * (self.kernel - 1) * self.dilation + (self.head_kernel - 1)


@dataclass
class ClassifierConfig:
    in_channels: int = 1
    input_frames: int = 1500
    stages: list = field(default_factory=lambda: [[21, 6, 7], [13, 7, 6], [9, 5, 6]])
    hidden: int = 50
    linear: bool = False   # debug: disable ReLUs

    def __post_init__(self):
        self.stages = [list(s) for s in self.stages]

    def validate(self):
        if self.in_channels < 1 or self.hidden < 1:
            raise ConfigError("in_channels and hidden must be positive")
        if not self.stages:
            raise ConfigError("classifier needs at least one conv stage")
        frames = self.input_frames
        for k, filters, pool in self.stages:
            if k % 2 == 0 or filters < 1 or pool < 1:
                raise ConfigError(f"invalid stage (kernel={k}, filters={filters}, pool={pool})")
            if pool > frames:
                raise ConfigError(f"pool {pool} larger than {frames} frames at this stage")
            frames //= pool
        if frames < 1:
            raise ConfigError("input_frames too short for the pooling chain")

    def frame_chain(self) -> list[int]:
        """Frames after each pooling layer."""
        out, frames = [], self.input_frames
        for _, _, pool in self.stages:
            frames //= pool
            out.append(frames)
        return out

    def flat_features(self) -> int:
        return self.stages[-1][1] * self.frame_chain()[-1]


def _batch(x) -> np.ndarray:
    """Records, (C, N) arrays and (B, C, N) arrays all become (B, C, N)."""
    if isinstance(x, EcgRecord):
        x = x.samples
    if isinstance(x, nn.Tensor):
        return x
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3:
        raise ShapeError(f"expected (channels, frames) or (batch, channels, frames), got {x.shape}")
    return x


class Enhancer(nn.Module):
    def __init__(self, cfg: EnhancerConfig, seed: int = 0):
        cfg.validate()
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        self.proj = nn.Conv1d(cfg.in_channels, cfg.filters, 1, rng=rng) \
            if cfg.in_channels != cfg.filters else None
        self.layers = []
        for i in range(cfg.n_dilated_layers):
            c_in = cfg.in_channels if i == 0 else cfg.filters
            self.layers.append(nn.Conv1d(c_in, cfg.filters, cfg.kernel, cfg.dilation, rng=rng))
        self.head = nn.Conv1d(cfg.filters, cfg.head_filters, cfg.head_kernel, rng=rng)
        if cfg.zero_init_residual:
            for conv in self.layers[1::2]:
                conv.weight.data[...] = 0.0

    def block(self, i: int, h):
        """Residual pair ``i``: skip(h) + conv_b(relu(conv_a(h)))."""
        a, b = self.layers[2 * i], self.layers[2 * i + 1]
        skip = self.proj(h) if (i == 0 and self.proj is not None) else h
        return F.add(skip, b(F.relu(a(h))))

    def forward(self, x):
        h = _batch(x)
        if h.shape[1] != self.cfg.in_channels:
            raise ShapeError(f"enhancer expects {self.cfg.in_channels} leads, got {h.shape[1]}")
        for i in range(self.cfg.n_dilated_layers // 2):
            h = self.block(i, h)
        return F.sigmoid(self.head(F.relu(h)))

    def weights(self, x) -> np.ndarray:
        """Automatic attention weights, (frames,) for one record or (B, frames) for a batch."""
        unbatched = isinstance(x, EcgRecord) or np.ndim(x) == 2
        with nn.no_grad():
            w = self.forward(x).data[:, 0, :]
        return w[0] if unbatched else w


class Classifier(nn.Module):
    def __init__(self, cfg: ClassifierConfig, seed: int = 0):
        cfg.validate()
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        self.convs = []
        c_in = cfg.in_channels
        for k, filters, _ in cfg.stages:
            self.convs.append(nn.Conv1d(c_in, filters, k, rng=rng))
            c_in = filters
        self.fc = nn.Dense(cfg.flat_features(), cfg.hidden, rng=rng)
        self.out = nn.Dense(cfg.hidden, 1, rng=rng)

    def _act(self, h):
        return h if self.cfg.linear else F.relu(h)

    def trace(self, x) -> list:
        """Intermediate tensors: conv/pool outputs per stage, then flat, hidden, logit."""
        h = _batch(x)
        if h.shape[1:] != (self.cfg.in_channels, self.cfg.input_frames):
            raise ShapeError(
                f"classifier expects ({self.cfg.in_channels}, {self.cfg.input_frames}), got {h.shape[1:]}")
        steps = []
        for conv, (_, _, pool) in zip(self.convs, self.cfg.stages):
            h = self._act(conv(h))
            steps.append(h)
            h = F.maxpool1d(h, pool)
            steps.append(h)
        h = F.flatten(h)
        steps.append(h)
        h = self._act(self.fc(h))
        steps.append(h)
        steps.append(self.out(h))
        return steps

    def logit(self, x):
        return F.reshape(self.trace(x)[-1], (-1,))

    def forward(self, x):
        return F.sigmoid(self.logit(x))

    def predict(self, x) -> np.ndarray:
        with nn.no_grad():
            return self.forward(x).data


class DanetModel(nn.Module):
    """Soft-coding DANet: classifier(x * enhancer(x)). ``stage`` tracks training progress."""

    def __init__(self, enhancer: Enhancer, classifier: Classifier, lead_strategy: str = "single",
                 stage: int = 0):
        if lead_strategy not in ("single", "all"):
            raise ConfigError(f"lead strategy must be 'single' or 'all', got {lead_strategy!r}")
        if enhancer.cfg.in_channels != classifier.cfg.in_channels:
            raise ConfigError("enhancer and classifier disagree on the number of input leads")
        if lead_strategy == "single" and enhancer.cfg.in_channels != 1:
            raise ConfigError("single-lead strategy needs in_channels == 1")
        self.enhancer = enhancer
        self.classifier = classifier
        self.lead_strategy = lead_strategy
        self.stage = stage

    @property
    def stage_tag(self) -> str:
        return STAGE_TAGS[self.stage]

    def forward(self, x):
        xb = _batch(x)
        w2 = self.enhancer(xb)
        return self.classifier(F.mul(xb, w2))

    def predict(self, x) -> np.ndarray:
        with nn.no_grad():
            return self.forward(x).data


def build_enhancer(cfg: EnhancerConfig = None, seed: int = 0) -> Enhancer:
    return Enhancer(cfg or EnhancerConfig(), seed)


def build_classifier(cfg: ClassifierConfig = None, seed: int = 0) -> Classifier:
    return Classifier(cfg or ClassifierConfig(), seed)


def build_danet(enhancer_cfg: EnhancerConfig = None, classifier_cfg: ClassifierConfig = None,
                seed: int = 0, lead_strategy: str = "single") -> DanetModel:
    ss = np.random.SeedSequence(seed).spawn(2)
    return DanetModel(build_enhancer(enhancer_cfg, int(ss[0].generate_state(1)[0])),
                      build_classifier(classifier_cfg, int(ss[1].generate_state(1)[0])),
                      lead_strategy)


def enhancer_forward(model, rec) -> np.ndarray:
    enhancer = model.enhancer if isinstance(model, DanetModel) else model
    return enhancer.weights(rec)


def danet_forward(model: DanetModel, rec) -> float:
    return float(model.predict(rec)[0])


def danet_h_forward(classifier: Classifier, rec, w1) -> float:
    xb = _batch(rec)
    w1 = np.asarray(w1, dtype=np.float64)
    if w1.ndim != 1 or len(w1) != xb.shape[-1]:
        raise ShapeError(f"manual weights of shape {w1.shape} do not match {xb.shape[-1]} frames")
    return float(classifier.predict(xb * w1[None, None, :])[0])


# --------------------------------------------------------------------------- checkpoints

def _describe(model) -> dict:
    if isinstance(model, DanetModel):
        return {"kind": "danet", "stage": model.stage_tag, "lead_strategy": model.lead_strategy,
                "enhancer": asdict(model.enhancer.cfg), "classifier": asdict(model.classifier.cfg)}
    if isinstance(model, Classifier):
        return {"kind": "classifier", "classifier": asdict(model.cfg)}
    if isinstance(model, Enhancer):
        return {"kind": "enhancer", "enhancer": asdict(model.cfg)}
    raise ConfigError(f"cannot checkpoint {type(model).__name__}")


def save_checkpoint(model, path, tag: Optional[str] = None, extra: Optional[dict] = None) -> Path:
    """Binary layout: b"DANT", u32 version, u32 header length, JSON header, float64 LE arrays."""
    header = _describe(model)
    if tag is not None:
        header["stage"] = tag
    header.setdefault("stage", "untrained")
    named = list(model.named_parameters())
    header["params"] = [{"name": n, "shape": list(p.shape)} for n, p in named]
    if extra:
        header["extra"] = extra
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<II", VERSION, len(blob)))
    buf.write(blob)
    for _, p in named:
        buf.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())
    path.write_bytes(buf.getvalue())
    return path


def read_checkpoint_header(path) -> dict:
    raw = Path(path).read_bytes()
    header, _ = _parse_header(raw, path)
    return header


def _parse_header(raw: bytes, path):
    if len(raw) < 12:
        raise CorruptionError(f"{path}: truncated checkpoint ({len(raw)} bytes)")
    if raw[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}, expected {MAGIC!r}")
    version, hlen = struct.unpack("<II", raw[4:12])
    if version != VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    if len(raw) < 12 + hlen:
        raise CorruptionError(f"{path}: truncated checkpoint header")
    try:
        header = json.loads(raw[12:12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptionError(f"{path}: unreadable header: {exc}") from None
    return header, 12 + hlen


def load_checkpoint(path, expected: Optional[dict] = None):
    """Rebuild the model stored at ``path``.

    ``expected`` may hold ``enhancer`` / ``classifier`` config dicts (or config
    objects); any mismatch with the stored architecture raises ConfigError.
    """
    raw = Path(path).read_bytes()
    header, offset = _parse_header(raw, path)
    if expected:
        for key in ("enhancer", "classifier", "kind"):
            if key not in expected:
                continue
            want = expected[key]
            want = asdict(want) if hasattr(want, "__dataclass_fields__") else want
            if header.get(key) != want:
                raise ConfigError(f"{path}: stored {key} {header.get(key)} does not match expected {want}")

    kind = header.get("kind")
    if kind == "danet":
        stage = {v: k for k, v in STAGE_TAGS.items()}.get(header["stage"], 0)
        model = DanetModel(Enhancer(EnhancerConfig(**header["enhancer"])),
                           Classifier(ClassifierConfig(**header["classifier"])),
                           header.get("lead_strategy", "single"), stage)
    elif kind == "classifier":
        model = Classifier(ClassifierConfig(**header["classifier"]))
    elif kind == "enhancer":
        model = Enhancer(EnhancerConfig(**header["enhancer"]))
    else:
        raise FormatError(f"{path}: unknown model kind {kind!r}")

    named = list(model.named_parameters())
    stored = header.get("params", [])
    if [(s["name"], tuple(s["shape"])) for s in stored] != [(n, p.shape) for n, p in named]:
        raise ConfigError(f"{path}: parameter inventory does not match the declared architecture")
    for _, p in named:
        nbytes = p.data.size * 8
        if offset + nbytes > len(raw):
            raise CorruptionError(f"{path}: truncated parameter data")
        p.data = np.frombuffer(raw, dtype="<f8", count=p.data.size, offset=offset) \
            .astype(np.float64).reshape(p.shape)
        offset += nbytes
    if offset != len(raw):
        raise CorruptionError(f"{path}: {len(raw) - offset} trailing bytes after parameter data")
    model.checkpoint_header = header
    return model
