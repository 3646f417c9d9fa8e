"""Desk-scale synthetic benchmark comparing the CNN, DANet stages and DANet-h.

One fixed dataset is generated; each seed re-initialises every model and
reshuffles mini-batches. Run ``python3 -m danet.benchmark`` for a summary.
"""

from __future__ import annotations

import argparse
import json
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .dataset import Dataset, from_records
from .ecg_io import SynthParams, synth_record
from .evaluation import evaluate
from .models import build_classifier, build_danet
from .signal_pipeline import PreprocessConfig
from .training import (TrainConfig, constant_mse, enhancer_mse, pretrain_enhancer, train_baseline,
                       train_danet_h, train_stage2, train_stage3)

MODELS = ("CNN", "stage-2 DANet", "stage-3 DANet", "DANet-h")


@dataclass
class BenchmarkConfig:
    n_train: int = 2000
    n_test: int = 500
    apc_fraction: float = 0.07
    noise_sigma: float = 0.05
    record_fs: float = 500.0
    data_seed: int = 2024
    seeds: tuple = (0, 1, 2, 3, 4)
    batch_size: int = 32
    epochs_stage1: int = 12
    epochs_stage2: int = 20
    epochs_stage3: int = 5
    epochs_single: int = 20     # CNN and DANet-h, matching stage 2


@dataclass
class SeedResult:
    seed: int
    f_avg: dict
    metrics: dict
    stage1_mse: float
    constant_mse: float
    wall_time: float


@dataclass
class BenchmarkResult:
    config: dict
    runs: list = field(default_factory=list)

    def median_f_avg(self) -> dict:
        return {m: float(np.median([r.f_avg[m] for r in self.runs])) for m in MODELS}

    def median_mse_ratio(self) -> float:
        return float(np.median([r.constant_mse / r.stage1_mse for r in self.runs]))

    def to_dict(self) -> dict:
        return {"config": self.config, "runs": [asdict(r) for r in self.runs],
                "median_f_avg": self.median_f_avg(), "median_mse_ratio": self.median_mse_ratio()}


def synth_split(n: int, apc_fraction: float, base: SynthParams, seed: int) -> Dataset:
    """In-memory equivalent of ``synth_dataset`` followed by preprocessing and delineation."""
    n_apc = int(np.floor(n * apc_fraction + 0.5))
    is_apc = np.zeros(n, dtype=bool)
    is_apc[np.random.default_rng(seed).permutation(n)[:n_apc]] = True
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]
    records, labels = [], []
    for i in range(n):
        rec, _, lab = synth_record(replace(base, apc=bool(is_apc[i]), seed=seeds[i], record_id=f"rec{i:05d}"))
        records.append(rec)
        labels.append(lab)
    return from_records(records, labels, PreprocessConfig())


def make_data(cfg: BenchmarkConfig) -> tuple[Dataset, Dataset]:
    base = SynthParams(fs=cfg.record_fs, noise_sigma=cfg.noise_sigma)
    train = synth_split(cfg.n_train, cfg.apc_fraction, base, cfg.data_seed)
    test = synth_split(cfg.n_test, cfg.apc_fraction, base, cfg.data_seed + 1)
    return train, test


def run_seed(seed: int, train: Dataset, test: Dataset, cfg: BenchmarkConfig) -> SeedResult:
    t0 = time.perf_counter()
    tcfg = TrainConfig(batch_size=cfg.batch_size, seed=seed)
    danet = build_danet(seed=seed)
    pretrain_enhancer(danet, train, replace(tcfg, epochs=cfg.epochs_stage1))
    mse, const = enhancer_mse(danet.enhancer, test), constant_mse(train.w1, test)
    reports = {}
    train_stage2(danet, train, replace(tcfg, epochs=cfg.epochs_stage2))
    reports["stage-2 DANet"] = evaluate("danet", danet, test)[0]
    train_stage3(danet, train, replace(tcfg, epochs=cfg.epochs_stage3))
    reports["stage-3 DANet"] = evaluate("danet", danet, test)[0]
    cnn = build_classifier(seed=seed)
    train_baseline(cnn, train, replace(tcfg, epochs=cfg.epochs_single))
    reports["CNN"] = evaluate("baseline", cnn, test)[0]
    hard = build_classifier(seed=seed)
    train_danet_h(hard, train, replace(tcfg, epochs=cfg.epochs_single))
    reports["DANet-h"] = evaluate("danet-h", hard, test)[0]
    return SeedResult(seed, {m: reports[m].f_avg for m in MODELS},
                      {m: reports[m].to_dict() for m in MODELS}, mse, const, time.perf_counter() - t0)


def run_benchmark(cfg: BenchmarkConfig = BenchmarkConfig(), data=None, progress=None) -> BenchmarkResult:
    train, test = data if data is not None else make_data(cfg)
    result = BenchmarkResult(asdict(cfg))
    for seed in cfg.seeds:
        result.runs.append(run_seed(seed, train, test, cfg))
        if progress is not None:
            progress(result.runs[-1])
    return result


def main(argv=None):
    p = argparse.ArgumentParser(description="Synthetic APC benchmark (CNN vs DANet vs DANet-h).")
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--n-train", type=int, default=2000)
    p.add_argument("--n-test", type=int, default=500)
    p.add_argument("--out", default=None, help="write the full result as JSON")
    args = p.parse_args(argv)
    cfg = BenchmarkConfig(n_train=args.n_train, n_test=args.n_test, seeds=tuple(args.seeds))

    def show(r: SeedResult):
        cells = "  ".join(f"{m}={100 * r.f_avg[m]:.2f}%" for m in MODELS)
        print(f"seed {r.seed}: {cells}  mse ratio {r.constant_mse / r.stage1_mse:.2f}  ({r.wall_time:.0f} s)",
              flush=True)

    result = run_benchmark(cfg, progress=show)
    print("median F_AVG:", {m: round(100 * v, 2) for m, v in result.median_f_avg().items()})
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(result.to_dict(), fh, indent=2)


if __name__ == "__main__":
    main()
