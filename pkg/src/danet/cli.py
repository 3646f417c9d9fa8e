"""``danet`` command-line interface.

Exit codes: 0 ok, 2 usage/config, 3 data, 4 stage sequencing, 5 non-finite numbers.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .attention import get_rule, manual_weights
from .dataset import Dataset, delineation_lead, load_dataset, prepare_record
from .delineator import DEFAULT_CONFIG, fiducial_stats
from .ecg_io import (SynthParams, load_labels, load_record, load_truth, record_path,
                     save_labels, save_record, save_truth, synth_dataset)
from .errors import DanetError, DataError, UsageError
from .evaluation import MODEL_KINDS, evaluate, format_table, report_json
from .models import (ClassifierConfig, DanetModel, EnhancerConfig, build_classifier,
                     build_danet, load_checkpoint, read_checkpoint_header, save_checkpoint)
from .plotting import write_overlay
from .signal_pipeline import PreprocessConfig
from .training import (StageReport, TrainConfig, pretrain_enhancer, train_baseline, train_danet_h,
                       train_stage2, train_stage3)

log = logging.getLogger("danet")


# --------------------------------------------------------------------------- run manifest

@dataclass
class RunManifest:
    records_dir: str
    train_labels: str
    test_labels: str
    val_labels: Optional[str] = None
    format: str = "csv"
    preprocess: dict = field(default_factory=lambda: PreprocessConfig().to_dict())
    rule: str = "apc"
    enhancer: dict = field(default_factory=lambda: asdict(EnhancerConfig()))
    classifier: dict = field(default_factory=dict)   # input shape is filled in from the data
    train: dict = field(default_factory=dict)
    output_dir: str = "run"
    models: list = field(default_factory=lambda: ["danet", "baseline", "danet-h"])

    @classmethod
    def load(cls, path) -> "RunManifest":
        path = Path(path)
        if not path.exists():
            raise DataError(f"manifest {path} not found")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON: {exc}") from None
        try:
            man = cls(**doc)
        except TypeError as exc:
            raise DataError(f"{path}: {exc}") from None
        # relative paths are resolved against the manifest's directory
        base = path.parent
        for key in ("records_dir", "train_labels", "test_labels", "val_labels", "output_dir"):
            val = getattr(man, key)
            if val is not None and not Path(val).is_absolute():
                setattr(man, key, str(base / val))
        man.check_files()
        return man

    def check_files(self):
        for key in ("records_dir", "train_labels", "test_labels", "val_labels"):
            val = getattr(self, key)
            if val is not None and not Path(val).exists():
                raise DataError(f"manifest {key} {val} does not exist")
        unknown = set(self.models) - set(MODEL_KINDS)
        if unknown:
            raise UsageError(f"unknown models in manifest: {sorted(unknown)}")

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(asdict(self), indent=2))
        return path


# --------------------------------------------------------------------------- helpers

def resolve_seed(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get("DANET_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"DANET_SEED must be an integer, got {env!r}") from None


def _preprocess_config(args) -> PreprocessConfig:
    return PreprocessConfig(
        target_fs=None if args.target_fs <= 0 else args.target_fs,
        band=None if args.no_filter else tuple(args.band),
        filter_order=args.filter_order,
        leads_keep=None if args.leads == ["all"] else args.leads,
        normalize=args.normalize)


def _train_config(args, seed: int, out_dir: Path) -> TrainConfig:
    return TrainConfig(batch_size=args.batch_size, epochs=args.epochs, lr=args.lr, beta1=args.beta1,
                       beta2=args.beta2, eps=args.eps, seed=seed, shuffle=not args.no_shuffle,
                       aug_noise_sigma=args.aug_noise, aug_segment_len=args.aug_segment,
                       checkpoint_every=args.checkpoint_every, checkpoint_dir=str(out_dir),
                       best_on_validation=getattr(args, "best_on_validation", False))


def _load(args, labels: Optional[str] = None) -> Dataset:
    labels = labels or args.labels
    if not Path(labels).exists():
        raise DataError(f"labels file {labels} not found")
    if not Path(args.records).is_dir():
        raise DataError(f"records directory {args.records} not found")
    return load_dataset(args.records, labels, _preprocess_config(args), get_rule(args.rule),
                        DEFAULT_CONFIG, args.format, args.jobs)


def _write_stage(report: StageReport, out_dir: Path):
    rep, curve = report.write(out_dir)
    log.info("%s finished in %.1f s; wrote %s and %s", report.stage, report.wall_time, rep, curve)


def _classifier_cfg(data: Dataset, overrides: Optional[dict] = None) -> ClassifierConfig:
    d = dict(overrides or {})
    d.update(in_channels=data.x.shape[1], input_frames=data.n_frames)
    return ClassifierConfig(**d)


def _enhancer_cfg(data: Dataset, overrides: Optional[dict] = None) -> EnhancerConfig:
    d = dict(overrides or {})
    d["in_channels"] = data.x.shape[1]
    return EnhancerConfig(**d)


def _infer_kind(header: dict) -> str:
    if header.get("kind") == "danet":
        return "danet"
    return "danet-h" if header.get("stage") == "danet-h" else "baseline"


# --------------------------------------------------------------------------- subcommands

def cmd_synth(args) -> int:
    seed = resolve_seed(args.seed)
    base = SynthParams(fs=args.fs, duration=args.duration, noise_sigma=args.noise, leads=tuple(args.synth_leads))
    records_dir, labels_path, truth_path = synth_dataset(args.n, args.apc_fraction, base, seed, args.out)
    print(f"wrote {args.n} records to {records_dir}")
    if args.split:
        fracs = [float(f) for f in args.split.split(",")]
        if len(fracs) != 3 or min(fracs) < 0 or abs(sum(fracs) - 1) > 1e-9:
            raise UsageError("--split needs three non-negative fractions summing to 1, e.g. 0.7,0.1,0.2")
        labels = load_labels(labels_path)
        order = np.random.default_rng([seed, 7]).permutation(len(labels))
        n_train = int(round(fracs[0] * len(labels)))
        n_val = int(round(fracs[1] * len(labels)))
        parts = {"train": order[:n_train], "val": order[n_train:n_train + n_val],
                 "test": order[n_train + n_val:]}
        out = Path(args.out)
        paths = {}
        for name, idx in parts.items():
            paths[name] = save_labels([labels[i] for i in sorted(idx)], out / f"labels_{name}.csv").name
        man = RunManifest(records_dir="records", train_labels=paths["train"], test_labels=paths["test"],
                          val_labels=paths["val"] if len(parts["val"]) else None, output_dir="run")
        man.save(out / "manifest.json")
        print(f"wrote {out / 'manifest.json'}")
    return 0


def cmd_preprocess(args) -> int:
    cfg = _preprocess_config(args)
    out = Path(args.out)
    labels = load_labels(args.labels)
    from .signal_pipeline import preprocess
    for lab in labels:
        rec = load_record(record_path(args.records, lab.record_id), args.format)
        save_record(preprocess(rec, cfg), record_path(out / "records", lab.record_id))
    save_labels(labels, out / "labels.csv")
    (out / "preprocess.json").write_text(cfg.to_json())
    print(f"preprocessed {len(labels)} records into {out}")
    return 0


def cmd_delineate(args) -> int:
    data = _load(args)
    fids = dict(zip(data.ids, data.fiducials))
    save_truth(fids, args.out)
    print(f"delineated {len(fids)} records -> {args.out}")
    if args.truth:
        truth = load_truth(args.truth)
        report = None
        for rid, fid in fids.items():
            if rid not in truth:
                raise DataError(f"record {rid} missing from {args.truth}")
            ref = truth[rid] if truth[rid].fs == fid.fs else truth[rid].rescaled(fid.fs)
            r = fiducial_stats(fid, ref, args.tol_ms)
            report = r if report is None else report.merge(r)
        print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_weights(args) -> int:
    fids = load_truth(args.fiducials)
    rule = get_rule(args.rule)
    arrays = {rid: manual_weights(fid, rule, args.n_frames) for rid, fid in fids.items()}
    np.savez(args.out, **arrays)
    print(f"wrote manual weights for {len(arrays)} records -> {args.out}")
    return 0


def _maybe_val(args) -> Optional[Dataset]:
    return _load(args, args.val_labels) if args.val_labels else None


def cmd_pretrain(args) -> int:
    seed = resolve_seed(args.seed)
    out = Path(args.out)
    data = _load(args)
    model = build_danet(_enhancer_cfg(data), _classifier_cfg(data), seed=seed, lead_strategy=args.lead_strategy)
    report = pretrain_enhancer(model, data, _train_config(args, seed, out), _maybe_val(args))
    save_checkpoint(model, out / "ckpt-stage1.dant")
    _write_stage(report, out)
    return 0


def _load_danet(path) -> DanetModel:
    model = load_checkpoint(path)
    if not isinstance(model, DanetModel):
        raise UsageError(f"{path} is not a DANet checkpoint")
    return model


def cmd_train(args) -> int:
    seed = resolve_seed(args.seed)
    out = Path(args.out)
    model = _load_danet(args.checkpoint)
    data = _load(args)
    report = train_stage2(model, data, _train_config(args, seed, out), _maybe_val(args))
    save_checkpoint(model, out / "ckpt-stage2.dant")
    _write_stage(report, out)
    return 0


def cmd_finetune(args) -> int:
    seed = resolve_seed(args.seed)
    out = Path(args.out)
    model = _load_danet(args.checkpoint)
    data = _load(args)
    report = train_stage3(model, data, _train_config(args, seed, out), _maybe_val(args))
    save_checkpoint(model, out / "ckpt-stage3.dant")
    _write_stage(report, out)
    return 0


def _cmd_single(args, trainer, tag: str) -> int:
    seed = resolve_seed(args.seed)
    out = Path(args.out)
    data = _load(args)
    clf = build_classifier(_classifier_cfg(data), seed=seed)
    report = trainer(clf, data, _train_config(args, seed, out), _maybe_val(args))
    save_checkpoint(clf, out / f"ckpt-{tag}.dant", tag=tag)
    _write_stage(report, out)
    return 0


def cmd_train_h(args) -> int:
    return _cmd_single(args, train_danet_h, "danet-h")


def cmd_train_baseline(args) -> int:
    return _cmd_single(args, train_baseline, "baseline")


def cmd_eval(args) -> int:
    header = read_checkpoint_header(args.checkpoint)
    kind = args.kind or _infer_kind(header)
    model = load_checkpoint(args.checkpoint)
    data = _load(args)
    rep, probs = evaluate(kind, model, data, args.threshold)
    name = f"{kind} ({header.get('stage')})"
    print(format_table({name: rep}))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(report_json({name: rep}, {"checkpoint": str(args.checkpoint),
                                                           "threshold": args.threshold}))
    if args.probs:
        with open(args.probs, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["record_id", "label", "prob"])
            for rid, y, p in zip(data.ids, data.y, probs):
                w.writerow([rid, int(y), repr(float(p))])
    return 0


def cmd_plot(args) -> int:
    if args.checkpoint is None and args.weights is None:
        raise UsageError("plot needs --checkpoint or --weights")
    if not Path(args.record).exists():
        raise UsageError(f"record {args.record} not found")
    rec = load_record(args.record, args.format)
    pre, _, w1 = prepare_record(rec, _preprocess_config(args), get_rule(args.rule))
    signal = pre.samples[delineation_lead(pre)]
    w2 = None
    if args.weights is not None:
        if not Path(args.weights).exists():
            raise UsageError(f"weights file {args.weights} not found")
        with np.load(args.weights) as store:
            key = rec.id if rec.id in store.files else store.files[0]
            w1 = np.asarray(store[key], dtype=np.float64)
    if args.checkpoint is not None:
        if not Path(args.checkpoint).exists():
            raise UsageError(f"checkpoint {args.checkpoint} not found")
        model = load_checkpoint(args.checkpoint)
        if not isinstance(model, DanetModel):
            raise UsageError("plotting automatic weights needs a DANet checkpoint")
        w2 = model.enhancer.weights(pre.samples[None])[0]
    csv_path = args.csv or str(Path(args.out).with_suffix(".csv"))
    write_overlay(args.out, csv_path, signal, pre.fs, w1, w2, title=rec.id)
    print(f"wrote {args.out} and {csv_path}")
    return 0


def _stage_done(path: Path, tag: str) -> bool:
    if not path.exists():
        return False
    try:
        return read_checkpoint_header(path).get("stage") == tag
    except DanetError:
        return False


def cmd_pipeline(args) -> int:
    man = RunManifest.load(args.manifest)
    seed = resolve_seed(args.seed)
    out = Path(args.out or man.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    pcfg = PreprocessConfig.from_dict(man.preprocess)
    rule = get_rule(man.rule)

    def load(labels):
        return load_dataset(man.records_dir, labels, pcfg, rule, DEFAULT_CONFIG, man.format, args.jobs)

    train_data = load(man.train_labels)
    val_data = load(man.val_labels) if man.val_labels else None
    test_data = load(man.test_labels)
    tcfg = TrainConfig(**{**man.train, "seed": seed, "checkpoint_dir": str(out)})
    results, reports = {}, {}

    def run(tag, fn):
        try:
            return fn()
        except DanetError as exc:
            exc.args = (f"[{tag}] {exc}",)
            raise

    if "danet" in man.models:
        model = build_danet(_enhancer_cfg(train_data, man.enhancer), _classifier_cfg(train_data, man.classifier),
                            seed=seed)
        steps = [("stage-1", pretrain_enhancer), ("stage-2", train_stage2), ("stage-3", train_stage3)]
        for k, (tag, trainer) in enumerate(steps, start=1):
            ckpt = out / f"ckpt-stage{k}.dant"
            if args.resume and _stage_done(ckpt, tag):
                log.info("resume: skipping %s, found %s", tag, ckpt)
                model = load_checkpoint(ckpt)
                continue
            log.info("running %s", tag)
            report = run(tag, lambda: trainer(model, train_data, tcfg, val_data))
            save_checkpoint(model, ckpt)
            report.write(out / tag)
            reports[tag] = report.to_dict()
            if k >= 2:
                results[f"stage-{k} DANet"] = run(
                    f"eval {tag}", lambda: evaluate("danet", model, test_data)[0])
        # metrics for stage 2 when it was skipped on resume
        if "stage-2 DANet" not in results:
            results["stage-2 DANet"] = evaluate("danet", load_checkpoint(out / "ckpt-stage2.dant"), test_data)[0]
        if "stage-3 DANet" not in results:
            results["stage-3 DANet"] = evaluate("danet", model, test_data)[0]
    for kind, trainer, label in (("baseline", train_baseline, "CNN"), ("danet-h", train_danet_h, "DANet-h")):
        if kind not in man.models:
            continue
        ckpt = out / f"ckpt-{kind}.dant"
        if args.resume and _stage_done(ckpt, kind):
            log.info("resume: skipping %s, found %s", kind, ckpt)
            clf = load_checkpoint(ckpt)
        else:
            log.info("running %s", kind)
            clf = build_classifier(_classifier_cfg(train_data, man.classifier), seed=seed)
            report = run(kind, lambda: trainer(clf, train_data, tcfg, val_data))
            save_checkpoint(clf, ckpt, tag=kind)
            report.write(out / kind)
            reports[kind] = report.to_dict()
        results[label] = run(f"eval {kind}", lambda: evaluate(kind, clf, test_data)[0])

    order = ["CNN", "stage-2 DANet", "stage-3 DANet", "DANet-h"]
    rows = {k: results[k] for k in order if k in results}
    (out / "report.json").write_text(report_json(rows, {"seed": seed, "stages": reports}))
    with open(out / "losses.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stage", "epoch", "loss"])
        for tag, rep in reports.items():
            for i, v in enumerate(rep["losses"], start=1):
                w.writerow([tag, i, repr(v)])
    print(format_table(rows))
    return 0


# --------------------------------------------------------------------------- parser

def _add_seed(p):
    p.add_argument("--seed", type=int, default=None, help="RNG seed (falls back to $DANET_SEED, then 0)")


def _add_data(p, labels_required=True):
    g = p.add_argument_group("data")
    g.add_argument("--records", required=True, help="directory holding records/<id> files")
    g.add_argument("--labels", required=labels_required, help="CSV with header record_id,label")
    g.add_argument("--format", choices=["csv", "tianchi_txt"], default="csv", help="record file format")
    g.add_argument("--jobs", type=int, default=1, help="worker processes for loading and preprocessing")
    _add_preprocess(p)


def _add_preprocess(p):
    g = p.add_argument_group("preprocessing")
    g.add_argument("--target-fs", type=float, default=150.0, help="resample rate in Hz (<= 0 disables)")
    g.add_argument("--band", type=float, nargs=2, default=[0.5, 50.0], metavar=("LOW", "HIGH"),
                   help="band-pass edges in Hz")
    g.add_argument("--no-filter", action="store_true", help="skip band-pass filtering")
    g.add_argument("--filter-order", type=int, default=6, help="Butterworth order (2, 4, 6 or 8)")
    g.add_argument("--leads", nargs="+", default=["II"], help="leads to keep ('all' keeps every lead)")
    g.add_argument("--normalize", choices=["none", "zscore"], default="none", help="per-lead normalisation")
    g.add_argument("--rule", default="apc", help="disease rule name or JSON file")


def _add_train(p):
    g = p.add_argument_group("training")
    g.add_argument("--out", required=True, help="run directory for checkpoints and reports")
    g.add_argument("--val-labels", default=None, help="labels CSV for the validation split")
    g.add_argument("--epochs", type=int, default=100, help="epochs for this stage")
    g.add_argument("--batch-size", type=int, default=256, help="mini-batch size")
    g.add_argument("--lr", type=float, default=1e-3, help="Adam learning rate")
    g.add_argument("--beta1", type=float, default=0.9, help="Adam first-moment decay")
    g.add_argument("--beta2", type=float, default=0.999, help="Adam second-moment decay")
    g.add_argument("--eps", type=float, default=1e-7, help="Adam epsilon")
    g.add_argument("--no-shuffle", action="store_true", help="keep the file order every epoch")
    g.add_argument("--aug-noise", type=float, default=0.0, help="Gaussian noise augmentation sigma in mV")
    g.add_argument("--aug-segment", type=int, default=None, help="random crop length in frames")
    g.add_argument("--checkpoint-every", type=int, default=0, help="also checkpoint every N epochs")
    _add_seed(p)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="danet", description="Attention-guided ECG APC detection toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                   help="stderr logging level")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("synth", help="generate a synthetic labelled dataset")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--n", type=int, default=100, help="number of records")
    s.add_argument("--apc-fraction", type=float, default=0.07, help="share of APC records")
    s.add_argument("--noise", type=float, default=0.0, help="additive white noise sigma in mV")
    s.add_argument("--fs", type=float, default=500.0, help="sampling rate in Hz")
    s.add_argument("--duration", type=float, default=10.0, help="record length in seconds")
    s.add_argument("--synth-leads", nargs="+", default=["II"], help="lead names to generate")
    s.add_argument("--split", default=None,
                   help="train,val,test fractions; also writes labels_<split>.csv and manifest.json")
    _add_seed(s)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("preprocess", help="resample, filter and select leads")
    _add_data(s)
    s.add_argument("--out", required=True, help="output directory")
    _add_seed(s)
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("delineate", help="locate P/QRS/T boundaries")
    _add_data(s)
    s.add_argument("--out", required=True, help="fiducials JSON to write")
    s.add_argument("--truth", default=None, help="reference fiducials JSON to score against")
    s.add_argument("--tol-ms", type=float, default=30.0, help="matching tolerance in ms")
    _add_seed(s)
    s.set_defaults(func=cmd_delineate)

    s = sub.add_parser("weights", help="manual attention weights from fiducials")
    s.add_argument("--fiducials", required=True, help="fiducials JSON from 'delineate'")
    s.add_argument("--n-frames", type=int, required=True, help="frames per record")
    s.add_argument("--rule", default="apc", help="disease rule name or JSON file")
    s.add_argument("--out", required=True, help="output .npz keyed by record id")
    _add_seed(s)
    s.set_defaults(func=cmd_weights)

    for name, func, helptext in (("pretrain", cmd_pretrain, "stage 1: fit the enhancer to manual weights"),
                                 ("train", cmd_train, "stage 2: train the classifier, enhancer frozen"),
                                 ("finetune", cmd_finetune, "stage 3: fine-tune the whole model"),
                                 ("train-h", cmd_train_h, "train DANet-h on manual weights"),
                                 ("train-baseline", cmd_train_baseline, "train the plain CNN")):
        s = sub.add_parser(name, help=helptext)
        _add_data(s)
        _add_train(s)
        if name in ("train", "finetune"):
            s.add_argument("--checkpoint", required=True, help="checkpoint from the previous stage")
        if name == "pretrain":
            s.add_argument("--lead-strategy", choices=["single", "all"], default="single",
                           help="enhancer input leads")
        if name == "finetune":
            s.add_argument("--best-on-validation", action="store_true",
                           help="keep the epoch with the best validation F_AVG")
        s.set_defaults(func=func)

    s = sub.add_parser("eval", help="score a checkpoint on a labelled split")
    _add_data(s)
    s.add_argument("--checkpoint", required=True, help="model checkpoint")
    s.add_argument("--kind", choices=MODEL_KINDS, default=None, help="forward pass (inferred by default)")
    s.add_argument("--threshold", type=float, default=0.5, help="APC iff probability > threshold")
    s.add_argument("--out", default=None, help="report JSON path")
    s.add_argument("--probs", default=None, help="per-record probability CSV path")
    _add_seed(s)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("plot", help="SVG + CSV of a record with its attention weights")
    s.add_argument("--record", required=True, help="record file")
    s.add_argument("--format", choices=["csv", "tianchi_txt"], default="csv", help="record file format")
    s.add_argument("--checkpoint", default=None, help="DANet checkpoint (adds automatic weights)")
    s.add_argument("--weights", default=None, help=".npz of manual weights (else delineator-derived)")
    s.add_argument("--out", required=True, help="SVG path")
    s.add_argument("--csv", default=None, help="CSV path (defaults to the SVG path with .csv)")
    _add_preprocess(s)
    _add_seed(s)
    s.set_defaults(func=cmd_plot)

    s = sub.add_parser("pipeline", help="preprocess, train all stages and evaluate from a manifest")
    s.add_argument("--manifest", required=True, help="run manifest JSON (see 'synth --split')")
    s.add_argument("--out", default=None, help="override the manifest's output directory")
    s.add_argument("--resume", action="store_true", help="skip stages whose checkpoint already exists")
    s.add_argument("--jobs", type=int, default=1, help="worker processes for loading and preprocessing")
    _add_seed(s)
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except DanetError as exc:
        print(f"danet {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"danet {args.command}: error: {exc}", file=sys.stderr)
        return DataError.exit_code
    except ValueError as exc:
        print(f"danet {args.command}: error: {exc}", file=sys.stderr)
        return UsageError.exit_code


if __name__ == "__main__":
    sys.exit(main())
