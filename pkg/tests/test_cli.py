import json
import logging
import re

import numpy as np
import pytest

from danet.cli import build_parser, main


@pytest.fixture(scope="module")
def synth(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--out", str(out), "--n", "24", "--apc-fraction", "0.25", "--noise", "0.02",
                 "--split", "0.5,0.25,0.25", "--seed", "3"]) == 0
    man = json.loads((out / "manifest.json").read_text())
    man["train"] = {"epochs": 1, "batch_size": 8}
    (out / "manifest.json").write_text(json.dumps(man))
    return out


def _data(synth, split="train"):
    return ["--records", str(synth / "records"), "--labels", str(synth / f"labels_{split}.csv")]


def test_synth_split_files(synth):
    for name in ("labels_train.csv", "labels_val.csv", "labels_test.csv", "truth.json", "labels.csv"):
        assert (synth / name).exists()
    rows = sum(len((synth / f"labels_{s}.csv").read_text().strip().splitlines()) - 1
               for s in ("train", "val", "test"))
    assert rows == 24


def test_pipeline_and_resume(synth, tmp_path, caplog, capsys):
    run = tmp_path / "run"
    assert main(["pipeline", "--manifest", str(synth / "manifest.json"), "--out", str(run), "--seed", "1"]) == 0
    for k in (1, 2, 3):
        assert (run / f"ckpt-stage{k}.dant").exists()
        assert (run / f"stage-{k}" / "report.json").exists()
    report = json.loads((run / "report.json").read_text())
    assert {"CNN", "stage-2 DANet", "stage-3 DANet", "DANet-h"} <= set(report)
    assert (run / "losses.csv").read_text().startswith("stage,epoch,loss")
    assert "F_AVG" in capsys.readouterr().out

    caplog.set_level(logging.INFO, logger="danet")
    assert main(["pipeline", "--manifest", str(synth / "manifest.json"), "--out", str(run), "--seed", "1",
                 "--resume"]) == 0
    skipped = [r.getMessage() for r in caplog.records if "resume: skipping" in r.getMessage()]
    assert any("stage-1" in m for m in skipped) and any("stage-2" in m for m in skipped)
    again = json.loads((run / "report.json").read_text())
    assert again["stage-3 DANet"] == report["stage-3 DANet"]


def test_pipeline_resume_after_stage2(synth, tmp_path, caplog):
    run = tmp_path / "run"
    man = synth / "manifest.json"
    assert main(["pipeline", "--manifest", str(man), "--out", str(run), "--seed", "1"]) == 0
    (run / "ckpt-stage3.dant").unlink()
    caplog.set_level(logging.INFO, logger="danet")
    assert main(["pipeline", "--manifest", str(man), "--out", str(run), "--seed", "1", "--resume"]) == 0
    msgs = [r.getMessage() for r in caplog.records]
    assert any("skipping stage-1" in m for m in msgs) and any("skipping stage-2" in m for m in msgs)
    assert any("running stage-3" in m for m in msgs)


def test_missing_labels_is_data_error(synth, tmp_path):
    man = json.loads((synth / "manifest.json").read_text())
    man["train_labels"] = "nope.csv"
    bad = synth / "bad_manifest.json"
    bad.write_text(json.dumps(man))
    assert main(["pipeline", "--manifest", str(bad), "--out", str(tmp_path)]) == 3
    assert main(["pretrain", "--records", str(synth / "records"), "--labels", str(tmp_path / "x.csv"),
                 "--out", str(tmp_path)]) == 3


def test_stage_commands_and_sequencing(synth, tmp_path):
    common = _data(synth) + ["--epochs", "1", "--batch-size", "8", "--seed", "2"]
    assert main(["pretrain", *common, "--out", str(tmp_path / "s1")]) == 0
    assert main(["finetune", *common, "--out", str(tmp_path / "bad"),
                 "--checkpoint", str(tmp_path / "s1" / "ckpt-stage1.dant")]) == 4
    assert main(["train", *common, "--out", str(tmp_path / "s2"),
                 "--checkpoint", str(tmp_path / "s1" / "ckpt-stage1.dant")]) == 0
    assert main(["finetune", *common, "--out", str(tmp_path / "s3"),
                 "--checkpoint", str(tmp_path / "s2" / "ckpt-stage2.dant")]) == 0
    for d in ("s1", "s2", "s3"):
        assert (tmp_path / d / "report.json").exists() and (tmp_path / d / "losses.csv").exists()
    assert main(["train-h", *common, "--out", str(tmp_path / "h")]) == 0
    assert main(["train-baseline", *common, "--out", str(tmp_path / "b")]) == 0
    out_json = tmp_path / "eval.json"
    assert main(["eval", *_data(synth, "test"), "--checkpoint", str(tmp_path / "h" / "ckpt-danet-h.dant"),
                 "--out", str(out_json), "--probs", str(tmp_path / "p.csv")]) == 0
    assert "danet-h" in next(iter(json.loads(out_json.read_text())))
    assert (tmp_path / "p.csv").read_text().startswith("record_id,label,prob")


def test_seed_flag_and_env_fallback(synth, tmp_path, monkeypatch):
    common = _data(synth) + ["--epochs", "1", "--batch-size", "8"]
    assert main(["train-baseline", *common, "--seed", "5", "--out", str(tmp_path / "a")]) == 0
    assert main(["train-baseline", *common, "--seed", "5", "--out", str(tmp_path / "b")]) == 0
    monkeypatch.setenv("DANET_SEED", "5")
    assert main(["train-baseline", *common, "--out", str(tmp_path / "c")]) == 0
    blobs = [(tmp_path / d / "ckpt-baseline.dant").read_bytes() for d in "abc"]
    assert blobs[0] == blobs[1] == blobs[2]
    monkeypatch.setenv("DANET_SEED", "x")
    assert main(["train-baseline", *common, "--out", str(tmp_path / "d")]) == 2


def test_delineate_and_weights(synth, tmp_path, capsys):
    fid = tmp_path / "fid.json"
    assert main(["delineate", *_data(synth), "--out", str(fid), "--truth", str(synth / "truth.json")]) == 0
    stats = json.loads(capsys.readouterr().out.split("\n", 1)[1])
    assert stats["sensitivity"] >= 0.9
    w = tmp_path / "w.npz"
    assert main(["weights", "--fiducials", str(fid), "--n-frames", "1500", "--out", str(w)]) == 0
    with np.load(w) as store:
        arr = store[store.files[0]]
    assert arr.shape == (1500,) and set(np.unique(arr)) <= {0.3, 1.0}


def test_preprocess_command(synth, tmp_path):
    assert main(["preprocess", *_data(synth), "--out", str(tmp_path / "pp")]) == 0
    assert (tmp_path / "pp" / "labels.csv").exists() and (tmp_path / "pp" / "preprocess.json").exists()


def test_plot_curves_and_csv(synth, tmp_path):
    record = next((synth / "records").glob("*/record.csv"))
    fid, w = tmp_path / "fid.json", tmp_path / "w.npz"
    main(["delineate", *_data(synth), "--out", str(fid)])
    main(["weights", "--fiducials", str(fid), "--n-frames", "1500", "--out", str(w)])
    svg = tmp_path / "two.svg"
    assert main(["plot", "--record", str(record), "--weights", str(w), "--out", str(svg)]) == 0
    assert len(re.findall(r"<polyline", svg.read_text())) == 2
    rows = svg.with_suffix(".csv").read_text().strip().splitlines()
    assert rows[0] == "t,signal,w1,w2" and len(rows) - 1 == 1500

    run = tmp_path / "run"
    main(["pipeline", "--manifest", str(synth / "manifest.json"), "--out", str(run)])
    svg3 = tmp_path / "three.svg"
    assert main(["plot", "--record", str(record), "--checkpoint", str(run / "ckpt-stage3.dant"),
                 "--out", str(svg3), "--csv", str(tmp_path / "three.csv")]) == 0
    assert len(re.findall(r"<polyline", svg3.read_text())) == 3
    last = (tmp_path / "three.csv").read_text().strip().splitlines()[-1].split(",")
    assert len(last) == 4 and all(last)


def test_plot_missing_inputs(synth, tmp_path):
    assert main(["plot", "--record", str(tmp_path / "none.csv"), "--weights", "x.npz",
                 "--out", str(tmp_path / "p.svg")]) == 2
    record = next((synth / "records").glob("*/record.csv"))
    assert main(["plot", "--record", str(record), "--out", str(tmp_path / "p.svg")]) == 2


def test_usage_errors():
    with pytest.raises(SystemExit) as exc:
        main(["pretrain", "--bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


SUBCOMMANDS = ["synth", "preprocess", "delineate", "weights", "pretrain", "train", "finetune", "train-h",
               "train-baseline", "eval", "plot", "pipeline"]


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help_documents_every_flag(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        main([cmd, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    sub = build_parser()._subparsers._group_actions[0].choices[cmd]
    for action in sub._actions:
        for flag in action.option_strings:
            assert flag in text
        if action.option_strings and action.help is None:
            pytest.fail(f"{cmd} {action.option_strings} has no help text")
    assert "--seed" in text
