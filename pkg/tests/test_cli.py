import csv

import numpy as np
import pytest

from foilgen import checkpoint as ckpt
from foilgen.cli import build_parser, linear_targets, main
from foilgen.data import FIXTURE_DIR

FAST = ["--total-steps", "10", "--beta-start", "1e-3", "--beta-end", "0.2"]
NET = ["--base-width", "8", "--time-embed-dim", "16", "--cond-embed-dim", "16", "--fused-dim", "16"]


def test_linear_targets():
    assert linear_targets(0, 1, 3).tolist() == [0.0, 0.5, 1.0]
    assert linear_targets(0.5, 0.5, 1).tolist() == [0.5]


def test_parser_has_spec_flags():
    p = build_parser()
    args = p.parse_args(["sample", "c.fgck", "--count", "3", "--condition-kind", "lift_coefficient",
                         "--condition-min", "0", "--condition-max", "1", "--guidance-scale", "1.5",
                         "--seed", "4", "--output-dir", "o", "--verbose"])
    assert args.count == 3 and args.guidance_scale == 1.5 and args.seed == 4
    args = p.parse_args(["evaluate", "g", "--alpha-deg", "2", "--reynolds", "3e6", "--top-k", "2"])
    assert args.alpha_deg == 2 and args.top_k == 2


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["ingest", str(FIXTURE_DIR), "--output-dir", str(out)]) == 0
    cfg = out / "cfg.yaml"
    cfg.write_text("train:\n  steps: 3\n  batch_size: 4\nseed: 5\n")
    rc = main(["train", "--config", str(cfg), "--output-dir", str(out), "--condition-kind", "drag_coefficient", *FAST, *NET])
    assert rc == 0
    return out


def test_train_outputs(pipeline):
    model = ckpt.load(pipeline / "checkpoint.fgck")
    assert model.conditioning_kind == "drag_coefficient"
    assert model.training_meta["steps"] == 3 and model.training_meta["seed"] == 5
    assert len((pipeline / "train_log.jsonl").read_text().splitlines()) == 3


def test_sample_and_evaluate(pipeline, capsys):
    sdir = pipeline / "samples"
    rc = main(["sample", str(pipeline / "checkpoint.fgck"), "--output-dir", str(sdir), "--count", "3",
               "--condition-min", "0.008", "--condition-max", "0.012", *FAST])
    assert rc == 0
    with open(sdir / "manifest.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["target"]) for r in rows] == [0.008, 0.01, 0.012]
    assert len(list(sdir.glob("*.dat"))) == 3
    rc = main(["evaluate", str(sdir), "--dataset", str(pipeline / "dataset.fgds"), "--output-dir", str(pipeline), *FAST])
    assert rc == 0
    assert (pipeline / "report" / "report.json").exists()
    assert "chamfer to training" in capsys.readouterr().out


def test_evaluate_self_comparison(pipeline, capsys):
    out = pipeline / "self"
    rc = main(["evaluate", str(FIXTURE_DIR), "--dataset", str(pipeline / "dataset.fgds"), "--output-dir", str(out)])
    assert rc == 0
    assert "chamfer to training: min 0 q1 0 median 0 q3 0 max 0" in capsys.readouterr().out


def test_schedule_mismatch(pipeline, capsys):
    rc = main(["sample", str(pipeline / "checkpoint.fgck"), "--output-dir", str(pipeline / "x"), "--count", "1"])
    assert rc != 0
    assert "CheckpointScheduleMismatch" in capsys.readouterr().err


def test_missing_archive(tmp_path, capsys):
    rc = main(["train", "--output-dir", str(tmp_path), "--dataset", str(tmp_path / "nope.fgds")])
    assert rc != 0
    assert "nope.fgds" in capsys.readouterr().err


def test_empty_generated_dir(pipeline, tmp_path, capsys):
    rc = main(["evaluate", str(tmp_path), "--dataset", str(pipeline / "dataset.fgds"), "--output-dir", str(tmp_path)])
    assert rc != 0
    assert "NoValidProfiles" in capsys.readouterr().err


def test_ingest_rejection_reported(tmp_path, capsys):
    src = tmp_path / "in"
    src.mkdir()
    for p in sorted(FIXTURE_DIR.glob("*.dat"))[:4]:
        (src / p.name).write_bytes(p.read_bytes())
    (src / "zzz.dat").write_text("bad\n1 2 3\n")
    assert main(["ingest", str(src), "--output-dir", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "accepted 4 / rejected 1" in out and "zzz.dat" in out
    first = (tmp_path / "o" / "dataset.fgds").read_bytes()
    assert main(["ingest", str(src), "--output-dir", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "dataset.fgds").read_bytes() == first


def test_config_errors(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("train:\n  stepz: 3\n")
    assert main(["ingest", str(FIXTURE_DIR), "--config", str(cfg), "--output-dir", str(tmp_path)]) != 0
    assert "stepz" in capsys.readouterr().err
    assert main(["ingest", str(FIXTURE_DIR), "--set", "nosuch=1", "--output-dir", str(tmp_path)]) != 0


def test_flags_override_config(tmp_path):
    from foilgen.cli import PipelineConfig

    cfg = tmp_path / "c.yaml"
    cfg.write_text("seed: 1\ntrain:\n  steps: 7\n")
    args = build_parser().parse_args(["train", "--config", str(cfg), "--seed", "2", "--set", "train.batch_size=3"])
    pc = PipelineConfig.resolve(args)
    assert pc.seed == 2 and pc.train_config().steps == 7 and pc.train_config().batch_size == 3
