"""``foilgen`` command line: ingest, train, sample, evaluate.

Settings come from built-in defaults, then an optional YAML file
(``--config``), then command-line flags; later sources win. Any key can be
set with ``--set section.key=value``.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import checkpoint as ckpt
from .aero import FlowCondition
from .dataset import Dataset, NoValidProfiles, ingest
from .denoiser import CONDITION_KINDS, DenoiserConfig
from .diffusion import GuidanceConfig, NoiseSchedule, make_schedule, sample
from .evaluation import distribution_report, fidelity_analysis, novelty_analysis, write_report
from .geometry import GeometryError, as_canonical, from_canonical, read_profile, write_profile
from .trainer import TrainConfig, TrainRecord, train

log = logging.getLogger("foilgen")

DATASET_FILE = "dataset.fgds"
CHECKPOINT_FILE = "checkpoint.fgck"
TRAIN_LOG = "train_log.jsonl"
MANIFEST = "manifest.csv"

DEFAULTS = {
    "data_dir": None,
    "output_dir": "foilgen_out",
    "seed": 0,
    "schedule": {"total_steps": 1000, "beta_start": 1e-4, "beta_end": 0.02},
    "denoiser": {"base_width": 64, "depth": 3, "time_embed_dim": 128, "cond_embed_dim": 128, "fused_dim": 128},
    "train": {"steps": 500, "batch_size": 16, "learning_rate": 2e-4, "checkpoint_every": 0, "window": 50, "holdout": 0.0},
    "guidance": {"scale": 2.0, "uncond_drop_prob": 0.1},
    "flow": {"alpha_deg": 0.0, "reynolds": 1e6},
    "conditioning": {"kind": "none", "min": None, "max": None},
    "sample": {"count": 8, "batch_size": 256},
    "evaluate": {"top_k": 5, "bins": 40},
}

# flag dest -> config key path
FLAG_KEYS = {
    "seed": "seed",
    "output_dir": "output_dir",
    "total_steps": "schedule.total_steps",
    "beta_start": "schedule.beta_start",
    "beta_end": "schedule.beta_end",
    "base_width": "denoiser.base_width",
    "depth": "denoiser.depth",
    "time_embed_dim": "denoiser.time_embed_dim",
    "cond_embed_dim": "denoiser.cond_embed_dim",
    "fused_dim": "denoiser.fused_dim",
    "steps": "train.steps",
    "batch_size": "train.batch_size",
    "learning_rate": "train.learning_rate",
    "checkpoint_every": "train.checkpoint_every",
    "holdout": "train.holdout",
    "guidance_scale": "guidance.scale",
    "drop_prob": "guidance.uncond_drop_prob",
    "alpha_deg": "flow.alpha_deg",
    "reynolds": "flow.reynolds",
    "condition_kind": "conditioning.kind",
    "condition_min": "conditioning.min",
    "condition_max": "conditioning.max",
    "count": "sample.count",
    "top_k": "evaluate.top_k",
}


class CliError(Exception):
    """A user-facing failure; the message is printed and the exit status is 1."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _set_path(tree: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = tree
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise CliError(f"unknown config section in {dotted!r}")
        node = node[k]
    if keys[-1] not in node:
        raise CliError(f"unknown config key {dotted!r}")
    node[keys[-1]] = value


def _merge(base: dict, override: dict, prefix: str = "") -> None:
    for k, v in override.items():
        if k not in base:
            raise CliError(f"unknown config key {prefix + k!r}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise CliError(f"config key {prefix + k!r} must be a mapping")
            _merge(base[k], v, prefix + k + ".")
        else:
            base[k] = v


@dataclass
class PipelineConfig:
    tree: dict

    @classmethod
    def resolve(cls, args: argparse.Namespace) -> "PipelineConfig":
        tree = copy.deepcopy(DEFAULTS)
        if args.config:
            path = Path(args.config)
            if not path.is_file():
                raise CliError(f"config file not found: {path}")
            loaded = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
            if not isinstance(loaded, dict):
                raise CliError(f"{path}: top level must be a mapping")
            _merge(tree, loaded)
        for item in args.set or []:
            key, sep, raw = item.partition("=")
            if not sep:
                raise CliError(f"--set expects key=value, got {item!r}")
            _set_path(tree, key.strip(), yaml.safe_load(raw))
        for dest, key in FLAG_KEYS.items():
            value = getattr(args, dest, None)
            if value is not None:
                _set_path(tree, key, value)
        return cls(tree)

    def __getitem__(self, key):
        return self.tree[key]

    @property
    def output_dir(self) -> Path:
        return Path(self.tree["output_dir"])

    @property
    def seed(self) -> int:
        return int(self.tree["seed"])

    def schedule(self) -> NoiseSchedule:
        s = self.tree["schedule"]
        return make_schedule(int(s["total_steps"]), float(s["beta_start"]), float(s["beta_end"]))

    def denoiser(self) -> DenoiserConfig:
        return DenoiserConfig(**{k: int(v) for k, v in self.tree["denoiser"].items()})

    def guidance(self) -> GuidanceConfig:
        g = self.tree["guidance"]
        return GuidanceConfig(float(g["scale"]), float(g["uncond_drop_prob"]))

    def train_config(self) -> TrainConfig:
        t = self.tree["train"]
        return TrainConfig(
            steps=int(t["steps"]),
            batch_size=int(t["batch_size"]),
            learning_rate=float(t["learning_rate"]),
            uncond_drop_prob=self.guidance().uncond_drop_prob,
            seed=self.seed,
            checkpoint_every=int(t["checkpoint_every"]),
            window=int(t["window"]),
            holdout=float(t["holdout"]),
        )

    def flow(self) -> FlowCondition:
        f = self.tree["flow"]
        return FlowCondition.from_degrees(float(f["alpha_deg"]), float(f["reynolds"]))

    def condition_kind(self) -> str:
        kind = self.tree["conditioning"]["kind"]
        if kind not in CONDITION_KINDS:
            raise CliError(f"conditioning kind must be one of {', '.join(CONDITION_KINDS)}; got {kind!r}")
        return kind


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise CliError(f"{what} not found: {path}")
    return path


def cmd_ingest(cfg: PipelineConfig, args) -> int:
    data_dir = args.data_dir or cfg["data_dir"]
    if data_dir is None:
        raise CliError("ingest needs a data directory")
    data_dir = _require(Path(data_dir), "data directory")
    files = sorted(p for p in data_dir.iterdir() if p.is_file() and p.suffix.lower() in (".dat", ".txt"))
    try:
        ds = ingest(files, cfg.flow())
    except NoValidProfiles as exc:
        raise CliError(f"NoValidProfiles: {exc}") from None
    out = ds.save(cfg.output_dir / DATASET_FILE)
    print(f"accepted {len(ds)} / rejected {len(ds.rejections)} of {len(files)} files")
    for r in ds.rejections:
        print(f"  rejected {r.file}: {r.reason}")
    for i, reason in sorted(ds.aero_errors.items()):
        print(f"  aero failed for {ds.files[i]}: {reason}")
    flagged = int(ds.self_intersecting.sum())
    if flagged:
        print(f"  {flagged} self-intersecting profiles flagged")
    print(f"wrote {out}")
    return 0


def cmd_train(cfg: PipelineConfig, args) -> int:
    archive = Path(args.dataset) if args.dataset else cfg.output_dir / DATASET_FILE
    ds = Dataset.load(_require(archive, "dataset archive"))
    kind = cfg.condition_kind()
    train_set, notes = ds.training_set(kind)
    for note in notes:
        log.warning(note)
    out_dir = cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    tcfg = cfg.train_config()
    log_path = out_dir / TRAIN_LOG
    with open(log_path, "w", encoding="utf-8") as fh:

        def record(r: TrainRecord):
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
            if r.step == 1 or r.step % max(1, tcfg.steps // 10) == 0:
                log.info("step %d loss %.5f window %.5f", r.step, r.loss, r.window_mean)

        def periodic(step, model):
            ckpt.save(model, out_dir / f"checkpoint_step{step:06d}.fgck")

        model = train(train_set, tcfg, cfg.denoiser(), cfg.schedule(), on_record=record, on_checkpoint=periodic)
    model.training_meta["conditioning_kind"] = kind
    path = ckpt.save(model, out_dir / CHECKPOINT_FILE)
    print(f"trained {tcfg.steps} steps on {len(train_set)} samples ({kind}); wrote {path}")
    return 0


def linear_targets(lo: float, hi: float, count: int) -> np.ndarray:
    return np.linspace(float(lo), float(hi), count)


def cmd_sample(cfg: PipelineConfig, args) -> int:
    model = ckpt.load(_require(Path(args.checkpoint), "checkpoint"))
    schedule = cfg.schedule()
    if tuple(model.schedule_params) != schedule.params():
        raise CliError(
            f"CheckpointScheduleMismatch: checkpoint uses {model.schedule_params}, config has {schedule.params()}"
        )
    count = int(cfg["sample"]["count"])
    if count < 1:
        raise CliError("count must be >= 1")
    cond = cfg["conditioning"]
    kind = cond["kind"]
    targets = None
    if cond["min"] is not None or cond["max"] is not None:
        if cond["min"] is None or cond["max"] is None:
            raise CliError("give both --condition-min and --condition-max")
        if model.conditioning_kind == "none":
            raise CliError("checkpoint is unconditional; drop the conditioning range")
        if kind not in ("none", model.conditioning_kind):
            raise CliError(f"checkpoint conditions on {model.conditioning_kind}, not {kind}")
        kind = model.conditioning_kind
        targets = linear_targets(cond["min"], cond["max"], count)
    else:
        kind = "none"
    guidance = cfg.guidance()
    seed = cfg.seed
    ys = sample(model, schedule, targets, guidance, seed=seed, count=count, batch_size=int(cfg["sample"]["batch_size"]))
    out_dir = cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(count - 1)))
    with open(out_dir / MANIFEST, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["file", "index", "condition_kind", "target", "seed", "guidance_scale"])
        for i, y in enumerate(ys):
            name = f"sample_{i:0{width}d}"
            write_profile(out_dir / f"{name}.dat", from_canonical(y, name))
            target = "" if targets is None else repr(float(targets[i]))
            w.writerow([f"{name}.dat", i, kind, target, seed, repr(guidance.scale)])
    print(f"wrote {count} samples and {MANIFEST} to {out_dir}")
    return 0


def _read_manifest(path: Path) -> dict:
    if not path.is_file():
        return {}
    with open(path, encoding="utf-8", newline="") as fh:
        return {row["file"]: row for row in csv.DictReader(fh)}


_METRIC_FIELD = {
    "lift_coefficient": "cl",
    "drag_coefficient": "cd",
    "max_thickness": "max_thickness",
    "max_camber": "max_camber",
}


def cmd_evaluate(cfg: PipelineConfig, args) -> int:
    gen_dir = _require(Path(args.generated_dir), "generated directory")
    archive = _require(Path(args.dataset) if args.dataset else cfg.output_dir / DATASET_FILE, "dataset archive")
    ds = Dataset.load(archive)
    files = sorted(p for p in gen_dir.glob("*.dat"))
    generated, used, skipped = [], [], []
    for p in files:
        try:
            generated.append(as_canonical(read_profile(p)))
            used.append(p.name)
        except (GeometryError, UnicodeDecodeError) as exc:
            skipped.append(f"{p.name}: {type(exc).__name__}: {exc}")
    for s in skipped:
        print(f"  unreadable {s}")
    if not generated:
        raise CliError(f"NoValidProfiles: no readable profiles in {gen_dir}")
    training = ds.profiles()
    novelty = novelty_analysis(generated, training)
    flow = cfg.flow()
    top_k = int(cfg["evaluate"]["top_k"])
    report = distribution_report(
        {"training": training, "generated": generated}, flow, int(cfg["evaluate"]["bins"]), top_k, None, novelty
    )
    manifest = _read_manifest(gen_dir / MANIFEST)
    rows = report.cohort_rows("generated")
    pairs = []
    for name, row in zip(used, rows):
        entry = manifest.get(name)
        if entry and entry["condition_kind"] in _METRIC_FIELD and entry["target"] and not row.error:
            pairs.append((float(entry["target"]), getattr(row, _METRIC_FIELD[entry["condition_kind"]])))
    if len(pairs) >= 2 and len({t for t, _ in pairs}) > 1:
        t, e = zip(*pairs)
        report.fidelity = fidelity_analysis(t, e)
    out_dir = cfg.output_dir / "report"
    written = write_report(report, out_dir)
    top_dir = out_dir / "top_k"
    top_dir.mkdir(exist_ok=True)
    for rank, item in enumerate(report.top_k):
        prof = report.profiles[item["cohort"]][item["index"]]
        write_profile(top_dir / f"{rank:02d}_{item['cohort']}_{item['index']:04d}.dat", prof)
    for line in report.summary_lines():
        print(line)
    print(f"wrote {len(written)} report files to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global")
    g.add_argument("--config", help="YAML config file")
    g.add_argument("--seed", type=int)
    g.add_argument("--output-dir")
    g.add_argument("--verbose", "-v", action="store_true")
    g.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key, e.g. train.steps=200")
    g.add_argument("--alpha-deg", type=float, help="angle of attack in degrees")
    g.add_argument("--reynolds", type=float)
    s = common.add_argument_group("schedule")
    s.add_argument("--total-steps", type=int)
    s.add_argument("--beta-start", type=float)
    s.add_argument("--beta-end", type=float)
    s.add_argument("--condition-kind", choices=CONDITION_KINDS)

    parser = argparse.ArgumentParser(prog="foilgen", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="canonicalize coordinate files into a dataset archive")
    p.add_argument("data_dir", nargs="?")

    p = sub.add_parser("train", parents=[common], help="train a denoiser on a dataset archive")
    p.add_argument("--dataset", help=f"archive path (default OUTPUT_DIR/{DATASET_FILE})")
    for flag, typ in (
        ("--steps", int),
        ("--batch-size", int),
        ("--learning-rate", float),
        ("--checkpoint-every", int),
        ("--holdout", float),
        ("--drop-prob", float),
        ("--base-width", int),
        ("--depth", int),
        ("--time-embed-dim", int),
        ("--cond-embed-dim", int),
        ("--fused-dim", int),
    ):
        p.add_argument(flag, type=typ)

    p = sub.add_parser("sample", parents=[common], help="generate profiles from a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--count", type=int)
    p.add_argument("--condition-min", type=float)
    p.add_argument("--condition-max", type=float)
    p.add_argument("--guidance-scale", type=float)

    p = sub.add_parser("evaluate", parents=[common], help="score generated profiles against the training set")
    p.add_argument("generated_dir")
    p.add_argument("--dataset", help=f"archive path (default OUTPUT_DIR/{DATASET_FILE})")
    p.add_argument("--top-k", type=int)
    return parser


COMMANDS = {"ingest": cmd_ingest, "train": cmd_train, "sample": cmd_sample, "evaluate": cmd_evaluate}


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = PipelineConfig.resolve(args)
        return COMMANDS[args.command](cfg, args)
    except CliError as exc:
        print(f"foilgen {args.command}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"foilgen {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
