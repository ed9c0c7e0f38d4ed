"""Ingested dataset archive: canonical samples plus cached conditioning values.

Stored as a ``"dataset"`` container (see :mod:`foilgen.container`). Metric
arrays hold NaN where a value could not be computed; the reason is kept in
the meta block.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import container
from .aero import AeroCoefficients, FlowCondition, evaluate
from .geometry import (
    AirfoilProfile,
    GeometryError,
    NegativeThicknessWarning,
    canonicalize,
    from_canonical,
    geometric_metrics,
    read_profile,
    to_canonical,
)
from .trainer import TrainingSet

KIND = "dataset"
METRIC_COLUMNS = ("lift_coefficient", "drag_coefficient", "max_thickness", "max_camber")


class NoValidProfiles(ValueError):
    pass


@dataclass
class Rejection:
    file: str
    reason: str


@dataclass
class Dataset:
    names: list
    files: list
    samples: np.ndarray
    metrics: dict  # column -> (n,) float array
    self_intersecting: np.ndarray
    aero_errors: dict = field(default_factory=dict)  # index -> reason
    rejections: list = field(default_factory=list)
    flow: FlowCondition = FlowCondition()

    def __len__(self) -> int:
        return len(self.samples)

    def profiles(self) -> list[AirfoilProfile]:
        return [from_canonical(s, n) for s, n in zip(self.samples, self.names)]

    def training_set(self, kind: str = "none") -> tuple[TrainingSet, list[str]]:
        """Samples usable for ``kind`` and a list of reasons for any left out."""
        if kind == "none":
            return TrainingSet(self.samples), []
        if kind not in METRIC_COLUMNS:
            raise ValueError(f"unknown conditioning kind {kind!r}")
        vals = self.metrics[kind]
        keep = np.isfinite(vals)
        notes = []
        for i in np.flatnonzero(~keep):
            why = self.aero_errors.get(int(i), "value unavailable")
            notes.append(f"{self.files[i]}: excluded from {kind} conditioning ({why})")
        return TrainingSet(self.samples[keep], kind, vals[keep]), notes

    # -- persistence --------------------------------------------------------

    def to_bytes(self) -> bytes:
        meta = {
            "names": list(self.names),
            "files": list(self.files),
            "aero_errors": {str(k): v for k, v in sorted(self.aero_errors.items())},
            "rejections": [[r.file, r.reason] for r in self.rejections],
            "flow": {"alpha": self.flow.alpha, "reynolds": self.flow.reynolds},
        }
        arrays = {"samples": self.samples, "self_intersecting": self.self_intersecting.astype(np.int64)}
        for col in METRIC_COLUMNS:
            arrays[col] = self.metrics[col]
        return container.dumps(KIND, meta, arrays)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Dataset":
        _, meta, arrays = container.loads(data, KIND)
        return cls(
            names=meta["names"],
            files=meta["files"],
            samples=arrays["samples"],
            metrics={c: arrays[c] for c in METRIC_COLUMNS},
            self_intersecting=arrays["self_intersecting"].astype(bool),
            aero_errors={int(k): v for k, v in meta["aero_errors"].items()},
            rejections=[Rejection(f, r) for f, r in meta["rejections"]],
            flow=FlowCondition(meta["flow"]["alpha"], meta["flow"]["reynolds"]),
        )

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.to_bytes())
        return path

    @classmethod
    def load(cls, path) -> "Dataset":
        return cls.from_bytes(Path(path).read_bytes())


def profile_metrics(profile: AirfoilProfile, flow: FlowCondition) -> tuple[dict, bool, Optional[str]]:
    """All four conditioning quantities for one canonical profile.

    Returns ``(values, self_intersecting, aero_error)``; aerodynamic values are
    NaN when the oracle fails.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NegativeThicknessWarning)
        gm = geometric_metrics(profile)
    values = {"max_thickness": gm.thickness_ratio, "max_camber": gm.max_camber}
    err = None
    try:
        coeffs: AeroCoefficients = evaluate(profile, flow)
        values["lift_coefficient"], values["drag_coefficient"] = coeffs.cl, coeffs.cd
    except (ValueError, np.linalg.LinAlgError) as exc:
        values["lift_coefficient"] = values["drag_coefficient"] = math.nan
        err = f"{type(exc).__name__}: {exc}"
    return values, gm.negative_thickness, err


def ingest(paths, flow: FlowCondition = FlowCondition()) -> Dataset:
    """Parse and canonicalize coordinate files; bad files become rejections."""
    names, files, samples, flags = [], [], [], []
    metrics = {c: [] for c in METRIC_COLUMNS}
    aero_errors, rejections = {}, []
    for path in sorted(Path(p) for p in paths):
        try:
            prof = canonicalize(read_profile(path))
            sample = np.asarray(to_canonical(prof))
        except (GeometryError, UnicodeDecodeError, OSError) as exc:
            rejections.append(Rejection(path.name, f"{type(exc).__name__}: {exc}"))
            continue
        values, crossed, err = profile_metrics(prof, flow)
        if err is not None:
            aero_errors[len(samples)] = err
        names.append(prof.name)
        files.append(path.name)
        samples.append(sample)
        flags.append(crossed)
        for c in METRIC_COLUMNS:
            metrics[c].append(values[c])
    if not samples:
        raise NoValidProfiles(f"no parseable coordinate files among {len(rejections)} candidates")
    return Dataset(
        names,
        files,
        np.stack(samples),
        {c: np.asarray(v, dtype=float) for c, v in metrics.items()},
        np.asarray(flags, dtype=bool),
        aero_errors,
        rejections,
        flow,
    )
