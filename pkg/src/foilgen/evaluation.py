"""Quality and novelty metrics for generated profiles.

Chamfer distance is the sum of the two averaged directed nearest-neighbour
distances. Quartiles everywhere use linear interpolation between order
statistics (NumPy's default ``"linear"`` method).
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from . import kernels
from .aero import AeroCoefficients, FlowCondition, evaluate_batch
from .geometry import AirfoilProfile, GeometryError, NegativeThicknessWarning, geometric_metrics

HIST_METRICS = ("cl", "cd", "max_camber", "max_thickness")
DEFAULT_BINS = 40


class EvaluationError(ValueError):
    pass


class EmptySet(EvaluationError):
    pass


class EmptyCohort(EvaluationError):
    pass


class LengthMismatch(EvaluationError):
    pass


class DegenerateFit(EvaluationError):
    pass


def _points(p) -> np.ndarray:
    arr = p.points if isinstance(p, AirfoilProfile) else np.asarray(p, dtype=float)
    return np.ascontiguousarray(arr, dtype=float)


# ---------------------------------------------------------------------------
# Chamfer distance and novelty
# ---------------------------------------------------------------------------


def chamfer_distance(a, b) -> float:
    a, b = _points(a), _points(b)
    if a.size == 0 or b.size == 0:
        raise EmptySet("chamfer distance needs two nonempty point sets")
    if a.ndim != 2 or a.shape[1] != 2 or b.ndim != 2 or b.shape[1] != 2:
        raise ValueError(f"point sets must have shape (n, 2), got {a.shape} and {b.shape}")
    return float(kernels.chamfer(a, b))


def summarize(values) -> dict:
    v = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"min": float(v.min()), "q1": float(q1), "median": float(med), "q3": float(q3), "max": float(v.max())}


@dataclass(frozen=True)
class NoveltyResult:
    chamfer: np.ndarray
    nearest_index: np.ndarray
    summary: dict

    def to_dict(self) -> dict:
        return {
            "chamfer": self.chamfer.tolist(),
            "nearest_index": self.nearest_index.tolist(),
            "summary": self.summary,
        }


def novelty_analysis(generated: Sequence, training: Sequence) -> NoveltyResult:
    """Distance from each generated profile to its closest training profile."""
    if len(generated) == 0 or len(training) == 0:
        raise EmptyCohort("novelty analysis needs nonempty generated and training cohorts")
    stack = np.stack([_points(p) for p in training])
    dists = np.empty(len(generated))
    nearest = np.empty(len(generated), dtype=np.int64)
    for i, g in enumerate(generated):
        d = kernels.chamfer_one_to_many(_points(g), stack)
        j = int(np.argmin(d))  # first occurrence, so ties go to the lowest index
        dists[i] = d[j]
        nearest[i] = j
    return NoveltyResult(dists, nearest, summarize(dists))


# ---------------------------------------------------------------------------
# Conditioning fidelity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FidelityResult:
    targets: np.ndarray
    evaluated: np.ndarray
    percent_diff: np.ndarray  # NaN where the target is exactly zero
    excluded: np.ndarray
    mae: float
    slope: float
    intercept: float
    residual_std: float

    @property
    def percent_box(self) -> dict:
        return box_stats(self.percent_diff[~self.excluded])

    def to_dict(self) -> dict:
        return {
            "targets": self.targets.tolist(),
            "evaluated": self.evaluated.tolist(),
            "percent_diff": [None if e else float(p) for p, e in zip(self.percent_diff, self.excluded)],
            "mae": self.mae,
            "slope": self.slope,
            "intercept": self.intercept,
            "residual_std": self.residual_std,
            "percent_box": self.percent_box if (~self.excluded).any() else None,
        }


def fidelity_analysis(targets, evaluated) -> FidelityResult:
    """Percent differences, MAE and the least-squares line of evaluated vs target."""
    x = np.asarray(targets, dtype=float).ravel()
    y = np.asarray(evaluated, dtype=float).ravel()
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} targets vs {len(y)} evaluated values")
    if len(x) < 2:
        raise LengthMismatch("fidelity analysis needs at least two pairs")
    if np.all(x == x[0]):
        raise DegenerateFit("all targets identical; slope undefined")
    excluded = x == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        pct = np.where(excluded, np.nan, (y - x) / np.abs(x) * 100.0)
    mae = float(np.mean(np.abs(y - x)))
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    slope = float(np.dot(dx, y - ym) / np.dot(dx, dx))
    intercept = float(ym - slope * xm)
    resid = y - (slope * x + intercept)
    return FidelityResult(x, y, pct, excluded, mae, slope, intercept, float(np.std(resid)))


# ---------------------------------------------------------------------------
# Distribution report
# ---------------------------------------------------------------------------


def box_stats(values) -> dict:
    """Median, quartiles and Tukey whiskers (furthest points within 1.5 IQR)."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if len(v) == 0:
        return {"count": 0}
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    return {
        "count": int(len(v)),
        "median": float(med),
        "q1": float(q1),
        "q3": float(q3),
        "whisker_low": float(inside.min()),
        "whisker_high": float(inside.max()),
        "outliers": sorted(float(o) for o in v[(v < lo_fence) | (v > hi_fence)]),
    }


def shared_edges(arrays: Sequence[np.ndarray], bins: int = DEFAULT_BINS) -> np.ndarray:
    finite = [a[np.isfinite(a)] for a in arrays]
    finite = [a for a in finite if len(a)]
    if not finite:
        return np.linspace(-0.5, 0.5, bins + 1)
    lo = min(float(a.min()) for a in finite)
    hi = max(float(a.max()) for a in finite)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, bins + 1)


@dataclass
class SampleRow:
    cohort: str
    index: int
    name: str
    cl: float = math.nan
    cd: float = math.nan
    lift_to_drag: float = math.nan
    max_thickness: float = math.nan
    max_camber: float = math.nan
    error: str = ""

    FIELDS = ("cohort", "index", "name", "cl", "cd", "lift_to_drag", "max_thickness", "max_camber", "error")

    def as_list(self) -> list:
        return [getattr(self, f) for f in self.FIELDS]


@dataclass
class EvalReport:
    flow: FlowCondition
    rows: list
    histograms: dict
    lift_to_drag: dict
    top_k: list
    fidelity: Optional[FidelityResult] = None
    novelty: Optional[NoveltyResult] = None
    profiles: dict = field(default_factory=dict, repr=False)

    def cohort_rows(self, cohort: str) -> list:
        return [r for r in self.rows if r.cohort == cohort]

    def to_dict(self) -> dict:
        return {
            "flow": {"alpha": self.flow.alpha, "alpha_deg": math.degrees(self.flow.alpha), "reynolds": self.flow.reynolds},
            "rows": [_json_row(r) for r in self.rows],
            "histograms": self.histograms,
            "lift_to_drag": self.lift_to_drag,
            "top_k": self.top_k,
            "fidelity": None if self.fidelity is None else self.fidelity.to_dict(),
            "novelty": None if self.novelty is None else self.novelty.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(_finite_or_none(self.to_dict()), indent=1, sort_keys=True) + "\n"

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SampleRow.FIELDS)
        for r in self.rows:
            w.writerow([_csv_cell(v) for v in r.as_list()])
        return buf.getvalue()

    def summary_lines(self) -> list[str]:
        lines = [f"flow: alpha={math.degrees(self.flow.alpha):g} deg, Re={self.flow.reynolds:g}"]
        for cohort in dict.fromkeys(r.cohort for r in self.rows):
            rows = self.cohort_rows(cohort)
            failed = sum(1 for r in rows if r.error)
            ld = self.lift_to_drag.get(cohort, {})
            best = max((r.lift_to_drag for r in rows if not r.error), default=math.nan)
            lines.append(
                f"{cohort}: {len(rows)} profiles, {failed} failed, "
                f"median L/D {ld.get('median', math.nan):.3f}, max L/D {best:.3f}"
            )
        if self.fidelity is not None:
            f = self.fidelity
            lines.append(f"fidelity: MAE {f.mae:.6g}, slope {f.slope:.4f}, intercept {f.intercept:.6g}")
        if self.novelty is not None:
            s = self.novelty.summary
            lines.append(
                "chamfer to training: min {min:.4g} q1 {q1:.4g} median {median:.4g} q3 {q3:.4g} max {max:.4g}".format(**s)
            )
        return lines


def _csv_cell(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return v


def _json_row(r: SampleRow) -> dict:
    return {f: getattr(r, f) for f in SampleRow.FIELDS}


def _finite_or_none(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_none(v) for v in obj]
    return obj


def _evaluate_cohort(name: str, profiles: Sequence[AirfoilProfile], flow: FlowCondition) -> list:
    rows = [SampleRow(name, i, p.name) for i, p in enumerate(profiles)]
    for row, prof, res in zip(rows, profiles, evaluate_batch(profiles, flow)):
        if isinstance(res, AeroCoefficients):
            row.cl, row.cd, row.lift_to_drag = res.cl, res.cd, res.lift_to_drag
        else:
            row.error = f"{res.error}: {res.message}"
            continue
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NegativeThicknessWarning)
                gm = geometric_metrics(prof)
        except GeometryError as exc:
            row.error = f"{type(exc).__name__}: {exc}"
            continue
        row.max_thickness, row.max_camber = gm.thickness_ratio, gm.max_camber
    return rows


def distribution_report(
    cohorts: Mapping[str, Sequence[AirfoilProfile]],
    flow: FlowCondition = FlowCondition(),
    bins: int = DEFAULT_BINS,
    top_k: int = 5,
    fidelity: Optional[FidelityResult] = None,
    novelty: Optional[NoveltyResult] = None,
) -> EvalReport:
    """Evaluate every cohort and bin the metrics on edges shared across cohorts.

    Profiles that fail evaluation keep a row with ``error`` set and are left
    out of histograms and box statistics.
    """
    for name, profs in cohorts.items():
        if len(profs) == 0:
            raise EmptyCohort(f"cohort {name!r} is empty")
    rows = []
    for name, profs in cohorts.items():
        rows.extend(_evaluate_cohort(name, profs, flow))

    def column(cohort, metric):
        return np.array([getattr(r, metric) for r in rows if r.cohort == cohort and not r.error], dtype=float)

    histograms = {}
    for metric in HIST_METRICS:
        edges = shared_edges([column(c, metric) for c in cohorts], bins)
        histograms[metric] = {
            "edges": edges.tolist(),
            "counts": {c: np.histogram(column(c, metric), bins=edges)[0].tolist() for c in cohorts},
        }
    ld = {c: box_stats(column(c, "lift_to_drag")) for c in cohorts}
    ok = [r for r in rows if not r.error]
    # stable sort keeps cohort/index order among equal ratios
    ranked = sorted(ok, key=lambda r: -r.lift_to_drag)[:top_k]
    top = [{"cohort": r.cohort, "index": r.index, "name": r.name, "lift_to_drag": r.lift_to_drag} for r in ranked]
    return EvalReport(flow, rows, histograms, ld, top, fidelity, novelty, profiles=dict(cohorts))


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def write_report(report: EvalReport, out_dir, charts: bool = True) -> list[Path]:
    """Write ``report.json``, ``rows.csv`` and (optionally) SVG charts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "report.json", out / "rows.csv"]
    paths[0].write_text(report.to_json(), encoding="utf-8")
    paths[1].write_text(report.rows_csv(), encoding="utf-8")
    if charts:
        from .plots import render_all

        paths.extend(render_all(report, out))
    return paths
