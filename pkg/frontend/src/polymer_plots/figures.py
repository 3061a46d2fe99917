"""Deterministic figure rendering from polymer-lab artifact rows.

Three figure kinds:

- ``delta_decay``: factorization-error means versus t on log-log axes,
  one series per endpoint offset, with the per-t sup and its fitted
  power-law guide line (slope annotated).
- ``covariance_scaling``: Monte-Carlo covariances versus offset with the
  closed-form values and a reference power-law slope line.
- ``rate_curve``: exact and Monte-Carlo L2 convergence curves with the
  fitted decay slope and optional reference exponent lines.

Rendering is a pure function of the input files: fixed canvas, fixed
fonts, no timestamps, and all statistics read from the artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import ArtifactError, column, read_csv

KINDS = ("delta_decay", "covariance_scaling", "rate_curve")

_RC = {
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 9.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "polymer-plots",
}


@dataclass
class FigureSpec:
    kind: str
    csv_paths: tuple
    out_path: Path
    reference_slopes: tuple = ()
    digest: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArtifactError(f"unknown figure kind {self.kind!r}")
        if not self.csv_paths:
            raise ArtifactError("figure spec needs at least one CSV input")
        self.csv_paths = tuple(Path(p) for p in self.csv_paths)
        self.out_path = Path(self.out_path)


@dataclass
class RenderResult:
    path: Path
    annotations: dict


def fit_slope(points):
    """Least-squares power-law exponent on log-log coordinates.

    Mirrors the simulation suite's rate fit so annotated slopes agree with
    its reported values on identical inputs.
    """
    pts = [(float(t), float(v)) for t, v in points]
    if len(pts) < 3:
        raise ArtifactError("slope fit needs at least 3 points")
    if any(t <= 0 or v <= 0 for t, v in pts):
        raise ArtifactError("slope fit needs positive times and values")
    x = np.log([t for t, _ in pts])
    y = np.log([v for _, v in pts])
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0]), float(coef[1])


def _load_rows(spec: FigureSpec, experiment_prefix: str):
    rows = []
    digest = spec.digest
    for path in spec.csv_paths:
        meta, file_rows = read_csv(path)
        digest = digest or meta.get("digest", "")
        rows.extend(
            r for r in file_rows
            if r.get("experiment", "").startswith(experiment_prefix)
        )
    if not rows:
        raise ArtifactError(
            f"no rows with experiment prefix {experiment_prefix!r} in "
            f"{[str(p) for p in spec.csv_paths]}"
        )
    return rows, digest


def _finalize(fig, ax, spec: FigureSpec, digest: str, annotations: dict):
    ax.legend(loc="best", fontsize=8)
    fig.text(0.99, 0.01, f"config {digest}", ha="right", va="bottom",
             fontsize=6, color="0.4")
    spec.out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out_path, metadata={"Software": "polymer-plots"})
    plt.close(fig)
    return RenderResult(spec.out_path, annotations)


def _render_delta_decay(spec: FigureSpec):
    rows, digest = _load_rows(spec, "factorization")
    ts = column(rows, "t")
    ys = column(rows, "y", cast=lambda s: int(float(s)))
    means = column(rows, "mean")
    errs = column(rows, "stderr")
    fig, ax = plt.subplots()
    for off in sorted(set(ys)):
        pts = [(t, m, e) for t, y, m, e in zip(ts, ys, means, errs)
               if y == off]
        pts.sort()
        ax.errorbar([p[0] for p in pts], [p[1] for p in pts],
                    yerr=[p[2] for p in pts], marker="o", capsize=2,
                    label=f"y = {off} e1")
    sups = sorted(
        (t, max(m for t2, m in zip(ts, means) if t2 == t))
        for t in set(ts)
    )
    ax.plot([t for t, _ in sups], [v for _, v in sups], "k--",
            label="per-t sup")
    annotations = {"digest": digest}
    if len(sups) >= 3 and all(v > 0 for _, v in sups):
        slope, intercept = fit_slope(sups)
        grid = np.array([sups[0][0], sups[-1][0]], dtype=float)
        ax.plot(grid, np.exp(intercept) * grid**slope, "r-", alpha=0.7,
                label="sup fit")
        ax.annotate(f"slope = {slope:.12g}", xy=(0.04, 0.06),
                    xycoords="axes fraction", color="r")
        annotations["slope"] = slope
    for ref in spec.reference_slopes:
        grid = np.array([sups[0][0], sups[-1][0]], dtype=float)
        anchor = sups[0][1]
        ax.plot(grid, anchor * (grid / grid[0]) ** ref, ":", color="0.5",
                label=f"reference t^{ref:g}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("mean |delta|")
    ax.set_title("factorization error decay")
    return _finalize(fig, ax, spec, digest, annotations)


def _render_covariance_scaling(spec: FigureSpec):
    rows, digest = _load_rows(spec, "correlation")
    offs = column(rows, "offset", cast=lambda s: int(float(s)))
    means = column(rows, "mean")
    errs = column(rows, "stderr")
    closed = column(rows, "closed_form")
    order = np.argsort(offs)
    offs = [offs[i] for i in order]
    means = [means[i] for i in order]
    errs = [errs[i] for i in order]
    closed = [closed[i] for i in order]
    fig, ax = plt.subplots()
    ax.errorbar(offs, means, yerr=errs, marker="o", linestyle="none",
                capsize=2, label="MC covariance")
    ax.plot(offs, closed, "s--", label="closed form")
    annotations = {"digest": digest}
    positive = [(o, c) for o, c in zip(offs, closed) if o > 0 and c > 0]
    for ref in spec.reference_slopes:
        if positive:
            o0, c0 = positive[0]
            grid = np.linspace(max(o0, 1), max(offs), 64)
            ax.plot(grid, c0 * (grid / o0) ** ref, ":", color="0.5",
                    label=f"reference |y|^{ref:g}")
    ax.set_xlabel("offset along e1")
    ax.set_ylabel("covariance")
    ax.set_title("partition-function covariance versus offset")
    return _finalize(fig, ax, spec, digest, annotations)


def _render_rate_curve(spec: FigureSpec):
    rows, digest = _load_rows(spec, "convergence")
    ts = column(rows, "t")
    means = column(rows, "mean")
    errs = column(rows, "stderr")
    exact = column(rows, "exact")
    order = np.argsort(ts)
    ts = [ts[i] for i in order]
    means = [means[i] for i in order]
    errs = [errs[i] for i in order]
    exact = [exact[i] for i in order]
    fig, ax = plt.subplots()
    ax.errorbar(ts, means, yerr=errs, marker="o", linestyle="none",
                capsize=2, label="MC L2 distance")
    ax.plot(ts, exact, "s-", label="exact curve")
    annotations = {"digest": digest}
    if len(ts) >= 3 and all(v > 0 for v in exact):
        slope, intercept = fit_slope(list(zip(ts, exact)))
        grid = np.array([ts[0], ts[-1]], dtype=float)
        ax.plot(grid, np.exp(intercept) * grid**slope, "r-", alpha=0.7,
                label="exact-curve fit")
        ax.annotate(f"slope = {slope:.12g}", xy=(0.04, 0.06),
                    xycoords="axes fraction", color="r")
        annotations["slope"] = slope
    for ref in spec.reference_slopes:
        grid = np.array([ts[0], ts[-1]], dtype=float)
        ax.plot(grid, exact[0] * (grid / grid[0]) ** ref, ":", color="0.5",
                label=f"reference t^{ref:g}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("<(Z^t - Z^ref)^2>")
    ax.set_title("L2 convergence rate")
    return _finalize(fig, ax, spec, digest, annotations)


_RENDERERS = {
    "delta_decay": _render_delta_decay,
    "covariance_scaling": _render_covariance_scaling,
    "rate_curve": _render_rate_curve,
}


def render(spec: FigureSpec) -> RenderResult:
    """Render one figure; deterministic for fixed input files."""
    with plt.rc_context(_RC):
        return _RENDERERS[spec.kind](spec)
