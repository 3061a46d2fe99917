"""polymer-plots: render figures from a polymer-lab run summary.

Usage: polymer-plots --summary <json> --out <dir>

The summary's config digest locates the sibling ``<digest>_experiment.csv``;
one figure is rendered per scan kind found in it.  Exit codes: 0 all
figures rendered, 1 internal failure, 2 bad input artifacts or usage.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FigureSpec, render
from .io import ArtifactError, read_csv, read_summary

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INPUT = 2

# scan name prefix in the CSV's experiment column -> figure kind
_KIND_BY_SCAN = (
    ("factorization", "delta_decay"),
    ("correlation", "covariance_scaling"),
    ("convergence", "rate_curve"),
)


def _reference_slopes(kind: str, summary: dict) -> tuple:
    """Reference exponent lines taken from the summary, never recomputed."""
    config = summary.get("config_echo", {})
    d = int(config.get("run", {}).get("dimension", 3))
    if kind == "covariance_scaling":
        return (-(d - 2),)
    if kind == "rate_curve":
        verdict = (summary.get("scans", {}).get("convergence", {})
                   .get("verdict", {}))
        cap = verdict.get("theta_cap")
        return (-float(cap),) if cap is not None else ()
    return ()


def plan_figures(summary_path, out_dir) -> list:
    """Build figure specs for every scan present in the run artifacts."""
    summary_path = Path(summary_path)
    summary = read_summary(summary_path)
    digest = summary["config_digest"]
    csv_path = summary_path.parent / f"{digest}_experiment.csv"
    _, rows = read_csv(csv_path)
    present = {r.get("experiment", "") for r in rows}
    specs = []
    for prefix, kind in _KIND_BY_SCAN:
        if any(name.startswith(prefix) for name in present):
            specs.append(
                FigureSpec(
                    kind=kind,
                    csv_paths=(csv_path,),
                    out_path=Path(out_dir) / f"{kind}.png",
                    reference_slopes=_reference_slopes(kind, summary),
                    digest=digest,
                )
            )
    if not specs:
        raise ArtifactError(f"{csv_path}: no renderable scan rows")
    return specs


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="polymer-plots",
        description="Render figures from polymer-lab CSV/JSON artifacts",
    )
    ap.add_argument("--summary", required=True)
    ap.add_argument("--out", required=True)
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    try:
        specs = plan_figures(args.summary, args.out)
        for spec in specs:
            result = render(spec)
            print(result.path)
        return EXIT_PASS
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
