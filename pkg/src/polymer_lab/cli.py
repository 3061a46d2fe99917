"""Command-line front end: config parsing, subcommands, artifact output.

Usage: polymer-lab <kernel|identity|experiment|report> --config <path>
                   [--out <dir>] [--workers N]

Configs are plain-text key = value sections; the canonicalized config text
is hashed into a digest that names output files and keys the kernel cache.
Exit codes: 0 all verdicts pass, 1 verdict failure, 2 usage or config
error, 3 resource limit.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
import traceback
from dataclasses import dataclass, field as dc_field, replace
from pathlib import Path

import numpy as np

from . import chaos, disorder, experiments, io, partition, rw_kernel
from .chaos import ScaleParams
from .disorder import DisorderSpec, Region
from .errors import ConfigError, PolymerLabError, ResourceLimitError

EXIT_PASS = 0
EXIT_VERDICT = 1
EXIT_CONFIG = 2
EXIT_RESOURCE = 3


@dataclass
class RunConfig:
    d: int
    spec: DisorderSpec
    params: ScaleParams
    seed: int
    out_dir: Path
    workers: int
    memory_budget: int
    digest: str
    raw: dict = dc_field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.raw.get(name, {})


def _canonical_text(parser: configparser.ConfigParser) -> str:
    lines = []
    for section in sorted(parser.sections()):
        for key in sorted(parser[section]):
            lines.append(f"{section}.{key}={parser[section][key]}")
    return "\n".join(lines)


def _parse_floats(text: str):
    return [float(x) for x in text.replace(",", " ").split()]


def _parse_ints(text: str):
    return [int(x) for x in text.replace(",", " ").split()]


def load_config(path, out_override=None, workers_override=None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    raw = {s: dict(parser[s]) for s in parser.sections()}
    run = raw.get("run", {})
    d = int(run.get("dimension", 3))
    if d < 3:
        raise ConfigError(f"dimension must be >= 3, got {d}")
    seed = int(run.get("seed", 0))
    workers = int(run.get("workers", 1))
    if workers_override is not None:
        workers = int(workers_override)
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    memory_budget = int(run.get("memory_budget", 4 << 30))
    out_dir = Path(out_override or run.get("out", "runs"))

    dis = raw.get("disorder", {})
    kwargs = {}
    if "half_width" in dis:
        kwargs["half_width"] = float(dis["half_width"])
    if "values" in dis:
        kwargs["values"] = tuple(_parse_floats(dis["values"]))
    if "weights" in dis:
        kwargs["weights"] = tuple(_parse_floats(dis["weights"]))
    spec = DisorderSpec(
        dis.get("family", "rademacher"),
        float(dis.get("beta", 0.3)),
        seed,
        **kwargs,
    )

    sc = raw.get("scale", {})
    defaults = ScaleParams()
    params = ScaleParams(
        sigma=float(sc.get("sigma", defaults.sigma)),
        sigma_tilde=float(sc.get("sigma_tilde", defaults.sigma_tilde)),
        kappa1=float(sc.get("kappa1", defaults.kappa1)),
        kappa2=float(sc.get("kappa2", defaults.kappa2)),
        gap_exp=float(sc.get("gap_exp", defaults.gap_exp)),
        xi1=float(sc.get("xi1", defaults.xi1)),
        xi2=float(sc.get("xi2", defaults.xi2)),
    )

    margin = disorder.weak_disorder_margin(spec, d)
    if margin >= 1.0:
        raise ConfigError(
            f"weak-disorder constraint violated: alpha_d * lambda = "
            f"{margin} >= 1 for beta={spec.beta}, d={d}"
        )

    digest = hashlib.sha256(_canonical_text(parser).encode()).hexdigest()[:16]
    return RunConfig(d, spec, params, seed, out_dir, workers, memory_budget,
                     digest, raw)


# ---------------------------------------------------------------------------
# subcommands


def _kernel_cache_path(out_dir: Path, d: int, t_max: int) -> Path:
    key = hashlib.sha256(f"kernel:d={d}:t_max={t_max}:layout=1".encode())
    cache = out_dir / "cache"
    cache.mkdir(parents=True, exist_ok=True)
    return cache / f"kernel_{key.hexdigest()[:16]}.plkt"


def cmd_kernel(cfg: RunConfig) -> int:
    sec = cfg.section("kernel")
    t_max = int(sec.get("t_max", 32))
    tol = float(sec.get("tol", 1e-12))
    cache_path = _kernel_cache_path(cfg.out_dir, cfg.d, t_max)
    if cache_path.is_file():
        table = io.load_kernel_table(cache_path)
        cached = True
    else:
        table = rw_kernel.build_kernel_table(cfg.d, t_max, cfg.memory_budget)
        io.save_kernel_table(table, cache_path)
        cached = False

    checks = []

    def record(name, value, bound):
        checks.append({"check": name, "value": float(value),
                       "bound": float(bound),
                       "pass": bool(value <= bound)})

    norm_err = max(abs(table.total(t) - 1.0) for t in range(t_max + 1))
    record("normalization", norm_err, tol)
    neg = min(float(table.slice(t).min()) for t in range(t_max + 1))
    record("nonnegativity", -neg, 0.0)
    sym_err = 0.0
    for t in range(min(t_max, 12) + 1):
        s = table.slice(t)
        for ax in range(cfg.d):
            sym_err = max(sym_err, float(np.abs(s - np.flip(s, axis=ax)).max()))
    record("reflection_symmetry", sym_err, tol)
    sq_err = 0.0
    for t in range(min(t_max // 2, 16) + 1):
        sq_err = max(sq_err, abs(table.sum_sq(t) - table.q(2 * t, (0,) * cfg.d)))
    record("sum_sq_identity", sq_err, 1e-14)
    alpha = rw_kernel.alpha_d(cfg.d, 1e-8)
    lam = disorder.lambda_of(cfg.spec)
    record("weak_disorder_margin", alpha * lam, 1.0)

    ok = all(c["pass"] for c in checks)
    io.write_csv(cfg.out_dir / f"{cfg.digest}_kernel.csv", checks, cfg.digest)
    io.write_json_summary(
        cfg.out_dir / f"{cfg.digest}_kernel.json",
        {"subcommand": "kernel", "d": cfg.d, "t_max": t_max,
         "cache": str(cache_path), "cache_hit": cached,
         "alpha_d": alpha, "lambda": lam, "checks": checks,
         "verdict": "pass" if ok else "fail"},
        cfg.digest,
    )
    return EXIT_PASS if ok else EXIT_VERDICT


def cmd_identity(cfg: RunConfig) -> int:
    sec = cfg.section("identity")
    t_max = int(sec.get("t_max", 4))
    tau_max = int(sec.get("tau_max", 8))
    n_seeds = int(sec.get("n_seeds", 3))
    tol = float(sec.get("tol", 1e-9))
    k_cut = float(sec.get("k_override", 3))
    gap_cut = float(sec.get("gap_override", 2))

    rows = []

    def record(name, residual):
        rows.append({"check": name, "residual": float(residual),
                     "tol": tol, "pass": bool(residual <= tol)})

    # chaos expansion versus transfer matrix, point to point at y = 0-ish
    worst = 0.0
    for t in range(1, t_max + 1):
        region = Region((-t - 1,) * cfg.d, (t + 1,) * cfg.d, -1, t + 1)
        for i in range(n_seeds):
            fld = disorder.sample_field(
                replace(cfg.spec, seed=cfg.seed + 1000 + i), region
            )
            y = (t % 2,) + (0,) * (cfg.d - 1)
            z_chaos = chaos.chaos_sum_full(fld, y, t)
            z_dp = partition.point_to_point(fld, (0,) * cfg.d, 0, y, t)
            denom = max(abs(z_dp), 1e-300)
            worst = max(worst, abs(z_chaos - z_dp) / denom)
    record("chaos_vs_transfer_matrix", worst)

    # B and F/L reassembly in test mode (injected small-t thresholds)
    worst_b = 0.0
    worst_fl = 0.0
    t_test = min(t_max + 2, 6)
    region = Region((-t_test - 1,) * cfg.d, (t_test + 1,) * cfg.d, -1,
                    t_test + 1)
    for i in range(n_seeds):
        fld = disorder.sample_field(
            replace(cfg.spec, seed=cfg.seed + 2000 + i), region
        )
        y = (t_test % 2,) + (0,) * (cfg.d - 1)
        dec = chaos.decompose_B(fld, y, t_test, cfg.params,
                                thresholds_override=(k_cut, gap_cut))
        worst_b = max(worst_b, dec.residual)
        fl = chaos.decompose_FL(fld, y, t_test, cfg.params,
                                thresholds_override=(k_cut, gap_cut))
        worst_fl = max(worst_fl, fl.residual)
    record("B_reassembly", worst_b)
    record("FL_reassembly", worst_fl)

    # second-moment cross-oracle
    worst_m = 0.0
    for tau in range(tau_max + 1):
        a = partition.replica_second_moment(cfg.spec, tau, d=cfg.d)
        b = partition.chaos_second_moment(cfg.spec, tau, d=cfg.d)
        worst_m = max(worst_m, abs(a - b))
    record("second_moment_oracles", worst_m)

    ok = all(r["pass"] for r in rows)
    io.write_csv(cfg.out_dir / f"{cfg.digest}_identity.csv", rows, cfg.digest)
    io.write_json_summary(
        cfg.out_dir / f"{cfg.digest}_identity.json",
        {"subcommand": "identity", "checks": rows,
         "verdict": "pass" if ok else "fail"},
        cfg.digest,
    )
    return EXIT_PASS if ok else EXIT_VERDICT


def _verdict_factorization(result) -> dict:
    sups = [v for _, v in result.meta["sups"]]
    decreasing = all(b < a for a, b in zip(sups, sups[1:]))
    fit = result.fit
    ci_excludes_zero = fit.slope + fit.half_width < 0.0
    return {
        "sup_strictly_decreasing": bool(decreasing),
        "slope": fit.slope,
        "ci_half_width": fit.half_width,
        "slope_at_most_-0.2_ci_excl_0": bool(fit.slope <= -0.2
                                             and ci_excludes_zero),
    }


def _verdict_convergence(result) -> dict:
    ok_mc = all(abs(r["mean"] - r["exact"]) <= 4.0 * r["stderr"]
                for r in result.rows)
    exact = [r["exact"] for r in result.rows]
    decreasing = all(v > 0 for v in exact) and all(
        b < a for a, b in zip(exact, exact[1:])
    )
    theta_hat = -result.fit.slope
    return {
        "mc_within_4_stderr": bool(ok_mc),
        "exact_positive_decreasing": bool(decreasing),
        "theta_hat": theta_hat,
        "theta_cap": result.meta["theta_cap"],
        "theta_at_least_0.3": bool(theta_hat >= 0.3),
    }


def _verdict_correlation(result) -> dict:
    ok = all(abs(r["mean"] - r["closed_form"]) <= 4.0 * r["stderr"]
             for r in result.rows)
    return {"mc_within_4_stderr_of_closed_form": bool(ok)}


def cmd_experiment(cfg: RunConfig) -> int:
    sec = cfg.section("experiment")
    scans = [s.strip() for s in
             sec.get("scans", "convergence").replace(",", " ").split()]
    summary = {"subcommand": "experiment", "seed": cfg.seed,
               "workers": cfg.workers, "scans": {},
               "config_echo": cfg.raw}
    all_rows = []
    ok = True
    for scan in scans:
        if scan == "factorization":
            result = experiments.factorization_scan(
                cfg.spec, cfg.params,
                t_ladder=tuple(_parse_ints(sec.get("factorization_ladder",
                                                   "8 16 32 48"))),
                n=int(sec.get("factorization_n", 1000)),
                d=cfg.d, seed=cfg.seed,
            )
            verdict = _verdict_factorization(result)
        elif scan == "convergence":
            result = experiments.convergence_rate_scan(
                cfg.spec,
                t_ladder=tuple(_parse_ints(sec.get("convergence_ladder",
                                                   "4 8 16 32"))),
                T_ref=int(sec.get("convergence_t_ref", 64)),
                n=int(sec.get("convergence_n", 4000)),
                d=cfg.d, seed=cfg.seed,
            )
            verdict = _verdict_convergence(result)
        elif scan in ("correlation_spatial", "correlation_temporal"):
            mode = scan.split("_", 1)[1]
            result = experiments.correlation_scan(
                cfg.spec, mode,
                offsets=_parse_ints(sec.get(f"{scan}_offsets", "0 2 4")),
                T_proxy=int(sec.get(f"{scan}_t", 40)),
                n=int(sec.get(f"{scan}_n", 20000)),
                d=cfg.d, seed=cfg.seed,
            )
            verdict = _verdict_correlation(result)
        else:
            raise ConfigError(f"unknown scan {scan!r}")
        all_rows.extend(result.rows)
        entry = {"verdict": verdict, "rows": result.rows}
        if result.fit is not None:
            entry["fit"] = {"slope": result.fit.slope,
                            "half_width": result.fit.half_width,
                            "intercept": result.fit.intercept}
        entry["meta"] = {k: v for k, v in result.meta.items()
                         if k not in ("exact",)}
        summary["scans"][scan] = entry
        ok = ok and all(v for v in verdict.values() if isinstance(v, bool))
    summary["verdict"] = "pass" if ok else "fail"
    io.write_csv(cfg.out_dir / f"{cfg.digest}_experiment.csv",
                 _pad_rows(all_rows), cfg.digest)
    io.write_json_summary(cfg.out_dir / f"{cfg.digest}_summary.json",
                          summary, cfg.digest)
    return EXIT_PASS if ok else EXIT_VERDICT


def _pad_rows(rows):
    """Union of columns across heterogeneous scan rows, blanks elsewhere."""
    cols = []
    for row in rows:
        for k in row:
            if k not in cols:
                cols.append(k)
    return [{k: row.get(k, "") for k in cols} for row in rows]


def cmd_report(cfg: RunConfig) -> int:
    merged = {}
    for path in sorted(cfg.out_dir.glob("*.csv")):
        meta, rows = io.read_csv(path)
        merged[path.name] = {"meta": meta, "rows": rows}
    if not merged:
        raise ConfigError(f"no CSV artifacts found in {cfg.out_dir}")
    io.write_json_summary(cfg.out_dir / f"{cfg.digest}_report.json",
                          {"subcommand": "report", "artifacts": merged},
                          cfg.digest)
    return EXIT_PASS


_COMMANDS = {
    "kernel": cmd_kernel,
    "identity": cmd_identity,
    "experiment": cmd_experiment,
    "report": cmd_report,
}


def _diagnostic(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="polymer-lab",
        description="Directed-polymer simulation and verification suite",
    )
    ap.add_argument("subcommand", choices=sorted(_COMMANDS))
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", default=None)
    ap.add_argument("--workers", type=int, default=None)
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    try:
        cfg = load_config(args.config, out_override=args.out,
                          workers_override=args.workers)
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.subcommand](cfg)
    except ConfigError as exc:
        _diagnostic("config", str(exc))
        return EXIT_CONFIG
    except ResourceLimitError as exc:
        _diagnostic("resource", str(exc))
        return EXIT_RESOURCE
    except PolymerLabError as exc:
        _diagnostic("verdict", str(exc))
        return EXIT_VERDICT
    except Exception as exc:
        _diagnostic("internal", f"{exc}\n{traceback.format_exc()}")
        return EXIT_VERDICT


if __name__ == "__main__":
    sys.exit(main())
