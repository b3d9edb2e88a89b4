"""Command line interface.

Exit codes: 0 pass, 1 assertion failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Any, Iterable

from mildar.estimation import ZeroDenominatorError, estimate
from mildar.harness import SUITES, CampaignConfig, random_paths, run_campaign, run_property_suite, write_campaign
from mildar.identities import verify_path
from mildar.limits import BranchMismatch, TheoremBranch, infer_branch, quantile_table
from mildar.model import ModelConfig, simulate
from mildar.rng import replication_seed

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

MODEL_DEFAULTS: dict[str, Any] = {
    "gamma1": 2.0,
    "gamma2": 1.0,
    "alpha": 1.0 / 3.0,
    "n": 400,
    "regime": "PP",
    "sigma": 1.0,
    "noise": "Gaussian",
}
RUN_DEFAULTS: dict[str, Any] = {
    "replications": None,
    "base_seed": 0,
    "workers": 1,
    "branch": None,
    "output_path": None,
    "summation_mode": "plain",
}
# JSON config aliases -> canonical keys
ALIASES = {"reps": "replications", "seed": "base_seed", "out": "output_path"}


class UsageError(Exception):
    pass


def _load_config_file(path: str | None) -> dict[str, Any]:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    flat = dict(data.pop("model", {}) or {})
    if "kahan" in data:
        data["summation_mode"] = "compensated" if data.pop("kahan") else "plain"
    for key, value in data.items():
        flat[ALIASES.get(key, key)] = value
    unknown = set(flat) - set(MODEL_DEFAULTS) - set(RUN_DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return flat


def resolve(args: argparse.Namespace) -> tuple[ModelConfig, dict[str, Any]]:
    """Defaults, then the JSON file, then explicit flags."""
    merged = {**MODEL_DEFAULTS, **RUN_DEFAULTS, **_load_config_file(args.config)}
    flags = {
        "gamma1": args.gamma1,
        "gamma2": args.gamma2,
        "alpha": args.alpha,
        "n": args.n,
        "regime": args.regime,
        "sigma": args.sigma,
        "noise": args.noise,
        "replications": args.reps,
        "base_seed": args.seed,
        "workers": args.workers,
        "branch": args.branch,
        "output_path": args.out,
    }
    merged.update({k: v for k, v in flags.items() if v is not None})
    if args.kahan:
        merged["summation_mode"] = "compensated"
    try:
        model = ModelConfig(**{k: merged[k] for k in MODEL_DEFAULTS})
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    return model, {k: merged[k] for k in RUN_DEFAULTS}


def _write_rows(rows: list[dict[str, Any]], out: str | None) -> None:
    if out and out.lower().endswith(".json"):
        Path(out).write_text(json.dumps(rows, indent=2))
        return
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        if rows:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    finally:
        if out:
            fh.close()


def _seeds(run: dict[str, Any], default_reps: int = 1) -> Iterable[int]:
    """A single run uses --seed as is; several runs derive one seed per index."""
    reps = run["replications"] or default_reps
    if reps == 1:
        return [run["base_seed"]]
    return [replication_seed(run["base_seed"], i) for i in range(reps)]


def _emit_json(payload: dict[str, Any], out: str | None = None) -> None:
    text = json.dumps(payload, indent=2, default=float)
    if out:
        Path(out).write_text(text)
    print(text)


def cmd_simulate(args: argparse.Namespace) -> int:
    model, run = resolve(args)
    path = simulate(model, run["base_seed"])
    v = path.v_padded
    rows = [{"k": k, "v": v[k], "eps": path.eps[k], "x": path.x[k]} for k in range(model.n + 1)]
    _write_rows(rows, run["output_path"])
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    model, run = resolve(args)
    rows = []
    for seed in _seeds(run):
        try:
            rows.append(estimate(simulate(model, seed), run["summation_mode"]).to_row(seed))
        except ZeroDenominatorError:
            rows.append({"seed": seed, "theta_hat": math.nan, "rho_hat": math.nan, "error": "zero_denominator"})
    _write_rows(rows, run["output_path"])
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    model, run = resolve(args)
    if args.random_configs:
        pairs = list(random_paths(run["base_seed"], args.random_configs))
    else:
        pairs = [(seed, simulate(model, seed)) for seed in _seeds(run)]
    rows, bad = [], 0
    for seed, path in pairs:
        for rep in verify_path(path, run["summation_mode"]):
            rows.append(rep.to_row(seed))
            bad += rep.unflagged_failure
    _write_rows(rows, run["output_path"])
    if bad:
        print(f"{bad} unflagged identity failures", file=sys.stderr)
    return EXIT_FAIL if bad else EXIT_OK


def _campaign(args: argparse.Namespace) -> tuple[CampaignConfig, str | None]:
    model, run = resolve(args)
    branch = run["branch"] or infer_branch(model)
    return CampaignConfig(
        model=model,
        branch=TheoremBranch.parse(branch),
        replications=run["replications"] or 1000,
        base_seed=run["base_seed"],
        workers=run["workers"],
        output_path=None,
        summation_mode=run["summation_mode"],
    ), run["output_path"]


def cmd_mc(args: argparse.Namespace) -> int:
    cfg, out = _campaign(args)
    result = run_campaign(cfg)
    if out:
        write_campaign(result, out)
    _emit_json(result.summary())
    return EXIT_OK if result.within_nonfinite_cap else EXIT_FAIL


def cmd_limit_check(args: argparse.Namespace) -> int:
    cfg, out = _campaign(args)
    result = run_campaign(cfg)
    payload = {
        "location": result.ref.location,
        "scale": result.ref.scale,
        "ks": result.ks,
        "n_nonfinite": result.nonfinite_count,
        "quantiles": quantile_table(result.statistics, result.ref).to_rows() if result.statistics.size else [],
        "effective_config": cfg.to_dict(),
    }
    if out:
        _, json_path = write_campaign(result, out)
        json_path.write_text(json.dumps(payload, indent=2))
    _emit_json(payload)
    ok = result.within_nonfinite_cap and (args.ks_max is None or result.ks < args.ks_max)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_suite(args: argparse.Namespace) -> int:
    if args.list:
        print("\n".join(sorted(SUITES)))
        return EXIT_OK
    if not args.suite_id:
        raise UsageError("suite id required (see --list)")
    try:
        report = run_property_suite(args.suite_id, args.seed or 0)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from exc
    _emit_json(report.to_dict(), args.out)
    return EXIT_OK if report.passed else EXIT_FAIL


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("model")
    g.add_argument("--gamma1", type=float)
    g.add_argument("--gamma2", type=float)
    g.add_argument("--alpha", type=float, help="k_n = n**alpha (default 1/3)")
    g.add_argument("--n", type=int, help="sample size (default 400)")
    g.add_argument("--regime", type=str.upper, choices=["PP", "PM", "MM", "MP"])
    g.add_argument("--sigma", type=float)
    g.add_argument("--noise", choices=["gaussian", "rademacher", "uniform"], type=str.lower)
    r = parser.add_argument_group("run")
    r.add_argument("--reps", type=int, help="replications / number of seeds")
    r.add_argument("--seed", type=int, help="seed (base seed for several replications)")
    r.add_argument("--workers", type=int)
    r.add_argument("--branch", type=str.upper, choices=[b.value for b in TheoremBranch])
    r.add_argument("--out", help="output file (.csv or .json)")
    r.add_argument("--config", help="JSON file with model and run settings; flags override it")
    r.add_argument("--kahan", action="store_true", help="compensated summation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mildar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="one path to CSV (k, v, eps, x)")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimates and aggregates per seed")
    _common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("verify", help="identity catalog, one CSV row per (identity, seed)")
    _common(p)
    p.add_argument("--random-configs", type=int, metavar="N", help="check N random configurations instead")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("mc", help="Monte Carlo campaign (CSV + JSON summary)")
    _common(p)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("limit-check", help="campaign plus Cauchy fit diagnostics")
    _common(p)
    p.add_argument("--ks-max", type=float, help="fail when the KS distance is not below this")
    p.set_defaults(func=cmd_limit_check)

    p = sub.add_parser("suite", help="run a registered property suite")
    p.add_argument("suite_id", nargs="?")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--list", action="store_true")
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, BranchMismatch, ValueError) as exc:
        print(f"mildar: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"mildar: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
