"""Command-line front end: bound tables, profile curves, validation, oracle checks.

Subcommands::

    creditbounds bounds   --scenario s.json --out dir   # AVaR bound report
    creditbounds curves   --scenario s.json --out dir   # default-profile curves
    creditbounds validate --scenario s.json             # resolve and print parameters
    creditbounds oracle   --scenario s.json --out dir   # exact vs MC distribution check

Exit codes: 0 success, 1 configuration or I/O error, 2 result-invariant
violation (the computed ordering chain is broken beyond tolerance).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .portfolio import ConfigError, DeterministicLgd, Scenario, load_scenario
from .profiles import curve_table
from .risk import ResultInvariantError, bound_profiles, risk_report
from .simulate import dkw_epsilon, exact_loss_distribution, simulate_losses, sup_cdf_distance

_ORACLE_MAX_N = 20


def _add_common(parser: argparse.ArgumentParser, needs_out: bool) -> None:
    parser.add_argument("--scenario", required=True, help="scenario JSON file")
    if needs_out:
        parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--samples", type=int, default=None, help="override MC sample count")
    parser.add_argument("--seed", type=int, default=None, help="override MC seed")
    parser.add_argument("--workers", type=int, default=None, help="override worker count")


def _resolve_scenario(args) -> Scenario:
    scenario = load_scenario(args.scenario)
    mc = scenario.mc
    workers = args.workers
    if workers is None and os.environ.get("CREDITBOUNDS_WORKERS"):
        try:
            workers = int(os.environ["CREDITBOUNDS_WORKERS"])
        except ValueError:
            raise ConfigError(
                f"CREDITBOUNDS_WORKERS must be an integer, got "
                f"{os.environ['CREDITBOUNDS_WORKERS']!r}"
            ) from None
    try:
        mc = dataclasses.replace(
            mc,
            samples=args.samples if args.samples is not None else mc.samples,
            seed=args.seed if args.seed is not None else mc.seed,
            workers=workers if workers is not None else mc.workers,
        )
    except ValueError as exc:
        raise ConfigError(f"mc override: {exc}") from None
    return dataclasses.replace(scenario, mc=mc)


def _config_hash(scenario: Scenario) -> str:
    canonical = json.dumps(
        {
            "label": scenario.label,
            "models": scenario.models,
            "alphas": scenario.alphas,
            "mc": dataclasses.asdict(scenario.mc),
            "borrowers": [
                (b.name, b.pd, b.exposure_weight, repr(b.lgd), b.corr_interval, b.corr_point)
                for b in scenario.borrowers
            ],
        },
        sort_keys=True,
    )
    return hashlib.sha256(canonical.encode()).hexdigest()


def _write_meta(out_dir: Path, scenario: Scenario, wall_time: float, extra: dict) -> None:
    meta = {
        "version": __version__,
        "config_hash": _config_hash(scenario),
        "label": scenario.label,
        "models": list(scenario.models),
        "alphas": list(scenario.alphas),
        "samples": scenario.mc.samples,
        "seed": scenario.mc.seed,
        "workers": scenario.mc.workers,
        "wall_time_s": round(wall_time, 3),
    }
    meta.update(extra)
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def cmd_bounds(args) -> int:
    scenario = _resolve_scenario(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    report = risk_report(scenario)
    wall = time.perf_counter() - start
    (out_dir / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    (out_dir / "report.txt").write_text(report.to_text(), encoding="utf-8")
    ses = {
        f"{r.model}@{r.alpha}": {"se_lower": r.se_lower, "se_upper": r.se_upper}
        for r in report.rows
    }
    _write_meta(out_dir, scenario, wall, {"standard_errors": ses})
    sys.stdout.write(report.to_text())
    return 0


def _point_profiles(model: str, scenario: Scenario):
    from .profiles import (
        ComonotoneProfile,
        IndependentProfile,
        clayton_profile,
        gaussian_profile,
        profile_from_copula,
        survival_clayton_profile,
    )

    out = []
    for i, b in enumerate(scenario.borrowers):
        if model == "gaussian":
            out.append(gaussian_profile(b.corr_point, b.pd))
        elif model == "clayton":
            out.append(clayton_profile(b.theta_point, b.pd))
        elif model == "survival_clayton":
            out.append(survival_clayton_profile(b.theta_point, b.pd))
        elif model == "gauss_clayton":
            # the hybrid has no single point model; report its Gaussian generator
            out.append(gaussian_profile(b.corr_point, b.pd))
        elif model == "independent":
            out.append(IndependentProfile(b.pd))
        elif model == "comonotone":
            out.append(ComonotoneProfile(b.pd))
        else:  # single_point
            out.append(profile_from_copula(scenario.point_copulas[i], b.pd))
    return out


def cmd_curves(args) -> int:
    scenario = _resolve_scenario(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for model in scenario.models:
        lowers, uppers = bound_profiles(model, scenario.borrowers, scenario.point_copulas)
        points = _point_profiles(model, scenario)
        lines = ["borrower,s,g_lower,g_point,g_upper,pd_lower,pd_point,pd_upper"]
        seen = set()
        for i, (b, lo, pt, up) in enumerate(zip(scenario.borrowers, lowers, points, uppers)):
            if model == "single_point":
                key = (b.pd, repr(scenario.point_copulas[i]))
            else:
                key = (b.pd, b.corr_interval, b.corr_point)
            if key in seen:
                continue
            seen.add(key)
            s, g_lo, p_lo = curve_table(lo)
            _, g_pt, p_pt = curve_table(pt)
            _, g_up, p_up = curve_table(up)
            for row in zip(s, g_lo, g_pt, g_up, p_lo, p_pt, p_up):
                lines.append(b.name + "," + ",".join(repr(float(v)) for v in row))
        (out_dir / f"curves_{model}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        sys.stdout.write(f"wrote curves_{model}.csv\n")
    return 0


def _lgd_text(lgd) -> str:
    if isinstance(lgd, DeterministicLgd):
        return f"deterministic {lgd.value:g}"
    a, b = lgd.shape
    return f"beta mean={lgd.mean_:g} vol={lgd.vol:g} (a={a:.6g}, b={b:.6g})"


def cmd_validate(args) -> int:
    scenario = _resolve_scenario(args)
    w = sys.stdout.write
    w(f"scenario {scenario.label!r}: {len(scenario.borrowers)} borrowers, "
      f"models {', '.join(scenario.models)}, alphas {list(scenario.alphas)}\n")
    w(f"mc: samples={scenario.mc.samples} seed={scenario.mc.seed} workers={scenario.mc.workers}\n")
    w(f"{'name':24}{'pd':>10}{'weight':>10}{'corr_lo':>9}{'corr':>9}{'corr_hi':>9}"
      f"{'th_lo':>8}{'theta':>8}{'th_hi':>8}  lgd\n")
    for b in scenario.borrowers[:40]:
        w(
            f"{b.name:24}{b.pd:>10.6f}{b.exposure_weight:>10.6f}"
            f"{b.corr_interval[0]:>9.4f}{b.corr_point:>9.4f}{b.corr_interval[1]:>9.4f}"
            f"{b.theta_interval[0]:>8.4f}{b.theta_point:>8.4f}{b.theta_interval[1]:>8.4f}"
            f"  {_lgd_text(b.lgd)}\n"
        )
    if len(scenario.borrowers) > 40:
        w(f"... {len(scenario.borrowers) - 40} more identical-format rows\n")
    return 0


def cmd_oracle(args) -> int:
    scenario = _resolve_scenario(args)
    n = len(scenario.borrowers)
    if n > _ORACLE_MAX_N:
        raise ConfigError(f"oracle check supports at most {_ORACLE_MAX_N} borrowers, got {n}")
    if not all(isinstance(b.lgd, DeterministicLgd) for b in scenario.borrowers):
        raise ConfigError("oracle check requires deterministic LGD for every borrower")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = ["model,side,samples,sup_distance,dkw_epsilon,pass"]
    all_pass = True
    for k, model in enumerate(scenario.models):
        lowers, uppers = bound_profiles(model, scenario.borrowers, scenario.point_copulas)
        sides = [("lower", lowers)]
        if any(l.group_key() != u.group_key() for l, u in zip(lowers, uppers)):
            sides.append(("upper", uppers))
        for j, (side, profiles) in enumerate(sides):
            exact = exact_loss_distribution(profiles, scenario.borrowers, args.quad_nodes)
            mc = simulate_losses(
                profiles,
                scenario.borrowers,
                scenario.mc.samples,
                scenario.mc.seed + 2 * k + j,
                scenario.mc.workers,
            )
            dist = sup_cdf_distance(mc, exact)
            eps = dkw_epsilon(scenario.mc.samples)
            ok = dist <= eps
            all_pass &= ok
            rows.append(f"{model},{side},{scenario.mc.samples},{dist!r},{eps!r},{ok}")
            body = "loss,probability\n" + "".join(
                f"{float(x)!r},{float(p)!r}\n" for x, p in zip(exact.losses, exact.weights)
            )
            (out_dir / f"exact_{model}_{side}.csv").write_text(body, encoding="utf-8")
    (out_dir / "oracle_report.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    sys.stdout.write("\n".join(rows) + "\n")
    return 0 if all_pass else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="creditbounds",
        description="Credit portfolio AVaR bounds under dependence uncertainty",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_bounds = sub.add_parser("bounds", help="simulate a scenario and write the bound report")
    _add_common(p_bounds, needs_out=True)
    p_bounds.set_defaults(fn=cmd_bounds)

    p_curves = sub.add_parser("curves", help="export default-profile curves as CSV")
    _add_common(p_curves, needs_out=True)
    p_curves.set_defaults(fn=cmd_curves)

    p_validate = sub.add_parser("validate", help="parse and print resolved parameters")
    _add_common(p_validate, needs_out=False)
    p_validate.set_defaults(fn=cmd_validate)

    p_oracle = sub.add_parser("oracle", help="compare MC against the exact distribution")
    _add_common(p_oracle, needs_out=True)
    p_oracle.add_argument("--quad-nodes", type=int, default=256, help="factor quadrature nodes")
    p_oracle.set_defaults(fn=cmd_oracle)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except ResultInvariantError as exc:
        sys.stderr.write(f"invariant violation: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
