"""Command-line front end.

Exit codes: 0 success, 1 failed assertions, 2 arbitrage, 3 primal/dual
inconsistency, 64 configuration error, 66 missing input artifact.
"""
from __future__ import annotations

import argparse
import io
import math
import sys
from pathlib import Path

import numpy as np

from ._numeric import as_rational, fmt
from .analysis import (AXES, DoobParams, InconsistencyError, ParameterError, convergence_sweep,
                       duality_gap, verify_doob)
from .config import ConfigError, RunConfig, load_config
from .dual import (ftap_feasibility, local_arbitrage_probe, penalty_value, solve_penalty_dual,
                   write_measure_csv)
from .lp import SizeError, SolverStallError, lpformat
from .market import EnumerationSizeError, GridError, build_tree, enumerate_paths, eval_payoff
from .pricing import check_axioms
from .primal import (lift_portfolio, lifting_budget, read_portfolio_csv,
                     solve_constrained, write_portfolio_csv)

EXIT_OK, EXIT_FAIL, EXIT_ARBITRAGE, EXIT_INCONSISTENT = 0, 1, 2, 3
EXIT_CONFIG, EXIT_NOINPUT = 64, 66
FLOAT_TOL = 1e-7


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class Report:
    """Collects report lines; printed and optionally saved at the end."""

    def __init__(self, cfg: RunConfig, command: str, exact: bool):
        self.lines = [f"# command: {command}", cfg.header()]
        if exact != cfg.exact:
            self.lines.append(f"# mode override: {'exact' if exact else 'float'}")

    def add(self, key: str, value) -> None:
        self.lines.append(f"{key}: {value if isinstance(value, str) else fmt(value)}")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _out_dir(args, cfg: RunConfig):
    d = args.out or cfg.out_dir
    if d is None:
        return None
    d = Path(d)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write(path: Path, writer) -> None:
    with open(path, "w", newline="") as fh:
        writer(fh)


def _dump_lp(args, cfg, lp, suffix: str = "") -> None:
    target = args.dump_lp or cfg.dump_lp
    if not target:
        return
    p = Path(target)
    if suffix:
        p = p.with_name(p.stem + suffix + (p.suffix or ".lp"))
    lpformat.dump(lp, p)


def _tree(cfg: RunConfig):
    return build_tree(enumerate_paths(cfg.grid, cfg.enum_cap))


# ----------------------------------------------------------------------
# subcommands

def cmd_price(args, cfg: RunConfig, rep: Report) -> int:
    exact = args.exact or cfg.exact
    try:
        gap = duality_gap(cfg.grid, cfg.payoff, cfg.pricing, exact=exact, tree=_tree(cfg))
    except InconsistencyError as exc:
        rep.add("status", "inconsistent")
        rep.add("detail", str(exc))
        return EXIT_INCONSISTENT
    _dump_lp(args, cfg, gap.primal.lp)
    _dump_lp(args, cfg, gap.dual.lp, ".dual")
    out = _out_dir(args, cfg)
    rep.add("status", gap.status)
    if gap.status == "optimal":
        rep.add("primal_value", gap.primal_value)
        rep.add("dual_value", gap.dual_value)
        rep.add("gap", gap.gap)
        rep.add("binding", " ".join(gap.dual.binding) or "none")
        if out:
            _write(out / "portfolio.csv", lambda fh: write_portfolio_csv(gap.primal.portfolio, fh))
            _write(out / "measure.csv", lambda fh: write_measure_csv(gap.dual.measure, fh))
    else:
        rep.add("primal_value", "-inf (improving ray)")
        rep.add("ray_slope", gap.primal.ray_slope)
        rep.add("ray_verified", str(gap.primal.ray_check.valid))
        rep.add("dual", "infeasible")
        rep.add("farkas_verified", str(gap.dual.farkas_check.valid))
        rep.lines.append(gap.dual.farkas_report().rstrip())
        if out:
            _write(out / "farkas.txt", lambda fh: fh.write(gap.dual.farkas_report()))
    for p in gap.problems:
        rep.add("problem", p)
    if not gap.ok:
        return EXIT_INCONSISTENT
    return EXIT_OK if gap.status == "optimal" else EXIT_ARBITRAGE


def cmd_penalty(args, cfg: RunConfig, rep: Report) -> int:
    if cfg.grid.M is None:
        raise CliError(EXIT_CONFIG, "grid.M: the penalty problem needs a finite trading bound")
    exact = args.exact or cfg.exact
    tree = _tree(cfg)
    primal = solve_constrained(cfg.grid, cfg.payoff, exact=exact, tree=tree)
    dual = solve_penalty_dual(cfg.grid, cfg.payoff, exact=exact, tree=tree)
    _dump_lp(args, cfg, primal.lp)
    _dump_lp(args, cfg, dual.lp, ".dual")
    if primal.status != "optimal" or dual.status != "optimal":
        rep.add("status", f"inconsistent: primal {primal.status}, dual {dual.status}")
        return EXIT_INCONSISTENT
    gap = primal.value - dual.value
    recomputed = penalty_value(dual.measure, cfg.grid.M, cfg.grid.kappa, cfg.grid, cfg.payoff, tree)
    rep.add("status", "optimal")
    rep.add("constrained_value", primal.value)
    rep.add("penalty_dual_value", dual.value)
    rep.add("gap", gap)
    rep.add("penalty_recomputed", recomputed)
    out = _out_dir(args, cfg)
    if out:
        _write(out / "portfolio.csv", lambda fh: write_portfolio_csv(primal.portfolio, fh))
        _write(out / "measure.csv", lambda fh: write_measure_csv(dual.measure, fh))
    tol = 0 if exact else FLOAT_TOL
    ok = abs(gap) <= tol and abs(recomputed - dual.value) <= (0 if exact else 1e-9)
    return EXIT_OK if ok else EXIT_INCONSISTENT


def parse_cell(specs) -> dict:
    """``["s1=2", "s2=1/2"]`` or ``["s1=2,s2=1"]`` -> {1: 2, 2: 1/2}."""
    cell = {}
    for spec in specs:
        for part in spec.split(","):
            part = part.strip()
            if not part:
                continue
            key, sep, val = part.partition("=")
            key = key.strip()
            if not sep or not key.startswith("s") or not key[1:].isdigit():
                raise CliError(EXIT_CONFIG, f"--cell: expected s<k>=<value>, got {part!r}")
            try:
                cell[int(key[1:])] = as_rational(val)
            except (ValueError, ZeroDivisionError):
                raise CliError(EXIT_CONFIG, f"--cell: bad value in {part!r}") from None
    return cell


def cmd_ftap(args, cfg: RunConfig, rep: Report) -> int:
    exact = args.exact or cfg.exact
    tree = _tree(cfg)
    cell = None
    if args.cell is not None:
        cell = parse_cell(args.cell)
        if not cell:
            raise CliError(EXIT_CONFIG, "--cell: empty cell specification")
        for k in cell:
            if not 1 <= k <= cfg.grid.N:
                raise CliError(EXIT_CONFIG, f"--cell: s{k} is outside times 1..{cfg.grid.N}")
    kappa = None
    if args.kappa is not None:
        try:
            kappa = as_rational(args.kappa)
        except (ValueError, ZeroDivisionError):
            raise CliError(EXIT_CONFIG, f"--kappa: not a number: {args.kappa!r}") from None
        if not 0 <= kappa < 1:
            raise CliError(EXIT_CONFIG, f"--kappa: band width must lie in [0, 1), got {fmt(kappa)}")
        rep.add("band_kappa", kappa)
    res = ftap_feasibility(cfg.grid, cfg.pricing, kappa, exact=exact, tree=tree)
    _dump_lp(args, cfg, res.dual.lp)
    out = _out_dir(args, cfg)
    if not res.feasible:
        rep.add("verdict", "model-independent arbitrage")
        rep.add("farkas_verified", str(res.farkas_check.valid))
        rep.lines.append(res.dual.farkas_report().rstrip())
        if out:
            _write(out / "farkas.txt", lambda fh: fh.write(res.dual.farkas_report()))
        return EXIT_ARBITRAGE
    rep.add("verdict", "no model-independent arbitrage")
    rep.add("witness_support", len(res.witness.support()))
    if out:
        _write(out / "witness.csv", lambda fh: write_measure_csv(res.witness, fh))
    if cell is not None:
        try:
            probe = local_arbitrage_probe(cfg.grid, cfg.pricing, kappa, cell=cell, exact=exact, tree=tree)
        except ValueError as exc:
            raise CliError(EXIT_CONFIG, f"--cell: {exc}") from None
        rep.add("cell", " ".join(f"s{k}={fmt(v)}" for k, v in sorted(cell.items())))
        rep.add("cell_paths", len(probe.cell))
        rep.add("max_cell_mass", probe.value)
        rep.add("local_arbitrage", "yes" if probe.value == 0 else "no")
    return EXIT_OK


def _verify_doob(args, cfg, rep) -> int:
    r = as_rational(cfg.verify.get("r", 3))
    r = int(r) if r.denominator == 1 else float(r)
    try:
        params = DoobParams(cfg.grid.kappa, r)
    except ParameterError as exc:
        raise CliError(EXIT_CONFIG, f"verify.r: {exc}") from None
    samples = args.samples or int(cfg.verify.get("samples", 10_000))
    res = verify_doob(params, grid=cfg.grid, samples=samples, seed=cfg.seed)
    rep.add("check", "doob")
    rep.add("r", params.r)
    rep.add("lambda", params.lam)
    rep.add("paths", res.n_paths)
    rep.add("min_slack", f"{res.min_slack:.12g}")
    rep.add("violations", len(res.violations))
    for path, y, bound in res.violations[:10]:
        rep.add("violation", f"{[fmt(s) for s in path]} value {y!r} < bound {bound!r}")
    return EXIT_OK if res.ok else EXIT_FAIL


def _verify_lift(args, cfg, rep) -> int:
    src = args.portfolio or cfg.verify.get("portfolio")
    if not src or not Path(src).is_file():
        raise CliError(EXIT_NOINPUT, f"lift: portfolio artifact not found: {src or '(none given)'}")
    grid = cfg.grid
    budget = lifting_budget(grid, cfg.payoff)
    if budget is None:
        raise CliError(EXIT_CONFIG, "lift: needs a finite grid.M and a payoff with a declared modulus")
    if cfg.payoff.kind == "table":
        raise CliError(EXIT_CONFIG, "lift: table payoffs cannot be evaluated off the grid")
    with open(src, newline="") as fh:
        try:
            pf = read_portfolio_csv(fh)
        except (ValueError, IndexError) as exc:
            raise CliError(EXIT_NOINPUT, f"lift: unreadable portfolio artifact: {exc}") from None
    samples = args.samples or int(cfg.verify.get("samples", 1000))
    rng = np.random.default_rng(cfg.seed)
    top = float(grid.ceiling)
    fb = float(budget)
    worst, violations, warned = math.inf, 0, 0
    for row in rng.uniform(0.0, top, size=(samples, grid.N)):
        omega = (1.0,) + tuple(float(v) for v in row)
        try:
            lifted = lift_portfolio(pf, omega, grid)
        except KeyError:
            raise CliError(EXIT_NOINPUT, "lift: portfolio does not match the configured grid") from None
        warned += lifted.warning is not None
        slack = float(lifted.value) - (float(eval_payoff(cfg.payoff, omega)) - fb)
        worst = min(worst, slack)
        if slack < -1e-9:
            violations += 1
    rep.add("check", "lift")
    rep.add("budget", budget)
    rep.add("paths", samples)
    rep.add("min_slack", f"{worst:.12g}")
    rep.add("out_of_model", warned)
    rep.add("violations", violations)
    return EXIT_OK if violations == 0 else EXIT_FAIL


def _verify_axioms(args, cfg, rep) -> int:
    trials = args.samples or int(cfg.verify.get("trials", 1000))
    res = check_axioms(cfg.pricing, trials=trials, seed=cfg.seed, exact=args.exact)
    rep.add("check", "axioms")
    rep.add("trials", trials)
    rep.add("violations", len(res.violations))
    for v in res.violations[:10]:
        rep.add("violation", v)
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_verify(args, cfg: RunConfig, rep: Report) -> int:
    return {"doob": _verify_doob, "lift": _verify_lift, "axioms": _verify_axioms}[args.which](args, cfg, rep)


def _axis_values(axis: str, text) -> list:
    items = text if isinstance(text, list) else [t for t in str(text).split(",") if t.strip()]
    vals = []
    for t in items:
        if isinstance(t, str) and t.strip().lower() in ("none", "unbounded", "inf"):
            if axis != "M":
                raise CliError(EXIT_CONFIG, "sweep: 'unbounded' only applies to the M axis")
            vals.append(None)
            continue
        try:
            v = as_rational(t)
        except (TypeError, ValueError, ZeroDivisionError):
            raise CliError(EXIT_CONFIG, f"sweep: bad axis value {t!r}") from None
        if axis in ("n", "J"):
            if v.denominator != 1:
                raise CliError(EXIT_CONFIG, f"sweep: {axis} values must be integers")
            v = int(v)
        vals.append(v)
    if not vals:
        raise CliError(EXIT_CONFIG, "sweep: no axis values given")
    return vals


def cmd_sweep(args, cfg: RunConfig, rep: Report) -> int:
    axis = args.axis or cfg.sweep.get("axis")
    if axis not in AXES:
        raise CliError(EXIT_CONFIG, f"sweep: unknown axis {axis!r}; expected one of {', '.join(AXES)}")
    raw = args.values if args.values is not None else cfg.sweep.get("values")
    if raw is None:
        raise CliError(EXIT_CONFIG, "sweep: no axis values given")
    values = _axis_values(axis, raw)
    res = convergence_sweep(cfg.grid, cfg.payoff, cfg.pricing, axis, values, exact=args.exact or cfg.exact)
    buf = io.StringIO()
    res.write_csv(buf)
    out = _out_dir(args, cfg)
    if out:
        (out / "sweep.csv").write_text(buf.getvalue())
    rep.add("axis", axis)
    rep.lines.append(buf.getvalue().rstrip())
    for name, ok, detail in res.checks:
        rep.add("check", f"{name}: {'pass' if ok else 'FAIL'} ({detail})")
    for p in res.points:
        if p.status != "optimal":
            rep.add("point_failure", f"{fmt(p.axis_value)}: {p.status}")
    return EXIT_OK if res.ok else EXIT_FAIL


COMMANDS = {"price": cmd_price, "penalty": cmd_penalty, "ftap": cmd_ftap,
            "verify": cmd_verify, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON run configuration")
    common.add_argument("--exact", action="store_true", default=argparse.SUPPRESS,
                        help="force exact rational solves")
    common.add_argument("--dump-lp", default=argparse.SUPPRESS, metavar="PATH",
                        help="write the LP(s) in CPLEX LP format")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the config seed")
    common.add_argument("--out", default=argparse.SUPPRESS, metavar="DIR", help="directory for CSV outputs")

    parser = argparse.ArgumentParser(prog="robusthedge", parents=[common],
                                     description="Robust super-replication under proportional costs.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("price", parents=[common], help="primal and dual values with duality gap")
    sub.add_parser("penalty", parents=[common], help="constrained hedging vs penalized dual")
    p = sub.add_parser("ftap", parents=[common], help="arbitrage feasibility and local probes")
    p.add_argument("--cell", action="append", help="cell as s<k>=<value>[,...]; repeatable")
    p.add_argument("--kappa", help="band width for the probe, overriding grid.kappa; may be >= 1/4")
    p = sub.add_parser("verify", parents=[common], help="pathwise and axiom checks")
    p.add_argument("which", choices=("doob", "lift", "axioms"))
    p.add_argument("--portfolio", help="portfolio CSV from a previous run (lift)")
    p.add_argument("--samples", type=int, help="sample count / trial count")
    p = sub.add_parser("sweep", parents=[common], help="parameter sweep with CSV report")
    p.add_argument("--axis")
    p.add_argument("--values", help="comma-separated axis values ('unbounded' allowed for M)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("config", None), ("exact", False), ("dump_lp", None), ("seed", None), ("out", None)):
        if not hasattr(args, name):
            setattr(args, name, default)
    for name in ("cell", "portfolio", "samples", "axis", "values", "kappa"):
        if not hasattr(args, name):
            setattr(args, name, None)
    if args.config is None:
        print("error: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    if not Path(args.config).is_file():
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_NOINPUT
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        for m in exc.messages:
            print(f"config error: {m}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg.seed = args.seed
    exact = args.exact or cfg.exact
    rep = Report(cfg, args.command, exact)
    try:
        code = COMMANDS[args.command](args, cfg, rep)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (EnumerationSizeError, SizeError, GridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverStallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    text = rep.text()
    sys.stdout.write(text)
    out = _out_dir(args, cfg)
    if out:
        (out / f"{args.command}_report.txt").write_text(text)
    return code


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
