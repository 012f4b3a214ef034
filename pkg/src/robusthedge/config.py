"""JSON run configuration: parsing, validation and echo."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from ._numeric import as_rational, fmt
from . import market
from .market import GridSpec, PayoffSpec
from .pricing import CallQuotes, MeasureSet

SOLVER_MODES = ("exact", "float")


class ConfigError(ValueError):
    """Schema violation; ``messages`` lists one entry per offending field."""

    def __init__(self, messages: list):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


@dataclass
class RunConfig:
    grid: GridSpec
    payoff: PayoffSpec
    pricing: Any
    mode: str = "exact"
    seed: int = 0
    enum_cap: int = market.DEFAULT_ENUM_CAP
    out_dir: Optional[str] = None
    dump_lp: Optional[str] = None
    verify: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    defaulted: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    def header(self) -> str:
        """Report header echoing every effective setting, defaults marked."""
        g = self.grid
        lines = [
            f"# grid: n={g.n} J={g.J} N={g.N} kappa={fmt(g.kappa)} M={'unbounded' if g.M is None else fmt(g.M)}",
            f"# payoff: {describe_payoff(self.payoff)}",
            f"# pricing: {describe_pricing(self.pricing)}",
            f"# solver: mode={self.mode} seed={self.seed} enum_cap={self.enum_cap}",
        ]
        if self.defaulted:
            lines.append("# defaulted: " + ", ".join(sorted(self.defaulted)))
        return "\n".join(lines)


def describe_payoff(p: PayoffSpec) -> str:
    if p.kind in ("call", "put", "asian"):
        return f"{p.kind} strike={fmt(p.strike)}"
    if p.kind == "constant":
        return f"constant {fmt(p.value)}"
    if p.kind == "tail":
        return f"tail threshold={fmt(p.threshold)}"
    if p.kind == "table":
        return f"table ({len(p.table)} entries, lipschitz={fmt(p.lipschitz)})"
    return p.kind


def describe_pricing(P) -> str:
    eps = f" epsilon={fmt(P.epsilon)} (scalar widening, surrogate for the full relaxed family)" if P.epsilon else ""
    if isinstance(P, MeasureSet):
        return f"{len(P.measures)} measure(s){eps}"
    return f"{len(P.quotes)} call quote(s){eps}"


class _Reader:
    def __init__(self):
        self.errors: list = []
        self.defaulted: list = []

    def block(self, raw: dict, name: str, required: bool = True) -> dict:
        val = raw.get(name)
        if val is None:
            if required:
                self.errors.append(f"{name}: missing block")
            return {}
        if not isinstance(val, dict):
            self.errors.append(f"{name}: expected an object")
            return {}
        return val

    def num(self, blk: dict, path: str, key: str, default=..., allow_none: bool = False):
        if key not in blk:
            if default is ...:
                self.errors.append(f"{path}.{key}: missing")
                return None
            self.defaulted.append(f"{path}.{key}")
            return default
        v = blk[key]
        if v is None and allow_none:
            return None
        try:
            return as_rational(v)
        except (TypeError, ValueError, ZeroDivisionError):
            self.errors.append(f"{path}.{key}: not a number: {v!r}")
            return None

    def int_(self, blk: dict, path: str, key: str, default=...):
        v = self.num(blk, path, key, default)
        if v is None:
            return None
        if v.denominator != 1:
            self.errors.append(f"{path}.{key}: must be an integer, got {fmt(v)}")
            return None
        return int(v)


def _grid(rd: _Reader, blk: dict) -> Optional[GridSpec]:
    n = rd.int_(blk, "grid", "n")
    J = rd.int_(blk, "grid", "J")
    N = rd.int_(blk, "grid", "N")
    kappa = rd.num(blk, "grid", "kappa", Fraction(0))
    M = rd.num(blk, "grid", "M", None, allow_none=True)
    p = blk.get("p")
    bad = len(rd.errors)
    for name, v in (("n", n), ("J", J), ("N", N)):
        if v is not None and v < 1:
            rd.errors.append(f"grid.{name}: must be >= 1, got {v}")
    if kappa is not None and not 0 <= kappa < Fraction(1, 4):
        rd.errors.append(f"grid.kappa: {fmt(kappa)} violates 0 <= kappa < 1/4")
    if M is not None and M < 0:
        rd.errors.append(f"grid.M: must be nonnegative or null, got {fmt(M)}")
    if n is not None and J is not None and J < n:
        rd.errors.append(f"grid.J: J*h = {J}/{n} < 1 puts the initial price off the grid")
    if len(rd.errors) > bad or None in (n, J, N, kappa):
        return None
    return GridSpec(n, J, N, kappa, M, p)


def _payoff(rd: _Reader, blk: dict, N: Optional[int], base: Path) -> Optional[PayoffSpec]:
    kind = blk.get("kind")
    if kind not in market.PAYOFF_KINDS:
        rd.errors.append(f"payoff.kind: expected one of {', '.join(market.PAYOFF_KINDS)}, got {kind!r}")
        return None
    if kind in ("call", "put", "asian"):
        k = rd.num(blk, "payoff", "strike")
        return None if k is None else getattr(market, kind)(k)
    if kind == "lookback":
        return market.lookback()
    if kind == "constant":
        c = rd.num(blk, "payoff", "value")
        return None if c is None else market.constant(c)
    if kind == "tail":
        t = rd.num(blk, "payoff", "threshold")
        return None if t is None else market.tail(t)
    lip = rd.num(blk, "payoff", "lipschitz", None, allow_none=True)
    if "path" in blk:
        src = Path(blk["path"])
        src = src if src.is_absolute() else base / src
        if N is None:
            return None
        try:
            return market.load_payoff_table(src, N, lip)
        except OSError as exc:
            rd.errors.append(f"payoff.path: cannot read {src}: {exc.strerror}")
        except ValueError as exc:
            rd.errors.append(f"payoff.path: {exc}")
        return None
    if "values" in blk:
        rows = blk["values"]
        try:
            return market.table({tuple(r[:-1]): r[-1] for r in rows}, lip)
        except (TypeError, ValueError, ZeroDivisionError):
            rd.errors.append("payoff.values: expected rows [s_1, ..., s_N, value]")
            return None
    rd.errors.append("payoff: a table payoff needs 'path' or 'values'")
    return None


def _measure_weights(rd: _Reader, j: int, mu, points: tuple) -> Optional[list]:
    if isinstance(mu, dict):
        where = {x: i for i, x in enumerate(points)}
        out = [Fraction(0)] * len(points)
        for k, w in mu.items():
            try:
                x, wt = as_rational(k), as_rational(w)
            except (TypeError, ValueError, ZeroDivisionError):
                rd.errors.append(f"pricing.measures[{j}]: bad entry {k!r}: {w!r}")
                return None
            if x not in where:
                rd.errors.append(f"pricing.measures[{j}]: point {k} is not on the terminal grid")
                return None
            out[where[x]] = wt
        return out
    if not isinstance(mu, list) or len(mu) != len(points):
        rd.errors.append(f"pricing.measures[{j}]: expected {len(points)} weights or a point->weight map")
        return None
    try:
        return [as_rational(w) for w in mu]
    except (TypeError, ValueError, ZeroDivisionError):
        rd.errors.append(f"pricing.measures[{j}]: non-numeric weight")
        return None


def _pricing(rd: _Reader, blk: dict, grid: Optional[GridSpec]):
    kind = blk.get("type", "measures" if "measures" in blk else "calls" if ("calls" in blk or "quotes" in blk) else None)
    eps = rd.num(blk, "pricing", "epsilon", Fraction(0))
    if eps is not None and eps < 0:
        rd.errors.append("pricing.epsilon: must be nonnegative")
    if grid is None or eps is None:
        return None
    if kind == "measures":
        mus = blk.get("measures")
        if not isinstance(mus, list) or not mus:
            rd.errors.append("pricing.measures: expected a nonempty list")
            return None
        weights = [_measure_weights(rd, j, mu, grid.points) for j, mu in enumerate(mus)]
        if any(w is None for w in weights):
            return None
        for j, w in enumerate(weights):
            if any(v < 0 for v in w):
                rd.errors.append(f"pricing.measures[{j}]: negative weight")
            elif sum(w) != 1:
                rd.errors.append(f"pricing.measures[{j}]: weights sum to {fmt(sum(w))}, not 1")
        if rd.errors:
            return None
        return MeasureSet(grid.points, weights, eps)
    if kind == "calls":
        qs = blk.get("calls", blk.get("quotes"))
        if not isinstance(qs, list):
            rd.errors.append("pricing.calls: expected a list of {strike, bid, ask}")
            return None
        parsed = []
        for i, q in enumerate(qs):
            if not isinstance(q, dict):
                rd.errors.append(f"pricing.calls[{i}]: expected an object")
                continue
            vals = [rd.num(q, f"pricing.calls[{i}]", k) for k in ("strike", "bid", "ask")]
            if None in vals:
                continue
            if vals[1] > vals[2]:
                rd.errors.append(f"pricing.calls[{i}]: bid {fmt(vals[1])} exceeds ask {fmt(vals[2])}")
            parsed.append(tuple(vals))
        if len({q[0] for q in parsed}) != len(parsed):
            rd.errors.append("pricing.calls: strikes must be distinct")
        if rd.errors:
            return None
        return CallQuotes(grid.points, parsed, eps)
    rd.errors.append(f"pricing.type: expected 'measures' or 'calls', got {kind!r}")
    return None


def parse_config(raw: dict, base: Path = Path(".")) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError(["config: top level must be a JSON object"])
    rd = _Reader()
    known = {"grid", "payoff", "pricing", "solver", "output", "verify", "sweep"}
    for key in raw:
        if key not in known:
            rd.errors.append(f"{key}: unknown block")
    grid = _grid(rd, rd.block(raw, "grid"))
    payoff = _payoff(rd, rd.block(raw, "payoff"), grid.N if grid else None, base)
    pricing = _pricing(rd, rd.block(raw, "pricing"), grid)
    solver = rd.block(raw, "solver", required=False)
    mode = solver.get("mode")
    if mode is None:
        rd.defaulted.append("solver.mode")
        mode = "exact"
    elif mode not in SOLVER_MODES:
        rd.errors.append(f"solver.mode: expected exact or float, got {mode!r}")
    seed = rd.int_(solver, "solver", "seed", 0)
    cap = rd.int_(solver, "solver", "enum_cap", market.DEFAULT_ENUM_CAP)
    output = rd.block(raw, "output", required=False)
    verify = rd.block(raw, "verify", required=False)
    sweep = rd.block(raw, "sweep", required=False)
    if rd.errors:
        raise ConfigError(rd.errors)
    return RunConfig(grid, payoff, pricing, mode, seed, cap, output.get("dir"), output.get("dump_lp"),
                     dict(verify), dict(sweep), rd.defaulted, raw)


def load_config(path) -> RunConfig:
    path = Path(path)
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config: invalid JSON at line {exc.lineno}: {exc.msg}"]) from None
    return parse_config(raw, path.parent)
