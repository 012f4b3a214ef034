"""Discrete path space, its filtration tree, payoffs and grid interpolation."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

from ._numeric import as_rational

Path = tuple  # (s_0, s_1, ..., s_N), s_0 = 1
DEFAULT_ENUM_CAP = 10**6


class GridError(ValueError):
    pass


class EnumerationSizeError(GridError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Discretized market: step 1/n, values {0, h, ..., Jh}, N periods.

    ``M`` bounds the trade size per period; ``None`` means unbounded.
    ``p`` is the growth exponent of the pricing operator, carried as metadata.
    """

    n: int
    J: int
    N: int
    kappa: Fraction
    M: Optional[Fraction] = None
    p: Optional[float] = None

    def __post_init__(self):
        for name in ("n", "J", "N"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise GridError(f"{name} must be a positive integer, got {v!r}")
        object.__setattr__(self, "kappa", as_rational(self.kappa))
        if not 0 <= self.kappa < Fraction(1, 4):
            raise GridError(f"kappa must lie in [0, 1/4), got {self.kappa}")
        if self.J < self.n:
            raise GridError(f"J*h = {Fraction(self.J, self.n)} < 1: initial price 1 is off the grid")
        if self.M is not None:
            M = as_rational(self.M)
            if M < 0:
                raise GridError(f"M must be nonnegative, got {M}")
            object.__setattr__(self, "M", M)

    @property
    def h(self) -> Fraction:
        return Fraction(1, self.n)

    @property
    def ceiling(self) -> Fraction:
        return Fraction(self.J, self.n)

    @property
    def points(self) -> tuple:
        """Grid values 0, h, ..., Jh."""
        return tuple(Fraction(k, self.n) for k in range(self.J + 1))

    @property
    def n_paths(self) -> int:
        return (self.J + 1) ** self.N

    def replace(self, **kw) -> "GridSpec":
        d = dict(n=self.n, J=self.J, N=self.N, kappa=self.kappa, M=self.M, p=self.p)
        d.update(kw)
        return GridSpec(**d)

    def describe(self) -> str:
        M = "unbounded" if self.M is None else str(self.M)
        return f"n={self.n} J={self.J} N={self.N} kappa={self.kappa} M={M}"


def enumerate_paths(grid: GridSpec, cap: int = DEFAULT_ENUM_CAP) -> list:
    """All grid paths in lexicographic order, each starting at 1."""
    if grid.n_paths > cap:
        raise EnumerationSizeError(
            f"(J+1)^N = {grid.J + 1}^{grid.N} = {grid.n_paths} paths exceeds the cap {cap}")
    pts = grid.points
    one = Fraction(1)
    return [(one,) + tuple(pts[k] for k in digits)
            for digits in itertools.product(range(grid.J + 1), repeat=grid.N)]


@dataclass(frozen=True)
class Node:
    depth: int
    index: int
    prefix: tuple
    parent: Optional[int]
    paths: tuple  # indices of paths through this node

    @property
    def value(self) -> Fraction:
        return self.prefix[-1]


@dataclass(frozen=True)
class Tree:
    """Prefix tree of an enumerated path list; depth k nodes are F_k atoms."""

    paths: tuple
    levels: tuple  # levels[k] = tuple of Node at depth k
    index: Mapping  # prefix -> (depth, index)

    @property
    def N(self) -> int:
        return len(self.levels) - 1

    def node(self, prefix: tuple) -> Node:
        k, j = self.index[prefix]
        return self.levels[k][j]

    def nodes(self, max_depth: Optional[int] = None):
        """Nodes of depth 0..max_depth (default N-1, the trading dates)."""
        top = self.N - 1 if max_depth is None else max_depth
        for k in range(top + 1):
            yield from self.levels[k]

    def node_count(self) -> int:
        return sum(len(lv) for lv in self.levels)

    def children(self, node: Node) -> list:
        if node.depth >= self.N:
            return []
        return [c for c in self.levels[node.depth + 1] if c.parent == node.index]


def build_tree(paths: Sequence[Path]) -> Tree:
    paths = tuple(paths)
    if not paths:
        raise GridError("cannot build a tree from no paths")
    N = len(paths[0]) - 1
    levels = []
    index: dict = {}
    for k in range(N + 1):
        members: dict = {}
        order = []
        for p, path in enumerate(paths):
            pre = path[: k + 1]
            if pre not in members:
                members[pre] = []
                order.append(pre)
            members[pre].append(p)
        level = []
        for j, pre in enumerate(order):
            parent = index[pre[:-1]][1] if k > 0 else None
            level.append(Node(k, j, pre, parent, tuple(members[pre])))
            index[pre] = (k, j)
        levels.append(tuple(level))
    return Tree(paths, tuple(levels), index)


def path_max(path: Sequence) -> object:
    return max(path)


# ----------------------------------------------------------------------
# payoffs

PAYOFF_KINDS = ("call", "put", "asian", "lookback", "table", "constant", "tail")


class PayoffLookupError(KeyError):
    pass


@dataclass(frozen=True)
class PayoffSpec:
    """A path-dependent claim G.

    ``lipschitz`` is the sup-norm Lipschitz constant used as modulus
    m(d) = lipschitz * d; ``None`` means no declared modulus.
    """

    kind: str
    strike: Fraction = Fraction(0)
    table: Optional[Mapping] = None  # (s_1..s_N) -> value
    lipschitz: Optional[Fraction] = None
    threshold: Optional[Fraction] = None  # for "tail": ||S||^2 1{||S|| >= threshold}
    value: Fraction = Fraction(0)  # for "constant"
    nonnegative: bool = True

    def __post_init__(self):
        if self.kind not in PAYOFF_KINDS:
            raise ValueError(f"unknown payoff kind {self.kind!r}")

    def __call__(self, path: Sequence):
        return eval_payoff(self, path)

    def modulus(self, d) -> Optional[object]:
        if self.lipschitz is None:
            return None
        return self.lipschitz * d

    def bound(self, paths: Sequence[Path]):
        """K = sup of G over the given paths."""
        return max(eval_payoff(self, p) for p in paths)


def call(strike) -> PayoffSpec:
    return PayoffSpec("call", strike=as_rational(strike), lipschitz=Fraction(1))


def put(strike) -> PayoffSpec:
    return PayoffSpec("put", strike=as_rational(strike), lipschitz=Fraction(1))


def asian(strike) -> PayoffSpec:
    return PayoffSpec("asian", strike=as_rational(strike), lipschitz=Fraction(1))


def lookback() -> PayoffSpec:
    # max_k s_k - s_N moves by at most 2*||w - w'||
    return PayoffSpec("lookback", lipschitz=Fraction(2))


def constant(c) -> PayoffSpec:
    c = as_rational(c)
    return PayoffSpec("constant", value=c, lipschitz=Fraction(0), nonnegative=c >= 0)


def tail(threshold) -> PayoffSpec:
    return PayoffSpec("tail", threshold=as_rational(threshold))


def table(values: Mapping, lipschitz=None) -> PayoffSpec:
    clean = {tuple(as_rational(s) for s in k): as_rational(v) for k, v in values.items()}
    lip = None if lipschitz is None else as_rational(lipschitz)
    return PayoffSpec("table", table=clean, lipschitz=lip,
                      nonnegative=all(v >= 0 for v in clean.values()))


def eval_payoff(payoff: PayoffSpec, path: Sequence):
    kind = payoff.kind
    if kind == "call":
        return max(path[-1] - payoff.strike, 0 * path[-1])
    if kind == "put":
        return max(payoff.strike - path[-1], 0 * path[-1])
    if kind == "asian":
        tail_vals = path[1:]
        avg = sum(tail_vals, 0 * path[0]) / len(tail_vals)
        return max(avg - payoff.strike, 0 * avg)
    if kind == "lookback":
        return max(path) - path[-1]
    if kind == "constant":
        return payoff.value
    if kind == "tail":
        top = max(path)
        return top * top if top >= payoff.threshold else 0 * top
    key = tuple(path[1:])
    try:
        return payoff.table[key]
    except KeyError:
        raise PayoffLookupError(f"payoff table has no entry for path {key}") from None


def load_payoff_table(fh_or_path, N: int, lipschitz=None) -> PayoffSpec:
    """Read CSV rows ``s_1,...,s_N,value``; a non-numeric first row is a header."""
    if isinstance(fh_or_path, (str, bytes)) or hasattr(fh_or_path, "__fspath__"):
        with open(fh_or_path, newline="") as fh:
            return load_payoff_table(fh, N, lipschitz)
    values = {}
    for lineno, row in enumerate(csv.reader(fh_or_path), 1):
        if not row or row[0].lstrip().startswith("#"):
            continue
        try:
            nums = [as_rational(c) for c in row]
        except (ValueError, ZeroDivisionError):
            if lineno == 1:
                continue
            raise ValueError(f"line {lineno}: non-numeric entry in payoff table")
        if len(nums) != N + 1:
            raise ValueError(f"line {lineno}: expected {N + 1} columns, got {len(nums)}")
        values[tuple(nums[:N])] = nums[N]
    return table(values, lipschitz)


# ----------------------------------------------------------------------
# interpolation

def interpolate(g: Sequence, x, n: int):
    """Piecewise-linear extension of a grid function.

    ``g[k]`` is the value at k/n for k = 0..J; beyond Jh the function is
    continued by the constant g[J].
    """
    if x < 0:
        raise ValueError(f"interpolation point must be nonnegative, got {x}")
    J = len(g) - 1
    if isinstance(x, Fraction):
        k = math.floor(x * n)
        alpha = x * n - k
    else:
        xn = float(x) * n
        k = math.floor(xn)
        alpha = xn - k
    lo = g[min(k, J)]
    hi = g[min(k + 1, J)]
    if alpha == 0:
        return lo
    return (1 - alpha) * lo + alpha * hi


def grid_function(f: Callable, grid: GridSpec) -> list:
    return [f(x) for x in grid.points]
