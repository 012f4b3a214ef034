"""Exact sparse LU factorization over the rationals (gmpy2.mpq entries)."""
from __future__ import annotations


class SingularBasis(ArithmeticError):
    pass


class SparseLU:
    """Gaussian elimination with a Markowitz-style pivot choice.

    ``columns[j]`` is a dict ``row -> value`` for column j of a square matrix.
    Elimination is recorded as row operations so that both ``B x = b`` and
    ``B^T y = c`` can be solved from one factorization.
    """

    def __init__(self, columns: list, m: int):
        rows = [dict() for _ in range(m)]
        col_rows = [set() for _ in range(m)]
        for j, col in enumerate(columns):
            for i, v in col.items():
                if v:
                    rows[i][j] = v
                    col_rows[j].add(i)
        self.m = m
        self.ops = []  # (target_row, pivot_row, factor)
        self.steps = []  # (pivot_row, pivot_col, U-row dict)
        active_cols = set(range(m))
        for _ in range(m):
            # column with fewest live entries, then shortest row in it
            best = None
            for j in active_cols:
                cnt = len(col_rows[j])
                if cnt == 0:
                    raise SingularBasis("structurally singular basis")
                if best is None or cnt < best[0] or (cnt == best[0] and j < best[1]):
                    best = (cnt, j)
                    if cnt == 1:
                        break
            j = best[1]
            i = min(col_rows[j], key=lambda r: (len(rows[r]), r))
            prow = rows[i]
            piv = prow[j]
            for r in sorted(col_rows[j]):
                if r == i:
                    continue
                trow = rows[r]
                f = trow[j] / piv
                self.ops.append((r, i, f))
                for c, v in prow.items():
                    nv = trow.get(c, 0) - f * v
                    if nv:
                        if c not in trow:
                            col_rows[c].add(r)
                        trow[c] = nv
                    elif c in trow:
                        del trow[c]
                        col_rows[c].discard(r)
            for c in prow:
                col_rows[c].discard(i)
            active_cols.discard(j)
            self.steps.append((i, j, prow))
            rows[i] = None

    def solve(self, b: list) -> list:
        """Return x with B x = b (x indexed by column)."""
        z = list(b)
        for r, i, f in self.ops:
            if z[i]:
                z[r] = z[r] - f * z[i]
        x = [0] * self.m
        for i, j, urow in reversed(self.steps):
            acc = z[i]
            for c, v in urow.items():
                if c != j:
                    acc -= v * x[c]
            x[j] = acc / urow[j]
        return x

    def solve_transpose(self, c: list) -> list:
        """Return y with B^T y = c (y indexed by row)."""
        acc = [0] * self.m
        z = [0] * self.m
        for i, j, urow in self.steps:
            zi = (c[j] - acc[j]) / urow[j]
            z[i] = zi
            if zi:
                for col, v in urow.items():
                    if col != j:
                        acc[col] += zi * v
        for r, i, f in reversed(self.ops):
            if z[r]:
                z[i] = z[i] - f * z[r]
        return z
