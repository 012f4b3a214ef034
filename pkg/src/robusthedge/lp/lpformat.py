"""Write a LinearProgram in CPLEX LP text format."""
from __future__ import annotations

import re

from .model import LinearProgram

_BAD = re.compile(r"[^A-Za-z0-9_.]")


def _name(label: str) -> str:
    name = _BAD.sub("_", label)
    if not name or name[0].isdigit() or name[0] == ".":
        name = "v_" + name
    return name


def _terms(coeffs: dict, names: list) -> str:
    if not coeffs:
        return "0 " + names[0] if names else "0"
    parts = []
    for j in sorted(coeffs):
        a = float(coeffs[j])
        sign = "-" if a < 0 else "+"
        parts.append(f"{sign} {abs(a)!r} {names[j]}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def dumps(lp: LinearProgram) -> str:
    names = [_name(v.label) for v in lp.vars]
    out = [f"\\ {lp.name}", "Maximize" if lp.sense == "max" else "Minimize"]
    out.append(" obj: " + _terms(lp.objective, names))
    out.append("Subject To")
    for row in lp.rows:
        op = {"<=": "<=", ">=": ">=", "=": "="}[row.sense]
        out.append(f" {_name(row.label)}: {_terms(row.coeffs, names)} {op} {float(row.rhs)!r}")
    out.append("Bounds")
    for name, v in zip(names, lp.vars):
        if v.lb is None and v.ub is None:
            out.append(f" {name} free")
        elif v.lb is None:
            out.append(f" -inf <= {name} <= {float(v.ub)!r}")
        elif v.ub is None:
            if v.lb != 0:
                out.append(f" {name} >= {float(v.lb)!r}")
        else:
            out.append(f" {float(v.lb)!r} <= {name} <= {float(v.ub)!r}")
    out.append("End")
    return "\n".join(out) + "\n"


def dump(lp: LinearProgram, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(lp))
