#!/usr/bin/env python3
"""Solve an LP file written by `torus-lb export-lp` or `export-opt`.

Reads the CPLEX LP subset the exporter emits and minimizes it with the
HiGHS solver bundled in SciPy. Prints the objective value.

    python3 scripts/solve_lp.py oblivious.lp
"""

import argparse
import re
import sys

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

TERM = re.compile(r"([+-])\s*([0-9.eE+-]+)\s+([A-Za-z_][A-Za-z0-9_]*)")
SECTIONS = {"minimize": "obj", "subject to": "rows", "bounds": "bounds", "end": "end"}


def parse(path):
    objective, rows, bounds = [], [], {}
    section, pending = None, ""
    with open(path, encoding="ascii") as fh:
        for raw in fh:
            line = raw.split("\\", 1)[0].strip()
            if not line:
                continue
            if line.lower() in SECTIONS:
                section = SECTIONS[line.lower()]
                continue
            if section == "obj":
                objective += TERM.findall(line.split(":", 1)[-1])
            elif section == "rows":
                pending += " " + line
                m = re.search(r"(<=|>=|=)\s*([-0-9.eE+]+)\s*$", pending)
                if m:
                    body = pending[: m.start()].split(":", 1)[1]
                    rows.append((TERM.findall(body), m.group(1), float(m.group(2))))
                    pending = ""
            elif section == "bounds":
                parts = line.split()
                if len(parts) == 2 and parts[1] == "free":
                    bounds[parts[0]] = (None, None)
                elif len(parts) == 3:
                    name, op, val = parts
                    lo, hi = bounds.get(name, (0.0, None))
                    if op == "<=":
                        hi = float(val)
                    else:
                        lo = float(val)
                    bounds[name] = (lo, hi)
                elif len(parts) == 5:
                    bounds[parts[2]] = (float(parts[0]), float(parts[4]))
    return objective, rows, bounds


def solve(path):
    objective, rows, bounds = parse(path)
    names = {}

    def index(v):
        return names.setdefault(v, len(names))

    for _, _, v in objective:
        index(v)
    for terms, _, _ in rows:
        for _, _, v in terms:
            index(v)
    for v in bounds:
        index(v)

    c = np.zeros(len(names))
    for sign, a, v in objective:
        c[names[v]] += float(a) * (-1 if sign == "-" else 1)

    ub, eq = ([], [], [], []), ([], [], [], [])
    for terms, op, rhs in rows:
        target = eq if op == "=" else ub
        flip = -1.0 if op == ">=" else 1.0
        r = len(target[3])
        for sign, a, v in terms:
            target[0].append(r)
            target[1].append(names[v])
            target[2].append(flip * float(a) * (-1 if sign == "-" else 1))
        target[3].append(flip * rhs)

    def matrix(t):
        if not t[3]:
            return None, None
        return coo_matrix((t[2], (t[0], t[1])), shape=(len(t[3]), len(names))).tocsr(), np.array(t[3])

    a_ub, b_ub = matrix(ub)
    a_eq, b_eq = matrix(eq)
    box = [(0.0, None)] * len(names)
    for v, (lo, hi) in bounds.items():
        box[names[v]] = (lo, hi)
    return linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=box, method="highs")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("lp", nargs="+")
    args = ap.parse_args()
    status = 0
    for path in args.lp:
        res = solve(path)
        if res.status != 0:
            print(f"{path}: {res.message}")
            status = 1
        else:
            print(f"{path}: objective {res.fun:.6f}")
    return status


if __name__ == "__main__":
    sys.exit(main())
