#!/usr/bin/env python3
"""Independent recheck of the jump residuals reported by `rhp validate`.

Runs `rhp validate` and `rhp eval --grid validate:M` on the same config, then
recomputes max |M_+ - M_- J| per interval from the CSV alone, with J built
here from the reported beta. Exits 0 when every recomputed interval residual
is within a factor 2 of the reported one.

usage: recheck_eval.py RHP_BINARY CONFIG WORKDIR
"""

import cmath
import csv
import json
import math
import os
import subprocess
import sys

# Residuals below this are roundoff; ratios between them carry no information.
FLOOR = 1e-14


def run(binary, *args):
    proc = subprocess.run([binary, *args], capture_output=True, text=True)
    if proc.returncode != 0:
        sys.exit(f"{' '.join(args[:1])} failed ({proc.returncode}): {proc.stderr.strip()}")


def load_rows(path):
    rows = {}
    with open(path, newline="") as f:
        for r in csv.DictReader(f):
            m = [complex(float(r[f"re_m{i}"]), float(r[f"im_m{i}"])) for i in ("11", "12", "21", "22")]
            rows[(float(r["re_z"]), r["side"])] = m
    return rows


def matmul(a, b):
    return [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]


def intervals(cuts):
    """(kind, index, lo, hi) in the order validate reports them."""
    n = len(cuts)
    out = [("cut", k, a, b) for k, (a, b) in enumerate(cuts)]
    out += [("gap", k, cuts[k][1], cuts[k + 1][0]) for k in range(n - 1)]
    span = max(1.0, cuts[-1][1] - cuts[0][0])
    out.append(("outside", 0, cuts[0][0] - span, cuts[0][0]))
    out.append(("outside", 1, cuts[-1][1], cuts[-1][1] + span))
    return out


def jump(kind, index, beta):
    if kind == "cut":
        return [0, 1, -1, 0]
    if kind == "gap":
        e = cmath.exp(-2j * math.pi * beta[index])
        return [e, 0, 0, 1 / e]
    return [1, 0, 0, 1]


def main():
    if len(sys.argv) != 4:
        sys.exit(__doc__)
    binary, config, work = sys.argv[1:]
    os.makedirs(work, exist_ok=True)
    with open(config) as f:
        m = json.load(f).get("validate", {}).get("m", 50)
    run(binary, "validate", "--config", config, "--out", work)
    run(binary, "eval", "--config", config, "--out", work, "--grid", f"validate:{m}")
    with open(os.path.join(work, "report.json")) as f:
        report = json.load(f)
    rows = load_rows(os.path.join(work, "eval.csv"))
    cuts = report["problem"]["cuts"]
    beta = report["beta"]
    res = report["residuals"]
    reported = {
        "cut": res["cut_residuals"],
        "gap": res["gap_residuals"],
        "outside": res["outside_residuals"],
    }

    failures = 0
    for kind, index, lo, hi in intervals(cuts):
        J = jump(kind, index, beta)
        worst = 0.0
        for i in range(m):
            # Same arithmetic as the grid generator, so keys match exactly.
            x = lo + (hi - lo) * (i + 0.5) / m
            plus, minus = rows[(x, "above")], rows[(x, "below")]
            d = [p - q for p, q in zip(plus, matmul(minus, J))]
            worst = max(worst, max(abs(v) for v in d))
        ref = reported[kind][index]
        ratio = max(worst, FLOOR) / max(ref, FLOOR)
        ok = 0.5 <= ratio <= 2.0
        failures += not ok
        print(f"{kind} {index + 1}: recomputed {worst:.3e} reported {ref:.3e} ratio {ratio:.3f} "
              f"{'ok' if ok else 'MISMATCH'}")
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
