#!/usr/bin/env python3
"""Regenerates tests/fixtures/w1_lp.json.

Each instance is a pair of normalized atomic measures on the circle [0,1)
with at most 20 atoms each. The reference W1 is the optimum of the discrete
transport LP with cost = geodesic circle distance, solved by HiGHS.
"""
import argparse
import json
import pathlib

import numpy as np
from scipy.optimize import linprog


def circle_distance(x, y):
    d = abs(x - y) % 1.0
    return min(d, 1.0 - d)


def transport_lp(xs, a, ys, b):
    n, m = len(xs), len(ys)
    cost = np.array([[circle_distance(x, y) for y in ys] for x in xs]).ravel()
    rows = []
    for i in range(n):
        r = np.zeros(n * m)
        r[i * m:(i + 1) * m] = 1.0
        rows.append(r)
    for j in range(m):
        r = np.zeros(n * m)
        r[j::m] = 1.0
        rows.append(r)
    res = linprog(cost, A_eq=np.array(rows), b_eq=np.concatenate([a, b]),
                  bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise RuntimeError(res.message)
    return float(res.fun)


def random_measure(rng, k, shared):
    xs = rng.random(k)
    if shared is not None and k > 1:
        # Reuse some positions of the other measure, and put one atom on 0.
        take = min(len(shared), k // 2)
        xs[:take] = rng.choice(shared, size=take, replace=False)
        xs[-1] = 0.0
    w = rng.random(k) + 0.05
    w /= w.sum()
    return [float(x) for x in xs], [float(v) for v in w]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=20240611)
    parser.add_argument("--count", type=int, default=300)
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parents[2]
                                              / "tests" / "fixtures" / "w1_lp.json"))
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)
    instances = []
    for i in range(args.count):
        n = int(rng.integers(1, 21))
        m = int(rng.integers(1, 21))
        xs, a = random_measure(rng, n, None)
        ys, b = random_measure(rng, m, np.array(xs) if i % 3 == 0 else None)
        instances.append({"mu": {"positions": xs, "weights": a},
                          "nu": {"positions": ys, "weights": b},
                          "w1": transport_lp(xs, np.array(a), ys, np.array(b))})
    out = {"generator": "tools/oracles/w1_lp_oracle.py", "seed": args.seed,
           "solver": "scipy.optimize.linprog(method='highs')", "instances": instances}
    pathlib.Path(args.out).write_text(json.dumps(out, indent=1) + "\n")


if __name__ == "__main__":
    main()
