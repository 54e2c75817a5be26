#!/usr/bin/env python3
"""Regenerates tests/fixtures/baselines.json from the rdspec CLI.

Every value is a frozen Monte Carlo or grid result on the shipped seed.
Run after any change that legitimately moves them, and review the diff:

    python3 tools/oracles/regenerate_baselines.py --rdspec build/tools/rdspec
"""
import argparse
import csv
import json
import pathlib
import subprocess
import tempfile

ROOT = pathlib.Path(__file__).resolve().parents[2]

# name -> (experiment, config, parameters, table, columns)
RUNS = {
    "spec_stats_mixed": ("spec-stats", "mixed.json",
                         {"samples": 100, "eps": 0.01,
                          "n_schedule": [50, 100, 200, 400, 800, 1600, 3200]},
                         "spec_stats.csv", ["n", "median_K_over_n", "p90_K_over_n"]),
    "bad_set_trap": ("bad-set", "trap.json", {"N": 40, "grid": 4000, "w_samples": 32},
                     "bad_set.csv", ["n", "measure"]),
    "jacobian_trap": ("jacobian", "trap.json", {"G_schedule": [2048, 4096, 8192], "arcs": 100, "T": 8},
                      "jacobian.csv", ["G", "mean_relative_error", "max_relative_error"]),
    "corollary1_doubling": ("corollary1", "doubling.json", {"r_schedule": [10, 20, 40], "G": 4096},
                            "corollary1.csv", ["r", "w1", "placement_error"]),
    "kb_average_mixed": ("kb-average", "mixed.json",
                         {"start": "atoms", "atoms": [0.1, 0.2], "samples": 4000,
                          "n_schedule": [25, 50, 100, 200], "max_mode": 3},
                         "kb_average.csv", ["n", "defect"]),
    "corollary2_doubling": ("corollary2", "doubling.json",
                            {"samples": 2, "n_schedule": [50, 200, 800], "eps": 0.01, "G": 2048},
                            "corollary2.csv", ["sample", "n", "K", "w1"]),
}


def as_number(text):
    value = float(text)
    return int(value) if value.is_integer() and "." not in text and "e" not in text else value


def run(rdspec, work, name, entry):
    experiment, config, params, table, columns = entry
    out = work / name
    cmd = [rdspec, experiment, "--config", str(ROOT / "configs" / config), "--out", str(out),
           "--jobs", "8"]
    for key, value in params.items():
        cmd += ["--param", f"{key}={json.dumps(value)}"]
    subprocess.run(cmd, check=True)
    with open(out / table) as f:
        rows = list(csv.DictReader(f))
    manifest = json.loads((out / "manifest.json").read_text())
    return {
        "experiment": experiment,
        "config": f"configs/{config}",
        "parameters": params,
        "columns": {c: [as_number(r[c]) for r in rows] for c in columns},
        "summary": manifest["summary"],
    }


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--rdspec", default=str(ROOT / "build" / "tools" / "rdspec"))
    parser.add_argument("--out", default=str(ROOT / "tests" / "fixtures" / "baselines.json"))
    args = parser.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        baselines = {name: run(args.rdspec, pathlib.Path(tmp), name, spec)
                     for name, entry in RUNS.items()}
    doc = {"generator": "tools/oracles/regenerate_baselines.py", "seed": 42, "runs": baselines}
    pathlib.Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
