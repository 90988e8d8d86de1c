"""Finite-sample drift toward the limit.

Sweeps the trial count for a local and a quantum model.  The local excess
over 2 shrinks with the tolerance, while the singlet value settles at
2 sqrt 2 regardless of n.
"""

import json
import os
import tempfile

from chsh_forge import cli


def sweep(model):
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "sweep.json")
        cli.main(["sweep", "--model", model, "--trials-list", "1000,10000,100000", "--seeds", "5",
                  "--iterations", "200", "--out", out, "--no-timestamp"])
        with open(out) as fh:
            return json.load(fh)["summary"]


def main():
    for model in ("deterministic", "singlet"):
        print(model)
        print(f"  {'n':>7}{'max chsh':>10}{'mean chsh':>11}{'max excess':>12}{'tolerance':>11}")
        for s in sweep(model):
            print(f"  {s['n']:>7}{s['max_filtered_chsh']:>10.4f}{s['mean_filtered_chsh']:>11.4f}"
                  f"{s['max_excess_over_2']:>12.4f}{s['max_chsh_tolerance']:>11.4f}")


if __name__ == "__main__":
    main()
