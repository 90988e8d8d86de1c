"""The singlet model exceeds 2 and the reordering fails at the OI step.

The singlet sampler is no-signaling, so the three parameter-independence
matchings go through.  What remains is the ap3/ap4 matching inside the
B' classes, and that is where a nonlocal correlation cannot be absorbed.
"""

import math

from chsh_forge.core import chsh_statistic
from chsh_forge.pipeline import run_pipeline

N = 100_000


def main():
    result = run_pipeline("singlet", n=N, seed=1)
    r = result.report
    print(f"filtered chsh      {r['chsh']['filtered']:.4f}   (2 sqrt 2 = {2 * math.sqrt(2):.4f})")
    for key, test in r["pi"].items():
        print(f"PI test {key:<8}   p = {test['p_value']:.3f}   rejected: {test['rejected']}")
    rep = r["reorder"]
    print(f"reorder tolerance  {rep['tolerance']}")
    for step, d in rep["minimum_discrepancies"].items():
        print(f"  {step:<12} minimum discrepancy {d}")
    print(f"reorder failure    {rep['failure']} at {rep['failed_step']}")
    print("joint table        none; the OI step could not be matched within tolerance")


if __name__ == "__main__":
    main()
