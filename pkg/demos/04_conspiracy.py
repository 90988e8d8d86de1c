"""A setting source that peeks at the outcomes fakes a violation.

The outcomes are independent fair coins, so every full-table correlation
is near zero and the full-table CHSH value is near zero too.  The
conspiracy source picks, for each trial, the setting whose product best
raises the expression.  The filtered value then goes far above 2, the
permutation test flags the dependence, and the reordering still yields a
joint table with CHSH at most 2, because it works on the full table.
"""

from chsh_forge.pipeline import run_pipeline


def main():
    for source in ("uniform", "conspiracy:max"):
        r = run_pipeline("signaling", {"leak": 0.0}, source, n=10_000, seed=4).report
        print(f"source {source}")
        print(f"  filtered chsh     {r['chsh']['filtered']:.4f}")
        print(f"  full-table chsh   {r['chsh']['full']:.4f}")
        print(f"  conspiracy test   p = {r['conspiracy']['p_value']:.4f}   rejected: {r['conspiracy']['rejected']}")
        joint = r["joint"]
        print(f"  joint chsh        {joint['chsh']:.4f}" if joint else f"  reorder failure   {r['reorder']['failure']}")


if __name__ == "__main__":
    main()
