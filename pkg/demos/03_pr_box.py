"""The PR box reaches the algebraic maximum of 4 without signaling."""

from chsh_forge.pipeline import run_pipeline


def main():
    r = run_pipeline("prbox", n=10_000, seed=0).report
    print("filtered correlations:")
    for key, value in r["correlations"]["filtered"].items():
        print(f"  {key:<8}{value:+.4f}")
    print(f"filtered chsh       {r['chsh']['filtered']:.4f}")
    print("PI tests rejected   ", {k: t["rejected"] for k, t in r["pi"].items()})
    print(f"reorder failure     {r['reorder']['failure']}")
    d = r["reorder"]["minimum_discrepancies"]["OI_Ap3Ap4"]
    print(f"OI discrepancy      {d} of {r['config']['n']} rows (tolerance {r['reorder']['tolerance']})")


if __name__ == "__main__":
    main()
