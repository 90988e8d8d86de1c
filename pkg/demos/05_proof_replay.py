"""Step-by-step replay of the reordering on a small memory-model table.

Shows each step's audit: how many rows moved, which correlation it was
obliged to preserve and whether it did, then the bounding chain on the
resulting joint table.
"""

from chsh_forge.models import build_model, build_source
from chsh_forge.reorder import replay_proof, verify_chain
from chsh_forge.stats import reorder_tolerance
from chsh_forge.tabulator import RunConfig, run_experiment

N = 5_000


def main():
    table, _ = run_experiment(RunConfig(N, 11, build_model("memory"), build_source("uniform")))
    replay = replay_proof(table, reorder_tolerance(N, 0.01))
    print(f"plan: {replay.plan.method}, tolerance {replay.tolerance}")
    for audit in replay.audits:
        print(f"{audit.step.value:<12} d = {audit.discrepancy:<4} moved {len(audit.moves):<5} "
              f"preserved {audit.preserved()}  (error {audit.preservation_error:.1e})")
    joint = replay.joint
    print(f"\njoint chsh {joint.chsh():.4f}")
    chain = verify_chain(joint)
    for link in chain.links:
        print(f"  {link.name:<18}{link.lhs:>3} {link.relation:<2} {link.rhs:<3}"
              f"{link.lhs_value:9.4f} {link.rhs_value:9.4f}  {'ok' if link.passed else 'FAIL'}")


if __name__ == "__main__":
    main()
