"""Generate, test assumptions, replay the reordering argument, verify the chain.

The report produced here is a plain dict of JSON-ready values.  Every number
in it is a function of (model, params, source, n, seed, alpha, iterations).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .core import AssumptionProfile, OutcomeTable, chsh_expression, chsh_statistic
from .errors import ForgeError, MissingSettingError, RequiresDichotomicError
from .models import build_model, build_source
from .reorder import JointTable, ProofReplay, joint_deviation_bound, replay_proof, verify_chain
from .stats import (
    chsh_tolerance, conspiracy_test, hoeffding_tolerance, oi_empirical_test,
    pi_empirical_test, reorder_tolerance,
)
from .tabulator import RunConfig, filtered_correlations, full_table_correlations, run_experiment

log = logging.getLogger(__name__)

SCHEMA = "chsh-report/1"
DEFAULT_ALPHA = 0.01
DEFAULT_ITERATIONS = 1000


@dataclass
class PipelineResult:
    report: dict
    table: OutcomeTable
    replay: ProofReplay | None
    logs: object = None

    @property
    def joint(self) -> JointTable | None:
        return None if self.replay is None else self.replay.joint


def _correlations(table: OutcomeTable) -> dict:
    full = full_table_correlations(table)
    try:
        filtered = filtered_correlations(table)
    except MissingSettingError as exc:
        filtered, missing = None, str(exc)
    out = {
        "correlations": {"filtered": filtered and filtered.as_dict(), "full": full.as_dict()},
        "chsh": {
            "filtered": filtered and chsh_statistic(filtered),
            "full": chsh_statistic(full),
            "filtered_signed": filtered and chsh_expression(filtered),
            "full_signed": chsh_expression(full),
        },
    }
    if filtered is None:
        out["chsh"]["filtered_error"] = missing
    return out


def reorder_section(replay: ProofReplay) -> dict:
    out = {
        "tolerance": replay.tolerance,
        "succeeded": replay.succeeded,
        "failed_step": replay.failed_step,
        "failure": None if replay.failure is None else replay.failure.code,
        "plan": replay.plan.method,
        "minimum_discrepancies": {k.value: v for k, v in replay.plan.discrepancies.items()},
        "oi_split": {"+1": replay.plan.oi_split[0], "-1": replay.plan.oi_split[1]},
        "audits": [a.as_dict() for a in replay.audits],
    }
    if replay.failure is not None:
        out["failure_detail"] = dict(replay.failure.details)
    return out


def joint_sections(replay: ProofReplay) -> dict:
    if replay.joint is None:
        return {"joint": None, "chain": None}
    chain = verify_chain(replay.joint)
    return {
        "joint": {
            "n": len(replay.joint),
            "correlations": replay.joint.correlations().as_dict(),
            "chsh": replay.joint.chsh(),
            "deviation_bound": joint_deviation_bound(replay),
        },
        "chain": chain.as_dict(),
    }


def analyse_table(table: OutcomeTable, alpha: float = DEFAULT_ALPHA,
                  iterations: int = DEFAULT_ITERATIONS, seed: int = 0,
                  tolerance: int | None = None):
    """Everything after data generation; returns ``(sections, replay)``."""
    n = len(table)
    counts = table.setting_counts()
    out = _correlations(table)
    tol = reorder_tolerance(n, alpha) if tolerance is None else int(tolerance)
    out["tolerances"] = {
        "alpha": alpha,
        "chsh": chsh_tolerance(list(counts.values()), alpha) if min(counts.values()) else None,
        "hoeffding_per_setting": {str(int(s)): hoeffding_tolerance(c, alpha / 4) for s, c in counts.items()},
        "reorder": tol,
        "setting_counts": {str(int(s)): c for s, c in counts.items()},
    }
    if not table.dichotomic:
        out.update(conspiracy=None, pi=None, oi=None, joint=None, chain=None,
                   reorder={"succeeded": False, "failure": RequiresDichotomicError.code})
        return out, None

    try:
        out["conspiracy"] = conspiracy_test(table, iterations, alpha, seed).as_dict()
    except MissingSettingError as exc:
        out["conspiracy"] = {"error": str(exc), "rejected": False}
    out["pi"] = {k: r.as_dict() for k, r in pi_empirical_test(table, alpha).items()}
    replay = replay_proof(table, tol)
    oi_table, basis = (replay.pi_table, "after-pi-steps") if replay.pi_table is not None else (table, "raw-bp2")
    try:
        tests = oi_empirical_test(oi_table, alpha, warn=basis == "raw-bp2")
        oi = {k: r.as_dict() for k, r in tests.items()}
    except ForgeError as exc:
        oi = {"error": str(exc)}
    oi["conditioned_on"] = basis
    oi["bp2_bp4_disagreements"] = int((oi_table.bp2 != oi_table.bp4).sum())
    out["oi"] = oi
    out["reorder"] = reorder_section(replay)
    out.update(joint_sections(replay))
    return out, replay


def empirical_profile(sections: dict, replay: ProofReplay | None) -> dict:
    """Assumption verdicts read off the tests; None where undecided."""
    if replay is None:
        return {"no_conspiracy": None, "parameter_independence": None, "outcome_independence": None}
    nc = not sections["conspiracy"]["rejected"]
    pi_tests = all(not r["rejected"] for r in sections["pi"].values())
    pi = pi_tests and (replay.failed_step is None or replay.failed_step == "OI_Ap3Ap4")
    if replay.pi_table is None:
        oi = None
    else:
        oi_tests = all(not r["rejected"] for k, r in sections["oi"].items() if k in ("+1", "-1"))
        oi = replay.succeeded and oi_tests
    return {"no_conspiracy": nc, "parameter_independence": pi, "outcome_independence": oi}


def _profile_section(declared: AssumptionProfile, empirical: dict) -> dict:
    d = declared.as_dict()
    return {
        "declared": d,
        "empirical": empirical,
        "agrees": {k: (None if empirical[k] is None else empirical[k] == d[k]) for k in d},
    }


def run_pipeline(model: str, params: dict | None = None, source: str = "uniform",
                 n: int = 10_000, seed: int = 0, alpha: float = DEFAULT_ALPHA,
                 iterations: int = DEFAULT_ITERATIONS) -> PipelineResult:
    params = dict(params or {})
    hv = build_model(model, **params)
    src = build_source(source)
    table, logs = run_experiment(RunConfig(n, seed, hv, src))
    sections, replay = analyse_table(table, alpha, iterations, seed)
    declared = AssumptionProfile(
        no_conspiracy=hv.assumptions.no_conspiracy and src.no_conspiracy,
        parameter_independence=hv.assumptions.parameter_independence,
        outcome_independence=hv.assumptions.outcome_independence,
    )
    report = {
        "schema": SCHEMA,
        "config": {"model": model, "params": params, "source": source, "n": n,
                   "seed": seed, "alpha": alpha, "iterations": iterations},
        **sections,
        "profile": _profile_section(declared, empirical_profile(sections, replay)),
    }
    return PipelineResult(report, table, replay, logs)


def prove_table(table: OutcomeTable, tolerance: int) -> tuple[dict, ProofReplay]:
    """Replay and chain check on an externally supplied table."""
    if not table.dichotomic:
        raise RequiresDichotomicError("the proof replay needs a dichotomic table")
    replay = replay_proof(table, tolerance)
    report = {
        "schema": SCHEMA,
        "n": len(table),
        **_correlations(table),
        "reorder": reorder_section(replay),
        **joint_sections(replay),
    }
    return report, replay
