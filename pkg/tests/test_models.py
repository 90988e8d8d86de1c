import math

import numpy as np
import pytest

from chsh_forge.core import SETTINGS, Observable, Setting, Wing
from chsh_forge.errors import InvalidParameterError, InvalidStrategyError, LocalityBreachError
from chsh_forge.models import (
    ALL_STRATEGIES, CHSH_OPTIMAL_ANGLES, MODEL_NAMES, SATURATING_STRATEGIES, RealizedTrial,
    TrialContext, blindfold, build_model, build_source, make_conspiracy_source,
    make_deterministic_local, make_memory_local, make_pr_box, make_quantum_singlet,
    make_signaling_model, make_time_dependent_local, make_uniform_source,
)
from chsh_forge.rng import RandomStreams
from chsh_forge.stats import chsh_tolerance, hoeffding_tolerance
from chsh_forge.tabulator import RunConfig, filtered_correlations, full_table_correlations, run_experiment
from chsh_forge.core import chsh_statistic

U, P = Observable.UNPRIMED, Observable.PRIMED


def run(model, n, seed=0, source=None, reference=False):
    table, _ = run_experiment(RunConfig(n, seed, model, source or make_uniform_source()), reference=reference)
    return table


def test_strategy_tables():
    assert len(ALL_STRATEGIES) == 16 and len(set(ALL_STRATEGIES)) == 16
    assert len(SATURATING_STRATEGIES) == 8
    for a, ap, b, bp in ALL_STRATEGIES:
        assert abs(a * bp + ap * bp + ap * b - a * b) == 2


def test_all_ones_strategy():
    t = run(make_deterministic_local((1, 1, 1, 1)), 50)
    c = filtered_correlations(t)
    assert c.as_dict() == {"c_ab": 1.0, "c_apb": 1.0, "c_abp": 1.0, "c_apbp": 1.0}
    assert chsh_statistic(c) == 2.0


def test_alternating_strategy_by_parity():
    m = make_deterministic_local(lambda phase: (1, 1, 1, 1) if phase == 0 else (-1, -1, -1, -1), period=2)
    t = run(m, 40)
    assert np.all(t.outcomes[::2] == 1) and np.all(t.outcomes[1::2] == -1)
    assert chsh_statistic(filtered_correlations(t)) == 2.0


def test_random_strategy_within_tolerance():
    t = run(make_deterministic_local(), 100_000, seed=3)
    counts = list(t.setting_counts().values())
    assert chsh_statistic(filtered_correlations(t)) <= 2 + chsh_tolerance(counts, 0.01)
    # averaging the 16 strategies gives every correlation exactly 0
    assert max(abs(v) for v in full_table_correlations(t).as_dict().values()) < hoeffding_tolerance(100_000, 0.01)


def test_invalid_strategy():
    with pytest.raises(InvalidStrategyError):
        make_deterministic_local((1, 0, 1, 1))
    with pytest.raises(InvalidStrategyError):
        make_deterministic_local(lambda p: (1, 1, 1, 2), period=3)


def test_memory_rule_ignoring_history_matches_stateless():
    # same probabilities every trial: a memoryless stochastic model
    probs = (0.9, 0.2, 0.7, 0.4)
    m = make_memory_local(lambda prev, state, lam: (state, probs))
    t = run(m, 5000, seed=1, reference=True)
    ua = RandomStreams(1, 5000).outcome_a
    ub = RandomStreams(1, 5000).outcome_b
    for s in SETTINGS:
        x, y = s.observables
        k = s - 1
        pa = probs[0] if x is U else probs[1]
        pb = probs[2] if y is U else probs[3]
        assert np.array_equal(t.outcomes[:, 2 * k], np.where(ua[:, k] < pa, 1.0, -1.0))
        assert np.array_equal(t.outcomes[:, 2 * k + 1], np.where(ub[:, k] < pb, 1.0, -1.0))


def test_memory_two_trial_rule_hand_enumeration():
    # deterministic: trial 0 all +1; afterwards copy the previous realized A outcome to every observable
    def rule(prev, state, lam):
        if prev is None:
            return state, (1.0, 1.0, 1.0, 1.0)
        v = 1.0 if prev.outcome_a > 0 else 0.0
        return state, (v, 1.0 - v, v, v)

    t = run(make_memory_local(rule), 4, seed=0)
    assert np.all(t.outcomes[0] == 1)
    for i in range(1, 4):
        s = Setting(int(t.settings[i - 1]))
        prev_a = t.outcomes[i - 1, 2 * (s - 1)]
        a, ap, b, bp = (prev_a, -prev_a, prev_a, prev_a)
        assert list(t.outcomes[i]) == [a, b, a, bp, ap, b, ap, bp]


def test_memory_bias_flip_bound():
    t = run(build_model("memory"), 100_000, seed=2)
    counts = list(t.setting_counts().values())
    assert chsh_statistic(filtered_correlations(t)) <= 2 + chsh_tolerance(counts, 0.01)


def test_memory_locality_breach():
    with pytest.raises(LocalityBreachError):
        make_memory_local(lambda prev, state, lam, remote_observable: (state, (0.5,) * 4))
    with pytest.raises(LocalityBreachError):
        make_memory_local(lambda prev, state, lam, extra: (state, (0.5,) * 4))
    m = make_memory_local(lambda prev, state, lam: (state, {"A": 0.5, "A'": 0.5, "B": 0.5, "B'": 0.5, "remote": 1}))
    with pytest.raises(LocalityBreachError) as e:
        run(m, 3)
    assert str(e.value).startswith("locality-breach-in-local-model")


def test_clock_locality_breach():
    with pytest.raises(LocalityBreachError):
        make_time_dependent_local(lambda t, obs, remote: 0.9, lambda t, obs: 0.9, 3)


def test_constant_clock_is_memoryless():
    m = make_time_dependent_local(lambda t, obs: 0.8, lambda t, obs: 0.8, 5)
    t = run(m, 2000, seed=4)
    ref = run(make_memory_local(_noisy_rule(0.2)), 2000, seed=4)
    assert t == ref


def _noisy_rule(e):
    table = [tuple(1 - e if v > 0 else e for v in q) for q in SATURATING_STRATEGIES]
    return lambda prev, state, lam: (state, table[int(lam * len(table))])


def test_period_two_deterministic_clock_hand_enumeration():
    # fidelity 1 on even ticks, 0 on odd: outcomes equal the strategy, then its negation
    m = make_time_dependent_local(lambda t, o: 1.0 - t, lambda t, o: 1.0 - t, 2, strategies=[(1, -1, 1, 1)])
    t = run(m, 4)
    row = np.array([1, 1, 1, 1, -1, 1, -1, 1], dtype=float)
    assert np.array_equal(t.outcomes, np.array([row, -row, row, -row]))


def test_clock_messages_precede_setting():
    _, logs = run_experiment(RunConfig(10, 0, build_model("clocked"), make_uniform_source()))
    assert logs[3].events[0].payload.body == {"tick": 3}


def test_clocked_bound():
    t = run(build_model("clocked", period=7, amplitude=0.3, base=0.65), 100_000, seed=5)
    counts = list(t.setting_counts().values())
    assert chsh_statistic(filtered_correlations(t)) <= 2 + chsh_tolerance(counts, 0.01)


def test_singlet_examples():
    m = make_quantum_singlet(0.3, 1.0, 0.3, 2.0)
    assert m.correlations[Setting.AB] == -1.0
    t = run(make_quantum_singlet(), 100_000, seed=6)
    c = filtered_correlations(t)
    assert chsh_statistic(c) == pytest.approx(2 * math.sqrt(2), abs=0.05)
    tol = hoeffding_tolerance(100_000, 0.01)
    for col in ("a1", "a2", "ap3", "ap4"):
        assert abs(np.mean(t.column(col) > 0) - 0.5) < tol


def test_pr_box_examples():
    t = run(make_pr_box(), 10_000, seed=7)
    c = filtered_correlations(t)
    assert (c.c_abp, c.c_apbp, c.c_apb, c.c_ab) == (1.0, 1.0, 1.0, -1.0)
    assert chsh_statistic(c) == 4.0
    tol = hoeffding_tolerance(10_000, 0.01)
    for col in ("a1", "b1", "a2", "bp2", "ap3", "b3", "ap4", "bp4"):
        assert abs(np.mean(t.column(col) > 0) - 0.5) < tol


def test_pr_box_distribution_by_enumeration():
    # brute force: the two-stage sampler's joint distribution per setting
    m = make_pr_box()
    for s in SETTINGS:
        x, y = s.observables
        joint = {}
        for b in (1.0, -1.0):
            pa = m.outcome_probability(Wing.A, None, TrialContext(0), x, y, b)
            joint[(1.0, b)] = 0.5 * pa
            joint[(-1.0, b)] = 0.5 * (1 - pa)
        e = sum(a * b * p for (a, b), p in joint.items())
        assert e == (-1.0 if s is Setting.AB else 1.0)


def test_signaling_examples():
    t0 = run(make_signaling_model(0.0), 10_000, seed=1)
    assert abs(np.mean(t0.a1 > 0) - np.mean(t0.a2 > 0)) < 0.05
    t1 = run(make_signaling_model(1.0), 1000, seed=1)
    assert np.all(t1.a1 == 1) and np.all(t1.a2 == -1)
    with pytest.raises(InvalidParameterError):
        make_signaling_model(1.5)


LOCAL_NAMES = ("deterministic", "memory", "clocked")


@pytest.mark.parametrize("name", MODEL_NAMES)
def test_profile_honesty(name):
    m = build_model(name)
    prof = m.profile().assumptions
    rng = np.random.default_rng(0)
    history = []
    for i in range(10_000):
        t = i % 200
        if t == 0:
            m.reset()
            history = []
        ctx = TrialContext(t, tuple(history))
        s = SETTINGS[int(rng.integers(4))]
        ms = m.draw_microstate(ctx, s, rng.random(m.microstate_width))
        x, y = s.observables
        for wing, local, remote in ((Wing.A, x, y), (Wing.B, y, x)):
            if prof.parameter_independence:
                assert m.outcome_probability(wing, ms, ctx, local, remote, None) == \
                       m.outcome_probability(wing, ms, ctx, local, None, None)
            if prof.outcome_independence:
                r = float(rng.choice([-1.0, 1.0]))
                assert m.outcome_probability(wing, ms, ctx, local, remote, r) == \
                       m.outcome_probability(wing, ms, ctx, local, remote, None)
        history.append(RealizedTrial(s, float(rng.choice([-1.0, 1.0])), float(rng.choice([-1.0, 1.0]))))


def test_declared_profiles():
    assert all(build_model(n).profile().assumptions.local for n in LOCAL_NAMES)
    for n in ("singlet", "prbox"):
        a = build_model(n).profile().assumptions
        assert a.parameter_independence and not a.outcome_independence
    a = build_model("signaling").profile().assumptions
    assert not a.parameter_independence and a.outcome_independence


@pytest.mark.parametrize("name", MODEL_NAMES)
@pytest.mark.parametrize("source", ["uniform", "conspiracy:max", "conspiracy:min"])
def test_fast_path_matches_lifecycle(name, source):
    fast = run(build_model(name), 1500, seed=11, source=build_source(source))
    slow = run(build_model(name), 1500, seed=11, source=build_source(source), reference=True)
    assert fast == slow


@pytest.mark.parametrize("name", MODEL_NAMES)
def test_runs_are_reproducible(name):
    assert run(build_model(name), 500, seed=9) == run(build_model(name), 500, seed=9)
    assert run(build_model(name), 500, seed=9) != run(build_model(name), 500, seed=10)


def test_uniform_source_frequencies():
    n = 10**6
    u = RandomStreams(123, n).setting
    s = make_uniform_source().choose_block(u)
    bound = 4 * math.sqrt(math.log(8 / 0.01) / (2 * n))
    for k in range(1, 5):
        assert abs(np.mean(s == k) - 0.25) <= bound
    assert np.array_equal(s, make_uniform_source().choose_block(RandomStreams(123, n).setting))


def test_uniform_source_ignores_peek():
    src = make_uniform_source()
    assert src.choose(0, 0.6, (1,) * 8) == src.choose(0, 0.6, None) == Setting.A_PRIME_B


def test_blindfolded_conspiracy_is_uniform():
    m = build_model("signaling", leak=0.0)
    a = run(m, 3000, seed=2, source=blindfold(make_conspiracy_source("maximize")))
    b = run(m, 3000, seed=2, source=make_uniform_source())
    assert a == b


def test_conspiracy_source_directions():
    m = build_model("signaling", leak=0.0)
    tmax = run(m, 100_000, seed=3, source=make_conspiracy_source("maximize"))
    counts = list(tmax.setting_counts().values())
    assert chsh_statistic(filtered_correlations(tmax)) > 2
    assert chsh_statistic(full_table_correlations(tmax)) <= 2 + chsh_tolerance([100_000] * 4, 0.01)
    tmin = run(m, 100_000, seed=3, source=make_conspiracy_source("minimize"))
    from chsh_forge.core import chsh_expression

    assert chsh_expression(filtered_correlations(tmin)) < chsh_expression(full_table_correlations(tmin))


def test_unknown_names():
    with pytest.raises(InvalidParameterError, match="valid: deterministic"):
        build_model("nope")
    with pytest.raises(InvalidParameterError):
        build_model("memory", rule="other")
    with pytest.raises(InvalidParameterError):
        build_source("coin")


def test_optimal_angles():
    m = make_quantum_singlet(*CHSH_OPTIMAL_ANGLES)
    c = m.correlations
    assert abs(c[Setting.AB_PRIME] + c[Setting.A_PRIME_B_PRIME] + c[Setting.A_PRIME_B] - c[Setting.AB]) == \
        pytest.approx(2 * math.sqrt(2))
