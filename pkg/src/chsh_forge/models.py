"""Hidden-variable models and setting sources.

Every model implements the :class:`HVModel` contract, which the tabulator
drives one trial at a time:

1. ``communicate(context)`` -- classical messages for this trial, sent
   before the setting is chosen;
2. ``draw_microstate(context, setting, u)`` for each of the four settings;
3. ``sample_outcome(...)`` for wing B, then wing A (so models that violate
   outcome independence can condition A on B's outcome);
4. ``acknowledge(context, realized)`` once the realized pair is known.
   Messages returned here come after the setting choice and are leakage.

Models may also provide ``simulate``, a vectorised equivalent of the loop
above.  It must reproduce the per-trial lifecycle bit for bit; the test
suite checks this for each bundled model.
"""

from __future__ import annotations

import abc
import enum
import inspect
import math
from dataclasses import dataclass
from typing import Any, Callable, Mapping, NamedTuple, Sequence

import numpy as np

from .core import AssumptionProfile, Observable, Setting, SETTINGS, Wing
from .errors import (
    ContractBreach,
    InvalidParameterError,
    InvalidStrategyError,
    LocalityBreachError,
)

U, P = Observable.UNPRIMED, Observable.PRIMED

# (A, A', B, B') outcome assignments
ALL_STRATEGIES = tuple(
    (a, ap, b, bp)
    for a in (1, -1) for ap in (1, -1) for b in (1, -1) for bp in (1, -1)
)
# strategies with <AB'> + <A'B'> + <A'B> - <AB> = +2
SATURATING_STRATEGIES = tuple(
    s for s in ALL_STRATEGIES if s[0] * s[3] + s[1] * s[3] + s[1] * s[2] - s[0] * s[2] == 2
)

# a, a', b, b' analyser angles reaching |CHSH| = 2*sqrt(2) when E(x, y) = -cos(x - y)
CHSH_OPTIMAL_ANGLES = (0.0, -math.pi / 2, math.pi / 4, 3 * math.pi / 4)


class Sender(enum.Enum):
    WING_A = "WingA"
    WING_B = "WingB"
    SOURCE = "Source"


@dataclass(frozen=True)
class ClassicalMessage:
    sender: Sender
    body: Any
    sequence_number: int


class RealizedTrial(NamedTuple):
    setting: Setting
    outcome_a: float
    outcome_b: float


@dataclass(frozen=True)
class Microstate:
    payload: Any
    label: str = ""


@dataclass(frozen=True)
class TrialContext:
    time_index: int
    history: Sequence[RealizedTrial] = ()
    messages: tuple[ClassicalMessage, ...] = ()


class History(Sequence):
    """Read-only view of the realized trials of a run in progress."""

    __slots__ = ("_items",)

    def __init__(self, items: list):
        self._items = items

    def __getitem__(self, i):
        return self._items[i]

    def __len__(self):
        return len(self._items)


@dataclass(frozen=True)
class ModelProfile:
    assumptions: AssumptionProfile
    dichotomic: bool = True


@dataclass
class Simulation:
    """Bulk output of a vectorised run."""

    outcomes: np.ndarray
    settings: np.ndarray
    messages: list | None = None


def _sample(u: float, p: float) -> float:
    return 1.0 if u < p else -1.0


class HVModel(abc.ABC):
    name = "model"
    microstate_width = 1
    assumptions = AssumptionProfile()
    dichotomic = True

    def profile(self) -> ModelProfile:
        return ModelProfile(self.assumptions, self.dichotomic)

    def reset(self) -> None:
        """Forget any state from a previous run."""

    def communicate(self, context: TrialContext) -> Sequence[ClassicalMessage]:
        return ()

    @abc.abstractmethod
    def draw_microstate(self, context: TrialContext, setting: Setting, randomness) -> Microstate:
        ...

    @abc.abstractmethod
    def outcome_probability(self, wing: Wing, microstate: Microstate, context: TrialContext,
                            local_observable: Observable,
                            remote_observable: Observable | None = None,
                            remote_outcome: float | None = None) -> float:
        """Probability of outcome +1."""

    def sample_outcome(self, wing, microstate, context, local_observable,
                       remote_observable, remote_outcome, u: float) -> float:
        p = self.outcome_probability(wing, microstate, context, local_observable,
                                     remote_observable, remote_outcome)
        return _sample(u, p)

    def acknowledge(self, context: TrialContext, realized: RealizedTrial) -> Sequence[ClassicalMessage]:
        return ()

    def simulate(self, streams, source) -> Simulation | None:
        """Vectorised run, or ``None`` to use the per-trial lifecycle."""
        return None

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


def _independent_wings(p_a: np.ndarray, p_b: np.ndarray, ua: np.ndarray, ub: np.ndarray) -> np.ndarray:
    """Octuples for models whose wings sample independently.

    ``p_a[:, 0]`` / ``p_a[:, 1]`` are wing-A probabilities of +1 for the
    unprimed / primed observable, likewise ``p_b``.
    """
    n = p_a.shape[0]
    out = np.empty((n, 8))
    for s in SETTINGS:
        x, y = s.observables
        k = s - 1
        out[:, 2 * k] = np.where(ua[:, k] < p_a[:, int(x is P)], 1.0, -1.0)
        out[:, 2 * k + 1] = np.where(ub[:, k] < p_b[:, int(y is P)], 1.0, -1.0)
    return out


def _choose_block(source, streams, outcomes):
    return np.asarray(source.choose_block(streams.setting, outcomes if source.peeks else None),
                      dtype=np.int64)


def _validate_strategy(q) -> tuple[int, int, int, int]:
    q = tuple(q)
    if len(q) != 4 or any(v not in (1, -1) for v in q):
        raise InvalidStrategyError(f"strategy outputs must be four values in {{-1, +1}}, got {q!r}")
    return tuple(int(v) for v in q)


_OBS_SLOT = {(Wing.A, U): 0, (Wing.A, P): 1, (Wing.B, U): 2, (Wing.B, P): 3}


class DeterministicLocal(HVModel):
    """Outcomes fixed by a hidden strategy (A, A', B, B').

    The strategy is either a function of ``time_index mod period`` or, when
    ``periodic`` is false, drawn uniformly from ``strategies`` each trial.
    """

    name = "deterministic"

    def __init__(self, strategies, periodic: bool):
        self.strategies = tuple(_validate_strategy(q) for q in strategies)
        if not self.strategies:
            raise InvalidStrategyError("at least one strategy is required")
        self.periodic = periodic
        self._table = np.array(self.strategies, dtype=float)

    def _index(self, t: int, u: float) -> int:
        if self.periodic:
            return t % len(self.strategies)
        return int(u * len(self.strategies))

    def draw_microstate(self, context, setting, randomness):
        i = self._index(context.time_index, float(randomness[0]))
        return Microstate(self.strategies[i], label=f"strategy={i}")

    def outcome_probability(self, wing, microstate, context, local_observable,
                            remote_observable=None, remote_outcome=None):
        return 1.0 if microstate.payload[_OBS_SLOT[wing, local_observable]] > 0 else 0.0

    def simulate(self, streams, source):
        n = streams.n
        if self.periodic:
            idx = np.arange(n) % len(self.strategies)
        else:
            idx = (streams.microstate[:, 0] * len(self.strategies)).astype(np.int64)
        q = self._table[idx]
        probs = np.where(q > 0, 1.0, 0.0)
        out = _independent_wings(probs[:, :2], probs[:, 2:], streams.outcome_a, streams.outcome_b)
        return Simulation(out, _choose_block(source, streams, out))


def make_deterministic_local(strategy=None, period: int | None = None, strategies=None) -> DeterministicLocal:
    """Deterministic local model.

    ``strategy`` may be a single (A, A', B, B') quadruple, a sequence of
    quadruples indexed by ``time_index mod len``, or a callable of the phase
    ``time_index mod period``.  With no ``strategy`` the hidden variable is a
    uniform draw over ``strategies`` (default: all 16) on every trial.
    """
    if strategy is None:
        return DeterministicLocal(ALL_STRATEGIES if strategies is None else strategies, periodic=False)
    if callable(strategy):
        if period is None or period < 1:
            raise InvalidParameterError("a callable strategy needs period >= 1")
        table = [strategy(phase) for phase in range(period)]
    else:
        seq = list(strategy)
        table = [seq] if seq and not isinstance(seq[0], (Sequence, np.ndarray)) else seq
        if period is not None and period != len(table):
            raise InvalidParameterError(f"period {period} does not match {len(table)} strategies")
    return DeterministicLocal(table, periodic=True)


_REMOTE_NAMES = {"remote", "remote_observable", "remote_outcome", "remote_setting"}


def _reject_remote_parameters(fn, what: str, max_positional: int):
    try:
        params = inspect.signature(fn).parameters
    except (TypeError, ValueError):
        return
    if _REMOTE_NAMES & set(params):
        raise LocalityBreachError(f"{what} takes {sorted(_REMOTE_NAMES & set(params))}")
    required = [p for p in params.values()
                if p.default is p.empty and p.kind in (p.POSITIONAL_ONLY, p.POSITIONAL_OR_KEYWORD)]
    if len(required) > max_positional:
        raise LocalityBreachError(
            f"{what} requires {len(required)} arguments; local rules see only {max_positional}")


_LOCAL_KEYS = ("A", "A'", "B", "B'")


def _normalise_probs(probs) -> tuple[float, float, float, float]:
    if isinstance(probs, Mapping):
        bad = [k for k in probs if k not in _LOCAL_KEYS]
        if bad:
            raise LocalityBreachError(f"probabilities keyed by non-local observables {bad!r}")
        probs = tuple(probs[k] for k in _LOCAL_KEYS)
    probs = tuple(float(p) for p in probs)
    if len(probs) != 4:
        raise ContractBreach("update rule must give four probabilities (A, A', B, B')")
    for p in probs:
        if not 0.0 <= p <= 1.0:
            raise ContractBreach(f"probability {p} outside [0, 1]")
    return probs


class MemoryLocal(HVModel):
    """Local model whose outcome probabilities evolve with realized history.

    ``update_rule(prev, state, lam)`` is called once per trial with the
    previous realized trial (``None`` on the first), the internal state and
    a fresh hidden variable ``lam`` uniform on [0, 1).  It returns the new
    state and the probabilities of +1 for (A, A', B, B').
    """

    name = "memory"

    def __init__(self, update_rule, initial_state=None):
        _reject_remote_parameters(update_rule, "update rule", 3)
        self.update_rule = update_rule
        self.initial_state = initial_state
        self.reset()

    def reset(self):
        self._t = -1
        self._state = self.initial_state
        self._probs = None
        self._checked = {}

    def _step(self, prev, state, lam):
        state, probs = self.update_rule(prev, state, lam)
        # rules typically return the same few tuples; validate each object once
        hit = self._checked.get(id(probs))
        if hit is not None and hit[0] is probs:
            return state, hit[1]
        clean = _normalise_probs(probs)
        if len(self._checked) < 4096:
            self._checked[id(probs)] = (probs, clean)
        return state, clean

    def draw_microstate(self, context, setting, randomness):
        t = context.time_index
        if t != self._t:
            if t == 0:
                self.reset()
            elif t != self._t + 1:
                raise ContractBreach(f"memory model driven out of order: trial {t} after {self._t}")
            prev = context.history[-1] if len(context.history) else None
            self._state, self._probs = self._step(prev, self._state, float(randomness[0]))
            self._t = t
        return Microstate((self._state, self._probs), label=f"state={self._state!r}")

    def outcome_probability(self, wing, microstate, context, local_observable,
                            remote_observable=None, remote_outcome=None):
        return microstate.payload[1][_OBS_SLOT[wing, local_observable]]

    def simulate(self, streams, source):
        n = streams.n
        lam = streams.microstate[:, 0].tolist()
        ua = streams.outcome_a.tolist()
        ub = streams.outcome_b.tolist()
        u_set = streams.setting.tolist()
        fixed = None if source.peeks else np.asarray(source.choose_block(streams.setting, None)).tolist()
        rows = [None] * n
        settings = [0] * n
        self.reset()
        state, prev = self.initial_state, None
        for t in range(n):
            state, (pa, pap, pb, pbp) = self._step(prev, state, lam[t])
            a, b = ua[t], ub[t]
            row = (
                1.0 if a[0] < pa else -1.0, 1.0 if b[0] < pb else -1.0,
                1.0 if a[1] < pa else -1.0, 1.0 if b[1] < pbp else -1.0,
                1.0 if a[2] < pap else -1.0, 1.0 if b[2] < pb else -1.0,
                1.0 if a[3] < pap else -1.0, 1.0 if b[3] < pbp else -1.0,
            )
            s = fixed[t] if fixed is not None else int(source.choose(t, u_set[t], row))
            k = 2 * (s - 1)
            prev = RealizedTrial(SETTINGS[s - 1], row[k], row[k + 1])
            rows[t] = row
            settings[t] = s
        self._t, self._state = n - 1, state
        return Simulation(np.array(rows, dtype=float).reshape(n, 8), np.array(settings, dtype=np.int64))


def make_memory_local(update_rule, initial_state=None) -> MemoryLocal:
    return MemoryLocal(update_rule, initial_state)


def noisy_strategy_rule(noise: float = 0.05, strategies=SATURATING_STRATEGIES):
    """History-free rule: ``lam`` picks a strategy, each outcome flips with prob ``noise``."""
    strategies = tuple(_validate_strategy(q) for q in strategies)
    hi, lo = 1.0 - noise, float(noise)
    table = [tuple(hi if v > 0 else lo for v in q) for q in strategies]
    k = len(table)

    def rule(prev, state, lam):
        return state, table[int(lam * k)]

    return rule


def bias_flip_rule(low: float = 0.02, high: float = 0.12, strategies=SATURATING_STRATEGIES):
    """Noise level toggles between ``low`` and ``high`` after every trial with outcome_a = +1."""
    strategies = tuple(_validate_strategy(q) for q in strategies)
    tables = [[tuple(1.0 - e if v > 0 else e for v in q) for q in strategies] for e in (low, high)]
    k = len(strategies)

    def rule(prev, state, lam):
        if prev is not None and prev.outcome_a == 1.0:
            state = 1 - state
        return state, tables[state][int(lam * k)]

    return rule


class ClockedLocal(HVModel):
    """Time-dependent, setting-dependent local model with synchronised clocks.

    A hidden strategy (A, A', B, B') is drawn per trial.  Wing A's device,
    measuring observable ``x`` at time ``t``, reproduces the strategy value
    with fidelity ``phase_a(t mod period, x)``; wing B likewise.  The
    source broadcasts the clock phase to both wings before each trial.
    """

    name = "clocked"

    def __init__(self, phase_a, phase_b, period: int, strategies=SATURATING_STRATEGIES):
        if period < 1:
            raise InvalidParameterError("period must be >= 1")
        _reject_remote_parameters(phase_a, "wing-A phase function", 2)
        _reject_remote_parameters(phase_b, "wing-B phase function", 2)
        self.period = int(period)
        self.strategies = tuple(_validate_strategy(q) for q in strategies)
        self._table = np.array(self.strategies, dtype=float)
        fid = np.empty((self.period, 4))
        for t in range(self.period):
            fid[t] = (phase_a(t, U), phase_a(t, P), phase_b(t, U), phase_b(t, P))
        if not np.all((fid >= 0.0) & (fid <= 1.0)):
            raise InvalidParameterError("phase functions must return fidelities in [0, 1]")
        self._fidelity = fid

    def communicate(self, context):
        return (ClassicalMessage(Sender.SOURCE, {"tick": context.time_index % self.period}, 1),)

    def draw_microstate(self, context, setting, randomness):
        x, y = setting.observables
        i = int(float(randomness[0]) * len(self.strategies))
        f = self._fidelity[context.time_index % self.period]
        devices = (float(f[int(x is P)]), float(f[2 + int(y is P)]))
        return Microstate((self.strategies[i], devices), label=f"strategy={i};devices={devices}")

    def outcome_probability(self, wing, microstate, context, local_observable,
                            remote_observable=None, remote_outcome=None):
        strategy, devices = microstate.payload
        f = devices[0] if wing is Wing.A else devices[1]
        return f if strategy[_OBS_SLOT[wing, local_observable]] > 0 else 1.0 - f

    def simulate(self, streams, source):
        n = streams.n
        idx = (streams.microstate[:, 0] * len(self.strategies)).astype(np.int64)
        q = self._table[idx]
        f = self._fidelity[np.arange(n) % self.period]
        probs = np.where(q > 0, f, 1.0 - f)
        out = _independent_wings(probs[:, :2], probs[:, 2:], streams.outcome_a, streams.outcome_b)
        return Simulation(out, _choose_block(source, streams, out), _Ticks(self, n))


class _Ticks(Sequence):
    """Per-trial clock messages of a vectorised clocked run, built on access."""

    def __init__(self, model: ClockedLocal, n: int):
        self._model = model
        self._n = n

    def __len__(self):
        return self._n

    def __getitem__(self, t):
        return tuple(self._model.communicate(TrialContext(t)))


def make_time_dependent_local(phase_a, phase_b, period: int, strategies=SATURATING_STRATEGIES) -> ClockedLocal:
    """``phase_w(time_index, local_observable) -> fidelity`` for each wing."""
    return ClockedLocal(phase_a, phase_b, period, strategies)


def default_clock(t, observable, offset=0.0, period=7, amplitude=0.1, base=0.85):
    """Fidelity ``base + amplitude * cos(2 pi t / period + phase)``."""
    phase = offset + (math.pi / 3 if observable is P else 0.0)
    return base + amplitude * math.cos(2 * math.pi * t / period + phase)


class _JointBox(HVModel):
    """Two-stage sampler for models with fixed per-setting correlation E.

    B is a fair coin; A then agrees with B with probability (1 + E) / 2.
    Marginals are uniform, so the model is no-signaling, but A depends on
    B's outcome.
    """

    assumptions = AssumptionProfile(True, True, False)

    def __init__(self, correlations: Mapping[Setting, float]):
        self.correlations = {Setting(s): float(e) for s, e in correlations.items()}
        # P(A = +1 | b) for b = +1, -1
        self._cond = {s: ((1.0 + e) / 2.0, (1.0 - e) / 2.0) for s, e in self.correlations.items()}

    def draw_microstate(self, context, setting, randomness):
        return Microstate(None, label=self.name)

    def outcome_probability(self, wing, microstate, context, local_observable,
                            remote_observable=None, remote_outcome=None):
        if wing is Wing.B or remote_observable is None or remote_outcome is None:
            return 0.5
        s = Setting.from_observables(local_observable, remote_observable)
        plus, minus = self._cond[s]
        return plus if remote_outcome > 0 else minus

    def simulate(self, streams, source):
        ua, ub = streams.outcome_a, streams.outcome_b
        out = np.empty((streams.n, 8))
        for s in SETTINGS:
            k = s - 1
            b = np.where(ub[:, k] < 0.5, 1.0, -1.0)
            plus, minus = self._cond[s]
            p = np.where(b > 0, plus, minus)
            out[:, 2 * k] = np.where(ua[:, k] < p, 1.0, -1.0)
            out[:, 2 * k + 1] = b
        return Simulation(out, _choose_block(source, streams, out))


class QuantumSinglet(_JointBox):
    name = "singlet"

    def __init__(self, angle_a, angle_ap, angle_b, angle_bp):
        self.angles = tuple(float(v) for v in (angle_a, angle_ap, angle_b, angle_bp))
        if not all(math.isfinite(v) for v in self.angles):
            raise InvalidParameterError("angles must be finite")
        a, ap, b, bp = self.angles
        ax = {U: a, P: ap}
        bx = {U: b, P: bp}
        super().__init__({s: -math.cos(ax[s.observables[0]] - bx[s.observables[1]]) for s in SETTINGS})


def make_quantum_singlet(angle_a=CHSH_OPTIMAL_ANGLES[0], angle_ap=CHSH_OPTIMAL_ANGLES[1],
                         angle_b=CHSH_OPTIMAL_ANGLES[2], angle_bp=CHSH_OPTIMAL_ANGLES[3]) -> QuantumSinglet:
    """Singlet correlation oracle: E(x, y) = -cos(x - y), uniform marginals."""
    return QuantumSinglet(angle_a, angle_ap, angle_b, angle_bp)


class PRBox(_JointBox):
    name = "prbox"

    def __init__(self):
        super().__init__({s: (-1.0 if s is Setting.AB else 1.0) for s in SETTINGS})


def make_pr_box() -> PRBox:
    return PRBox()


class SignalingModel(HVModel):
    """Wing A's bias follows wing B's observable choice.

    P(A = +1) = 1/2 + leak/2 when B measures B, 1/2 - leak/2 when B
    measures B'; wing B is a fair coin.
    """

    name = "signaling"
    assumptions = AssumptionProfile(True, False, True)

    def __init__(self, leak_strength: float):
        leak_strength = float(leak_strength)
        if not 0.0 <= leak_strength <= 1.0:
            raise InvalidParameterError("leak_strength must lie in [0, 1]")
        self.leak_strength = leak_strength
        self._p = {U: 0.5 + leak_strength / 2.0, P: 0.5 - leak_strength / 2.0}

    def draw_microstate(self, context, setting, randomness):
        return Microstate(None, label="signaling")

    def outcome_probability(self, wing, microstate, context, local_observable,
                            remote_observable=None, remote_outcome=None):
        if wing is Wing.B or remote_observable is None:
            return 0.5
        return self._p[remote_observable]

    def simulate(self, streams, source):
        n = streams.n
        out = np.empty((n, 8))
        for s in SETTINGS:
            k = s - 1
            y = s.observables[1]
            out[:, 2 * k] = np.where(streams.outcome_a[:, k] < self._p[y], 1.0, -1.0)
            out[:, 2 * k + 1] = np.where(streams.outcome_b[:, k] < 0.5, 1.0, -1.0)
        return Simulation(out, _choose_block(source, streams, out))


def make_signaling_model(leak_strength: float) -> SignalingModel:
    return SignalingModel(leak_strength)


# ---------------------------------------------------------------- sources

class SettingSource(abc.ABC):
    name = "source"
    no_conspiracy = True
    peeks = False

    @abc.abstractmethod
    def choose(self, trial_index: int, u: float, peek=None) -> Setting:
        """Pick the setting from uniform ``u``; ``peek`` holds the eight potential outcomes."""

    def choose_block(self, u, octuples=None) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if octuples is None:
            return np.array([int(self.choose(t, v)) for t, v in enumerate(u.tolist())], dtype=np.int64)
        rows = np.asarray(octuples).tolist()
        return np.array([int(self.choose(t, v, rows[t])) for t, v in enumerate(u.tolist())],
                        dtype=np.int64)


def _uniform_setting(u: float) -> Setting:
    return Setting(1 + int(u * 4))


class UniformSource(SettingSource):
    name = "uniform"

    def choose(self, trial_index, u, peek=None):
        return _uniform_setting(u)

    def choose_block(self, u, octuples=None):
        return 1 + (np.asarray(u, dtype=float) * 4).astype(np.int64)


def make_uniform_source() -> UniformSource:
    return UniformSource()


class ConspiracySource(SettingSource):
    """Looks at the potential outcomes and selects a setting whose product
    has the sign that moves the filtered CHSH expression toward ``target``.

    Falls back to a uniform draw when no setting is favourable or when no
    outcomes are visible.
    """

    no_conspiracy = False
    peeks = True

    def __init__(self, target: str = "maximize"):
        if target not in ("maximize", "minimize"):
            raise InvalidParameterError("target must be 'maximize' or 'minimize'")
        self.target = target
        self.name = "conspiracy:" + ("max" if target == "maximize" else "min")
        sign = 1.0 if target == "maximize" else -1.0
        self._want = np.array([-sign, sign, sign, sign])

    def choose(self, trial_index, u, peek=None):
        if peek is None:
            return _uniform_setting(u)
        favourable = [s for s in SETTINGS if peek[2 * (s - 1)] * peek[2 * s - 1] * self._want[s - 1] > 0]
        if not favourable:
            return _uniform_setting(u)
        return favourable[int(u * len(favourable))]

    def choose_block(self, u, octuples=None):
        u = np.asarray(u, dtype=float)
        uniform = 1 + (u * 4).astype(np.int64)
        if octuples is None:
            return uniform
        oct_ = np.asarray(octuples, dtype=float)
        fav = oct_[:, 0::2] * oct_[:, 1::2] * self._want > 0
        counts = fav.sum(axis=1)
        k = (u * counts).astype(np.int64)
        rank = np.cumsum(fav, axis=1) - 1
        pick = np.argmax(fav & (rank == k[:, None]), axis=1) + 1
        return np.where(counts > 0, pick, uniform).astype(np.int64)


def make_conspiracy_source(target: str = "maximize") -> ConspiracySource:
    return ConspiracySource(target)


class Blindfolded(SettingSource):
    """Wraps a source so it never sees the potential outcomes."""

    def __init__(self, inner: SettingSource):
        self.inner = inner
        self.name = f"blind({inner.name})"
        self.no_conspiracy = True

    def choose(self, trial_index, u, peek=None):
        return self.inner.choose(trial_index, u, None)

    def choose_block(self, u, octuples=None):
        return self.inner.choose_block(u, None)


def blindfold(source: SettingSource) -> Blindfolded:
    return Blindfolded(source)


def build_source(spec: str) -> SettingSource:
    if spec == "uniform":
        return make_uniform_source()
    if spec in ("conspiracy:max", "conspiracy:maximize"):
        return make_conspiracy_source("maximize")
    if spec in ("conspiracy:min", "conspiracy:minimize"):
        return make_conspiracy_source("minimize")
    raise InvalidParameterError(f"unknown source {spec!r}; valid: uniform, conspiracy:max, conspiracy:min")


# ---------------------------------------------------------------- registry

def _deterministic(family="saturating"):
    if family not in ("saturating", "all"):
        raise InvalidParameterError("family must be 'saturating' or 'all'")
    return make_deterministic_local(strategies=SATURATING_STRATEGIES if family == "saturating" else ALL_STRATEGIES)


def _memory(rule="bias-flip", noise=0.05, low=0.02, high=0.12):
    if rule == "bias-flip":
        return make_memory_local(bias_flip_rule(float(low), float(high)), initial_state=0)
    if rule == "trivial":
        return make_memory_local(noisy_strategy_rule(float(noise)), initial_state=None)
    raise InvalidParameterError("rule must be 'bias-flip' or 'trivial'")


def _clocked(period=7, amplitude=0.1, base=0.85):
    period, amplitude, base = int(period), float(amplitude), float(base)
    return make_time_dependent_local(
        lambda t, obs: default_clock(t, obs, 0.0, period, amplitude, base),
        lambda t, obs: default_clock(t, obs, math.pi / 5, period, amplitude, base),
        period,
    )


def _singlet(a=CHSH_OPTIMAL_ANGLES[0], ap=CHSH_OPTIMAL_ANGLES[1],
             b=CHSH_OPTIMAL_ANGLES[2], bp=CHSH_OPTIMAL_ANGLES[3]):
    return make_quantum_singlet(float(a), float(ap), float(b), float(bp))


def _signaling(leak=0.5):
    return make_signaling_model(float(leak))


MODEL_FACTORIES: dict[str, Callable[..., HVModel]] = {
    "deterministic": _deterministic,
    "memory": _memory,
    "clocked": _clocked,
    "singlet": _singlet,
    "prbox": make_pr_box,
    "signaling": _signaling,
}
MODEL_NAMES = tuple(MODEL_FACTORIES)


def build_model(name: str, **params) -> HVModel:
    try:
        factory = MODEL_FACTORIES[name]
    except KeyError:
        raise InvalidParameterError(
            f"unknown model {name!r}; valid: {', '.join(MODEL_NAMES)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise InvalidParameterError(f"bad parameters for {name}: {exc}") from None
