"""Running experiments and building potential-outcome tables."""

from __future__ import annotations

import csv
import enum
import io
import json
import os
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .core import (
    COLUMNS, SETTINGS, CorrelationSet, OutcomeTable, Setting, Wing, mean_product,
)
from .errors import (
    ContractBreach, EmptySampleError, InvalidParameterError, MissingSettingError,
    SettingLeakageError, TableFormatError,
)
from .models import HVModel, History, RealizedTrial, SettingSource, TrialContext
from .rng import RandomStreams


class EventKind(enum.Enum):
    MESSAGE = "Message"
    SETTING_CHOSEN = "SettingChosen"
    MEASUREMENT_A = "MeasurementA"
    MEASUREMENT_B = "MeasurementB"
    RECORDED = "Recorded"


_PHASES = (EventKind.SETTING_CHOSEN, EventKind.MEASUREMENT_A, EventKind.MEASUREMENT_B, EventKind.RECORDED)


@dataclass(frozen=True)
class TrialEvent:
    kind: EventKind
    payload: Any
    sequence_number: int


@dataclass(frozen=True)
class TrialEventLog:
    trial: int
    events: tuple[TrialEvent, ...]

    def kinds(self) -> list[EventKind]:
        return [e.kind for e in self.events]


@dataclass(frozen=True)
class LifecycleReport:
    ok: bool
    violation: str | None = None
    sequence_number: int | None = None
    trial: int | None = None

    def __bool__(self):
        return self.ok


def _coerce_events(log) -> tuple[int | None, list[TrialEvent]]:
    if isinstance(log, TrialEventLog):
        return log.trial, list(log.events)
    events = []
    for i, e in enumerate(log, start=1):
        if isinstance(e, TrialEvent):
            events.append(e)
        else:
            events.append(TrialEvent(EventKind(e.value if isinstance(e, EventKind) else e), None, i))
    return None, events


def validate_lifecycle(log) -> LifecycleReport:
    """Check one trial's event ordering.

    Accepts a :class:`TrialEventLog` or a plain sequence of event kinds
    (numbered 1, 2, ... in order).  Reports the first violation found.
    """
    trial, events = _coerce_events(log)
    if not events:
        raise InvalidParameterError("event log is empty")
    seen: set[EventKind] = set()
    for e in events:
        kind = e.kind
        if kind is EventKind.MESSAGE:
            if EventKind.SETTING_CHOSEN in seen:
                return LifecycleReport(False, "message-after-setting", e.sequence_number, trial)
            continue
        if kind in seen:
            return LifecycleReport(False, "duplicate-phase", e.sequence_number, trial)
        expected = _PHASES[len(seen)]
        if kind is not expected and not (
            kind in (EventKind.MEASUREMENT_A, EventKind.MEASUREMENT_B)
            and expected in (EventKind.MEASUREMENT_A, EventKind.MEASUREMENT_B)
        ):
            return LifecycleReport(False, "out-of-order", e.sequence_number, trial)
        seen.add(kind)
    if len(seen) != len(_PHASES):
        return LifecycleReport(False, "incomplete-trial", events[-1].sequence_number, trial)
    return LifecycleReport(True, trial=trial)


def _trial_log(t, messages, setting, oa, ob, late=()) -> TrialEventLog:
    events = []
    seq = 0
    for m in messages:
        seq += 1
        events.append(TrialEvent(EventKind.MESSAGE, m, seq))
    for kind, payload in ((EventKind.SETTING_CHOSEN, setting),
                          (EventKind.MEASUREMENT_A, oa),
                          (EventKind.MEASUREMENT_B, ob)):
        seq += 1
        events.append(TrialEvent(kind, payload, seq))
    for m in late:
        seq += 1
        events.append(TrialEvent(EventKind.MESSAGE, m, seq))
    events.append(TrialEvent(EventKind.RECORDED, t, seq + 1))
    return TrialEventLog(t, tuple(events))


class EventLogs(Sequence):
    """Event logs of a vectorised run, materialised per trial on access."""

    def __init__(self, table: OutcomeTable, messages=None):
        self._table = table
        self._messages = messages

    def __len__(self):
        return len(self._table)

    def __getitem__(self, t):
        if isinstance(t, slice):
            return [self[i] for i in range(*t.indices(len(self)))]
        if t < 0:
            t += len(self)
        if not 0 <= t < len(self):
            raise IndexError(t)
        s = Setting(int(self._table.settings[t]))
        ca, cb = s.columns
        msgs = self._messages[t] if self._messages is not None else ()
        return _trial_log(t, msgs, s, float(self._table.column(ca)[t]), float(self._table.column(cb)[t]))


@dataclass
class RunConfig:
    n_trials: int
    seed: int
    model: HVModel
    source: SettingSource

    def __post_init__(self):
        if int(self.n_trials) < 1:
            raise InvalidParameterError("n_trials must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidParameterError("seed must be an unsigned 64-bit integer")
        self.n_trials = int(self.n_trials)
        self.seed = int(self.seed)


def _check_value(model: HVModel, v: float) -> float:
    if not -1.0 <= v <= 1.0 or (model.dichotomic and v not in (1.0, -1.0)):
        raise ContractBreach(f"{model.name} emitted outcome {v!r}")
    return v


def _check_block(model: HVModel, outcomes: np.ndarray):
    bad = np.abs(outcomes) != 1.0 if model.dichotomic else np.abs(outcomes) > 1.0
    if np.any(bad):
        t, k = np.argwhere(bad)[0]
        raise ContractBreach(f"{model.name} emitted outcome {outcomes[t, k]!r} at trial {t}, column {COLUMNS[k]}")


def _run_lifecycle(config: RunConfig, streams: RandomStreams):
    model, source = config.model, config.source
    n = config.n_trials
    realized: list[RealizedTrial] = []
    history = History(realized)
    outcomes = np.empty((n, 8))
    settings = np.empty(n, dtype=np.int64)
    logs = []
    for t in range(n):
        r = streams.trial(t)
        messages = tuple(model.communicate(TrialContext(t, history)))
        ctx = TrialContext(t, history, messages)
        row = [0.0] * 8
        for s in SETTINGS:
            x, y = s.observables
            k = s - 1
            ms = model.draw_microstate(ctx, s, r.microstate)
            b = model.sample_outcome(Wing.B, ms, ctx, y, x, None, float(r.outcome_b[k]))
            _check_value(model, b)
            a = model.sample_outcome(Wing.A, ms, ctx, x, y, b, float(r.outcome_a[k]))
            _check_value(model, a)
            row[2 * k], row[2 * k + 1] = a, b
        s = Setting(int(source.choose(t, r.setting, tuple(row) if source.peeks else None)))
        done = RealizedTrial(s, row[2 * (s - 1)], row[2 * (s - 1) + 1])
        late = tuple(model.acknowledge(ctx, done))
        log = _trial_log(t, messages, s, done.outcome_a, done.outcome_b, late)
        report = validate_lifecycle(log)
        if not report:
            exc = SettingLeakageError if report.violation == "message-after-setting" else ContractBreach
            raise exc(f"trial {t}: {report.violation} at sequence {report.sequence_number}")
        realized.append(done)
        outcomes[t] = row
        settings[t] = s
        logs.append(log)
    return OutcomeTable(outcomes, settings), logs


def run_experiment(config: RunConfig, reference: bool = False):
    """Run ``config`` and return ``(OutcomeTable, event logs)``.

    Per trial: communication, four microstates with both potential outcomes
    each, setting choice, then recording of the realized pair into the
    model-visible history.  Models with a vectorised ``simulate`` use it
    unless ``reference`` is set, which forces the per-trial lifecycle.
    """
    model = config.model
    model.reset()
    streams = RandomStreams(config.seed, config.n_trials, model.microstate_width)
    sim = None if reference else model.simulate(streams, config.source)
    if sim is None:
        return _run_lifecycle(config, streams)
    _check_block(model, sim.outcomes)
    table = OutcomeTable(sim.outcomes, sim.settings)
    return table, EventLogs(table, sim.messages)


def _pairs(table: OutcomeTable, s: Setting, mask=None):
    ca, cb = s.columns
    x, y = table.column(ca), table.column(cb)
    if mask is not None:
        x, y = x[mask], y[mask]
    return x, y


def filtered_correlations(table: OutcomeTable) -> CorrelationSet:
    """Each correlation from its own setting's rows and columns only."""
    values = {}
    for s in SETTINGS:
        mask = table.settings == s
        if not mask.any():
            raise MissingSettingError(str(int(s)), setting=int(s))
        values[s] = mean_product(*_pairs(table, s, mask))
    return CorrelationSet.from_settings(values)


def full_table_correlations(table: OutcomeTable) -> CorrelationSet:
    """Same column pairs as :func:`filtered_correlations`, averaged over every row."""
    if len(table) == 0:
        raise EmptySampleError()
    return CorrelationSet.from_settings({s: mean_product(*_pairs(table, s)) for s in SETTINGS})


# ---------------------------------------------------------------- CSV

TABLE_HEADER = ("trial", "A1", "B1", "A2", "Bp2", "Ap3", "B3", "Ap4", "Bp4", "S")


def format_value(v: float, dichotomic: bool) -> str:
    return str(int(v)) if dichotomic else repr(float(v))


def _open(target, mode):
    if hasattr(target, "write") or hasattr(target, "read"):
        return target, False
    return open(os.fspath(target), mode, newline=""), True


def write_table_csv(table: OutcomeTable, target) -> None:
    fh, close = _open(target, "w")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_HEADER)
        d = table.dichotomic
        for t, (vals, s) in enumerate(zip(table.outcomes.tolist(), table.settings.tolist())):
            w.writerow([t, *(format_value(v, d) for v in vals), s])
    finally:
        if close:
            fh.close()


def table_to_csv(table: OutcomeTable) -> str:
    buf = io.StringIO()
    write_table_csv(table, buf)
    return buf.getvalue()


def _parse_value(text: str, row: int, column: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise TableFormatError(f"row {row}, column {column}: not a number: {text!r}",
                               row=row, column=column) from None
    if not -1.0 <= v <= 1.0:
        raise TableFormatError(f"row {row}, column {column}: |{v}| > 1", row=row, column=column)
    return v


def read_csv_rows(target, header: Sequence[str]):
    """Parse a CSV with an exact ``header``; yields lists of cell strings.

    Line numbers in errors count the header as row 1.
    """
    fh, close = _open(target, "r")
    try:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise TableFormatError("empty file", row=1) from None
        got = [h.strip() for h in got]
        for i, expected in enumerate(header):
            if i >= len(got) or got[i] != expected:
                name = got[i] if i < len(got) else "<missing>"
                raise TableFormatError(f"row 1, column {i + 1}: header {name!r}, expected {expected!r}",
                                       row=1, column=name)
        if len(got) != len(header):
            raise TableFormatError(f"row 1: unexpected extra column {got[len(header)]!r}",
                                   row=1, column=got[len(header)])
        rows = []
        for lineno, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(header):
                raise TableFormatError(f"row {lineno}: {len(cells)} cells, expected {len(header)}",
                                       row=lineno)
            rows.append((lineno, [c.strip() for c in cells]))
        return rows
    finally:
        if close:
            fh.close()


def read_table_csv(target) -> OutcomeTable:
    rows = read_csv_rows(target, TABLE_HEADER)
    outcomes, settings = [], []
    for i, (lineno, cells) in enumerate(rows):
        if cells[0] != str(i):
            raise TableFormatError(f"row {lineno}, column trial: expected {i}, got {cells[0]!r}",
                                   row=lineno, column="trial")
        outcomes.append([_parse_value(c, lineno, name) for c, name in zip(cells[1:9], TABLE_HEADER[1:9])])
        if cells[9] not in ("1", "2", "3", "4"):
            raise TableFormatError(f"row {lineno}, column S: {cells[9]!r} not in 1..4",
                                   row=lineno, column="S")
        settings.append(int(cells[9]))
    if not outcomes:
        raise TableFormatError("table has no rows", row=2)
    return OutcomeTable(np.array(outcomes, dtype=float), settings)


def table_from_csv(text: str) -> OutcomeTable:
    return read_table_csv(io.StringIO(text))


# ---------------------------------------------------------------- event logs

def write_event_log(logs: Iterable[TrialEventLog], target) -> None:
    """Line-delimited JSON, one record per event: ``{"trial", "seq", "kind"}``."""
    fh, close = _open(target, "w")
    try:
        for log in logs:
            for e in log.events:
                fh.write(json.dumps({"trial": log.trial, "seq": e.sequence_number, "kind": e.kind.value}) + "\n")
    finally:
        if close:
            fh.close()


def read_event_log(target) -> list[TrialEventLog]:
    fh, close = _open(target, "r")
    try:
        by_trial: dict[int, list[TrialEvent]] = {}
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                by_trial.setdefault(rec["trial"], []).append(
                    TrialEvent(EventKind(rec["kind"]), None, rec["seq"]))
        return [TrialEventLog(t, tuple(ev)) for t, ev in sorted(by_trial.items())]
    finally:
        if close:
            fh.close()
