"""Shared domain types and correlation arithmetic.

Table layout follows the potential-outcome convention used throughout the
package: setting 1 measures (A, B), setting 2 measures (A, B'), setting 3
measures (A', B) and setting 4 measures (A', B').  Each setting owns one
column pair of the eight-column table::

    a1 b1 | a2 bp2 | ap3 b3 | ap4 bp4

This module is the single authority for that mapping.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, asdict
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import EmptySampleError, InvalidParameterError, UnboundedValueError

COLUMNS = ("a1", "b1", "a2", "bp2", "ap3", "b3", "ap4", "bp4")
COLUMN_INDEX = {name: i for i, name in enumerate(COLUMNS)}


class Wing(enum.Enum):
    A = "A"
    B = "B"

    @property
    def other(self) -> "Wing":
        return Wing.B if self is Wing.A else Wing.A


class Observable(enum.Enum):
    UNPRIMED = "unprimed"
    PRIMED = "primed"


class Setting(enum.IntEnum):
    AB = 1
    AB_PRIME = 2
    A_PRIME_B = 3
    A_PRIME_B_PRIME = 4

    @property
    def observables(self) -> tuple[Observable, Observable]:
        """(wing-A observable, wing-B observable)."""
        return _SETTING_OBSERVABLES[self]

    @property
    def columns(self) -> tuple[str, str]:
        """(wing-A column, wing-B column) of this setting in an OutcomeTable."""
        return COLUMNS[2 * (self - 1)], COLUMNS[2 * (self - 1) + 1]

    @property
    def label(self) -> str:
        x, y = self.observables
        return "({},{})".format("A" if x is Observable.UNPRIMED else "A'",
                                "B" if y is Observable.UNPRIMED else "B'")

    @classmethod
    def from_observables(cls, x: Observable, y: Observable) -> "Setting":
        return _OBSERVABLES_SETTING[(x, y)]


_SETTING_OBSERVABLES = {
    Setting.AB: (Observable.UNPRIMED, Observable.UNPRIMED),
    Setting.AB_PRIME: (Observable.UNPRIMED, Observable.PRIMED),
    Setting.A_PRIME_B: (Observable.PRIMED, Observable.UNPRIMED),
    Setting.A_PRIME_B_PRIME: (Observable.PRIMED, Observable.PRIMED),
}
_OBSERVABLES_SETTING = {v: k for k, v in _SETTING_OBSERVABLES.items()}

SETTINGS = tuple(Setting)


def is_dichotomic(values) -> bool:
    arr = np.asarray(values, dtype=float)
    return bool(np.all(np.abs(arr) == 1.0))


def check_bounded(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.size and not np.all(np.abs(arr) <= 1.0):
        raise UnboundedValueError("outcome values must satisfy |v| <= 1")
    return arr


class TrialRow(NamedTuple):
    a1: float
    b1: float
    a2: float
    bp2: float
    ap3: float
    b3: float
    ap4: float
    bp4: float
    s: Setting
    trial_index: int

    def outcome(self, column: str) -> float:
        return self[COLUMN_INDEX[column]]


class OutcomeTable:
    """Potential-outcome table: eight outcome columns plus the setting column.

    Stored column-wise.  ``outcomes`` is an ``(n, 8)`` float array in
    :data:`COLUMNS` order and ``settings`` an ``(n,)`` integer array with
    values 1..4.  Row ``i`` has trial index ``i``.  Arrays are made
    read-only; transformations return new tables.
    """

    __slots__ = ("outcomes", "settings", "dichotomic")

    def __init__(self, outcomes, settings):
        out = np.array(outcomes, dtype=float, copy=True)
        if out.ndim != 2 or out.shape[1] != 8:
            raise InvalidParameterError("outcomes must have shape (n, 8)")
        check_bounded(out)
        s = np.array(settings, dtype=np.int64, copy=True)
        if s.shape != (out.shape[0],):
            raise InvalidParameterError("settings length must match the number of rows")
        if s.size and (s.min() < 1 or s.max() > 4):
            raise InvalidParameterError("settings must lie in 1..4")
        out.setflags(write=False)
        s.setflags(write=False)
        self.outcomes = out
        self.settings = s
        self.dichotomic = is_dichotomic(out)

    @classmethod
    def from_rows(cls, rows: Iterable[TrialRow | Sequence]) -> "OutcomeTable":
        rows = list(rows)
        outcomes = [tuple(r[:8]) for r in rows]
        settings = [int(r[8]) for r in rows]
        for i, r in enumerate(rows):
            if len(r) > 9 and int(r[9]) != i:
                raise InvalidParameterError(f"trial_index {r[9]} at position {i}")
        return cls(np.reshape(np.asarray(outcomes, dtype=float), (len(rows), 8)), settings)

    def __len__(self) -> int:
        return self.outcomes.shape[0]

    @property
    def n(self) -> int:
        return len(self)

    def column(self, name: str) -> np.ndarray:
        return self.outcomes[:, COLUMN_INDEX[name]]

    def __getattr__(self, name):
        # a1, b1, ... as attribute access
        if name in COLUMN_INDEX:
            return self.outcomes[:, COLUMN_INDEX[name]]
        raise AttributeError(name)

    def row(self, i: int) -> TrialRow:
        return TrialRow(*self.outcomes[i].tolist(), Setting(int(self.settings[i])), i)

    def __iter__(self) -> Iterator[TrialRow]:
        settings = self.settings.tolist()
        for i, vals in enumerate(self.outcomes.tolist()):
            yield TrialRow(*vals, Setting(settings[i]), i)

    @property
    def rows(self) -> list[TrialRow]:
        return list(self)

    def with_columns(self, **columns) -> "OutcomeTable":
        out = np.array(self.outcomes)
        for name, values in columns.items():
            out[:, COLUMN_INDEX[name]] = values
        return OutcomeTable(out, self.settings)

    def with_settings(self, settings) -> "OutcomeTable":
        return OutcomeTable(self.outcomes, settings)

    def setting_counts(self) -> dict[Setting, int]:
        counts = np.bincount(self.settings, minlength=5)
        return {s: int(counts[s]) for s in SETTINGS}

    def __eq__(self, other):
        if not isinstance(other, OutcomeTable):
            return NotImplemented
        return (np.array_equal(self.outcomes, other.outcomes)
                and np.array_equal(self.settings, other.settings))

    def __repr__(self):
        return f"OutcomeTable(n={self.n}, dichotomic={self.dichotomic})"


@dataclass(frozen=True)
class CorrelationSet:
    c_ab: float
    c_apb: float
    c_abp: float
    c_apbp: float

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not -1.0 <= v <= 1.0:
                raise InvalidParameterError(f"{name}={v} outside [-1, 1]")

    def for_setting(self, setting: Setting) -> float:
        return getattr(self, _SETTING_FIELD[Setting(setting)])

    @classmethod
    def from_settings(cls, values: dict) -> "CorrelationSet":
        return cls(**{_SETTING_FIELD[Setting(s)]: v for s, v in values.items()})

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


_SETTING_FIELD = {
    Setting.AB: "c_ab",
    Setting.AB_PRIME: "c_abp",
    Setting.A_PRIME_B: "c_apb",
    Setting.A_PRIME_B_PRIME: "c_apbp",
}


@dataclass(frozen=True)
class AssumptionProfile:
    no_conspiracy: bool = True
    parameter_independence: bool = True
    outcome_independence: bool = True

    @property
    def local(self) -> bool:
        return self.no_conspiracy and self.parameter_independence and self.outcome_independence

    def as_dict(self) -> dict[str, bool]:
        return asdict(self)


def mean(values) -> float:
    """Exactly rounded arithmetic mean (independent of element order)."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise EmptySampleError()
    return math.fsum(arr.tolist()) / arr.size


def mean_product(x, y) -> float:
    """Sample mean of ``x * y`` for two aligned columns of bounded values."""
    x = check_bounded(x)
    y = check_bounded(y)
    if x.shape != y.shape:
        raise InvalidParameterError("columns must have equal length")
    if x.size == 0:
        raise EmptySampleError()
    # fsum rounds the exact sum once, so the result cannot depend on row order
    return math.fsum((x * y).tolist()) / x.size


def correlation(pairs) -> float:
    """Sample correlation <XY> of a sequence of ``(x, y)`` outcome pairs."""
    arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs, dtype=float)
    if arr.size == 0:
        raise EmptySampleError()
    arr = arr.reshape(-1, 2)
    return mean_product(arr[:, 0], arr[:, 1])


def chsh_expression(c: CorrelationSet) -> float:
    """Signed CHSH combination <AB'> + <A'B'> + <A'B> - <AB>."""
    return c.c_abp + c.c_apbp + c.c_apb - c.c_ab


def chsh_statistic(c: CorrelationSet) -> float:
    """|<AB'> + <B'A'> + <A'B> - <BA>|, a value in [0, 4]."""
    return abs(chsh_expression(c))
