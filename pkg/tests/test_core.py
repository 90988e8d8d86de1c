import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chsh_forge.core import (
    COLUMNS, SETTINGS, CorrelationSet, OutcomeTable, Setting, chsh_expression, chsh_statistic,
    correlation, mean_product,
)
from chsh_forge.errors import EmptySampleError, InvalidParameterError, UnboundedValueError

from oracles import singlet_chsh_grid

pm1 = st.sampled_from([-1.0, 1.0])


def test_correlation_examples():
    assert correlation([(1, 1), (1, 1)]) == 1.0
    assert correlation([(1, -1), (-1, 1)]) == -1.0
    assert correlation([(1, 1), (1, -1), (-1, 1), (-1, -1)]) == 0.0


def test_correlation_empty():
    with pytest.raises(EmptySampleError) as e:
        correlation([])
    assert str(e.value).startswith("empty-sample")


def test_correlation_rejects_unbounded():
    with pytest.raises(UnboundedValueError):
        correlation([(1.5, 1)])


@given(st.lists(st.tuples(pm1, pm1), min_size=1, max_size=200))
def test_correlation_matches_counting(pairs):
    n = len(pairs)
    c = {(x, y): sum(1 for p in pairs if p == (x, y)) for x in (1.0, -1.0) for y in (1.0, -1.0)}
    expected = (c[1.0, 1.0] + c[-1.0, -1.0] - c[1.0, -1.0] - c[-1.0, 1.0]) / n
    assert correlation(pairs) == expected


@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=100), st.randoms())
def test_correlation_order_independent(pairs, r):
    shuffled = list(pairs)
    r.shuffle(shuffled)
    assert correlation(shuffled) == correlation(pairs)


def test_chsh_examples():
    assert chsh_statistic(CorrelationSet(1, 1, 1, 1)) == 2.0
    assert chsh_statistic(CorrelationSet(0, 0, 0, 0)) == 0.0
    r = 1 / math.sqrt(2)
    c = CorrelationSet(c_ab=-r, c_apb=r, c_abp=r, c_apbp=r)
    assert chsh_statistic(c) == pytest.approx(2 * math.sqrt(2), abs=1e-12)


def test_singlet_value_is_the_grid_maximum():
    # grid over all four analyser angles; the optimum lies on the grid (multiples of pi/4)
    assert singlet_chsh_grid(16) == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert singlet_chsh_grid(48) <= 2 * math.sqrt(2) + 1e-12


@given(st.tuples(*[st.floats(-1, 1)] * 4))
def test_chsh_at_most_four(vals):
    c = CorrelationSet(*vals)
    assert 0 <= chsh_statistic(c) <= 4
    assert chsh_statistic(c) == abs(chsh_expression(c))


def test_correlation_set_range_checked():
    with pytest.raises(InvalidParameterError):
        CorrelationSet(1.1, 0, 0, 0)


def test_setting_column_mapping():
    assert [s.columns for s in SETTINGS] == [("a1", "b1"), ("a2", "bp2"), ("ap3", "b3"), ("ap4", "bp4")]
    assert Setting.AB_PRIME.label == "(A,B')"
    for s in SETTINGS:
        assert Setting.from_observables(*s.observables) is s


def test_outcome_table_rows_and_immutability():
    out = np.arange(16, dtype=float).reshape(2, 8) / 16
    t = OutcomeTable(out, [1, 4])
    assert t.row(1).s is Setting.A_PRIME_B_PRIME and t.row(1).trial_index == 1
    assert t.row(0).outcome("bp4") == out[0, 7]
    assert not t.dichotomic
    with pytest.raises(ValueError):
        t.outcomes[0, 0] = 1.0
    assert OutcomeTable.from_rows(t.rows) == t
    assert list(t.column("ap3")) == list(out[:, COLUMNS.index("ap3")])


def test_outcome_table_validation():
    with pytest.raises(InvalidParameterError):
        OutcomeTable(np.ones((2, 7)), [1, 2])
    with pytest.raises(InvalidParameterError):
        OutcomeTable(np.ones((2, 8)), [1, 5])
    with pytest.raises(UnboundedValueError):
        OutcomeTable(np.full((1, 8), 2.0), [1])


def test_mean_product_length_mismatch():
    with pytest.raises(InvalidParameterError):
        mean_product([1, 1], [1])
