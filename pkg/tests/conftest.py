import numpy as np
import pytest
from hypothesis import settings

from chsh_forge.core import OutcomeTable

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

# lines printed by the acceptance suite, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_table(n=None, settings=None, **cols):
    """OutcomeTable from named columns; missing columns are +1."""
    if n is None:
        n = len(next(iter(cols.values())))
    out = np.ones((n, 8))
    from chsh_forge.core import COLUMN_INDEX

    for name, values in cols.items():
        out[:, COLUMN_INDEX[name]] = values
    if settings is None:
        settings = [1 + (i % 4) for i in range(n)]
    return OutcomeTable(out, settings)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
