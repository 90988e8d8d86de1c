"""Named random streams.

Each purpose (microstate, outcome-a, outcome-b, setting, ...) owns an
independent counter-based Philox stream keyed by ``(seed, purpose)``.  The
uniforms consumed by trial ``t`` are row ``t`` of the purpose's block, so
they are a pure function of ``(seed, t, purpose)``: changing how one purpose
is consumed never shifts the numbers another purpose sees.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError

PURPOSES = ("microstate", "outcome-a", "outcome-b", "setting", "permutation")

MICROSTATE = "microstate"
OUTCOME_A = "outcome-a"
OUTCOME_B = "outcome-b"
SETTING = "setting"
PERMUTATION = "permutation"


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise InvalidParameterError("seed must be an unsigned 64-bit integer")
    return seed


def generator(seed, purpose: str) -> np.random.Generator:
    """Fresh generator for one (seed, purpose) stream."""
    if purpose not in PURPOSES:
        raise InvalidParameterError(f"unknown purpose {purpose!r}")
    ss = np.random.SeedSequence(_check_seed(seed), spawn_key=(PURPOSES.index(purpose),))
    return np.random.Generator(np.random.Philox(ss))


class RandomStreams:
    """Per-purpose uniform blocks for an ``n``-trial run."""

    def __init__(self, seed, n: int, microstate_width: int = 1):
        self.seed = _check_seed(seed)
        self.n = int(n)
        self.microstate = generator(seed, MICROSTATE).random((self.n, microstate_width))
        self.outcome_a = generator(seed, OUTCOME_A).random((self.n, 4))
        self.outcome_b = generator(seed, OUTCOME_B).random((self.n, 4))
        self.setting = generator(seed, SETTING).random(self.n)

    def trial(self, t: int) -> "TrialRandomness":
        return TrialRandomness(
            microstate=self.microstate[t],
            outcome_a=self.outcome_a[t],
            outcome_b=self.outcome_b[t],
            setting=float(self.setting[t]),
        )


class TrialRandomness:
    __slots__ = ("microstate", "outcome_a", "outcome_b", "setting")

    def __init__(self, microstate, outcome_a, outcome_b, setting):
        self.microstate = microstate
        self.outcome_a = outcome_a
        self.outcome_b = outcome_b
        self.setting = setting
