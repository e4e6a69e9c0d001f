"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from ipdiff.generators import GeneratorConfig, generate
from ipdiff.instance import IPInstance, Solution


def brute_force(inst: IPInstance) -> list[tuple[Solution, float]]:
    """All feasible assignments by 2^n enumeration, best objective first."""
    A = inst.dense_matrix()
    out = []
    for bits in itertools.product((0, 1), repeat=inst.n):
        x = np.array(bits, dtype=np.int8)
        if np.all(A @ x <= inst.b):
            out.append((Solution(x), float(inst.c @ x)))
    sign = -1.0 if inst.sense == "max" else 1.0
    out.sort(key=lambda e: (sign * e[1], e[0].bits()))
    return out


def tiny_instance(seed: int, family: str = "indep_set") -> IPInstance:
    """A small seeded instance suitable for exhaustive checks (n <= 15)."""
    if family == "indep_set":
        cfg = GeneratorConfig(family="indep_set", nodes=6 + seed % 10, seed=seed)
    elif family == "set_cover":
        cfg = GeneratorConfig(
            family="set_cover", rows=4 + seed % 5, cols=6 + seed % 9,
            density=0.3, seed=seed,
        )
    else:
        raise ValueError(family)
    return generate(cfg)


@pytest.fixture
def simple_min() -> IPInstance:
    """min x0 + 2 x1 - x2  s.t.  x0 + x1 >= 1, x2 <= x0 (stored as <=)."""
    return IPInstance(
        name="simple_min",
        n=3,
        c=np.array([1.0, 2.0, -1.0]),
        rows=(((0, -1.0), (1, -1.0)), ((2, 1.0), (0, -1.0))),
        b=np.array([-1.0, 0.0]),
        sense="min",
    )


@pytest.fixture
def simple_max() -> IPInstance:
    """max x0 + x1  s.t.  x0 + x1 <= 1."""
    return IPInstance(
        name="simple_max",
        n=2,
        c=np.array([1.0, 1.0]),
        rows=(((0, 1.0), (1, 1.0)),),
        b=np.array([1.0]),
        sense="max",
    )
