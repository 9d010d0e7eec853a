"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from rankaudit import Item, PositionWeights, rank_by_score


def random_items(rng: np.random.Generator, n: int, group: str = "g",
                 p_member: float = 0.5, binary_outcomes: bool = False) -> list[Item]:
    """Random items with unique ids, random membership, scores and outcomes."""
    items = []
    for i in range(n):
        member = rng.random() < p_member
        outcome = float(rng.integers(0, 2)) if binary_outcomes else float(rng.random())
        items.append(
            Item(
                id=f"i{i:03d}",
                score=float(np.round(rng.random(), 6)),
                groups=frozenset({group}) if member else frozenset(),
                outcome=outcome,
            )
        )
    return items


def random_slate(rng: np.random.Generator, n: int, query_id: str = "q",
                 group: str = "g", **kw):
    return rank_by_score(random_items(rng, n, group=group, **kw), query_id)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


@pytest.fixture
def weights8() -> PositionWeights:
    return PositionWeights.log_discount(8)
