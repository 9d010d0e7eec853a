"""Confounded synthetic ranking worlds for end-to-end audit studies.

Each query draws a latent type (u or v); items draw a type (1 or 2) from a
per-query-type mixture, a uniform signal in [0, 1] that the ranker forwards
unchanged as its score, and a binary outcome whose expectation bends the
signal by a multiplicative type bias.  With biases ordered
``b_v2 < b_v1 < 1 < b_u2 < b_u1``, type-1 items are worth more than type-2
items at equal scores inside every query, yet a mixture of types exists that
makes both marginal calibration curves exactly the identity: the bias is
invisible to per-score comparisons and only marginal (near-tie) comparisons
reveal it.

The latent query type is the confounder; it is recorded in a diagnostics
side channel and never placed on the items an auditor sees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .core import Item, RankedSlate
from .errors import InfeasibleWorldError, InputError

__all__ = [
    "SyntheticWorld",
    "SyntheticDataset",
    "expected_relevance",
    "solve_type_mixture",
    "generate",
    "population_mpc",
]

QUERY_TYPES = ("u", "v")
#: Group labels carried by items, one per item type.
TYPE_GROUPS = ("type1", "type2")


def expected_relevance(signal: float, bias: float) -> float:
    """Expected outcome of an item with the given signal and type bias.

    The curve is ``bias * s`` below one half and ``1 - (2 - bias) * (1 - s)``
    above, meeting continuously at ``bias / 2``; it maps [0, 1] onto [0, 1]
    and is non-decreasing for biases in (0, 2).
    """
    if not 0.0 <= signal <= 1.0:
        raise InputError(f"signal must lie in [0, 1], got {signal!r}")
    if not 0.0 < bias < 2.0:
        raise InputError(f"bias must lie in (0, 2), got {bias!r}")
    if signal < 0.5:
        return bias * signal
    return 1.0 - (2.0 - bias) * (1.0 - signal)


def _relevance_array(signals: np.ndarray, biases: np.ndarray) -> np.ndarray:
    lower = biases * signals
    upper = 1.0 - (2.0 - biases) * (1.0 - signals)
    return np.where(signals < 0.5, lower, upper)


def solve_type_mixture(
    p_u: float,
    b_u1: float,
    b_u2: float,
    b_v1: float,
    b_v2: float,
) -> tuple[float, float]:
    """Item-type mixtures making both marginal calibration curves the identity.

    Returns (p(type 1 | query u), p(type 1 | query v)).  Marginal calibration
    of type ``t`` requires the posterior-weighted bias to equal one,
    ``P(u|t) * b_ut + P(v|t) * b_vt = 1``; combining the two posterior
    constraints through Bayes' rule at the query-type prior ``p_u`` gives a
    linear system in the mixtures.  If a type has both biases equal to one it
    is unconstrained and the canonical mixture 0.5 is used for the free
    degree of freedom.
    """
    if not 0.0 < p_u < 1.0:
        raise InputError(f"query-type probability must be in (0, 1), got {p_u!r}")
    for b in (b_u1, b_u2, b_v1, b_v2):
        if not 0.0 < b < 2.0:
            raise InputError(f"biases must lie in (0, 2), got {b!r}")

    def posterior(b_u: float, b_v: float) -> float | None:
        """Required P(query u | type); None when the type is unconstrained."""
        if b_u == b_v:
            if b_u == 1.0:
                return None
            raise InfeasibleWorldError(
                f"type with equal biases {b_u} != 1 can never be calibrated"
            )
        p = (1.0 - b_v) / (b_u - b_v)
        if not 0.0 <= p <= 1.0:
            raise InfeasibleWorldError(
                f"required query posterior {p:.4f} falls outside [0, 1]"
            )
        return p

    post1 = posterior(b_u1, b_v1)
    post2 = posterior(b_u2, b_v2)
    ratio = p_u / (1.0 - p_u)

    if post1 is None and post2 is None:
        return 0.5, 0.5
    if post1 is None:
        # Type 1 free: pick x = 0.5 and solve type 2's constraint for y.
        x = 0.5
        if post2 == 0.0:
            raise InfeasibleWorldError("type 2 requires zero mass on query type u")
        y = 1.0 - ratio * (1.0 - x) * (1.0 / post2 - 1.0)
    elif post2 is None:
        x = 0.5
        if post1 == 0.0:
            raise InfeasibleWorldError("type 1 requires zero mass on query type u")
        y = ratio * x * (1.0 / post1 - 1.0)
    else:
        if post1 == 0.0 or post2 == 0.0:
            raise InfeasibleWorldError("a type requires zero mass on query type u")
        a = ratio * (1.0 / post1 - 1.0)  # y = a * x
        b = ratio * (1.0 / post2 - 1.0)  # 1 - y = b * (1 - x)
        if a == b:
            if b != 1.0:
                raise InfeasibleWorldError("mixture system is singular")
            x = 0.5  # constraints coincide; one free degree of freedom
        else:
            x = (b - 1.0) / (b - a)
        y = a * x
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise InfeasibleWorldError(
            f"no calibration-consistent mixture in [0, 1]^2 (got {x:.4f}, {y:.4f})"
        )
    return x, y


@dataclass(frozen=True)
class SyntheticWorld:
    """Parameters of the confounded two-type ranking world.

    ``bias[qt]`` maps (query type, item type) to the multiplicative bias.
    ``type_mixture`` is (p(type1 | u), p(type1 | v)); when omitted, the
    unique calibration-consistent mixture is solved for.  The default biases
    follow the canonical strict ordering; equalities are accepted so that
    unbiased (all-ones) worlds can be simulated.
    """

    p_u: float = 0.5
    b_u1: float = 1.5
    b_u2: float = 1.1
    b_v1: float = 0.9
    b_v2: float = 0.7
    type_mixture: tuple[float, float] | None = None
    n: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_u <= 1.0:
            raise InputError(f"p_u must be a probability, got {self.p_u!r}")
        for b in (self.b_u1, self.b_u2, self.b_v1, self.b_v2):
            if not 0.0 < b < 2.0:
                raise InputError(f"biases must lie in (0, 2), got {b!r}")
        if not self.b_v2 <= self.b_v1 <= 1.0 <= self.b_u2 <= self.b_u1:
            raise InputError(
                "biases must satisfy b_v2 <= b_v1 <= 1 <= b_u2 <= b_u1"
            )
        if self.n < 1:
            raise InputError(f"slate size must be at least 1, got {self.n!r}")
        if self.type_mixture is not None:
            x, y = self.type_mixture
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise InputError(f"type mixture must be probabilities, got {x}, {y}")

    def mixture(self) -> tuple[float, float]:
        """The configured mixture, or the solved calibration-consistent one."""
        if self.type_mixture is not None:
            return self.type_mixture
        return solve_type_mixture(self.p_u, self.b_u1, self.b_u2, self.b_v1, self.b_v2)

    def bias_of(self, query_type: str, item_type: int) -> float:
        return {
            ("u", 1): self.b_u1,
            ("u", 2): self.b_u2,
            ("v", 1): self.b_v1,
            ("v", 2): self.b_v2,
        }[(query_type, item_type)]


@dataclass(frozen=True)
class SyntheticDataset:
    """Generated slates plus the latent query types (diagnostics only)."""

    slates: tuple[RankedSlate, ...]
    query_types: dict[str, str] = field(default_factory=dict)

    def __iter__(self) -> Iterator[RankedSlate]:
        return iter(self.slates)

    def __len__(self) -> int:
        return len(self.slates)


def _draw_arrays(
    world: SyntheticWorld, num_queries: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized draws: query types, item types, signals, binary outcomes."""
    x, y = world.mixture()
    is_u = rng.random(num_queries) < world.p_u
    p_type1 = np.where(is_u, x, y)[:, None]
    is_type1 = rng.random((num_queries, world.n)) < p_type1
    signals = rng.random((num_queries, world.n))
    biases = np.where(
        is_u[:, None],
        np.where(is_type1, world.b_u1, world.b_u2),
        np.where(is_type1, world.b_v1, world.b_v2),
    )
    relevance = _relevance_array(signals, biases)
    outcomes = (rng.random((num_queries, world.n)) < relevance).astype(float)
    return is_u, is_type1, signals, outcomes


def generate(world: SyntheticWorld, num_queries: int) -> SyntheticDataset:
    """Sample a dataset of ranked slates from the world.

    Scores equal the raw signals (the ranker forwards them unchanged), items
    carry their type as the only group label, and the latent query type is
    returned out of band so that audits cannot accidentally condition on the
    confounder.
    """
    if num_queries < 1:
        raise InputError(f"num_queries must be at least 1, got {num_queries!r}")
    rng = np.random.default_rng(world.seed)
    is_u, is_type1, signals, outcomes = _draw_arrays(world, num_queries, rng)

    width = len(str(num_queries - 1))
    slates = []
    query_types: dict[str, str] = {}
    group1 = frozenset({TYPE_GROUPS[0]})
    group2 = frozenset({TYPE_GROUPS[1]})
    for q in range(num_queries):
        qid = f"q{q:0{width}d}"
        query_types[qid] = "u" if is_u[q] else "v"
        items = [
            Item(
                id=f"{qid}-i{j}",
                score=float(signals[q, j]),
                groups=group1 if is_type1[q, j] else group2,
                outcome=float(outcomes[q, j]),
            )
            for j in range(world.n)
        ]
        items.sort(key=lambda it: (-it.score, it.id))
        slates.append(RankedSlate(query_id=qid, items=tuple(items)))
    return SyntheticDataset(slates=tuple(slates), query_types=query_types)


def population_mpc(
    world: SyntheticWorld,
    epsilon: float,
    num_queries: int,
    seed: int,
    batch: int = 200_000,
) -> float:
    """Monte Carlo estimate of the population MPC for type-1 items.

    Simulates ``num_queries`` slates in vectorized batches, pools every
    ordered (type 1, type 2) pair with score gap in [0, epsilon], and returns
    the mean outcome difference.  Serves as an independent ground truth for
    interval-coverage studies; it never touches the object-based pipeline.
    """
    if epsilon < 0:
        raise InputError("epsilon must be non-negative")
    rng = np.random.default_rng(seed)
    total = 0.0
    count = 0
    remaining = num_queries
    n = world.n
    while remaining > 0:
        q = min(batch, remaining)
        remaining -= q
        _, is_type1, signals, outcomes = _draw_arrays(world, q, rng)
        for a in range(n):
            for b in range(n):
                if a == b:
                    continue
                gap = signals[:, b] - signals[:, a]
                mask = (
                    is_type1[:, a]
                    & ~is_type1[:, b]
                    & (gap >= 0.0)
                    & (gap <= epsilon)
                )
                if mask.any():
                    diffs = outcomes[mask, a] - outcomes[mask, b]
                    total += float(diffs.sum())
                    count += int(mask.sum())
    if count == 0:
        raise InfeasibleWorldError("no eligible pairs drawn; increase num_queries")
    return total / count
