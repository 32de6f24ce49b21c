"""Best-first program search over a factored distribution.

Programs are enumerated lazily in non-increasing product probability:
start from the highest-probability rule for every nonterminal, then
repeatedly pop the best unseen program and push the variants that swap a
single rule for its next-best alternative. Invalid variants are skipped
ahead to the next alternative in the same nonterminal so a factor never
dead-ends on a validity hole.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .dsl import Utterance
from .factored import FactoredDistribution
from .space import ProgramSpace


@dataclass(frozen=True)
class SearchConfig:
    budget: int = 50

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise ValueError("budget must be at least 1")


@dataclass(frozen=True)
class SearchResult:
    """Outcome of a budgeted search.

    ``rank`` is the 1-based dequeue count at which the program was found;
    ``explored`` counts distinct inconsistent programs charged against the
    budget.
    """

    program: tuple[int, ...] | None
    rank: int | None
    explored: int

    @property
    def found(self) -> bool:
        return self.program is not None


def _dequeue_stream(
    space: ProgramSpace, q: FactoredDistribution
) -> Iterator[tuple[tuple[int, ...], float, bool]]:
    """Yield (choices, log-score, is_member) for each distinct dequeued program.

    Ties in score break toward the lexicographically smaller choice
    vector among the programs currently enqueued.
    """
    k = space.n_factors
    orders = []
    logs = []
    for f in q.factors:
        order = np.argsort(-f, kind="stable")
        orders.append(order)
        with np.errstate(divide="ignore"):
            logs.append(np.log(f[order]))

    def choices_of(ranks: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(int(orders[i][r]) for i, r in enumerate(ranks))

    def score_of(ranks: tuple[int, ...]) -> float:
        # Fresh left-to-right sum so that mathematically tied programs get
        # bit-identical scores and ties resolve purely on the choice vector.
        total = 0.0
        for i, r in enumerate(ranks):
            total += float(logs[i][r])
        return total

    seed_ranks = (0,) * k
    heap: list[tuple[float, tuple[int, ...], tuple[int, ...]]] = []
    heapq.heappush(heap, (-score_of(seed_ranks), choices_of(seed_ranks), seed_ranks))
    seen: set[tuple[int, ...]] = set()

    while heap:
        neg_score, choices, ranks = heapq.heappop(heap)
        if choices in seen:
            continue
        seen.add(choices)
        yield choices, -neg_score, space.is_member(choices)

        for i in range(k):
            # Next-best alternative for nonterminal i; skip ahead past
            # alternatives that do not form a member program.
            for step in range(ranks[i] + 1, space.arities[i]):
                if not np.isfinite(logs[i][step]):
                    break
                new_ranks = ranks[:i] + (step,) + ranks[i + 1 :]
                new_choices = choices_of(new_ranks)
                if space.is_member(new_choices):
                    heapq.heappush(heap, (-score_of(new_ranks), new_choices, new_ranks))
                    break


def scored_stream(space: ProgramSpace, q: FactoredDistribution) -> Iterator[tuple[tuple[int, ...], float]]:
    """Member programs with their log product scores, best-first order."""
    for choices, score, member in _dequeue_stream(space, q):
        if member:
            yield choices, score


def ranked_stream(space: ProgramSpace, q: FactoredDistribution, limit: int) -> list[tuple[int, ...]]:
    """The first ``limit`` member programs in best-first dequeue order."""
    out = []
    for choices, _ in scored_stream(space, q):
        out.append(choices)
        if len(out) >= limit:
            break
    return out


def best_first_search(
    space: ProgramSpace,
    q: FactoredDistribution,
    spec: Sequence[Utterance],
    cfg: SearchConfig = SearchConfig(),
) -> SearchResult:
    """Dequeue programs in decreasing probability until one satisfies ``spec``
    or ``cfg.budget`` inconsistent programs have been examined."""
    mask = space.consistent_mask(spec)
    explored = 0
    for choices, _, member in _dequeue_stream(space, q):
        if explored >= cfg.budget:
            return SearchResult(None, None, explored)
        if member and mask[space.program_index(choices)]:
            return SearchResult(choices, explored + 1, explored)
        explored += 1
    return SearchResult(None, None, explored)
