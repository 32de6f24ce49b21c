"""Mean-field listeners and speakers: one independent distribution per nonterminal.

The factored lexicon for nonterminal ``i`` is the fraction of consistent
programs that expand ``i`` with each rule; the factored literal listener is
exactly those fractions, which are also the marginals of the joint literal
posterior. Speaker and pragmatic-listener recursions mirror the joint
ones but run per (nonterminal, rule) pair, so each of the 12 recursions is
over a handful of values instead of the whole program space.
"""

from __future__ import annotations

from typing import Callable, Iterator, Sequence

import numpy as np

from .dsl import Utterance
from .errors import EmptyCandidateSet, NoConsistentProgram
from .space import ProgramSpace, resolve_exclude


class FactoredDistribution:
    """A product distribution over programs: one probability vector per nonterminal."""

    __slots__ = ("factors",)

    def __init__(self, factors: Sequence[np.ndarray], normalize: bool = False):
        fs = []
        for f in factors:
            f = np.asarray(f, dtype=np.float64)
            if f.ndim != 1 or f.size == 0:
                raise ValueError("each factor must be a non-empty vector")
            if (f < 0).any():
                raise ValueError("negative probability in factor")
            total = f.sum()
            if normalize:
                if total <= 0:
                    raise ValueError("cannot normalize an all-zero factor")
                f = f / total
            elif abs(total - 1.0) > 1e-9:
                raise ValueError(f"factor sums to {total}, not 1")
            fs.append(f)
        self.factors = tuple(fs)

    @classmethod
    def uniform(cls, arities: Sequence[int]) -> "FactoredDistribution":
        return cls([np.full(a, 1.0 / a) for a in arities])

    @classmethod
    def point_mass(cls, choices: Sequence[int], arities: Sequence[int]) -> "FactoredDistribution":
        factors = []
        for c, a in zip(choices, arities):
            f = np.zeros(a)
            f[int(c)] = 1.0
            factors.append(f)
        return cls(factors)

    def program_probability(self, choices: Sequence[int]) -> float:
        """Product of per-factor probabilities at the program's choices."""
        p = 1.0
        for f, c in zip(self.factors, choices):
            p *= float(f[int(c)])
        return p

    def as_matrix(self, max_arity: int | None = None) -> np.ndarray:
        """Factors stacked into a zero-padded ``(n_factors, max_arity)`` matrix."""
        width = max_arity or max(f.size for f in self.factors)
        out = np.zeros((len(self.factors), width))
        for i, f in enumerate(self.factors):
            out[i, : f.size] = f
        return out

    def to_json(self, names: Sequence[str] | None = None) -> dict[str, list[float]]:
        names = names or [f"N{i}" for i in range(len(self.factors))]
        return {n: [float(v) for v in f] for n, f in zip(names, self.factors)}

    @classmethod
    def from_json(cls, data: dict[str, Sequence[float]], names: Sequence[str]) -> "FactoredDistribution":
        return cls([np.asarray(data[n], dtype=np.float64) for n in names])

    def __len__(self) -> int:
        return len(self.factors)

    def __repr__(self) -> str:
        return f"FactoredDistribution({[np.round(f, 4).tolist() for f in self.factors]})"


def program_probability(q: FactoredDistribution, choices: Sequence[int]) -> float:
    return q.program_probability(choices)


def factored_lexicon(space: ProgramSpace, spec: Sequence[Utterance]) -> list[np.ndarray]:
    """Per-nonterminal rule fractions among programs consistent with ``spec``."""
    mask = space.consistent_mask(spec)
    total = int(mask.sum())
    if total == 0:
        raise NoConsistentProgram(f"no program consistent with {len(list(spec))} reveals")
    return [c / total for c in space.choice_counts(mask)]


def factored_literal(space: ProgramSpace, spec: Sequence[Utterance]) -> FactoredDistribution:
    """Factored literal listener: the consistent-set rule fractions, renormalized."""
    return FactoredDistribution(factored_lexicon(space, spec), normalize=True)


def _rule_counts_given(space: ProgramSpace, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For every utterance u: per-slot counts of programs in ``mask & u``.

    Returns ``(counts, totals)`` with shapes ``(n_utterances, n_slots)``
    and ``(n_utterances,)``. Counts are exact (they stay far below the
    float32 integer limit).
    """
    idx = np.flatnonzero(mask)
    sub = space.consistency_f32[:, idx]
    counts = sub @ space.onehot[idx]
    totals = sub.sum(axis=1)
    return counts.astype(np.float64), totals.astype(np.float64)


def factored_speaker_utt(
    space: ProgramSpace,
    factor: int,
    choice: int,
    prefix: Sequence[Utterance],
    exclude_revealed: bool | None = None,
) -> np.ndarray:
    """Distribution over the next reveal given that nonterminal ``factor``
    is expanded with rule ``choice``.

    Each candidate utterance is weighted by the factored literal
    listener's probability of the rule after that reveal, renormalized.
    """
    exclude = resolve_exclude(exclude_revealed)
    mask = space.consistent_mask(prefix)
    counts, totals = _rule_counts_given(space, mask)
    slot = space.slot(factor, choice)
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.where(totals > 0, counts[:, slot] / totals, 0.0)
    if exclude:
        used = space.spec_indices(prefix)
        q[used[used >= 0]] = 0.0
    total = q.sum()
    if total == 0.0:
        raise EmptyCandidateSet(
            f"no candidate reveal keeps rule {choice} of factor {factor} possible"
        )
    return q / total


def _factored_steps(
    space: ProgramSpace,
    spec: Sequence[Utterance],
    exclude_revealed: bool | None = None,
    literal_rule_probs: Callable[[list[int], np.ndarray], np.ndarray] | None = None,
) -> Iterator[np.ndarray]:
    """Yield accumulated per-slot speaker log-scores after each reveal.

    ``literal_rule_probs(prefix_indices, candidate_indices)`` must return
    the per-candidate ``(n_candidates, n_slots)`` rule probabilities of
    the literal listener conditioned on prefix-plus-candidate; by default
    they are computed exactly from the enumeration. Swapping this hook is
    how a learned literal listener is lifted to a pragmatic one.
    """
    exclude = resolve_exclude(exclude_revealed)
    mask = np.ones(space.n_programs, dtype=bool)
    used = np.zeros(space.n_utterances, dtype=bool)
    prefix_indices: list[int] = []
    acc = np.zeros(space.n_slots)

    for u in spec:
        ui = space.utt_index(u)
        if ui < 0:
            raise NoConsistentProgram(f"utterance {u} is realizable by no program")
        cand = ~used if exclude else np.ones(space.n_utterances, dtype=bool)
        cand_idx = np.flatnonzero(cand)
        if literal_rule_probs is None:
            counts, totals = _rule_counts_given(space, mask)
            with np.errstate(invalid="ignore", divide="ignore"):
                q_all = np.where(totals[:, None] > 0, counts / totals[:, None], 0.0)
            q = q_all[cand_idx]
        else:
            q = literal_rule_probs(prefix_indices, cand_idx)
        pos = np.searchsorted(cand_idx, ui)
        if pos >= cand_idx.size or cand_idx[pos] != ui:
            raise NoConsistentProgram("every speaker probability for this spec is zero")
        numer = q[pos]
        denom = q.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(numer > 0, np.log(numer) - np.log(denom), -np.inf)
        acc = acc + step
        for lo, hi in zip(space.slot_offsets[:-1], space.slot_offsets[1:]):
            if not np.isfinite(acc[lo:hi]).any():
                raise NoConsistentProgram(
                    "a nonterminal lost all its rules; the reveals are contradictory"
                )
        mask = mask & space.consistency[ui]
        used[ui] = True
        prefix_indices.append(int(ui))
        yield acc


def _factors_from_log_scores(space: ProgramSpace, acc: np.ndarray) -> FactoredDistribution:
    factors = []
    for lo, hi in zip(space.slot_offsets[:-1], space.slot_offsets[1:]):
        block = acc[lo:hi]
        finite = np.isfinite(block)
        f = np.zeros(block.size)
        f[finite] = np.exp(block[finite] - block[finite].max())
        factors.append(f / f.sum())
    return FactoredDistribution(factors)


def iter_factored_prefixes(
    space: ProgramSpace,
    spec: Sequence[Utterance],
    exclude_revealed: bool | None = None,
    literal_rule_probs: Callable[[list[int], np.ndarray], np.ndarray] | None = None,
) -> Iterator[FactoredDistribution]:
    """Yield the pragmatic posterior after each prefix of ``spec``."""
    for acc in _factored_steps(space, spec, exclude_revealed, literal_rule_probs):
        yield _factors_from_log_scores(space, acc)


def factored_prefix_posteriors(
    space: ProgramSpace,
    spec: Sequence[Utterance],
    exclude_revealed: bool | None = None,
) -> list[FactoredDistribution]:
    """Factored pragmatic posterior after each prefix of ``spec``."""
    return list(iter_factored_prefixes(space, spec, exclude_revealed))


def factored_pragmatic(
    space: ProgramSpace,
    spec: Sequence[Utterance],
    exclude_revealed: bool | None = None,
) -> FactoredDistribution:
    """Per-nonterminal pragmatic posterior; each factor's recursion is independent."""
    if len(spec) == 0:
        return FactoredDistribution.uniform(space.arities)
    return factored_prefix_posteriors(space, spec, exclude_revealed)[-1]


def pragmatic_from_literal(
    space: ProgramSpace,
    spec: Sequence[Utterance],
    literal_rule_probs: Callable[[list[int], np.ndarray], np.ndarray],
    exclude_revealed: bool | None = None,
) -> list[FactoredDistribution]:
    """Run the pragmatic recursion with an arbitrary literal-listener source.

    Returns the posterior after each prefix of ``spec``; used to lift the
    learned literal listener.
    """
    return list(iter_factored_prefixes(space, spec, exclude_revealed, literal_rule_probs))


# -- factorization quality helpers (used by the approximation tests) -------


def exact_marginals(joint: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row and column marginals of a two-factor joint distribution."""
    joint = np.asarray(joint, dtype=np.float64)
    return joint.sum(axis=1), joint.sum(axis=0)


def forward_kl(joint: np.ndarray, factors: tuple[np.ndarray, np.ndarray]) -> float:
    """KL(joint || outer product of factors), with 0 log 0 = 0."""
    joint = np.asarray(joint, dtype=np.float64)
    q = np.outer(factors[0], factors[1])
    mask = joint > 0
    if (q[mask] == 0).any():
        return float("inf")
    return float((joint[mask] * (np.log(joint[mask]) - np.log(q[mask]))).sum())
