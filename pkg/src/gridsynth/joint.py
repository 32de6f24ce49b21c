"""Listener and speaker distributions over the whole enumerated program space.

The literal listener is uniform over programs consistent with the spec.
The speaker scores an utterance by how much posterior mass the literal
listener would put on the target after hearing it, normalized over the
remaining candidate utterances; a spec's probability is the product of its
per-utterance terms in order. The pragmatic listener renormalizes those
spec probabilities over programs.

All distributions over programs are plain float64 vectors aligned with the
space's program order; they sum to one and may contain zeros.
"""

from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

from .dsl import Utterance
from .errors import EmptyCandidateSet, NoConsistentProgram
from .space import ProgramSpace, resolve_exclude


def joint_literal(space: ProgramSpace, spec: Sequence[Utterance]) -> np.ndarray:
    """Uniform posterior over programs consistent with every reveal."""
    mask = space.consistent_mask(spec)
    n = int(mask.sum())
    if n == 0:
        raise NoConsistentProgram(f"no program consistent with {len(list(spec))} reveals")
    return mask / n


def joint_speaker_utt(
    space: ProgramSpace,
    target: Sequence[int],
    prefix: Sequence[Utterance],
    exclude_revealed: bool | None = None,
) -> np.ndarray:
    """Distribution over the next reveal for ``target`` given ``prefix``.

    Returns a vector over the full alphabet; entries for utterances false
    of the target (or already revealed, under the default candidate rule)
    are zero.
    """
    exclude = resolve_exclude(exclude_revealed)
    t_idx = space.program_index(target)
    if t_idx < 0:
        raise ValueError(f"unknown program {tuple(target)}")
    prefix_idx = space.spec_indices(prefix)
    mask = space.consistent_mask(prefix)
    if not mask[t_idx]:
        raise ValueError("target is inconsistent with the given prefix")

    cand = space.utterances_of(t_idx)
    if exclude:
        cand = np.setdiff1d(cand, prefix_idx, assume_unique=False)
    if cand.size == 0:
        raise EmptyCandidateSet("every reveal of the target is already in the prefix")

    # Posterior mass on the target after each candidate reveal is one over
    # the size of the surviving consistent set.
    counts = (space.consistency[cand] & mask).sum(axis=1)
    weights = 1.0 / counts
    probs = np.zeros(space.n_utterances)
    probs[cand] = weights / weights.sum()
    return probs


def joint_speaker_spec(
    space: ProgramSpace,
    target: Sequence[int],
    spec: Sequence[Utterance],
    exclude_revealed: bool | None = None,
) -> float:
    """Probability the speaker emits ``spec`` (in order) for ``target``.

    Zero when any reveal is false of the target; the empty spec has
    probability one.
    """
    t_idx = space.program_index(target)
    if t_idx < 0:
        return 0.0
    log_p = 0.0
    for i, u in enumerate(spec):
        ui = space.utt_index(u)
        if ui < 0 or not space.consistency[ui, t_idx]:
            return 0.0
        try:
            step = joint_speaker_utt(space, target, spec[:i], exclude_revealed)
        except EmptyCandidateSet:
            return 0.0
        if step[ui] == 0.0:
            return 0.0
        log_p += float(np.log(step[ui]))
    return float(np.exp(log_p))


def _pragmatic_steps(
    space: ProgramSpace,
    spec: Sequence[Utterance],
    exclude_revealed: bool | None = None,
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (consistent mask, accumulated speaker log-score) per prefix.

    Vectorized over all programs at once: at each step the per-program
    speaker term is ``w[u] / sum(w[u'] for candidate u' true of h)`` where
    ``w[u'] = 1 / |consistent(prefix + u')|``.
    """
    exclude = resolve_exclude(exclude_revealed)
    n_p = space.n_programs
    mask = np.ones(n_p, dtype=bool)
    used = np.zeros(space.n_utterances, dtype=bool)
    acc = np.zeros(n_p)

    for u in spec:
        ui = space.utt_index(u)
        if ui < 0:
            raise NoConsistentProgram(f"utterance {u} is realizable by no program")
        counts = space.consistency_f64 @ mask.astype(np.float64)
        weights = np.zeros(space.n_utterances)
        cand = counts > 0
        if exclude:
            cand &= ~used
        weights[cand] = 1.0 / counts[cand]
        if weights[ui] == 0.0:
            raise NoConsistentProgram("every speaker probability for this spec is zero")
        denom = weights @ space.consistency_f64

        new_mask = mask & space.consistency[ui]
        if not new_mask.any():
            raise NoConsistentProgram("no program consistent with the reveals so far")
        step = np.full(n_p, -np.inf)
        step[new_mask] = np.log(weights[ui]) - np.log(denom[new_mask])
        acc = acc + step
        mask = new_mask
        used[ui] = True
        yield mask, acc


def iter_joint_prefixes(
    space: ProgramSpace,
    spec: Sequence[Utterance],
    exclude_revealed: bool | None = None,
) -> Iterator[np.ndarray]:
    """Yield the pragmatic posterior after each prefix ``spec[:1] .. spec[:n]``."""
    for _, acc in _pragmatic_steps(space, spec, exclude_revealed):
        yield _normalize_log_scores(acc)


def joint_prefix_posteriors(
    space: ProgramSpace,
    spec: Sequence[Utterance],
    exclude_revealed: bool | None = None,
) -> list[np.ndarray]:
    return list(iter_joint_prefixes(space, spec, exclude_revealed))


def joint_pragmatic(
    space: ProgramSpace,
    spec: Sequence[Utterance],
    exclude_revealed: bool | None = None,
) -> np.ndarray:
    """Posterior proportional to the speaker's probability of emitting ``spec``."""
    if len(spec) == 0:
        return np.full(space.n_programs, 1.0 / space.n_programs)
    return joint_prefix_posteriors(space, spec, exclude_revealed)[-1]


def _normalize_log_scores(log_scores: np.ndarray) -> np.ndarray:
    finite = np.isfinite(log_scores)
    probs = np.zeros(log_scores.shape)
    shifted = log_scores[finite] - log_scores[finite].max()
    probs[finite] = np.exp(shifted)
    probs /= probs.sum()
    return probs


def argmax_program(space: ProgramSpace, probs: np.ndarray) -> int:
    """Index of the most probable program.

    Exact ties break toward the most specific program (fewest occupied
    cells, then lowest index): reveals never witness emptiness, so any
    consistent pattern keeps its strict supersets alive forever; among
    equally probable explanations the minimal one is the only guess that
    can reliably be the speaker's pattern.
    """
    tied = np.flatnonzero(probs == probs.max())
    order = np.lexsort((tied, space.occupied_counts[tied]))
    return int(tied[order[0]])


def top_k_programs(
    space: ProgramSpace, probs: np.ndarray, k: int
) -> list[tuple[int, float]]:
    """The ``k`` most probable programs with nonzero mass; ties resolve by
    specificity then index, matching :func:`argmax_program`."""
    idx = np.flatnonzero(probs > 0.0)
    order = np.lexsort((idx, space.occupied_counts[idx], -probs[idx]))[:k]
    return [(int(idx[i]), float(probs[idx[i]])) for i in order]
