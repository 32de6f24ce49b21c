"""Machine speakers that turn a target program into a specification.

The literal speaker reveals occupied cells uniformly at random without
repeats. The pragmatic speaker greedily reveals, at every step, the cell
that shrinks the set of consistent programs the most (the argmax of the
joint speaker's next-utterance distribution), breaking ties in canonical
row-major utterance order; it is deterministic and ignores the seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dsl import Utterance
from .space import ProgramSpace


@dataclass(frozen=True)
class SpeakerConfig:
    kind: str = "pragmatic"  # "literal" or "pragmatic"
    max_len: int = 15
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("literal", "pragmatic"):
            raise ValueError(f"unknown speaker kind {self.kind!r}")
        if self.max_len < 1:
            raise ValueError("max_len must be at least 1")


def speak_literal(space: ProgramSpace, target: Sequence[int], cfg: SpeakerConfig) -> list[Utterance]:
    """A uniformly random duplicate-free sequence of reveals true of ``target``."""
    t_idx = _target_index(space, target)
    utts = space.utterances_of(t_idx)
    rng = np.random.default_rng(cfg.seed)
    picks = rng.permutation(utts)[: cfg.max_len]
    return [space.alphabet[i] for i in picks]


def speak_pragmatic(space: ProgramSpace, target: Sequence[int], cfg: SpeakerConfig) -> list[Utterance]:
    """Greedy most-informative reveals: each step minimizes the surviving
    consistent-program count. Deterministic regardless of ``cfg.seed``."""
    t_idx = _target_index(space, target)
    utts = space.utterances_of(t_idx)
    n = min(cfg.max_len, utts.size)
    mask = np.ones(space.n_programs, dtype=bool)
    remaining = list(utts)
    out: list[Utterance] = []
    for _ in range(n):
        counts = (space.consistency[remaining] & mask).sum(axis=1)
        best = int(np.argmin(counts))  # first minimum = canonical-order tie-break
        pick = remaining.pop(best)
        mask &= space.consistency[pick]
        out.append(space.alphabet[pick])
    return out


def speak(space: ProgramSpace, target: Sequence[int], cfg: SpeakerConfig) -> list[Utterance]:
    if cfg.kind == "literal":
        return speak_literal(space, target, cfg)
    return speak_pragmatic(space, target, cfg)


def _target_index(space: ProgramSpace, target: Sequence[int]) -> int:
    idx = space.program_index(target)
    if idx < 0:
        raise ValueError(f"not a valid program: {tuple(target)}")
    return idx
