"""Precomputed program-space tables shared by every listener.

A :class:`ProgramSpace` bundles the enumerated programs of a grammar, the
global utterance alphabet, and the boolean consistency matrix between the
two. All inference in this package is a read-only function of these
tables, so a space can be shared freely across threads and sessions.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import dsl
from .dsl import Utterance

# Default for the speaker-normalization candidate set: alternatives exclude
# utterances that were already revealed. Flip per call via the
# ``exclude_revealed`` parameter to compare both conventions.
EXCLUDE_REVEALED_DEFAULT = True


def resolve_exclude(exclude_revealed: bool | None) -> bool:
    return EXCLUDE_REVEALED_DEFAULT if exclude_revealed is None else bool(exclude_revealed)


class ProgramSpace:
    """Enumerated programs plus utterance-consistency tables.

    Parameters
    ----------
    arities:
        Number of expansion rules per nonterminal.
    programs:
        ``(n_programs, k)`` integer array of choice vectors; row order is
        the canonical program index.
    alphabet:
        Every utterance any program supports, in canonical order.
    consistency:
        ``(n_utterances, n_programs)`` boolean matrix; entry ``[u, p]`` is
        True iff program ``p`` agrees with utterance ``u``.
    """

    def __init__(
        self,
        arities: Sequence[int],
        programs: np.ndarray,
        alphabet: Sequence[Utterance],
        consistency: np.ndarray,
        nonterminals: Sequence[str] | None = None,
        grids: tuple[np.ndarray, np.ndarray] | None = None,
    ):
        self.arities = tuple(int(a) for a in arities)
        self.programs = np.ascontiguousarray(programs, dtype=np.int16)
        self.alphabet = tuple(alphabet)
        self.consistency = np.ascontiguousarray(consistency, dtype=bool)
        self.nonterminals = tuple(nonterminals) if nonterminals else tuple(
            f"N{i}" for i in range(len(self.arities))
        )
        self.grids = grids

        self.n_programs, self.n_factors = self.programs.shape
        self.n_utterances = len(self.alphabet)
        if self.consistency.shape != (self.n_utterances, self.n_programs):
            raise ValueError("consistency matrix shape mismatch")
        self.max_arity = max(self.arities)
        self.slot_offsets = np.concatenate([[0], np.cumsum(self.arities)])
        self.n_slots = int(self.slot_offsets[-1])

        # float copies for the matmul-heavy paths; counts stay exact in
        # float32 because they never exceed 2**24.
        self.consistency_f32 = self.consistency.astype(np.float32)
        self.consistency_f64 = self.consistency.astype(np.float64)

        onehot = np.zeros((self.n_programs, self.n_slots), dtype=np.float32)
        rows = np.repeat(np.arange(self.n_programs), self.n_factors)
        cols = (self.slot_offsets[:-1][None, :] + self.programs).ravel()
        onehot[rows, cols] = 1.0
        self.onehot = onehot

        self._index_by_choices = {
            tuple(int(c) for c in row): i for i, row in enumerate(self.programs)
        }
        self._utt_index = {u: i for i, u in enumerate(self.alphabet)}

        # Programs with identical consistency columns are indistinguishable
        # by any utterance sequence: they denote the same pattern. Listener
        # identification is judged at this pattern level.
        by_prog_cols = np.ascontiguousarray(self.consistency.T)
        void = by_prog_cols.view([("", by_prog_cols.dtype)] * by_prog_cols.shape[1])
        _, inverse = np.unique(void.ravel(), return_inverse=True)
        self.pattern_class = inverse.astype(np.int32)
        self.n_patterns = int(self.pattern_class.max()) + 1

        # Utterances supported per program = occupied cells; doubles as the
        # specificity measure for tie-breaking (fewer cells = more specific).
        self.occupied_counts = self.consistency.sum(axis=0).astype(np.int32)

        # CSR-style per-program utterance lists (row p -> alphabet indices).
        by_prog = self.consistency.T
        counts = by_prog.sum(axis=1)
        self._utt_indptr = np.concatenate([[0], np.cumsum(counts)])
        self._utt_data = np.nonzero(by_prog)[1].astype(np.int32)

    # -- lookups ---------------------------------------------------------

    def utt_index(self, u: Utterance) -> int:
        """Alphabet index of ``u``, or -1 when no program supports it."""
        return self._utt_index.get(u, -1)

    def spec_indices(self, spec: Iterable[Utterance]) -> np.ndarray:
        return np.asarray([self.utt_index(u) for u in spec], dtype=np.int64)

    def program_index(self, choices: Sequence[int]) -> int:
        """Canonical index of a choice vector, or -1 if it is not in the space."""
        if not isinstance(choices, tuple):
            choices = tuple(int(c) for c in choices)
        return self._index_by_choices.get(choices, -1)

    def is_member(self, choices: Sequence[int]) -> bool:
        return self.program_index(choices) >= 0

    def same_pattern(self, a: Sequence[int], b: Sequence[int]) -> bool:
        """Whether two member programs render the same pattern."""
        ia, ib = self.program_index(a), self.program_index(b)
        if ia < 0 or ib < 0:
            raise ValueError("both programs must belong to the space")
        return bool(self.pattern_class[ia] == self.pattern_class[ib])

    def choices_of(self, index: int) -> tuple[int, ...]:
        return tuple(int(c) for c in self.programs[index])

    def utterances_of(self, index: int) -> np.ndarray:
        """Alphabet indices of every utterance true of program ``index``."""
        return self._utt_data[self._utt_indptr[index] : self._utt_indptr[index + 1]]

    def grid(self, index: int) -> dsl.Grid:
        if self.grids is None:
            raise ValueError("this space carries no rendered grids")
        return dsl.Grid(self.grids[0][index], self.grids[1][index])

    # -- masks and counts --------------------------------------------------

    def consistent_mask(self, spec: Iterable[Utterance]) -> np.ndarray:
        """Boolean mask over programs consistent with every reveal in ``spec``."""
        mask = np.ones(self.n_programs, dtype=bool)
        for u in spec:
            i = self.utt_index(u)
            if i < 0:
                return np.zeros(self.n_programs, dtype=bool)
            mask &= self.consistency[i]
        return mask

    def choice_counts(self, mask: np.ndarray) -> list[np.ndarray]:
        """Per-nonterminal histograms of choices among ``mask`` programs."""
        sub = self.programs[mask]
        return [
            np.bincount(sub[:, i], minlength=a).astype(np.int64)
            for i, a in enumerate(self.arities)
        ]

    def slot(self, factor: int, choice: int) -> int:
        return int(self.slot_offsets[factor]) + int(choice)

    def split_slots(self, flat: np.ndarray) -> list[np.ndarray]:
        """Split a ``(..., n_slots)`` array into per-factor blocks."""
        return [
            flat[..., self.slot_offsets[i] : self.slot_offsets[i + 1]]
            for i in range(self.n_factors)
        ]


@lru_cache(maxsize=1)
def box_space() -> ProgramSpace:
    """The full box-grammar space: 28,296 programs over a 343-utterance alphabet."""
    programs = dsl.enumerate_programs()
    objects, colours = dsl.render_all(programs)

    alphabet: list[Utterance] = []
    for obj in range(len(dsl.OBJECTS)):
        n_colours = 1 if obj == dsl.PEBBLE else len(dsl.COLOURS)
        for colour in range(n_colours):
            cell_any = ((objects == obj) & (colours == colour)).any(axis=0)
            for x, y in zip(*np.nonzero(cell_any)):
                alphabet.append(Utterance(int(x), int(y), obj, colour))
    alphabet.sort(key=Utterance.sort_key)

    consistency = np.empty((len(alphabet), programs.shape[0]), dtype=bool)
    for i, u in enumerate(alphabet):
        col = objects[:, u.x, u.y] == u.obj
        if u.obj != dsl.PEBBLE:
            col &= colours[:, u.x, u.y] == u.colour
        consistency[i] = col

    return ProgramSpace(
        dsl.ARITIES,
        programs,
        alphabet,
        consistency,
        nonterminals=dsl.NONTERMINALS,
        grids=(objects, colours),
    )
