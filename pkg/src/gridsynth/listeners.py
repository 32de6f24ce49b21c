"""Estimator-style wrappers around the six listener models.

Ids follow the evaluation shorthand: ``J`` joint (exact posterior over
the whole program space), ``F`` factored (mean-field), ``N`` neural
(learned factored); suffix ``0`` literal, ``1`` pragmatic. All six share
one interface: fit once against the enumerated space, then query
posteriors, synthesize programs, or scan a spec's prefixes for the first
point of identification.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from . import dsl, joint
from .dsl import Utterance
from .errors import UnknownListener
from .factored import (
    FactoredDistribution,
    factored_literal,
    factored_pragmatic,
    iter_factored_prefixes,
)
from .neural import ListenerNet, TrainConfig, neural_pragmatic, train
from .neural import iter_neural_prefixes as _iter_neural_prefixes
from .search import SearchConfig, best_first_search
from .space import ProgramSpace, box_space

Spec = Sequence[Utterance]


class ListenerModel(BaseEstimator):
    """Shared surface of all listeners. Subclasses set ``listener_id``."""

    listener_id = ""
    is_factored = True

    def fit(self, X=None, y=None) -> "ListenerModel":
        """Bind the enumerated program space (builds it on first use)."""
        self.space_: ProgramSpace = box_space()
        return self

    def _check_fitted(self) -> ProgramSpace:
        if not hasattr(self, "space_"):
            raise RuntimeError(f"{type(self).__name__} is not fitted; call fit() first")
        return self.space_

    def _check_spec(self, spec: Spec) -> Spec:
        dsl.check_spec(spec)
        return spec

    # -- to implement ------------------------------------------------------

    def posterior(self, spec: Spec):
        raise NotImplementedError

    def iter_prefix_posteriors(self, spec: Spec) -> Iterator:
        """Posterior after each prefix spec[:1] .. spec[:n]."""
        raise NotImplementedError

    def synthesize(self, spec: Spec) -> tuple[int, ...] | None:
        """The model's single best program for ``spec`` (None if search fails)."""
        raise NotImplementedError

    def guesses(self, spec: Spec, k: int = 5) -> list[tuple[tuple[int, ...], float]]:
        """Top ``k`` spec-consistent programs with scores, best first."""
        raise NotImplementedError

    # -- shared ------------------------------------------------------------

    def predict(self, X: Iterable[Spec]) -> list[tuple[int, ...] | None]:
        """Synthesize one program per spec."""
        return [self.synthesize(spec) for spec in X]

    def identify_first(self, utterances: Spec, target: Sequence[int]) -> int | None:
        """Smallest prefix length after which the model identifies ``target``.

        Joint models guess by tie-broken posterior argmax; factored models
        by the budgeted best-first search. A guess identifies the target
        when it denotes the same pattern: programs with identical
        renderings cannot be separated by any reveal, so identification is
        judged at the pattern level. Returns None when no prefix suffices.
        """
        space = self._check_fitted()
        t_idx = space.program_index(target)
        if t_idx < 0:
            raise ValueError(f"not a program in this space: {tuple(target)}")
        t_class = space.pattern_class[t_idx]
        for n, guess in enumerate(self._iter_prefix_guesses(utterances), start=1):
            if guess >= 0 and space.pattern_class[guess] == t_class:
                return n
        return None

    def _iter_prefix_guesses(self, utterances: Spec) -> Iterator[int]:
        raise NotImplementedError


class _JointListener(ListenerModel):
    is_factored = False

    def __init__(self, exclude_revealed: bool | None = None):
        self.exclude_revealed = exclude_revealed

    def synthesize(self, spec: Spec) -> tuple[int, ...]:
        space = self._check_fitted()
        return space.choices_of(joint.argmax_program(space, self.posterior(spec)))

    def guesses(self, spec: Spec, k: int = 5):
        space = self._check_fitted()
        probs = self.posterior(spec)
        return [(space.choices_of(i), p) for i, p in joint.top_k_programs(space, probs, k)]

    def _iter_prefix_guesses(self, utterances: Spec) -> Iterator[int]:
        space = self._check_fitted()
        for probs in self.iter_prefix_posteriors(utterances):
            yield joint.argmax_program(space, probs)


class JointLiteralListener(_JointListener):
    """Uniform posterior over consistent programs (id ``J0``)."""

    listener_id = "J0"

    def posterior(self, spec: Spec) -> np.ndarray:
        return joint.joint_literal(self._check_fitted(), self._check_spec(spec))

    def iter_prefix_posteriors(self, spec: Spec) -> Iterator[np.ndarray]:
        space = self._check_fitted()
        mask = np.ones(space.n_programs, dtype=bool)
        for u in spec:
            i = space.utt_index(u)
            mask = mask & space.consistency[i] if i >= 0 else np.zeros_like(mask)
            total = mask.sum()
            if total == 0:
                raise joint.NoConsistentProgram("no consistent program for this prefix")
            yield mask / total


class JointPragmaticListener(_JointListener):
    """Posterior proportional to the speaker's spec probability (id ``J1``)."""

    listener_id = "J1"

    def posterior(self, spec: Spec) -> np.ndarray:
        return joint.joint_pragmatic(
            self._check_fitted(), self._check_spec(spec), self.exclude_revealed
        )

    def iter_prefix_posteriors(self, spec: Spec) -> Iterator[np.ndarray]:
        return joint.iter_joint_prefixes(self._check_fitted(), spec, self.exclude_revealed)


class _FactoredListener(ListenerModel):
    def __init__(self, budget: int = 50, exclude_revealed: bool | None = None):
        self.budget = budget
        self.exclude_revealed = exclude_revealed

    def synthesize(self, spec: Spec) -> tuple[int, ...] | None:
        space = self._check_fitted()
        result = best_first_search(
            space, self.posterior(spec), spec, SearchConfig(self.budget)
        )
        return result.program

    def guesses(self, spec: Spec, k: int = 5):
        # Equivalent to filtering the best-first stream down to programs
        # consistent with the spec, but scored directly over the consistent
        # set so low-ranked guesses are still found.
        space = self._check_fitted()
        q = self.posterior(spec)
        idx = np.flatnonzero(space.consistent_mask(spec))
        if idx.size == 0:
            return []
        sub = space.programs[idx]
        scores = np.zeros(idx.size)
        with np.errstate(divide="ignore"):
            for i in range(space.n_factors):
                scores += np.log(q.factors[i])[sub[:, i]]
        keep = np.isfinite(scores)
        idx, scores, sub = idx[keep], scores[keep], sub[keep]
        order = np.lexsort(tuple(sub[:, i] for i in range(sub.shape[1] - 1, -1, -1)) + (-scores,))
        return [
            (space.choices_of(int(idx[i])), float(np.exp(scores[i]))) for i in order[:k]
        ]

    def _iter_prefix_guesses(self, utterances: Spec) -> Iterator[int]:
        space = self._check_fitted()
        cfg = SearchConfig(self.budget)
        for n, q in enumerate(self.iter_prefix_posteriors(utterances), start=1):
            result = best_first_search(space, q, utterances[:n], cfg)
            yield space.program_index(result.program) if result.found else -1


class FactoredLiteralListener(_FactoredListener):
    """Mean-field literal listener: exact consistent-set marginals (id ``F0``)."""

    listener_id = "F0"

    def posterior(self, spec: Spec) -> FactoredDistribution:
        return factored_literal(self._check_fitted(), self._check_spec(spec))

    def iter_prefix_posteriors(self, spec: Spec) -> Iterator[FactoredDistribution]:
        space = self._check_fitted()
        mask = np.ones(space.n_programs, dtype=bool)
        for u in spec:
            i = space.utt_index(u)
            mask = mask & space.consistency[i] if i >= 0 else np.zeros_like(mask)
            total = int(mask.sum())
            if total == 0:
                raise joint.NoConsistentProgram("no consistent program for this prefix")
            yield FactoredDistribution(
                [c / total for c in space.choice_counts(mask)], normalize=True
            )


class FactoredPragmaticListener(_FactoredListener):
    """Mean-field pragmatic listener over exact literal factors (id ``F1``)."""

    listener_id = "F1"

    def posterior(self, spec: Spec) -> FactoredDistribution:
        return factored_pragmatic(
            self._check_fitted(), self._check_spec(spec), self.exclude_revealed
        )

    def iter_prefix_posteriors(self, spec: Spec) -> Iterator[FactoredDistribution]:
        return iter_factored_prefixes(self._check_fitted(), spec, self.exclude_revealed)


class _NeuralListener(_FactoredListener):
    def __init__(
        self,
        net: ListenerNet | None = None,
        model_path: str | None = None,
        train_config: TrainConfig | None = None,
        budget: int = 50,
        exclude_revealed: bool | None = None,
    ):
        super().__init__(budget=budget, exclude_revealed=exclude_revealed)
        self.net = net
        self.model_path = model_path
        self.train_config = train_config

    def fit(self, X=None, y=None) -> "_NeuralListener":
        """Resolve the net: use the given one, load a checkpoint, or train."""
        super().fit(X, y)
        if self.net is not None:
            self.net_ = self.net
        elif self.model_path is not None:
            self.net_ = ListenerNet.load(self.model_path)
        elif self.train_config is not None:
            self.net_, _ = train(self.space_, self.train_config)
        else:
            raise ValueError("neural listener needs a net, a model_path, or a train_config")
        return self


class NeuralLiteralListener(_NeuralListener):
    """Learned factored literal listener (id ``N0``)."""

    listener_id = "N0"

    def posterior(self, spec: Spec) -> FactoredDistribution:
        self._check_fitted()
        return self.net_.predict(self._check_spec(spec))

    def iter_prefix_posteriors(self, spec: Spec) -> Iterator[FactoredDistribution]:
        self._check_fitted()
        for n in range(1, len(spec) + 1):
            yield self.net_.predict(spec[:n])


class NeuralPragmaticListener(_NeuralListener):
    """Pragmatic recursion on top of the learned literal listener (id ``N1``)."""

    listener_id = "N1"

    def posterior(self, spec: Spec) -> FactoredDistribution:
        return neural_pragmatic(
            self.net_, self._check_fitted(), self._check_spec(spec), self.exclude_revealed
        )

    def iter_prefix_posteriors(self, spec: Spec) -> Iterator[FactoredDistribution]:
        return _iter_neural_prefixes(
            self.net_, self._check_fitted(), spec, self.exclude_revealed
        )


LISTENER_CLASSES: dict[str, type[ListenerModel]] = {
    "J0": JointLiteralListener,
    "J1": JointPragmaticListener,
    "F0": FactoredLiteralListener,
    "F1": FactoredPragmaticListener,
    "N0": NeuralLiteralListener,
    "N1": NeuralPragmaticListener,
}
LISTENER_IDS = tuple(LISTENER_CLASSES)


def make_listener(
    listener_id: str,
    net: ListenerNet | None = None,
    model_path: str | None = None,
    budget: int = 50,
    exclude_revealed: bool | None = None,
) -> ListenerModel:
    """Construct and fit a listener by id; neural ids need a net or checkpoint."""
    cls = LISTENER_CLASSES.get(listener_id)
    if cls is None:
        raise UnknownListener(f"unknown listener {listener_id!r}; expected one of {LISTENER_IDS}")
    if issubclass(cls, _NeuralListener):
        model = cls(net=net, model_path=model_path, budget=budget, exclude_revealed=exclude_revealed)
    elif issubclass(cls, _FactoredListener):
        model = cls(budget=budget, exclude_revealed=exclude_revealed)
    else:
        model = cls(exclude_revealed=exclude_revealed)
    return model.fit()
