"""Trial generation, ingestion, and the speaker-by-listener accuracy matrix.

A trial is one communication episode: a target program, the ordered
reveals a speaker produced for it, and the speaker's source tag. Each
listener is scored by the smallest reveal prefix after which it
identifies the target; accuracy curves are the cumulative fraction of
trials identified by each prefix length.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import dsl
from .dsl import Utterance
from .errors import TrialFormatError
from .factored import FactoredDistribution, factored_literal, factored_pragmatic
from .joint import joint_literal, joint_pragmatic
from .listeners import ListenerModel
from .space import ProgramSpace
from .speakers import SpeakerConfig, speak

SOURCES = ("machine_literal", "machine_pragmatic", "human_literal", "human_pragmatic")


@dataclass(frozen=True)
class Trial:
    target: tuple[int, ...]
    utterances: tuple[Utterance, ...]
    source: str

    def to_json(self) -> dict:
        return {
            "target": dsl.program_to_json(self.target),
            "utterances": dsl.spec_to_json(self.utterances),
            "source": self.source,
        }


@dataclass(frozen=True)
class CurvePoint:
    listener: str
    speaker: str
    n: int
    accuracy: float
    n_trials: int


def generate_trials(
    space: ProgramSpace,
    n_targets: int,
    kind: str,
    seed: int = 0,
    max_len: int = 15,
) -> list[Trial]:
    """Sample targets uniformly and speak a spec for each; deterministic per seed.

    The same (seed, n_targets) yields the same targets for both speaker
    kinds, so literal/pragmatic curves are comparable trial for trial.
    """
    rng = np.random.default_rng(seed)
    targets = rng.integers(0, space.n_programs, size=n_targets)
    spec_seeds = rng.integers(0, 2**31, size=n_targets)
    source = "machine_literal" if kind == "literal" else "machine_pragmatic"
    out = []
    for t, s in zip(targets, spec_seeds):
        choices = space.choices_of(int(t))
        utts = speak(space, choices, SpeakerConfig(kind, max_len, int(s)))
        out.append(Trial(choices, tuple(utts), source))
    return out


def write_trials(path: str, trials: Iterable[Trial]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in trials:
            fh.write(json.dumps(t.to_json()) + "\n")


def ingest_trials(path: str) -> list[Trial]:
    """Read a trial-per-line JSON file, dedup reveals, and validate.

    Repeat reveals of a cell are dropped keeping the first occurrence.
    A malformed record or a reveal that is false of its trial's target
    raises :class:`TrialFormatError` naming the offending line.
    """
    trials = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
                target = dsl.program_from_json(raw["target"])
                utterances = dsl.dedup_spec(dsl.spec_from_json(raw["utterances"]))
                source = raw["source"]
            except (KeyError, TypeError, ValueError) as exc:
                raise TrialFormatError(line_no, f"malformed record: {exc}") from exc
            if source not in SOURCES:
                raise TrialFormatError(line_no, f"unknown source {source!r}")
            if not dsl.is_valid_program(target):
                raise TrialFormatError(line_no, f"invalid target {list(target)}")
            grid = dsl.render(target)
            for u in utterances:
                cell = grid.cell(u.x, u.y)
                if cell is None or cell[0] != u.obj or (u.obj != dsl.PEBBLE and cell[1] != u.colour):
                    raise TrialFormatError(
                        line_no, f"utterance {u.to_json()} is inconsistent with the target"
                    )
            trials.append(Trial(target, tuple(utterances), source))
    return trials


def run_trial(trial: Trial, listener: ListenerModel) -> int | None:
    """Smallest prefix length identifying the trial's target, else None."""
    return listener.identify_first(list(trial.utterances), trial.target)


def run_matrix(
    trials: Sequence[Trial],
    listeners: Sequence[ListenerModel],
    max_n: int | None = None,
) -> list[CurvePoint]:
    """Cumulative accuracy per (listener, speaker source, prefix length).

    Accuracy at ``n`` is the fraction of that source's trials identified
    within the first ``n`` reveals, so curves are monotone by
    construction.
    """
    by_source: dict[str, list[Trial]] = {}
    for t in trials:
        by_source.setdefault(t.source, []).append(t)

    points = []
    for listener in listeners:
        for source in SOURCES:
            group = by_source.get(source)
            if not group:
                continue
            results = [run_trial(t, listener) for t in group]
            horizon = max_n or max(len(t.utterances) for t in group)
            for n in range(1, horizon + 1):
                solved = sum(1 for r in results if r is not None and r <= n)
                points.append(
                    CurvePoint(listener.listener_id, source, n, solved / len(group), len(group))
                )
    return points


def curves_to_csv(points: Sequence[CurvePoint], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["listener", "speaker", "n", "accuracy", "n_trials"])
        for p in points:
            writer.writerow([p.listener, p.speaker, p.n, f"{p.accuracy:.6f}", p.n_trials])


def curves_from_csv(path: str) -> list[CurvePoint]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(
                CurvePoint(
                    row["listener"], row["speaker"], int(row["n"]),
                    float(row["accuracy"]), int(row["n_trials"]),
                )
            )
    return out


def marginal_report(
    space: ProgramSpace,
    spec: Sequence[Utterance],
    pair: tuple[int, int] | tuple[str, str],
    target: Sequence[int] | None = None,
    exclude_revealed: bool | None = None,
) -> dict:
    """Two-nonterminal comparison tables: exact joint marginals next to
    factored outer products, for the literal and pragmatic listeners.

    Raises :class:`NoConsistentProgram` when the spec contradicts every
    program.
    """
    a, b = (_nonterminal_index(space, x) for x in pair)

    def joint_table(probs: np.ndarray) -> np.ndarray:
        table = np.zeros((space.arities[a], space.arities[b]))
        np.add.at(table, (space.programs[:, a], space.programs[:, b]), probs)
        return table

    def outer_table(q: FactoredDistribution) -> np.ndarray:
        return np.outer(q.factors[a], q.factors[b])

    lit = joint_literal(space, spec)
    prag = joint_pragmatic(space, spec, exclude_revealed)
    lit_f = factored_literal(space, spec)
    prag_f = factored_pragmatic(space, spec, exclude_revealed)

    report = {
        "pair": [space.nonterminals[a], space.nonterminals[b]],
        "spec": dsl.spec_to_json(spec),
        "tables": {
            "J0": joint_table(lit).tolist(),
            "J1": joint_table(prag).tolist(),
            "F0": outer_table(lit_f).tolist(),
            "F1": outer_table(prag_f).tolist(),
        },
        "target_cell": None,
    }
    if target is not None:
        report["target_cell"] = [int(target[a]), int(target[b])]
    return report


def _nonterminal_index(space: ProgramSpace, key: int | str) -> int:
    if isinstance(key, str):
        try:
            return space.nonterminals.index(key)
        except ValueError:
            raise ValueError(f"unknown nonterminal {key!r}; expected one of {space.nonterminals}")
    return int(key)


def export_joint_csv(probs: np.ndarray, path: str) -> None:
    """Dump a program-space distribution as (program_index, probability) rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["program_index", "probability"])
        for i, p in enumerate(probs):
            writer.writerow([i, f"{float(p):.12g}"])
