"""Pragmatic example-based synthesis of grid-pattern programs.

Core pieces: the box-drawing DSL and its enumerated program space, exact
and mean-field listener/speaker models, a learned factored listener,
best-first program search, machine speakers, an evaluation harness, and
an interactive reference-game service.
"""

from .dsl import (
    ARITIES,
    GRID_SIZE,
    NONTERMINALS,
    Grid,
    Utterance,
    consistent,
    enumerate_programs,
    is_valid_program,
    render,
    valid_utterances,
)
from .errors import EmptyCandidateSet, NoConsistentProgram, TrialFormatError, UnknownListener
from .factored import (
    FactoredDistribution,
    factored_lexicon,
    factored_literal,
    factored_pragmatic,
    factored_speaker_utt,
    program_probability,
)
from .joint import joint_literal, joint_pragmatic, joint_speaker_spec, joint_speaker_utt
from .listeners import LISTENER_IDS, make_listener
from .neural import ListenerNet, TrainConfig, encode, neural_pragmatic, train
from .search import SearchConfig, SearchResult, best_first_search, ranked_stream
from .space import ProgramSpace, box_space
from .speakers import SpeakerConfig, speak_literal, speak_pragmatic

__all__ = [
    "ARITIES",
    "GRID_SIZE",
    "NONTERMINALS",
    "Grid",
    "Utterance",
    "consistent",
    "enumerate_programs",
    "is_valid_program",
    "render",
    "valid_utterances",
    "EmptyCandidateSet",
    "NoConsistentProgram",
    "TrialFormatError",
    "UnknownListener",
    "FactoredDistribution",
    "factored_lexicon",
    "factored_literal",
    "factored_pragmatic",
    "factored_speaker_utt",
    "program_probability",
    "joint_literal",
    "joint_pragmatic",
    "joint_speaker_spec",
    "joint_speaker_utt",
    "LISTENER_IDS",
    "make_listener",
    "ListenerNet",
    "TrainConfig",
    "encode",
    "neural_pragmatic",
    "train",
    "SearchConfig",
    "SearchResult",
    "best_first_search",
    "ranked_stream",
    "ProgramSpace",
    "box_space",
    "SpeakerConfig",
    "speak_literal",
    "speak_pragmatic",
]

__version__ = "0.1.0"
