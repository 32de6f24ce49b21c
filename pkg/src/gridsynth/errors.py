"""Exception types shared across the inference modules."""


class NoConsistentProgram(Exception):
    """No program in the space is consistent with the given specification."""


class EmptyCandidateSet(Exception):
    """A speaker has no utterance left to choose from."""


class UnknownListener(Exception):
    """Listener id is not one of the registered models."""


class TrialFormatError(Exception):
    """A trial record failed to parse or validate."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason
