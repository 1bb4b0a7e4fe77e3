"""Exception hierarchy.

Input errors (bad parameters, malformed files) are distinguished from
construction failures (legitimate FAIL outcomes of the randomized algorithm,
or a column deletion that guts the matrix) and from internal-consistency
errors that indicate a bug or numeric drift.
"""


class IncDisjunctError(Exception):
    """Base class for all package errors."""


class InputError(IncDisjunctError, ValueError):
    """Invalid parameters, index sets, or file contents."""


class ConstructionFail(IncDisjunctError):
    """A construction could not produce a usable matrix.

    This is a legitimate outcome (not a bug): the randomized construction
    may exceed its violated-set budget, and column deletion may leave too
    few columns behind.
    """

    def __init__(self, message, *, violated_count=None, threshold=None, witnesses=None):
        super().__init__(message)
        self.violated_count = violated_count
        self.threshold = threshold
        self.witnesses = witnesses or []


class MonteCarloFail(ConstructionFail):
    """The randomized construction returned FAIL for this seed."""


class InternalConsistencyError(IncDisjunctError):
    """An invariant the algorithms guarantee was observed broken."""
