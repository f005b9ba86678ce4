"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: UsageError -> 2, SolverFailure -> 3,
I/O errors -> 4.
"""


class UsageError(ValueError):
    """Bad arguments, malformed configuration, or violated preconditions."""


class DegenerateInputError(UsageError):
    """Input data that admits no well-defined answer (e.g. collinear hull points)."""


class SolverFailure(RuntimeError):
    """The convex solver did not converge to the requested tolerance."""


class NumericError(RuntimeError):
    """Non-finite or otherwise unusable intermediate numerics."""
