"""Exception hierarchy for pldyn.

Numerical failures raise subclasses of :class:`PldynError` so callers (and the
CLI) can distinguish them from input/validation problems, which raise plain
``ValueError``/``KeyError``.
"""
from __future__ import annotations

__all__ = [
    "PldynError",
    "SingularPieceError",
    "DegenerateBasisError",
    "MarginalEigenvalueError",
    "NoPredecessorError",
    "NoCandidateError",
    "NonInvertibleError",
    "RepeatedEigenvalueError",
    "UnitEigenvalueError",
    "NoBorderCrossingError",
    "DivergenceError",
]


class PldynError(Exception):
    """Base class for numerical failures in pldyn."""


class SingularPieceError(PldynError):
    """The Jacobian of an affine piece is singular (|det| below tolerance)."""


class DegenerateBasisError(PldynError):
    """The (generalized) eigenbasis is singular beyond Jordan-chain handling."""


class MarginalEigenvalueError(PldynError):
    """An eigenvalue modulus lies inside the marginal band around 1."""


class NoPredecessorError(PldynError):
    """Backtracking exhausted its search without a self-consistent predecessor.

    Attributes
    ----------
    tried : int
        Number of candidate regions probed.
    best_residual : float
        Smallest forward-check residual seen (relative).
    """

    def __init__(self, message: str, *, tried: int = 0, best_residual: float = float("inf")):
        super().__init__(message)
        self.tried = tried
        self.best_residual = best_residual


class NoCandidateError(PldynError):
    """The cycle-candidate linear system is singular for a region sequence."""


class NonInvertibleError(PldynError):
    """The map fails the invertibility sign condition needed for this operation."""


class RepeatedEigenvalueError(PldynError):
    """Closed-form matrix powers require distinct eigenvalues."""


class UnitEigenvalueError(PldynError):
    """An eigenvalue equal to 1 makes the requested closed form undefined."""


class NoBorderCrossingError(PldynError):
    """An eigenline does not cross the switching border."""


class DivergenceError(PldynError):
    """A trajectory diverged. Carries any partial estimates computed so far.

    Attributes
    ----------
    partial : object
        Partial result (for example partial Lyapunov sums), or ``None``.
    step : int
        Step index at which divergence was detected.
    """

    def __init__(self, message: str, *, partial=None, step: int = -1):
        super().__init__(message)
        self.partial = partial
        self.step = step
