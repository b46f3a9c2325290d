"""Predecessor search: invert one step of a piecewise-linear map.

Piecewise-linear maps are generally not injective, and a successor state does
not reveal which region its predecessor lived in. ``backtrack`` searches
candidate regions in a fixed order -- the successor's own region, the region
of the first solution found, recently successful regions, then bit flips of
increasing depth -- and accepts the first candidate that actually maps back
onto the given state.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoPredecessorError, SingularPieceError
from .models import PiecewiseModel, RegionCode

__all__ = [
    "invert_in_region",
    "BacktrackContext",
    "backtrack",
    "backward_orbit",
]

logger = logging.getLogger(__name__)

SELF_CONSISTENCY_TOL = 1e-9
POOL_SIZE = 64
MAX_FLIP_DEPTH = 3


def invert_in_region(
    model: PiecewiseModel, z_next: np.ndarray, region: RegionCode
) -> tuple[np.ndarray, float]:
    """Solve ``J z + b = z_next`` for the affine piece of ``region``.

    Returns ``(z, det_sign)``. Raises :class:`SingularPieceError` when the
    piece Jacobian is (numerically) singular.
    """
    piece = model.affine_piece(region)
    sign, logabs = np.linalg.slogdet(piece.J)
    if sign == 0.0 or logabs < math.log(1e-300):
        raise SingularPieceError(f"piece {region} has singular Jacobian")
    try:
        z = np.linalg.solve(piece.J, np.asarray(z_next, dtype=float) - piece.b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - slogdet screens first
        raise SingularPieceError(f"piece {region} has singular Jacobian") from exc
    return z, float(sign)


@dataclass
class BacktrackContext:
    """Most-recently-used pool of regions that produced valid predecessors."""

    pool: list[RegionCode] = field(default_factory=list)
    capacity: int = POOL_SIZE

    def push(self, region: RegionCode) -> None:
        if region in self.pool:
            self.pool.remove(region)
        self.pool.insert(0, region)
        del self.pool[self.capacity :]

    def candidates(self) -> tuple[RegionCode, ...]:
        return tuple(self.pool)


def _candidate_regions(
    model: PiecewiseModel,
    z_next: np.ndarray,
    context: BacktrackContext | None,
    max_flip: int,
):
    """Yield candidate regions lazily, updating the flip base as we go.

    Yields ``(region, set_base_callback)`` pairs; the caller reports each
    solved candidate's region back so later bit flips start from the most
    recent solution rather than from the stale initial guess.
    """
    state = {"base": model.region_of(z_next)}

    def set_base(r: RegionCode) -> None:
        state["base"] = r

    yield state["base"], set_base
    # Candidate-region retry: region of the first solution, reported via
    # set_base by the caller.
    yield None, set_base  # sentinel: caller substitutes region_of(candidate)
    if context is not None:
        for r in context.candidates():
            yield r, set_base
    free = model.free_bit_positions()
    for depth in range(1, max_flip + 1):
        for combo in itertools.combinations(free, depth):
            yield state["base"].flip(combo), set_base
    # Last resort for small region sets: sweep everything remaining.
    try:
        remaining = model.all_regions()
    except ValueError:
        return
    for r in remaining:
        yield r, set_base


def backtrack(
    model: PiecewiseModel,
    z_next: np.ndarray,
    *,
    context: BacktrackContext | None = None,
    tol: float = SELF_CONSISTENCY_TOL,
    max_flip: int = MAX_FLIP_DEPTH,
) -> np.ndarray:
    """Find a predecessor of ``z_next`` under ``model.step``.

    A candidate ``z`` is accepted iff ``||step(z) - z_next|| <= tol (1 +
    ||z_next||)``, regardless of which region's piece produced it. Raises
    :class:`NoPredecessorError` when every candidate region fails, carrying
    the number of regions tried and the best residual seen.
    """
    z_next = np.asarray(z_next, dtype=float)
    model.validate_point(z_next)
    scale = 1.0 + float(np.linalg.norm(z_next))
    start_region = model.region_of(z_next)
    start_sign = None

    tried: set[RegionCode] = set()
    n_tried = 0
    best_residual = math.inf
    first_candidate_region: RegionCode | None = None

    gen = _candidate_regions(model, z_next, context, max_flip)
    for region, set_base in gen:
        if region is None:
            region = first_candidate_region
            if region is None:
                continue
        if region in tried:
            continue
        tried.add(region)
        n_tried += 1
        try:
            z, det_sign = invert_in_region(model, z_next, region)
        except SingularPieceError:
            continue
        actual = model.region_of(z)
        if first_candidate_region is None:
            first_candidate_region = actual
        set_base(actual)
        residual = float(np.linalg.norm(model.step(z) - z_next))
        if residual < best_residual:
            best_residual = residual
        if residual <= tol * scale:
            if context is not None:
                context.push(region)
            if start_sign is None:
                try:
                    _, start_sign = invert_in_region(model, z_next, start_region)
                except SingularPieceError:
                    start_sign = 0.0
            if det_sign != start_sign:
                logger.warning(
                    "predecessor found in region %s with opposite Jacobian "
                    "orientation to region %s; a second preimage may exist",
                    region,
                    start_region,
                )
            return z
    raise NoPredecessorError(
        f"no predecessor found for state within tol={tol:g} "
        f"after trying {n_tried} regions",
        tried=n_tried,
        best_residual=best_residual,
    )


def backward_orbit(
    model: PiecewiseModel,
    z: np.ndarray,
    n: int,
    *,
    context: BacktrackContext | None = None,
    tol: float = SELF_CONSISTENCY_TOL,
) -> np.ndarray:
    """Iterate ``backtrack`` ``n`` times; row 0 is ``z``, row k is ``z_{-k}``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if context is None:
        context = BacktrackContext()
    z = np.asarray(z, dtype=float)
    out = np.empty((n + 1, z.size))
    out[0] = z
    for k in range(1, n + 1):
        out[k] = backtrack(model, out[k - 1], context=context, tol=tol)
    return out
