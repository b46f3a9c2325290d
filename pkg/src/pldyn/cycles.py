"""Fixed points and periodic orbits of piecewise-linear maps.

Within a fixed sequence of regions the composed map is affine, so a candidate
k-cycle is the solution of one linear system ``(I - J_k ... J_1) z = b``. The
solution is only a genuine cycle if each iterate actually lies in the region
it was assumed to be in; otherwise the assumed sequence is replaced by the
observed one and the solve repeats until it is self-consistent or starts to
loop.

Sequence enumeration is exhaustive over necklaces (cyclic-shift equivalence
classes) when the sequence space is small, and randomized -- seeded from
regions visited by pilot trajectories -- otherwise.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import MarginalEigenvalueError, SingularPieceError
from .models import AffinePiece, PiecewiseModel, RegionCode

__all__ = [
    "Cycle",
    "compose_pieces",
    "solve_cycle_candidate",
    "classify_multipliers",
    "find_cycles",
    "find_fixed_points",
]

EXHAUSTIVE_CAP = 2**14
DEDUP_TOL = 1e-6
MINIMALITY_TOL = 1e-7
MARGINAL_TOL = 1e-9
SOLVE_SINGULAR_LOG = math.log(1e-12)


@dataclass(frozen=True)
class Cycle:
    """A periodic orbit, stored from its canonical starting point."""

    points: np.ndarray  # (period, M)
    regions: tuple[RegionCode, ...]
    multipliers: np.ndarray  # eigenvalues of the composed Jacobian
    kind: str  # "attractor" | "repeller" | "saddle" | "marginal"
    virtual: bool = False

    @property
    def period(self) -> int:
        return len(self.regions)

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        seq = "|".join(str(r) for r in self.regions)
        return (
            f"Cycle(period={self.period}, kind={self.kind!r}, regions={seq}, "
            f"virtual={self.virtual})"
        )


def compose_pieces(
    model: PiecewiseModel, regions: tuple[RegionCode, ...]
) -> AffinePiece:
    """Affine map of one full traversal: piece of ``regions[0]`` applied first."""
    if not regions:
        raise ValueError("regions must be non-empty")
    J = np.eye(model.dim)
    b = np.zeros(model.dim)
    for r in regions:
        piece = model.affine_piece(r)
        J = piece.J @ J
        b = piece.J @ b + piece.b
    return AffinePiece(J=J, b=b, region=regions[0])


def solve_cycle_candidate(
    model: PiecewiseModel, regions: tuple[RegionCode, ...]
) -> np.ndarray:
    """Fixed point of the composed affine map of ``regions``.

    Raises :class:`SingularPieceError` when the composed map has an eigenvalue
    (numerically) equal to 1, i.e. no isolated fixed point exists.
    """
    comp = compose_pieces(model, regions)
    A = np.eye(model.dim) - comp.J
    sign, logabs = np.linalg.slogdet(A)
    if sign == 0.0 or logabs < SOLVE_SINGULAR_LOG * model.dim:
        raise SingularPieceError(
            "composed map has a unit eigenvalue; cycle candidate is degenerate"
        )
    return np.linalg.solve(A, comp.b)


def classify_multipliers(
    multipliers: np.ndarray, *, marginal_tol: float = MARGINAL_TOL
) -> str:
    """Label a cycle from its Floquet multipliers.

    Raises :class:`MarginalEigenvalueError` if any multiplier modulus lies in
    the band ``[1 - marginal_tol, 1 + marginal_tol]``.
    """
    mags = np.abs(np.asarray(multipliers))
    if np.any((mags >= 1.0 - marginal_tol) & (mags <= 1.0 + marginal_tol)):
        raise MarginalEigenvalueError(
            "multiplier modulus within %g of 1; stability is undecidable"
            % marginal_tol
        )
    if np.all(mags < 1.0):
        return "attractor"
    if np.all(mags > 1.0):
        return "repeller"
    return "saddle"


def _orbit_and_regions(
    model: PiecewiseModel, z0: np.ndarray, regions: tuple[RegionCode, ...]
) -> tuple[np.ndarray, tuple[RegionCode, ...]]:
    """Iterate the assumed pieces from ``z0``; report observed regions."""
    m = len(regions)
    pts = np.empty((m, model.dim))
    observed = []
    z = np.asarray(z0, dtype=float)
    for k in range(m):
        pts[k] = z
        observed.append(model.region_of(z))
        z = model.affine_piece(regions[k]).apply(z)
    return pts, tuple(observed)


def _refine_sequence(
    model: PiecewiseModel,
    regions: tuple[RegionCode, ...],
    budget: list[int],
    max_rounds: int = 50,
) -> tuple[np.ndarray, tuple[RegionCode, ...], bool] | None:
    """Solve/replace until the region sequence is self-consistent.

    Returns ``(points, regions, virtual)`` or None when the candidate is
    degenerate or the replacement iteration fails to settle. ``virtual`` is
    True when the first solve already disagreed with its assumed regions and
    never became consistent.
    """
    seen = {regions}
    first_pts: np.ndarray | None = None
    first_regions = regions
    for _ in range(max_rounds):
        if budget[0] <= 0:
            return None
        budget[0] -= 1
        try:
            z0 = solve_cycle_candidate(model, regions)
        except SingularPieceError:
            return None
        if not np.all(np.isfinite(z0)):
            return None
        pts, observed = _orbit_and_regions(model, z0, regions)
        if first_pts is None:
            first_pts = pts
        if observed == regions:
            return pts, regions, False
        if observed in seen:
            # Loop: the candidate exists only outside its assumed regions.
            return first_pts, first_regions, True
        seen.add(observed)
        regions = observed
    return first_pts, first_regions, True


def _canonical_rotation(seq: tuple[RegionCode, ...]) -> tuple[RegionCode, ...]:
    keys = [tuple(str(r) for r in seq[i:] + seq[:i]) for i in range(len(seq))]
    best = min(range(len(seq)), key=lambda i: keys[i])
    return seq[best:] + seq[:best]


def _is_primitive(seq: tuple[RegionCode, ...]) -> bool:
    m = len(seq)
    for d in range(1, m):
        if m % d == 0 and seq == seq[d % m :] + seq[: d % m]:
            return False
    return True


def _rotate_cycle(
    pts: np.ndarray, regions: tuple[RegionCode, ...]
) -> tuple[np.ndarray, tuple[RegionCode, ...]]:
    canon = _canonical_rotation(regions)
    if canon == regions:
        return pts, regions
    shift = 0
    m = len(regions)
    for i in range(m):
        if regions[i:] + regions[:i] == canon:
            shift = i
            break
    return np.roll(pts, -shift, axis=0), canon


def _same_cycle(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    if a.shape != b.shape:
        return False
    m = a.shape[0]
    for r in range(m):
        if float(np.max(np.linalg.norm(a - np.roll(b, r, axis=0), axis=1))) < tol:
            return True
    return False


def _pilot_region_pool(
    model: PiecewiseModel, rng: np.random.Generator, n_pilots: int = 8, length: int = 200
) -> list[RegionCode]:
    pool: list[RegionCode] = []
    for _ in range(n_pilots):
        z = rng.standard_normal(model.dim)
        for _ in range(length):
            pool.append(model.region_of(z))
            z = model.step(z)
            if not np.all(np.isfinite(z)) or np.linalg.norm(z) > 1e8:
                break
    if not pool:
        pool = [model.random_region(rng)]
    return pool


def _sequences_for_period(
    model: PiecewiseModel,
    m: int,
    budget: list[int],
    rng: np.random.Generator | None,
):
    """Candidate region sequences of exact structure length ``m``."""
    n_regions = model.n_regions()
    exhaustive = n_regions**m <= min(budget[0], EXHAUSTIVE_CAP)
    if exhaustive:
        for seq in itertools.product(model.all_regions(), repeat=m):
            if seq != _canonical_rotation(seq):
                continue
            if not _is_primitive(seq):
                continue
            yield seq
        return
    if rng is None:
        rng = np.random.default_rng(0)
    pool = _pilot_region_pool(model, rng)
    n_draws = max(64, budget[0] // max(1, 2 * m))
    seen: set[tuple[str, ...]] = set()
    for _ in range(n_draws):
        if budget[0] <= 0:
            return
        seq = []
        for _ in range(m):
            if rng.random() < 0.1:
                seq.append(model.random_region(rng))
            else:
                seq.append(pool[int(rng.integers(len(pool)))])
        seq = _canonical_rotation(tuple(seq))
        if not _is_primitive(seq):
            continue
        key = tuple(str(r) for r in seq)
        if key in seen:
            continue
        seen.add(key)
        yield seq


def find_cycles(
    model: PiecewiseModel,
    max_period: int,
    *,
    budget: int = 20000,
    rng: np.random.Generator | None = None,
    include_virtual: bool = False,
    dedup_tol: float = DEDUP_TOL,
) -> list[Cycle]:
    """Search for all cycles up to ``max_period``.

    ``budget`` caps the number of linear candidate solves. Results are sorted
    by ``(period, region sequence)``; each cycle's points start at the
    canonical (lexicographically minimal) rotation of its region sequence.
    """
    if max_period < 1:
        raise ValueError("max_period must be >= 1")
    remaining = [int(budget)]
    found: list[Cycle] = []
    for m in range(1, max_period + 1):
        for seq in _sequences_for_period(model, m, remaining, rng):
            if remaining[0] <= 0:
                break
            result = _refine_sequence(model, seq, remaining)
            if result is None:
                continue
            pts, regions, virtual = result
            if virtual and not include_virtual:
                continue
            if len(regions) != m:
                continue
            # Non-minimal orbits revisit a point before closing.
            if m > 1:
                dists = [
                    np.linalg.norm(pts[i] - pts[j])
                    for i in range(m)
                    for j in range(i + 1, m)
                ]
                if min(dists) <= MINIMALITY_TOL:
                    continue
            pts, regions = _rotate_cycle(pts, regions)
            if any(
                c.period == m and _same_cycle(c.points, pts, dedup_tol)
                for c in found
            ):
                continue
            comp = compose_pieces(model, regions)
            multipliers = np.linalg.eigvals(comp.J)
            try:
                kind = classify_multipliers(multipliers)
            except MarginalEigenvalueError:
                kind = "marginal"
            found.append(Cycle(pts, regions, multipliers, kind, virtual))
    found.sort(key=lambda c: (c.period, tuple(str(r) for r in c.regions)))
    return found


def find_fixed_points(
    model: PiecewiseModel,
    *,
    budget: int = 20000,
    rng: np.random.Generator | None = None,
    include_virtual: bool = False,
) -> list[Cycle]:
    """All fixed points (period-1 cycles) of the model."""
    return find_cycles(
        model, 1, budget=budget, rng=rng, include_virtual=include_virtual
    )
