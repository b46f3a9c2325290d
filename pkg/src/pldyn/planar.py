"""Closed-form analysis of the two-piece planar map.

The map acts on the plane split by the vertical border ``x = 0``:

``T(p) = A_L p + h`` for ``x <= 0`` and ``T(p) = A_R p + h`` for ``x > 0``,

with ``A_L = [[a_l, c], [b_l, d]]``, ``A_R = [[a_r, c], [b_r, d]]`` and
``h = (h1, h2)``. Both pieces share the off-diagonal column ``(c, d)``, so the
map is continuous across the border. Everything in this module is closed
form: fixed points and their admissibility, Jury stability margins, short
cycle existence/stability, exact matrix powers, the piecewise inverse, and a
three-stage certificate for a transversal crossing of the saddle's stable and
unstable manifolds (which implies a horseshoe, hence chaos).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NonInvertibleError,
    RepeatedEigenvalueError,
    UnitEigenvalueError,
)
from .models import AffinePiece, PiecewiseModel, RegionCode, StandardPlrnn

__all__ = [
    "Map2D",
    "FixedPoint2D",
    "fixed_point_2d",
    "fixed_points_2d",
    "find_saddle",
    "jury_margins",
    "matrix_power_closed_form",
    "invert_2d",
    "enumerate_preimages",
    "fold_line",
    "EigenLine",
    "stable_eigenline",
    "unstable_eigenline",
    "unstable_fold_points",
    "CaseIResult",
    "CaseIIResult",
    "RecursiveResult",
    "HomoclinicReport",
    "homoclinic_case_i",
    "homoclinic_case_ii",
    "homoclinic_recursive",
    "detect_homoclinic",
    "PatternResult",
    "analyze_cycle_pattern",
    "existence_stability_regions",
    "cycle_trace_formula",
    "two_cycle_points_x",
    "border_collision_h1",
]

_LEFT = RegionCode((0,))
_RIGHT = RegionCode((1,))
MULT_TOL = 1e-9  # stability margin around |multiplier| = 1


@dataclass(frozen=True)
class Map2D(PiecewiseModel):
    """Continuous planar map with two affine pieces split at ``x = 0``."""

    a_l: float
    a_r: float
    b_l: float
    b_r: float
    c: float
    d: float
    h1: float
    h2: float
    variant: str = field(default="general-2d", init=False, repr=False)

    def __post_init__(self) -> None:
        for name in ("a_l", "a_r", "b_l", "b_r", "c", "d", "h1", "h2"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")

    # -- basic data ---------------------------------------------------------
    @property
    def dim(self) -> int:
        return 2

    @property
    def n_bits(self) -> int:
        return 1

    @property
    def A_left(self) -> np.ndarray:
        return np.array([[self.a_l, self.c], [self.b_l, self.d]])

    @property
    def A_right(self) -> np.ndarray:
        return np.array([[self.a_r, self.c], [self.b_r, self.d]])

    @property
    def h(self) -> np.ndarray:
        return np.array([self.h1, self.h2])

    def matrix(self, side: str) -> np.ndarray:
        if side == "left":
            return self.A_left
        if side == "right":
            return self.A_right
        raise ValueError("side must be 'left' or 'right'")

    def det(self, side: str) -> float:
        a, b = (self.a_l, self.b_l) if side == "left" else (self.a_r, self.b_r)
        return a * self.d - b * self.c

    def trace(self, side: str) -> float:
        return (self.a_l if side == "left" else self.a_r) + self.d

    def is_invertible(self) -> bool:
        """Globally invertible iff both piece determinants share a sign."""
        return self.det("left") * self.det("right") > 0.0

    # -- PiecewiseModel protocol -------------------------------------------
    def step(self, z: np.ndarray) -> np.ndarray:
        z = self.validate_point(z)
        A = self.A_right if z[0] > 0.0 else self.A_left
        return A @ z + self.h

    def step_batch(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        right = Z[:, 0] > 0.0
        out = Z @ self.A_left.T + self.h
        out[right] = Z[right] @ self.A_right.T + self.h
        return out

    def region_of(self, z: np.ndarray) -> RegionCode:
        z = self.validate_point(z)
        return _RIGHT if z[0] > 0.0 else _LEFT

    def border_gaps(self, z: np.ndarray) -> np.ndarray:
        z = self.validate_point(z)
        return np.abs(z[:1])

    def affine_piece(self, region: RegionCode) -> AffinePiece:
        if len(region) != 1:
            raise ValueError(f"region code must have 1 bit, got {len(region)}")
        A = self.A_right if region.bits[0] == 1 else self.A_left
        return AffinePiece(J=A, b=self.h, region=region)

    def side_of(self, z: np.ndarray) -> str:
        return "right" if np.asarray(z, dtype=float)[0] > 0.0 else "left"

    # -- conversions --------------------------------------------------------
    def as_dict(self) -> dict:
        return {
            "variant": self.variant,
            "a_l": self.a_l, "a_r": self.a_r,
            "b_l": self.b_l, "b_r": self.b_r,
            "c": self.c, "d": self.d,
            "h1": self.h1, "h2": self.h2,
        }

    def to_plrnn(self) -> StandardPlrnn:
        """Equivalent rectified network: left matrix as the linear part.

        The rectified column of the first unit carries the left/right
        difference; the second unit's rectification is given a zero column so
        it never influences the dynamics.
        """
        W = np.array(
            [[self.a_r - self.a_l, 0.0], [self.b_r - self.b_l, 0.0]]
        )
        return StandardPlrnn(A=self.A_left, W=W, h1=self.h.copy())


@dataclass(frozen=True)
class FixedPoint2D:
    point: np.ndarray
    side: str
    admissible: bool  # lies in its own piece's half-plane
    eigenvalues: np.ndarray
    kind: str  # "attractor" | "repeller" | "saddle" | "marginal"


def jury_margins(trace: float, det: float) -> tuple[float, float, float]:
    """Stability margins of ``lambda^2 - trace lambda + det``.

    All three positive iff both roots lie strictly inside the unit circle:
    ``(1 - det, 1 - trace + det, 1 + trace + det)``.
    """
    return (1.0 - det, 1.0 - trace + det, 1.0 + trace + det)


def _classify(eigs: np.ndarray, tol: float = MULT_TOL) -> str:
    mags = np.abs(eigs)
    if np.any((mags >= 1.0 - tol) & (mags <= 1.0 + tol)):
        return "marginal"
    if np.all(mags < 1.0):
        return "attractor"
    if np.all(mags > 1.0):
        return "repeller"
    return "saddle"


def _admissible_x(x: float, side: str) -> bool:
    return x <= 0.0 if side == "left" else x > 0.0


def fixed_point_2d(m: Map2D, side: str) -> FixedPoint2D:
    """Closed-form fixed point of one piece, with admissibility flag.

    Raises :class:`UnitEigenvalueError` when the piece has an eigenvalue 1
    (no isolated fixed point).
    """
    a = m.a_l if side == "left" else m.a_r
    b = m.b_l if side == "left" else m.b_r
    denom = (1.0 - a) * (1.0 - m.d) - b * m.c  # = 1 - trace + det
    if abs(denom) < 1e-14:
        raise UnitEigenvalueError(f"{side} piece has a unit eigenvalue")
    x = ((1.0 - m.d) * m.h1 + m.c * m.h2) / denom
    y = (b * m.h1 + (1.0 - a) * m.h2) / denom
    eigs = np.linalg.eigvals(m.matrix(side))
    return FixedPoint2D(
        np.array([x, y]), side, _admissible_x(x, side), eigs, _classify(eigs)
    )


def fixed_points_2d(m: Map2D) -> list[FixedPoint2D]:
    """Both piece fixed points (admissible or virtual); degenerate pieces skipped."""
    out = []
    for side in ("left", "right"):
        try:
            out.append(fixed_point_2d(m, side))
        except UnitEigenvalueError:
            continue
    return out


# -- exact matrix powers ----------------------------------------------------

def matrix_power_closed_form(A: np.ndarray, n: int) -> np.ndarray:
    """Exact ``A^n`` for a 2x2 matrix from its eigenvalue pair.

    Uses the second-order recursion solution ``s_n = (l1^n - l2^n)/(l1 - l2)``:
    ``A^n = [[s_{n+1} - d s_n, c s_n], [b s_n, d s_n - det(A) s_{n-1}]]``.
    Requires distinct eigenvalues; raises
    :class:`RepeatedEigenvalueError` otherwise.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (2, 2):
        raise ValueError(f"A must be 2x2, got {A.shape}")
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return np.eye(2)
    a, c = A[0]
    b, d = A[1]
    tr = a + d
    det = a * d - b * c
    disc = complex(tr * tr - 4.0 * det)
    root = np.sqrt(disc)
    scale = max(1.0, abs(tr))
    if abs(root) <= 1e-12 * scale:
        raise RepeatedEigenvalueError(
            f"eigenvalues coincide (trace {tr}, det {det}); no two-term form"
        )
    l1 = (tr + root) / 2.0
    l2 = (tr - root) / 2.0

    def s(k: int) -> complex:
        return (l1**k - l2**k) / (l1 - l2)

    out = np.array(
        [
            [s(n + 1) - d * s(n), c * s(n)],
            [b * s(n), d * s(n) - det * s(n - 1)],
        ]
    )
    return np.real(out)


# -- piecewise inverse ------------------------------------------------------

def enumerate_preimages(m: Map2D, p: np.ndarray) -> list[tuple[np.ndarray, str]]:
    """All one-step preimages of ``p``, each tagged with its piece.

    The candidate preimage under one piece is valid iff its own x-coordinate
    selects that piece. For an orientation-consistent map (both determinants
    of one sign) exactly one candidate survives.
    """
    p = np.asarray(p, dtype=float)
    out: list[tuple[np.ndarray, str]] = []
    for side in ("left", "right"):
        a = m.a_l if side == "left" else m.a_r
        b = m.b_l if side == "left" else m.b_r
        D = m.det(side)
        if abs(D) < 1e-300:
            continue
        dx, dy = p[0] - m.h1, p[1] - m.h2
        q = np.array([(m.d * dx - m.c * dy) / D, (-b * dx + a * dy) / D])
        if _admissible_x(q[0], side):
            out.append((q, side))
    return out


def invert_2d(m: Map2D, p: np.ndarray) -> np.ndarray:
    """Unique one-step preimage of ``p``; :class:`NonInvertibleError` if not unique."""
    pre = enumerate_preimages(m, p)
    if len(pre) == 1:
        return pre[0][0]
    if len(pre) == 2 and np.allclose(pre[0][0], pre[1][0], atol=1e-12):
        return pre[0][0]  # border point, both pieces agree
    raise NonInvertibleError(
        f"point has {len(pre)} valid preimages; map determinant product is "
        f"{m.det('left') * m.det('right'):.6g}"
    )


def fold_line(m: Map2D) -> tuple[float, float, float]:
    """Image of the border ``x = 0``: coefficients (A, B, C) of ``Ax+By+C=0``.

    Points with ``d x - c y + (c h2 - d h1) = 0`` form the critical line; for
    a non-invertible map, preimage counts change across it.
    """
    return (m.d, -m.c, m.c * m.h2 - m.d * m.h1)


# -- eigenlines and border crossings ---------------------------------------

@dataclass(frozen=True)
class EigenLine:
    """Invariant line of one piece through its fixed point.

    ``k = (eigenvalue - d) / b`` is the reciprocal slope (x per unit y).
    Three evaluation forms of the same line are provided; they differ only by
    normalization, which matters when comparing signed products.
    """

    origin: np.ndarray  # fixed point
    direction: np.ndarray  # unit eigenvector
    eigenvalue: float
    k: float  # reciprocal slope

    def value_x(self, p: np.ndarray) -> float:
        """x-normalized: (x - x*) - k (y - y*)."""
        return float((p[0] - self.origin[0]) - self.k * (p[1] - self.origin[1]))

    def value_y(self, p: np.ndarray) -> float:
        """y-normalized: (y - y*) - (1/k)(x - x*)."""
        return float((p[1] - self.origin[1]) - (p[0] - self.origin[0]) / self.k)

    def value_mixed(self, p: np.ndarray) -> float:
        """Mixed normalization ``y/k - x + (x* - k y*)`` used as the stage-one
        decision statistic."""
        return float(
            p[1] / self.k - p[0] + (self.origin[0] - self.k * self.origin[1])
        )

    def border_y(self) -> float:
        """y-coordinate where the line crosses ``x = 0``."""
        return float(self.origin[1] - self.origin[0] / self.k)


def _eigenline(m: Map2D, side: str, which: str) -> EigenLine:
    fp = fixed_point_2d(m, side)
    a = m.a_l if side == "left" else m.a_r
    b = m.b_l if side == "left" else m.b_r
    tr, det = m.trace(side), m.det(side)
    disc = tr * tr - 4.0 * det
    if disc <= 0.0:
        raise ValueError(f"{side} piece has no real eigenline (discriminant {disc:g})")
    lams = sorted(
        ((tr + math.sqrt(disc)) / 2.0, (tr - math.sqrt(disc)) / 2.0),
        key=abs,
    )
    lam = lams[0] if which == "stable" else lams[1]
    if b == 0.0:
        # Eigenvector from the first matrix row instead.
        v = np.array([m.c, lam - a])
        k = m.c / (lam - a) if lam != a else math.inf
    else:
        k = (lam - m.d) / b
        v = np.array([m.c, lam - a])
    v = v / np.linalg.norm(v)
    return EigenLine(fp.point, v, lam, k)


def stable_eigenline(m: Map2D, side: str = "left") -> EigenLine:
    """Invariant line of the smaller-modulus eigenvalue of one piece."""
    return _eigenline(m, side, "stable")


def unstable_eigenline(m: Map2D, side: str = "left") -> EigenLine:
    return _eigenline(m, side, "unstable")


def unstable_fold_points(
    m: Map2D, saddle_side: str = "left"
) -> tuple[float, np.ndarray, np.ndarray]:
    """Border crossing of the unstable eigenline and its first two images.

    Returns ``(y0, P1, P2)`` where ``(0, y0)`` is the crossing, ``P1`` its
    image and ``P2`` the image of ``P1`` (branching on the sign of ``P1``'s
    x-coordinate). Past the border the unstable manifold is no longer
    straight; these two points frame its first fold.
    """
    a = m.a_l if saddle_side == "left" else m.a_r
    b = m.b_l if saddle_side == "left" else m.b_r
    line = unstable_eigenline(m, saddle_side)
    lam = line.eigenvalue
    denom = (lam - m.d) * (1.0 - m.trace(saddle_side) + m.det(saddle_side))
    if abs(denom) < 1e-14:
        raise UnitEigenvalueError("degenerate unstable border crossing")
    y0 = (
        (b * m.h1 + (1.0 - a) * m.h2) * (lam - m.d)
        - b * (m.c * m.h2 + (1.0 - m.d) * m.h1)
    ) / denom
    P1 = np.array([m.c * y0 + m.h1, m.d * y0 + m.h2])
    ap, bp = (m.a_l, m.b_l) if P1[0] <= 0.0 else (m.a_r, m.b_r)
    P2 = np.array(
        [
            m.c * (ap + m.d) * y0 + (ap + 1.0) * m.h1 + m.c * m.h2,
            (bp * m.c + m.d * m.d) * y0 + bp * m.h1 + (m.d + 1.0) * m.h2,
        ]
    )
    return float(y0), P1, P2


# -- homoclinic certificates ------------------------------------------------

@dataclass(frozen=True)
class CaseIResult:
    y0: float
    P1: np.ndarray
    P2: np.ndarray
    product: float  # mixed-form stable-line values at P1, P2
    crossed: bool  # product <= 0
    beta: float | None
    point: np.ndarray | None  # intersection of segment P1P2 with stable line
    side_product: float | None  # x_hom * x_saddle, must be positive
    certified: bool


@dataclass(frozen=True)
class CaseIIResult:
    y0_tilde: float
    P0_tilde: np.ndarray
    Pm1_tilde: np.ndarray  # one-step preimage of the border crossing
    product: float  # joining-line values at P1, P2
    crossed: bool  # product < 0
    beta: float | None
    point: np.ndarray | None
    side_product: float | None  # x_hom * x of the preimage, must be positive
    certified: bool


@dataclass(frozen=True)
class RecursiveResult:
    certified: bool
    n_return: int | None  # border-map iterations inside the right half
    entry_index: int | None  # orbit index of the first right-half point
    P_return: np.ndarray | None
    P_next: np.ndarray | None
    product: float | None  # x-form stable-line values at the return pair
    n_checked: int


@dataclass(frozen=True)
class HomoclinicReport:
    saddle: FixedPoint2D | None
    saddle_side: str | None
    case_i: CaseIResult | None
    case_ii: CaseIIResult | None
    recursive: RecursiveResult | None
    certified: bool
    stage: str  # "case_i" | "case_ii" | "recursive" | "none" | "no_saddle"


def find_saddle(m: Map2D) -> FixedPoint2D | None:
    """Admissible saddle fixed point, preferring the left piece."""
    for side in ("left", "right"):
        try:
            fp = fixed_point_2d(m, side)
        except UnitEigenvalueError:
            continue
        if fp.admissible and fp.kind == "saddle" and np.all(np.isreal(fp.eigenvalues)):
            return fp
    return None


def homoclinic_case_i(m: Map2D, saddle_side: str = "left") -> CaseIResult:
    """Stage one: does the first unstable fold segment cross the stable line?

    Decision statistic: product of the mixed-form stable-line values at the
    two fold images; a non-positive product places the segment across the
    line. The side product then checks the crossing lies on the saddle's
    side of the border.
    """
    y0, P1, P2 = unstable_fold_points(m, saddle_side)
    s_line = stable_eigenline(m, saddle_side)
    product = s_line.value_mixed(P1) * s_line.value_mixed(P2)
    crossed = product <= 0.0
    beta = None
    point = None
    side_product = None
    certified = False
    if crossed:
        k = s_line.k
        moff = s_line.origin[0] - k * s_line.origin[1]
        denom = k * (P2[1] - P1[1]) - (P2[0] - P1[0])
        if abs(denom) > 1e-14:
            beta = float((P1[0] - k * P1[1] - moff) / denom)
            point = P1 + beta * (P2 - P1)
            saddle_x = s_line.origin[0]
            side_product = float(point[0] * saddle_x)
            certified = side_product > 0.0
    return CaseIResult(
        y0, P1, P2, float(product), crossed, beta, point, side_product, certified
    )


def homoclinic_case_ii(m: Map2D, saddle_side: str = "left") -> CaseIIResult:
    """Stage two: cross against the joining line of the stable manifold's
    first backward fold.

    The stable line leaves the saddle's half-plane at ``(0, y0~)``; its
    one-step preimage extends the stable manifold beyond that crossing. The
    chord through both points is tested against the unstable fold segment.
    """
    y0, P1, P2 = unstable_fold_points(m, saddle_side)
    s_line = stable_eigenline(m, saddle_side)
    y0t = s_line.border_y()
    P0t = np.array([0.0, y0t])
    Pm1 = invert_2d(m, P0t)
    x_m1, y_m1 = float(Pm1[0]), float(Pm1[1])
    if abs(x_m1) < 1e-14:
        raise NonInvertibleError("stable-line preimage lies on the border")

    def joining(p: np.ndarray) -> float:
        return float((p[1] - y0t) - (y_m1 - y0t) / x_m1 * p[0])

    product = joining(P1) * joining(P2)
    crossed = product < 0.0
    beta = None
    point = None
    side_product = None
    certified = False
    if crossed:
        denom = (P2[1] - P1[1]) * x_m1 - (y_m1 - y0t) * (P2[0] - P1[0])
        if abs(denom) > 1e-14:
            beta = float(
                ((y0t - P1[1]) * x_m1 + (y_m1 - y0t) * P1[0]) / denom
            )
            point = P1 + beta * (P2 - P1)
            side_product = float(point[0] * x_m1)
            certified = side_product > 0.0
    return CaseIIResult(
        float(y0t), P0t, Pm1, float(product), crossed, beta, point,
        side_product, certified,
    )


def homoclinic_recursive(
    m: Map2D, saddle_side: str = "left", max_returns: int = 50
) -> RecursiveResult:
    """Stage three: follow the unstable fold orbit through right-half
    excursions in closed form and test each return against the stable line.

    From the first orbit point in the right half-plane, iterates inside it
    are ``P_n = A_R^n P + (A_R - I)^{-1} (A_R^n - I) h`` with exact matrix
    powers. At each return to the left half the segment to its image is
    tested with the x-normalized stable-line form; a sign change certifies
    the crossing.
    """
    y0, P1, _ = unstable_fold_points(m, saddle_side)
    s_line = stable_eigenline(m, saddle_side)
    A_R = m.A_right
    I2 = np.eye(2)
    det_ImA = float(np.linalg.det(I2 - A_R))
    if abs(det_ImA) < 1e-14:
        raise UnitEigenvalueError("right piece has a unit eigenvalue")
    ImA_inv = np.linalg.inv(I2 - A_R)

    def right_iterate(P: np.ndarray, n: int) -> np.ndarray:
        An = matrix_power_closed_form(A_R, n)
        return An @ P + ImA_inv @ (I2 - An) @ m.h

    orbit_index = 1
    P = P1
    n_checked = 0
    while n_checked < max_returns:
        # Walk (closed form piecewise) until the orbit enters the right half.
        guard = 0
        while P[0] <= 0.0 and guard < 10_000:
            P = m.step(P)
            orbit_index += 1
            guard += 1
            if not np.all(np.isfinite(P)) or np.linalg.norm(P) > 1e8:
                return RecursiveResult(False, None, None, None, None, None, n_checked)
        if P[0] <= 0.0:
            return RecursiveResult(False, None, None, None, None, None, n_checked)
        entry_index = orbit_index
        entry = P
        n = 1
        while True:
            Pn = right_iterate(entry, n)
            if not np.all(np.isfinite(Pn)) or np.linalg.norm(Pn) > 1e8:
                return RecursiveResult(False, None, None, None, None, None, n_checked)
            if Pn[0] <= 0.0:
                break
            n += 1
            if n > 10_000:
                return RecursiveResult(False, None, None, None, None, None, n_checked)
        P_return = Pn
        P_next = m.step(P_return)
        product = s_line.value_x(P_return) * s_line.value_x(P_next)
        n_checked += 1
        if product < 0.0:
            return RecursiveResult(
                True, n, entry_index, P_return, P_next, float(product), n_checked
            )
        P = P_next
        orbit_index = entry_index + n + 1
    return RecursiveResult(False, None, None, None, None, None, n_checked)


def detect_homoclinic(
    m: Map2D,
    saddle_side: str | None = None,
    *,
    max_returns: int = 50,
    run_all: bool = False,
) -> HomoclinicReport:
    """Three-stage chaos certificate for the planar map.

    Stages run in order -- fold segment against the stable line, against its
    backward-fold joining line, then closed-form border returns -- stopping
    at the first certificate unless ``run_all`` is set.
    """
    if saddle_side is None:
        saddle = find_saddle(m)
        if saddle is None:
            return HomoclinicReport(None, None, None, None, None, False, "no_saddle")
        saddle_side = saddle.side
    else:
        saddle = fixed_point_2d(m, saddle_side)
        if saddle.kind != "saddle":
            return HomoclinicReport(
                saddle, saddle_side, None, None, None, False, "no_saddle"
            )

    ci = homoclinic_case_i(m, saddle_side)
    if ci.certified and not run_all:
        return HomoclinicReport(saddle, saddle_side, ci, None, None, True, "case_i")
    cii = homoclinic_case_ii(m, saddle_side)
    if cii.certified and not run_all:
        return HomoclinicReport(saddle, saddle_side, ci, cii, None, True, "case_ii")
    rec = homoclinic_recursive(m, saddle_side, max_returns=max_returns)
    certified = ci.certified or cii.certified or rec.certified
    stage = (
        "case_i" if ci.certified
        else "case_ii" if cii.certified
        else "recursive" if rec.certified
        else "none"
    )
    return HomoclinicReport(saddle, saddle_side, ci, cii, rec, certified, stage)


# -- short cycles in closed form -------------------------------------------

@dataclass(frozen=True)
class PatternResult:
    pattern: str  # e.g. "L", "R", "LR", "LLR"
    points: np.ndarray | None  # (k, 2): orbit points, following the pattern
    exists: bool  # solvable and every point on its claimed side
    stable: bool | None  # Jury test on the composed piece; None if not exists
    trace: float | None
    det: float | None
    degenerate: bool  # composed map has a unit eigenvalue


def _canonical_pattern(pattern: str) -> str:
    rots = [pattern[i:] + pattern[:i] for i in range(len(pattern))]
    return min(rots)


def analyze_cycle_pattern(m: Map2D, pattern: str) -> PatternResult:
    """Existence and stability of the cycle visiting sides ``pattern``.

    The composed map over one traversal is affine; the candidate orbit is its
    fixed point, admissible iff every point lies on the side the pattern
    claims. Stability follows from the Jury margins of the composed matrix.
    """
    pattern = pattern.upper()
    if not pattern or any(ch not in "LR" for ch in pattern):
        raise ValueError(f"pattern must be a non-empty string over L/R, got {pattern!r}")
    k = len(pattern)
    J = np.eye(2)
    b = np.zeros(2)
    for ch in pattern:
        A = m.A_left if ch == "L" else m.A_right
        J = A @ J
        b = A @ b + m.h
    det_ImJ = float(np.linalg.det(np.eye(2) - J))
    if abs(det_ImJ) < 1e-14:
        return PatternResult(pattern, None, False, None, None, None, True)
    p0 = np.linalg.solve(np.eye(2) - J, b)
    pts = np.empty((k, 2))
    p = p0
    ok = True
    for i, ch in enumerate(pattern):
        pts[i] = p
        if ch == "L" and not p[0] <= 0.0:
            ok = False
        if ch == "R" and not p[0] > 0.0:
            ok = False
        A = m.A_left if ch == "L" else m.A_right
        p = A @ p + m.h
    tr = float(np.trace(J))
    det = float(np.linalg.det(J))
    stable = all(v > 0.0 for v in jury_margins(tr, det)) if ok else None
    return PatternResult(pattern, pts, ok, stable, tr, det, False)


def existence_stability_regions(m: Map2D, max_k: int = 3) -> list[PatternResult]:
    """All primitive side patterns up to length ``max_k``, analyzed in closed
    form. Patterns are canonical necklace representatives ("L", "R", "LR",
    "LLR", "LRR", ...)."""
    if max_k < 1:
        raise ValueError("max_k must be >= 1")
    seen: set[str] = set()
    out: list[PatternResult] = []
    for k in range(1, max_k + 1):
        for combo in itertools.product("LR", repeat=k):
            pat = "".join(combo)
            canon = _canonical_pattern(pat)
            if canon != pat or canon in seen:
                continue
            if any(
                k % dd == 0 and pat == pat[dd:] + pat[:dd]
                for dd in range(1, k)
            ):
                continue  # non-primitive
            seen.add(canon)
            out.append(analyze_cycle_pattern(m, pat))
    return out


def cycle_trace_formula(m: Map2D, pattern: str) -> float:
    """Closed-form trace polynomials for short composed patterns.

    Provided for "LR" and "LLR" (any rotation); these are the determinant-
    and-trace inputs of the Jury margins without forming matrix products.
    """
    canon = _canonical_pattern(pattern.upper())
    a_l, a_r, b_l, b_r, c, d = m.a_l, m.a_r, m.b_l, m.b_r, m.c, m.d
    if canon == "LR":
        return a_l * a_r + c * (b_l + b_r) + d * d
    if canon == "LLR":
        return (
            a_l * a_l * a_r
            + d**3
            + c * (a_l * b_l + a_l * b_r + a_r * b_l + d * (2.0 * b_l + b_r))
        )
    raise ValueError(f"no closed-form trace recorded for pattern {pattern!r}")


def two_cycle_points_x(m: Map2D) -> tuple[float, float]:
    """x-coordinates of the alternating 2-cycle, as explicit polynomials.

    Returns ``(x_left, x_right)``. Both share the factor
    ``(1 - d) h1 + c h2``; the left point carries the right piece's
    ``1 + trace + det`` and vice versa, over ``det(I - A_R A_L)``. The cycle
    is admissible iff ``x_left <= 0 < x_right``.
    """
    num = (1.0 - m.d) * m.h1 + m.c * m.h2
    p_l_m1 = 1.0 + m.trace("left") + m.det("left")
    p_r_m1 = 1.0 + m.trace("right") + m.det("right")
    g2 = 1.0 - cycle_trace_formula(m, "LR") + m.det("left") * m.det("right")
    if abs(g2) < 1e-14:
        raise UnitEigenvalueError("composed two-step map has a unit eigenvalue")
    return (num * p_r_m1 / g2, num * p_l_m1 / g2)


def border_collision_h1(m: Map2D) -> float:
    """Bias value ``h1`` at which both fixed points sit on the border.

    The x-coordinates of the two piece fixed points share the numerator
    ``(1 - d) h1 + c h2``; its root is the border-collision point where the
    pieces exchange their fixed points.
    """
    if abs(1.0 - m.d) < 1e-14:
        raise ValueError("d = 1: fixed-point x-coordinates do not depend on h1")
    return -m.c * m.h2 / (1.0 - m.d)
