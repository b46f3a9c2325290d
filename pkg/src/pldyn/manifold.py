"""Stable and unstable manifolds of saddle cycles.

The local manifold of a cycle point is spanned by the side eigendirections of
the composed Jacobian. Inside the cycle point's region the map is affine, so
a suitably trimmed patch of that linear span is exactly invariant; the global
manifold is grown from it by mapping patches forward (unstable side) or
backward through predecessor search (stable side), splitting them wherever
they cross region borders.

Two constructions are provided and kept deliberately independent:

* :func:`build_manifold` -- breadth-first propagation of line/plane patches
  with fold-point bisection at region borders;
* :func:`build_manifold_fallback` -- a seed-cloud construction that iterates
  perturbed copies of the cycle, buckets the resulting cloud by region,
  clusters each bucket (HDBSCAN) and fits local spans per cluster.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .cycles import Cycle, compose_pieces
from .errors import DegenerateBasisError, NoPredecessorError, SingularPieceError
from .inversion import BacktrackContext, backtrack
from .models import PiecewiseModel, RegionCode
from .spectral import SideBasis, eigen_structure, real_side_basis

__all__ = [
    "ManifoldSegment",
    "Manifold",
    "local_basis",
    "seed_segments",
    "build_manifold",
    "build_manifold_fallback",
    "membership_defect",
    "hausdorff_distance",
    "points_in_box",
]

logger = logging.getLogger(__name__)

EIGEN_SPAN_TOL = 1e-7  # max deviation for a patch to count as linear
FOLD_BISECT_TOL = 1e-10
DEDUP_SPAN_TOL = 1e-8
DIVERGENCE_NORM = 1e8
_MIN_DIR_COUNT = 8
_MAX_DIR_COUNT = 400


@dataclass
class ManifoldSegment:
    """One locally linear (or locally fitted) patch of a manifold."""

    points: np.ndarray  # (n, M) samples on the patch
    region: RegionCode
    anchor: np.ndarray  # (M,) base point of the local frame
    span: np.ndarray  # (M, k) orthonormal tangent directions
    kind: str  # "eigen" | "linear" | "pca"
    depth: int

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def params_1d(self) -> np.ndarray:
        """Signed arclength of each point along a 1-D span."""
        if self.span.shape[1] != 1:
            raise ValueError("params_1d requires a one-dimensional span")
        return (self.points - self.anchor) @ self.span[:, 0]


@dataclass
class Manifold:
    side: str  # "stable" | "unstable"
    cycle: Cycle
    segments: list[ManifoldSegment]

    def all_points(self) -> np.ndarray:
        if not self.segments:
            return np.zeros((0, self.cycle.points.shape[1]))
        return np.vstack([s.points for s in self.segments])

    @property
    def dim(self) -> int:
        return self.segments[0].span.shape[1] if self.segments else 0


def _orthonormal(cols: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(cols)
    # Fix sign so the frame is deterministic.
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def local_basis(model: PiecewiseModel, cycle: Cycle, side: str, index: int = 0) -> SideBasis:
    """Side eigenbasis of the composed Jacobian at cycle point ``index``."""
    m = cycle.period
    rotated = cycle.regions[index % m :] + cycle.regions[: index % m]
    comp = compose_pieces(model, rotated)
    E = eigen_structure(comp.J)
    return real_side_basis(E, side)


def _border_radius(
    model: PiecewiseModel,
    anchor: np.ndarray,
    direction: np.ndarray,
    home: RegionCode,
    r_max: float,
) -> float:
    """Largest step along ``direction`` that stays inside ``home``."""
    if model.region_of(anchor + r_max * direction) == home:
        return r_max
    lo, hi = 0.0, r_max
    while hi - lo > 1e-12 * (1.0 + r_max):
        mid = 0.5 * (lo + hi)
        if model.region_of(anchor + mid * direction) == home:
            lo = mid
        else:
            hi = mid
    return lo


def _subspace_amplification(
    J: np.ndarray, Q: np.ndarray, decay: float, side: str, cap: int = 500
) -> float:
    """Worst transient growth of the group subspace under the invariant flow.

    For the stable side the flow is ``J``; for the unstable side it is the
    backward map ``J^{-1}``. Semisimple groups give 1; defective (Jordan)
    groups can transiently amplify before contracting.

    The iteration runs on the restriction ``R = Q^T J Q`` rather than in
    ambient coordinates: ``span(Q)`` is J-invariant, so ``J^t Q = Q R^t`` and
    the singular values agree, while ambient powers would let round-off leak
    into complementary directions that grow faster than the group decays.
    """
    if decay >= 1.0:
        return 1.0
    R = Q.T @ J @ Q
    if side != "stable":
        try:
            R = np.linalg.inv(R)
        except np.linalg.LinAlgError:
            return 2.0 ** (Q.shape[1] - 1) or 1.0
    T = min(cap, int(math.ceil(math.log(1e-8) / math.log(decay))) + 1)
    M = np.eye(R.shape[0])
    amp = 1.0
    for _ in range(T):
        M = R @ M
        s = float(np.linalg.svd(M, compute_uv=False)[0])
        if s > amp:
            amp = s
        if s < 1e-8:
            break
    return amp


def _group_probe_dirs(cols: np.ndarray, rng: np.random.Generator) -> list[np.ndarray]:
    k = cols.shape[1]
    dirs = []
    for j in range(k):
        dirs.append(cols[:, j])
        dirs.append(-cols[:, j])
    if k >= 2:
        n_extra = 16 if k == 2 else 32
        for _ in range(n_extra):
            c = rng.standard_normal(k)
            c /= np.linalg.norm(c)
            dirs.append(cols @ c)
    return dirs


def _sample_group(
    model: PiecewiseModel,
    anchor: np.ndarray,
    home: RegionCode,
    J_home: np.ndarray,
    group_cols: np.ndarray,
    value: complex,
    side: str,
    base_count: int,
    probe_radius: float,
    rng: np.random.Generator,
) -> list[np.ndarray]:
    """Sample one eigen-direction group of the local patch, region-safe."""
    mu = abs(value)
    Q = _orthonormal(group_cols)
    k = Q.shape[1]
    decay = mu if side == "stable" else 1.0 / mu
    amp = _subspace_amplification(J_home, Q, decay, side)

    dirs = _group_probe_dirs(Q, rng)
    r_border = min(
        _border_radius(model, anchor, d, home, probe_radius) for d in dirs
    )
    safety = 1.0 if k == 1 else (math.cos(math.pi / 16) * 0.98 if k == 2 else 0.9)
    r = r_border * safety / amp
    if r <= 0.0:
        return []

    count = int(np.clip(round(base_count / mu), _MIN_DIR_COUNT, _MAX_DIR_COUNT))
    pts: list[np.ndarray] = []
    if k == 1:
        v = Q[:, 0]
        lam_real = value.real
        if lam_real >= 0.0 and abs(value.imag) < 1e-12:
            t_plus = min(_border_radius(model, anchor, v, home, probe_radius), r * amp)
            t_minus = min(_border_radius(model, anchor, -v, home, probe_radius), r * amp)
            t_plus /= amp
            t_minus /= amp
            ts = np.linspace(-t_minus, t_plus, count)
        else:
            # Sign-flipping direction: only a symmetric core is invariant.
            ts = np.linspace(-r, r, count)
        pts.extend(anchor + t * v for t in ts)
    elif k == 2 and abs(value.imag) > 1e-12:
        n_r = max(3, count // 8)
        n_a = max(8, count // n_r)
        for rr in np.linspace(r / n_r, r, n_r):
            for aa in np.linspace(0.0, 2 * math.pi, n_a, endpoint=False):
                pts.append(anchor + rr * (math.cos(aa) * Q[:, 0] + math.sin(aa) * Q[:, 1]))
    else:
        # Jordan chain (or repeated real) group: symmetric cross per column.
        for j in range(k):
            ts = np.linspace(-r, r, count)
            pts.extend(anchor + t * Q[:, j] for t in ts)
    return [p for p in pts if model.region_of(p) == home or _on_closure(model, p, home)]


def _on_closure(model: PiecewiseModel, p: np.ndarray, home: RegionCode) -> bool:
    """Border points flip bits at exactly zero; treat them as closure points."""
    return model.region_of(p).hamming(home) <= 1


def seed_segments(
    model: PiecewiseModel,
    cycle: Cycle,
    side: str,
    *,
    base_count: int = 24,
    probe_scale: float = 1.0,
    rng: np.random.Generator | None = None,
) -> list[ManifoldSegment]:
    """Depth-0 invariant patches at every cycle point."""
    if side not in ("stable", "unstable"):
        raise ValueError("side must be 'stable' or 'unstable'")
    if rng is None:
        rng = np.random.default_rng(0)
    out: list[ManifoldSegment] = []
    for i in range(cycle.period):
        anchor = cycle.points[i]
        home = cycle.regions[i]
        basis = local_basis(model, cycle, side, i)
        if basis.dim == 0:
            raise ValueError(f"cycle has no {side} directions")
        J_home = model.affine_piece(home).J
        probe_radius = probe_scale * (1.0 + float(np.linalg.norm(anchor)))
        pts: list[np.ndarray] = [anchor.copy()]
        for g in basis.groups:
            cols = basis.basis[:, list(g.columns)]
            pts.extend(
                _sample_group(
                    model, anchor, home, J_home, cols, g.value, side,
                    base_count, probe_radius, rng,
                )
            )
        span = _orthonormal(basis.basis)
        arr = np.asarray(pts)
        if span.shape[1] == 1:
            order = np.argsort((arr - anchor) @ span[:, 0])
            arr = arr[order]
        out.append(ManifoldSegment(arr, home, anchor.copy(), span, "eigen", 0))
    return out


def _map_point(
    model: PiecewiseModel, p: np.ndarray, side: str, ctx: BacktrackContext
) -> np.ndarray | None:
    try:
        q = model.step(p) if side == "unstable" else backtrack(model, p, context=ctx)
    except NoPredecessorError:
        return None
    if not np.all(np.isfinite(q)) or np.linalg.norm(q) > DIVERGENCE_NORM:
        return None
    return q


def _fit_affine(pts: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Best-fit k-dim affine subspace: (anchor, orthonormal span, max deviation)."""
    anchor = pts.mean(axis=0)
    X = pts - anchor
    U, s, Vh = np.linalg.svd(X, full_matrices=False)
    span = Vh[:k].T
    if span.shape[1] < k:  # fewer points than dimensions
        pad = np.zeros((pts.shape[1], k - span.shape[1]))
        span = np.hstack([span, pad])
    proj = X @ span @ span.T
    dev = float(np.max(np.linalg.norm(X - proj, axis=1))) if len(pts) else 0.0
    return anchor, _orthonormal(span), dev


def _partition_runs(regions: list[RegionCode]) -> list[tuple[RegionCode, int, int]]:
    """Maximal runs of equal region codes as (region, start, stop)."""
    runs = []
    i = 0
    n = len(regions)
    while i < n:
        j = i
        while j + 1 < n and regions[j + 1] == regions[i]:
            j += 1
        runs.append((regions[i], i, j + 1))
        i = j + 1
    return runs


def _bisect_fold(
    model: PiecewiseModel,
    src_a: np.ndarray,
    src_b: np.ndarray,
    side: str,
    ctx: BacktrackContext,
) -> np.ndarray | None:
    """Fold point: image of the border crossing on the source chord."""
    qa = _map_point(model, src_a, side, ctx)
    if qa is None:
        return None
    ra = model.region_of(qa)
    lo, hi = 0.0, 1.0
    while hi - lo > FOLD_BISECT_TOL:
        mid = 0.5 * (lo + hi)
        qm = _map_point(model, (1 - mid) * src_a + mid * src_b, side, ctx)
        if qm is None:
            return None
        if model.region_of(qm) == ra:
            lo = mid
        else:
            hi = mid
    return _map_point(model, (1 - 0.5 * (lo + hi)) * src_a + 0.5 * (lo + hi) * src_b, side, ctx)


def _is_duplicate(child_pts: np.ndarray, child_region: RegionCode, child_span: np.ndarray,
                  existing: list[ManifoldSegment]) -> bool:
    if child_span.shape[1] != 1:
        return False
    v = child_span[:, 0]
    for seg in existing:
        if seg.region != child_region or seg.span.shape[1] != 1:
            continue
        w = seg.span[:, 0]
        if abs(abs(float(v @ w)) - 1.0) > DEDUP_SPAN_TOL:
            continue
        rel = child_pts - seg.anchor
        t = rel @ w
        orth = rel - np.outer(t, w)
        scale = 1.0 + float(np.linalg.norm(seg.anchor))
        if np.max(np.linalg.norm(orth, axis=1)) > DEDUP_SPAN_TOL * scale:
            continue
        t_old = seg.params_1d()
        margin = 1e-9 * scale
        if t.min() >= t_old.min() - margin and t.max() <= t_old.max() + margin:
            return True
    return False


def _resample_linear(
    anchor: np.ndarray, span: np.ndarray, pts: np.ndarray, spacing: float, cap: int
) -> np.ndarray:
    t = (pts - anchor) @ span[:, 0]
    lo, hi = float(t.min()), float(t.max())
    count = int(np.clip(math.ceil((hi - lo) / spacing) + 1, 3, cap))
    ts = np.linspace(lo, hi, count)
    return anchor + np.outer(ts, span[:, 0])


def build_manifold(
    model: PiecewiseModel,
    cycle: Cycle,
    side: str,
    *,
    max_iters: int = 6,
    max_segments: int = 600,
    base_count: int = 24,
    resample: int = 257,
    spacing: float | None = None,
    probe_scale: float = 1.0,
    rng: np.random.Generator | None = None,
) -> Manifold:
    """Grow the global manifold by breadth-first patch propagation.

    Patches are mapped one application at a time (forward for the unstable
    side, through predecessor search for the stable side), split at region
    borders with bisected fold points, and refitted per region: a patch whose
    points stay within ``EIGEN_SPAN_TOL`` of a line keeps an exact linear
    frame and is resampled to a uniform point ``spacing`` (default: half the
    seed segment's spacing, capped at ``resample`` points per segment);
    anything else keeps its raw points with a PCA frame.
    """
    segments = seed_segments(
        model, cycle, side, base_count=base_count, probe_scale=probe_scale, rng=rng
    )
    ctx = BacktrackContext()
    queue: list[ManifoldSegment] = list(segments)
    n_man = segments[0].span.shape[1]
    if spacing is None:
        if n_man == 1 and len(segments[0].points) > 1:
            t0 = np.sort(segments[0].params_1d())
            spacing = 0.5 * float(np.median(np.diff(t0)))
        else:
            spacing = math.inf
    if spacing <= 0.0:
        raise ValueError("spacing must be positive")

    while queue:
        seg = queue.pop(0)
        if seg.depth >= max_iters:
            continue
        if len(segments) >= max_segments:
            logger.warning("manifold growth stopped at %d segments", max_segments)
            break

        mapped: list[np.ndarray] = []
        src_kept: list[np.ndarray] = []
        for p in seg.points:
            q = _map_point(model, p, side, ctx)
            if q is not None:
                mapped.append(q)
                src_kept.append(p)
        if len(mapped) < 2:
            continue
        mapped_arr = np.asarray(mapped)
        regions = [model.region_of(q) for q in mapped]

        # Flow points: one further application, bucketed by region, used only
        # to stabilise PCA fits of scattered groups.
        flow: dict[RegionCode, list[np.ndarray]] = {}
        for q in mapped:
            q2 = _map_point(model, q, side, ctx)
            if q2 is not None:
                flow.setdefault(model.region_of(q2), []).append(q2)

        groups: list[tuple[RegionCode, list[np.ndarray]]] = []
        if n_man == 1 and seg.kind in ("eigen", "linear"):
            runs = _partition_runs(regions)
            run_pts = [[mapped_arr[i] for i in range(a, b)] for _, a, b in runs]
            for ridx in range(len(runs) - 1):
                fold = _bisect_fold(
                    model, src_kept[runs[ridx][2] - 1], src_kept[runs[ridx + 1][1]],
                    side, ctx,
                )
                if fold is not None:
                    run_pts[ridx].append(fold)
                    run_pts[ridx + 1].insert(0, fold)
            groups = [(runs[i][0], run_pts[i]) for i in range(len(runs))]
        else:
            byreg: dict[RegionCode, list[np.ndarray]] = {}
            for q, r in zip(mapped, regions):
                byreg.setdefault(r, []).append(q)
            groups = list(byreg.items())

        for region, pts_list in groups:
            if len(pts_list) < 2:
                continue
            pts = np.asarray(pts_list)
            anchor, span, dev = _fit_affine(pts, n_man)
            scale = 1.0 + float(np.linalg.norm(anchor))
            if dev <= EIGEN_SPAN_TOL * scale:
                kind = "linear"
                if n_man == 1 and np.isfinite(spacing):
                    new_pts = _resample_linear(anchor, span, pts, spacing, resample)
                else:
                    new_pts = pts
            else:
                kind = "pca"
                extra = flow.get(region, [])
                fit_pts = np.vstack([pts] + ([np.asarray(extra)] if extra else []))
                anchor, span, _ = _fit_affine(fit_pts, n_man)
                new_pts = pts  # raw propagated points stay on the manifold
            if _is_duplicate(new_pts, region, span, segments):
                continue
            child = ManifoldSegment(new_pts, region, anchor, span, kind, seg.depth + 1)
            segments.append(child)
            queue.append(child)

    return Manifold(side, cycle, segments)


def build_manifold_fallback(
    model: PiecewiseModel,
    cycle: Cycle,
    side: str,
    *,
    n_seeds: int = 200,
    horizon: int = 40,
    seed: int = 0,
    min_cluster_size: int = 8,
    seed_eps: float | None = None,
    seed_band: tuple[float, float] = (0.0, 1.0),
) -> Manifold:
    """Seed-cloud manifold: perturb, iterate, bucket by region, cluster, fit.

    Independent of :func:`build_manifold`: no patch propagation and no fold
    bisection. Clusters smaller than ``dim + 1`` points are dropped with a
    diagnostic.

    ``seed_eps`` overrides the adaptive seed amplitude; choosing
    ``r * multiplier**-horizon`` makes the deepest iterate land at distance
    ``r`` from the cycle, which is how a run is depth-matched against a
    patch-propagated manifold of known extent. ``seed_band`` restricts seed
    magnitudes to ``[lo, hi] * eps`` (sign still random): with
    ``lo = 1/multiplier`` consecutive iterate layers of one seed tile the
    manifold without the heavy oversampling of small amplitudes, so far fewer
    seeds reach the same deep-layer density.
    """
    from sklearn.cluster import HDBSCAN

    rng = np.random.default_rng(seed)
    ctx = BacktrackContext()
    basis = local_basis(model, cycle, side, 0)
    if basis.dim == 0:
        raise ValueError(f"cycle has no {side} directions")
    n_man = basis.dim
    band_lo, band_hi = seed_band
    if not (0.0 <= band_lo < band_hi <= 1.0):
        raise ValueError(f"seed_band must satisfy 0 <= lo < hi <= 1, got {seed_band}")

    cloud: list[np.ndarray] = []
    for i in range(n_seeds):
        p = cycle.points[i % cycle.period]
        bas = local_basis(model, cycle, side, i % cycle.period)
        eps = seed_eps if seed_eps is not None else 1e-4 * (1.0 + float(np.linalg.norm(p)))
        z = p.copy()
        for j in range(bas.dim):
            mag = float(rng.uniform(band_lo, band_hi))
            sign = 1.0 if rng.random() < 0.5 else -1.0
            z = z + sign * mag * eps * bas.basis[:, j]
        for _ in range(horizon):
            q = _map_point(model, z, side, ctx)
            if q is None:
                break
            cloud.append(q)
            z = q
    if not cloud:
        return Manifold(side, cycle, [])
    cloud_arr = np.asarray(cloud)

    byreg: dict[RegionCode, list[np.ndarray]] = {}
    for p in cloud_arr:
        byreg.setdefault(model.region_of(p), []).append(p)

    segments: list[ManifoldSegment] = []
    for region, pts_list in byreg.items():
        pts = np.asarray(pts_list)
        if len(pts) < max(min_cluster_size, n_man + 1):
            if len(pts) < n_man + 1:
                logger.info(
                    "dropping %d-point bucket in region %s (need %d)",
                    len(pts), region, n_man + 1,
                )
                continue
            labels = np.zeros(len(pts), dtype=int)
        else:
            labels = HDBSCAN(min_cluster_size=min_cluster_size).fit_predict(pts)
        for lab in sorted(set(labels)):
            if lab == -1:
                continue
            cluster = pts[labels == lab]
            if len(cluster) < n_man + 1:
                logger.info(
                    "dropping %d-point cluster in region %s (need %d)",
                    len(cluster), region, n_man + 1,
                )
                continue
            anchor, span, _ = _fit_affine(cluster, n_man)
            segments.append(ManifoldSegment(cluster, region, anchor, span, "pca", 0))
    return Manifold(side, cycle, segments)


def _itinerary_defect(
    model: PiecewiseModel,
    cycle: Cycle,
    point: np.ndarray,
    orbit_pts: list[np.ndarray],
    orbit_regs: list[RegionCode],
    n_star: int,
    max_iters: int,
) -> float:
    """Forward-stable backward-convergence defect along a recorded itinerary.

    Backward orbits of dissipative maps amplify transverse rounding by
    1/|lambda_s| per step, so the naive probe bottoms out far above the
    precision of the points themselves.  Instead, anchor the local unstable
    subspace at the cycle, push it forward through the recorded region
    sequence (well-conditioned: the unstable coordinates grow, errors do
    not), and measure the distance from ``point`` to the resulting branch
    plus the provable contraction of the remaining backward tail.

    Steps that grazed a switching border get single-bit itinerary variants,
    since the true branch folds there and either side may be the right one.
    """
    deep = orbit_pts[n_star - 1]
    ci = int(np.argmin(np.linalg.norm(cycle.points - deep, axis=1)))
    anchor = cycle.points[ci]
    try:
        basis = local_basis(model, cycle, "unstable", ci)
    except (DegenerateBasisError, np.linalg.LinAlgError):
        return math.inf
    V = basis.basis
    rho = 1.0 / float(np.min(basis.moduli))
    if rho >= 1.0:
        return math.inf

    base = [orbit_regs[j] for j in range(n_star)]
    variants: list[list[RegionCode]] = [base]
    free = model.free_bit_positions()
    for j in range(n_star):
        gaps = model.border_gaps(orbit_pts[j])
        scale = 1.0 + float(np.linalg.norm(orbit_pts[j]))
        for pos, gap in zip(free, gaps):
            if gap < 1e-6 * scale and len(variants) < 17:
                var = list(base)
                var[j] = var[j].flip((pos,))
                variants.append(var)

    best = math.inf
    for regs in variants:
        q = anchor.copy()
        U = V.copy()
        for r in reversed(regs):
            try:
                piece = model.affine_piece(r)
            except ValueError:
                break
            q = piece.apply(q)
            U = piece.J @ U
        else:
            coef, *_ = np.linalg.lstsq(U, point - q, rcond=None)
            resid = float(np.linalg.norm(point - q - U @ coef))
            # remaining backward steps contract the deep-end offset by rho
            # per full cycle; this underflows to 0 for any realistic budget
            tail = float(np.linalg.norm(V @ coef)) * rho ** (
                (max_iters - n_star) // cycle.period
            )
            best = min(best, max(resid, tail))
    return best


def membership_defect(
    model: PiecewiseModel,
    manifold: Manifold,
    *,
    max_iters: int | None = None,
    refine: bool = False,
) -> np.ndarray:
    """Closest approach of each manifold point's orbit to the cycle.

    Stable-side points are iterated forward, unstable-side points backward;
    a genuine manifold point approaches the cycle arbitrarily closely.

    The naive backward probe is ill-conditioned whenever |det J| < 1: the
    approach shrinks by 1/|lambda_u| per step while transverse rounding
    grows by 1/|lambda_s|, flooring the reported defect near
    eps^(ln|lambda_u| / ln(|lambda_u|/|lambda_s|)) even for exact points.
    With ``refine=True`` unstable-side points additionally get the
    forward-stable itinerary evaluation of the same backward limit, which
    reports defects down to the accuracy of the points themselves.
    """
    cycle = manifold.cycle
    if max_iters is None:
        max_iters = 500 * cycle.period
    ctx = BacktrackContext()
    pts = manifold.all_points()
    out = np.empty(len(pts))
    # Convergence runs against the growth direction: stable-manifold points
    # approach the cycle forward, unstable-manifold points backward.
    probe_side = "unstable" if manifold.side == "stable" else "stable"
    use_refine = refine and manifold.side == "unstable"
    for i, p in enumerate(pts):
        z = p.copy()
        best = float(np.min(np.linalg.norm(cycle.points - z, axis=1)))
        orbit_pts: list[np.ndarray] = []
        orbit_regs: list[RegionCode] = []
        dists: list[float] = []
        for _ in range(max_iters):
            q = _map_point(model, z, probe_side, ctx)
            if q is None:
                break
            z = q
            d = float(np.min(np.linalg.norm(cycle.points - z, axis=1)))
            if d < best:
                best = d
            if use_refine:
                orbit_pts.append(z.copy())
                orbit_regs.append(model.region_of(z))
                dists.append(d)
                if len(dists) > 12 and d > 10.0 * min(dists):
                    break  # past the closest approach and diverging
            if best == 0.0:
                break
        if use_refine and dists:
            n_star = int(np.argmin(dists)) + 1
            refined = _itinerary_defect(
                model, cycle, p, orbit_pts, orbit_regs, n_star, max_iters
            )
            best = min(best, refined)
        out[i] = best
    return out


def hausdorff_distance(A: np.ndarray, B: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two point clouds."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if len(A) == 0 or len(B) == 0:
        raise ValueError("hausdorff_distance requires non-empty clouds")
    d_ab = cKDTree(B).query(A)[0].max()
    d_ba = cKDTree(A).query(B)[0].max()
    return float(max(d_ab, d_ba))


def points_in_box(pts: np.ndarray, bounds) -> np.ndarray:
    """Rows of ``pts`` inside the axis-aligned box ``[(lo, hi), ...]``."""
    pts = np.asarray(pts, dtype=float)
    mask = np.ones(len(pts), dtype=bool)
    for axis, (lo, hi) in enumerate(bounds):
        mask &= (pts[:, axis] >= lo) & (pts[:, axis] <= hi)
    return pts[mask]
