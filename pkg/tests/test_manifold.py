"""Invariant-manifold construction: seeds, growth, fallback clouds, membership."""
import logging

import numpy as np
import pytest

from pldyn.cycles import find_fixed_points
from pldyn.manifold import (
    EIGEN_SPAN_TOL,
    Manifold,
    ManifoldSegment,
    build_manifold,
    build_manifold_fallback,
    hausdorff_distance,
    local_basis,
    membership_defect,
    points_in_box,
    seed_segments,
)
from pldyn.planar import Map2D, unstable_eigenline, unstable_fold_points

UNSTABLE_SEED_RADIUS = 0.332113198465839
STABLE_SEED_RADIUS = 0.8115727419314541


@pytest.fixture
def saddle(border_map):
    return [c for c in find_fixed_points(border_map) if c.kind == "saddle"][0]


@pytest.fixture
def wu(border_map, saddle):
    return build_manifold(border_map, saddle, "unstable", max_iters=3)


class TestLocalBasis:
    def test_side_dimensions_and_moduli(self, border_map, saddle):
        bu = local_basis(border_map, saddle, "unstable")
        bs = local_basis(border_map, saddle, "stable")
        assert bu.dim == 1 and bs.dim == 1
        assert bu.moduli[0] == pytest.approx(1.42773780845922, abs=1e-12)
        assert bs.moduli[0] == pytest.approx(0.19226219154077998, abs=1e-12)

    def test_unstable_column_matches_eigenline(self, border_map, saddle):
        # Independent route: slope-form eigenline vs eigenvector of the piece.
        line = unstable_eigenline(border_map)
        v = local_basis(border_map, saddle, "unstable").basis[:, 0]
        d = np.asarray(line.direction)
        assert abs(abs(float(v @ d)) - 1.0) < 1e-12


class TestSeedSegments:
    def test_frozen_trim_radii(self, border_map, saddle):
        for side, radius in (
            ("unstable", UNSTABLE_SEED_RADIUS),
            ("stable", STABLE_SEED_RADIUS),
        ):
            seg = seed_segments(border_map, saddle, side)[0]
            t = seg.params_1d()
            assert t.max() == pytest.approx(radius, abs=1e-9)
            assert t.min() == pytest.approx(-radius, abs=1e-9)

    def test_depth_zero_frame(self, border_map, saddle):
        seg = seed_segments(border_map, saddle, "unstable")[0]
        assert seg.kind == "eigen"
        assert seg.depth == 0
        assert seg.region == saddle.regions[0]
        assert np.allclose(seg.anchor, saddle.points[0])
        t = seg.params_1d()
        # sorted along the span (anchor coincides with the linspace midpoint)
        assert np.all(np.diff(t) >= 0)

    def test_seed_points_stay_on_eigenline_under_map(self, border_map, saddle):
        # Inside the home region the piece is affine, so the image of every
        # seed point must land on the same eigenline (zero orthogonal part).
        seg = seed_segments(border_map, saddle, "unstable")[0]
        v = seg.span[:, 0]
        for p in seg.points:
            q = border_map.step(p)
            rel = q - seg.anchor
            orth = rel - (rel @ v) * v
            assert np.linalg.norm(orth) < 1e-12

    def test_invalid_side_rejected(self, border_map, saddle):
        with pytest.raises(ValueError):
            seed_segments(border_map, saddle, "sideways")

    def test_attractor_has_no_unstable_seed(self):
        m = Map2D(a_l=0.5, a_r=0.5, b_l=0.0, b_r=0.0, c=0.0, d=0.3, h1=0.1, h2=0.1)
        fp = find_fixed_points(m)[0]
        assert fp.kind == "attractor"
        with pytest.raises(ValueError, match="no unstable"):
            seed_segments(m, fp, "unstable")


class TestBuildManifold:
    def test_fold_points_lie_on_grown_branch(self, border_map, wu):
        # The closed-form border crossing and its first two images must be
        # reproduced by the patch growth (fold bisection inserts them).
        y0, P1, P2 = unstable_fold_points(border_map)
        pts = wu.all_points()
        for target in (np.array([0.0, y0]), P1, P2):
            d = np.min(np.linalg.norm(pts - target, axis=1))
            assert d < 1e-12

    def test_segment_hygiene(self, border_map, wu):
        assert wu.side == "unstable"
        assert wu.dim == 1
        assert any(s.depth == 0 for s in wu.segments)
        for seg in wu.segments:
            assert 0 <= seg.depth <= 3
            assert seg.n_points >= 2 or seg.depth == 0
            assert np.all(np.isfinite(seg.points))
            # orthonormal frame
            g = seg.span.T @ seg.span
            assert np.allclose(g, np.eye(seg.span.shape[1]), atol=1e-12)
            for p in seg.points:
                assert border_map.region_of(p).hamming(seg.region) <= 1

    def test_linear_segments_are_straight(self, wu):
        for seg in wu.segments:
            if seg.kind not in ("eigen", "linear"):
                continue
            v = seg.span[:, 0]
            rel = seg.points - seg.anchor
            orth = rel - np.outer(rel @ v, v)
            scale = 1.0 + np.linalg.norm(seg.anchor)
            assert np.max(np.linalg.norm(orth, axis=1)) <= EIGEN_SPAN_TOL * scale

    def test_extent_grows_with_iterations(self, border_map, saddle):
        e = []
        for k in (0, 2, 4):
            w = build_manifold(border_map, saddle, "unstable", max_iters=k)
            e.append(np.max(np.abs(w.all_points()[:, 0])))
        assert e[0] < e[1] < e[2]

    def test_bad_spacing_rejected(self, border_map, saddle):
        with pytest.raises(ValueError):
            build_manifold(border_map, saddle, "unstable", spacing=0.0)

    def test_segment_cap_warns_and_stops(self, border_map, saddle, caplog):
        with caplog.at_level(logging.WARNING, logger="pldyn.manifold"):
            w = build_manifold(border_map, saddle, "unstable", max_iters=6, max_segments=5)
        assert len(w.segments) >= 5
        assert any("stopped" in r.getMessage() for r in caplog.records)

    def test_empty_manifold_containers(self, saddle):
        empty = Manifold("unstable", saddle, [])
        assert empty.all_points().shape == (0, 2)
        assert empty.dim == 0

    def test_params_requires_line_span(self, saddle):
        seg = ManifoldSegment(
            np.zeros((3, 2)), saddle.regions[0], np.zeros(2), np.eye(2), "pca", 0
        )
        with pytest.raises(ValueError):
            seg.params_1d()


class TestMembership:
    def test_stable_points_converge_forward(self, border_map, saddle):
        ws = build_manifold(border_map, saddle, "stable", max_iters=2, spacing=0.15)
        assert ws.side == "stable"
        assert len(ws.all_points()) > 100
        d = membership_defect(border_map, ws, max_iters=150)
        assert d.max() < 1e-6

    def test_unstable_naive_probe_floors_but_refined_resolves(self, border_map, saddle):
        # Backward iteration amplifies transverse rounding by 1/|lambda_s| per
        # step, flooring the naive defect of exact points near 1e-3 for this
        # map; the recorded-itinerary evaluation reaches the points' own
        # accuracy.
        w = build_manifold(border_map, saddle, "unstable", max_iters=3, spacing=0.05)
        naive = membership_defect(border_map, w, max_iters=80)
        refined = membership_defect(border_map, w, max_iters=80, refine=True)
        assert naive.max() > 1e-6
        assert refined.max() < 1e-8
        assert np.all(refined <= naive + 1e-15)


class TestFallback:
    def test_single_region_cloud_fits_eigenline(self):
        # Identical pieces make the map globally affine: every cluster of the
        # seed cloud must fit the unstable eigenline essentially exactly.
        m = Map2D(a_l=1.6, a_r=1.6, b_l=0.0, b_r=0.0, c=0.0, d=0.5, h1=0.5, h2=0.2)
        sad = [c for c in find_fixed_points(m) if c.kind == "saddle"][0]
        v = local_basis(m, sad, "unstable").basis[:, 0]
        fb = build_manifold_fallback(m, sad, "unstable", n_seeds=60, horizon=30, seed=2)
        assert len(fb.segments) > 0
        for seg in fb.segments:
            assert seg.kind == "pca"
            assert abs(abs(float(seg.span[:, 0] @ v)) - 1.0) < 1e-6
            assert np.max(np.abs(seg.points[:, 1] - 0.4)) < 1e-9

    def test_border_map_cloud_smoke(self, border_map, saddle):
        fb = build_manifold_fallback(border_map, saddle, "unstable", n_seeds=40, horizon=12)
        assert fb.side == "unstable"
        assert len(fb.segments) > 0
        pts = fb.all_points()
        assert np.all(np.isfinite(pts))
        for seg in fb.segments:
            g = seg.span.T @ seg.span
            assert np.allclose(g, np.eye(seg.span.shape[1]), atol=1e-12)

    @pytest.mark.parametrize("band", [(0.5, 0.4), (-0.1, 0.5), (0.0, 1.2), (0.7, 0.7)])
    def test_bad_seed_band_rejected(self, border_map, saddle, band):
        with pytest.raises(ValueError, match="seed_band"):
            build_manifold_fallback(
                border_map, saddle, "unstable", n_seeds=4, horizon=2, seed_band=band
            )


class TestCloudHelpers:
    def test_hausdorff_hand_value(self):
        A = np.array([[0.0, 0.0], [1.0, 0.0]])
        B = np.array([[0.0, 0.5]])
        expected = np.sqrt(1.25)  # far corner of A to the lone B point
        assert hausdorff_distance(A, B) == pytest.approx(expected, abs=1e-15)
        assert hausdorff_distance(B, A) == pytest.approx(expected, abs=1e-15)

    def test_hausdorff_identity_and_empties(self):
        A = np.random.default_rng(5).standard_normal((40, 2))
        assert hausdorff_distance(A, A) == 0.0
        with pytest.raises(ValueError):
            hausdorff_distance(A, np.zeros((0, 2)))

    def test_points_in_box_inclusive_bounds(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.5], [-1.0, 0.0]])
        kept = points_in_box(pts, [(0.0, 1.0), (0.0, 1.0)])
        assert kept.shape == (2, 2)
        assert np.allclose(kept, pts[:2])
