import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pldyn import NonInvertibleError, RepeatedEigenvalueError, backtrack
from pldyn.planar import (
    Map2D,
    analyze_cycle_pattern,
    border_collision_h1,
    cycle_trace_formula,
    detect_homoclinic,
    enumerate_preimages,
    existence_stability_regions,
    find_saddle,
    fixed_point_2d,
    fixed_points_2d,
    fold_line,
    homoclinic_case_i,
    homoclinic_case_ii,
    invert_2d,
    jury_margins,
    matrix_power_closed_form,
    stable_eigenline,
    two_cycle_points_x,
    unstable_eigenline,
    unstable_fold_points,
)


class TestMap2DBasics:
    def test_continuity_at_border(self, border_map):
        for y in np.linspace(-2, 2, 9):
            p = np.array([0.0, y])
            left = border_map.A_left @ p + border_map.h
            right = border_map.A_right @ p + border_map.h
            np.testing.assert_allclose(left, right, atol=1e-15)

    def test_step_batch_matches_step(self, border_map):
        rng = np.random.default_rng(0)
        Z = rng.normal(size=(40, 2))
        out = border_map.step_batch(Z)
        for i in range(len(Z)):
            np.testing.assert_allclose(out[i], border_map.step(Z[i]), atol=1e-14)

    def test_determinants(self, border_map):
        assert border_map.det("left") == pytest.approx(0.2745, abs=1e-15)
        assert border_map.det("right") == pytest.approx(0.675, abs=1e-14)
        assert border_map.is_invertible()

    def test_right_piece_eigenvalues(self, border_map):
        np.testing.assert_allclose(
            np.sort(np.linalg.eigvals(border_map.A_right).real), [0.75, 0.9], atol=1e-12
        )

    def test_to_plrnn_step_agreement(self, border_map):
        net = border_map.to_plrnn()
        rng = np.random.default_rng(1)
        for _ in range(100):
            z = rng.normal(size=2) * 2
            np.testing.assert_allclose(net.step(z), border_map.step(z), atol=1e-13)


class TestFixedPoints:
    def test_saddle_frozen(self, border_map):
        sad = find_saddle(border_map)
        assert sad is not None and sad.side == "left" and sad.kind == "saddle"
        assert sad.admissible
        np.testing.assert_allclose(
            sad.point, [-0.2884781482121265, -0.1651407842459838], atol=1e-14
        )
        np.testing.assert_allclose(
            np.sort(sad.eigenvalues.real),
            [-1.42773780845922, -0.19226219154077998],
            atol=1e-13,
        )

    def test_fixed_point_is_fixed(self, border_map):
        for fp in fixed_points_2d(border_map):
            if fp.admissible:
                np.testing.assert_allclose(
                    border_map.step(fp.point), fp.point, atol=1e-12
                )

    def test_virtual_right_fixed_point(self, border_map):
        fp = fixed_point_2d(border_map, "right")
        assert not fp.admissible
        assert fp.point[0] < 0  # lies in the left half despite being the right piece's

    def test_spiral_saddle_parameter_set(self):
        m = Map2D(a_l=-1.67, a_r=1.5, b_l=-0.9, b_r=-1.58, c=0.6, d=0.1, h1=-0.13, h2=-0.1)
        sad = find_saddle(m)
        np.testing.assert_allclose(
            sad.point, [-0.06014271151885831, -0.05096839959225281], atol=1e-14
        )

    def test_right_repeller_parameter_set(self):
        m = Map2D(a_l=-1.77, a_r=1.5, b_l=-0.9, b_r=-1.69, c=0.6, d=0.15, h1=0.4, h2=-0.4)
        fp = fixed_point_2d(m, "right")
        assert fp.admissible and fp.kind == "repeller"
        np.testing.assert_allclose(
            fp.point, [0.16977928692699498, -0.8081494057724958], atol=1e-14
        )
        np.testing.assert_allclose(np.abs(fp.eigenvalues), [1.1131037687475505] * 2)


class TestJury:
    def test_margins_values(self):
        m1, m2, m3 = jury_margins(-1.62, 0.2745)  # the worked saddle piece
        assert m1 == pytest.approx(0.7255)
        assert m2 == pytest.approx(2.8945)
        assert m3 == pytest.approx(-0.3455)  # negative: eigenvalue below -1

    def test_all_positive_iff_stable(self):
        rng = np.random.default_rng(2)
        for _ in range(300):
            A = rng.normal(scale=1.2, size=(2, 2))
            tr, det = float(np.trace(A)), float(np.linalg.det(A))
            stable_by_margins = all(v > 0 for v in jury_margins(tr, det))
            stable_by_eigs = bool(np.all(np.abs(np.linalg.eigvals(A)) < 1.0))
            if max(abs(abs(e) - 1.0) for e in np.linalg.eigvals(A)) > 1e-9:
                assert stable_by_margins == stable_by_eigs


class TestMatrixPower:
    def test_identity_at_zero(self):
        np.testing.assert_array_equal(
            matrix_power_closed_form(np.array([[2.0, 1.0], [3.0, 4.0]]), 0), np.eye(2)
        )

    def test_repeated_eigenvalue_raises(self):
        with pytest.raises(RepeatedEigenvalueError):
            matrix_power_closed_form(np.array([[1.0, 1.0], [0.0, 1.0]]), 3)

    def test_negative_power_rejected(self):
        with pytest.raises(ValueError):
            matrix_power_closed_form(np.eye(2) * 2, -1)

    @settings(max_examples=150, deadline=None)
    @given(
        st.integers(min_value=0, max_value=2**31 - 1),
        st.integers(min_value=1, max_value=20),
        st.booleans(),
    )
    def test_matches_repeated_multiplication(self, seed, n, zero_b):
        rng = np.random.default_rng(seed)
        A = rng.uniform(-1.5, 1.5, size=(2, 2))
        if zero_b:
            A[1, 0] = 0.0  # triangular: eigenvalues on the diagonal
        if abs(np.trace(A) ** 2 - 4 * np.linalg.det(A)) < 1e-6:
            return  # too close to a repeated eigenvalue for a fair comparison
        expected = np.linalg.matrix_power(A, n)
        got = matrix_power_closed_form(A, n)
        np.testing.assert_allclose(
            got, expected, rtol=1e-9, atol=1e-9 * max(1.0, np.abs(expected).max())
        )


class TestInverse:
    def test_unique_preimage_roundtrip(self, border_map):
        rng = np.random.default_rng(3)
        for _ in range(200):
            z = rng.normal(size=2) * 2
            z_next = border_map.step(z)
            pre = enumerate_preimages(border_map, z_next)
            assert len(pre) == 1
            np.testing.assert_allclose(pre[0][0], z, atol=1e-12)
            np.testing.assert_allclose(invert_2d(border_map, z_next), z, atol=1e-12)

    def test_preimage_side_tags(self, border_map):
        z = np.array([-1.3, 0.4])
        (q, side), = enumerate_preimages(border_map, border_map.step(z))
        assert side == border_map.side_of(z)

    def test_noninvertible_counts(self):
        # opposite determinant signs: preimage count is 0 or 2 off the fold line
        m = Map2D(a_l=-1.77, a_r=1.5, b_l=-0.9, b_r=0.75, c=0.6, d=0.15, h1=-0.7, h2=-0.4)
        assert not m.is_invertible()
        A_, B_, C_ = fold_line(m)
        rng = np.random.default_rng(4)
        seen = set()
        for _ in range(400):
            p = rng.normal(size=2) * 2
            if abs(A_ * p[0] + B_ * p[1] + C_) < 1e-3:
                continue
            n = len(enumerate_preimages(m, p))
            assert n in (0, 2)
            seen.add(n)
            if n == 2:
                with pytest.raises(NonInvertibleError):
                    invert_2d(m, p)
        assert seen == {0, 2}

    def test_fold_line_is_border_image(self, border_map):
        A_, B_, C_ = fold_line(border_map)
        for y in np.linspace(-3, 3, 11):
            img = border_map.step(np.array([0.0, y]))
            assert abs(A_ * img[0] + B_ * img[1] + C_) < 1e-12

    def test_invert_matches_backtrack(self, border_map):
        rng = np.random.default_rng(5)
        for _ in range(50):
            z_next = border_map.step(rng.normal(size=2))
            a = invert_2d(border_map, z_next)
            b = backtrack(border_map, z_next)
            np.testing.assert_allclose(a, b, atol=1e-10)


class TestEigenlines:
    def test_lines_are_invariant(self, border_map):
        for line, lam in (
            (stable_eigenline(border_map), -0.19226219154077995),
            (unstable_eigenline(border_map), -1.42773780845922),
        ):
            assert line.eigenvalue == pytest.approx(lam, abs=1e-13)
            for t in (-0.05, 0.02, 0.08):
                p = line.origin + t * line.direction
                img = border_map.A_left @ p + border_map.h
                np.testing.assert_allclose(
                    img, line.origin + t * lam * line.direction, atol=1e-13
                )

    def test_value_forms_vanish_on_line(self, border_map):
        line = stable_eigenline(border_map)
        p = line.origin + 0.3 * line.direction
        assert abs(line.value_x(p)) < 1e-13
        assert abs(line.value_y(p)) < 1e-13

    def test_value_form_normalizations(self, border_map):
        # value_y is value_x rescaled; value_mixed swaps the slope role and is
        # a distinct statistic (it does not vanish on the line itself)
        line = stable_eigenline(border_map)
        rng = np.random.default_rng(6)
        for _ in range(20):
            p = rng.normal(size=2)
            assert line.value_y(p) == pytest.approx(-line.value_x(p) / line.k, abs=1e-12)
        off_line = line.origin + 0.3 * line.direction
        assert abs(line.value_mixed(off_line)) > 1e-3

    def test_border_y(self, border_map):
        line = stable_eigenline(border_map)
        crossing = np.array([0.0, line.border_y()])
        assert abs(line.value_x(crossing)) < 1e-14


class TestFoldPoints:
    def test_frozen_values(self, border_map):
        y0, P1, P2 = unstable_fold_points(border_map)
        assert y0 == pytest.approx(-0.0005821788814699098, abs=1e-16)
        np.testing.assert_allclose(
            P1, [-0.7003493073288819, -0.40008732683222054], atol=1e-15
        )
        np.testing.assert_allclose(
            P2, [0.29956587787278866, 0.17030127757116076], atol=1e-15
        )

    def test_fold_points_are_iterates_of_crossing(self, border_map):
        y0, P1, P2 = unstable_fold_points(border_map)
        crossing = np.array([0.0, y0])
        np.testing.assert_allclose(border_map.step(crossing), P1, atol=1e-14)
        np.testing.assert_allclose(border_map.step(P1), P2, atol=1e-14)

    def test_crossing_is_on_unstable_line(self, border_map):
        y0, _, _ = unstable_fold_points(border_map)
        line = unstable_eigenline(border_map)
        assert abs(line.value_x(np.array([0.0, y0]))) < 1e-14


class TestHomoclinicCertificate:
    def test_stage_one_fails_here(self, border_map):
        ci = homoclinic_case_i(border_map)
        assert ci.product == pytest.approx(0.04470350532696324, abs=1e-14)
        assert not ci.crossed and not ci.certified

    def test_stage_two_certifies(self, border_map):
        cii = homoclinic_case_ii(border_map)
        assert cii.y0_tilde == pytest.approx(0.5934306846683071, abs=1e-14)
        np.testing.assert_allclose(
            cii.Pm1_tilde, [-1.7889195293296327, -4.110645944855751], atol=1e-13
        )
        assert cii.product == pytest.approx(-1.0269211084535779, abs=1e-12)
        assert cii.crossed
        assert cii.side_product == pytest.approx(0.516064193121521, abs=1e-13)
        assert cii.certified

    def test_intersection_point_is_the_saddle(self, border_map):
        # peculiarity of this parameter set: the certified crossing point
        # coincides with the saddle itself
        cii = homoclinic_case_ii(border_map)
        sad = find_saddle(border_map)
        np.testing.assert_allclose(cii.point, sad.point, atol=1e-12)

    def test_report_stops_at_stage_two(self, border_map):
        rep = detect_homoclinic(border_map)
        assert rep.certified and rep.stage == "case_ii"
        assert rep.case_i is not None and not rep.case_i.certified
        assert rep.case_ii is not None and rep.case_ii.certified
        assert rep.recursive is None  # not reached

    def test_no_saddle_report(self):
        m = Map2D(a_l=0.5, a_r=0.5, b_l=0.0, b_r=0.0, c=0.0, d=0.5, h1=-1.0, h2=0.0)
        rep = detect_homoclinic(m)
        assert not rep.certified and rep.stage == "no_saddle"


class TestPatterns:
    def test_existence_table(self, border_map):
        table = {
            r.pattern: (r.exists, r.stable)
            for r in existence_stability_regions(border_map, 3)
        }
        assert table == {
            "L": (True, False),
            "R": (False, None),
            "LR": (True, False),
            "LLR": (True, False),
            "LRR": (True, False),
        }

    def test_pattern_points_follow_sides(self, border_map):
        r = analyze_cycle_pattern(border_map, "LLR")
        assert r.exists
        assert r.points[0][0] <= 0 and r.points[1][0] <= 0 and r.points[2][0] > 0
        for i, ch in enumerate("LLR"):
            A = border_map.A_left if ch == "L" else border_map.A_right
            np.testing.assert_allclose(
                A @ r.points[i] + border_map.h, r.points[(i + 1) % 3], atol=1e-12
            )

    def test_trace_formula_matches_product(self, border_map):
        for pat in ("LR", "RL", "LLR", "LRL"):
            J = np.eye(2)
            for ch in pat:
                J = (border_map.A_left if ch == "L" else border_map.A_right) @ J
            assert cycle_trace_formula(border_map, pat) == pytest.approx(
                float(np.trace(J)), abs=1e-12
            )
        with pytest.raises(ValueError):
            cycle_trace_formula(border_map, "LLRR")

    def test_degenerate_pattern(self):
        m = Map2D(a_l=1.0, a_r=0.5, b_l=0.0, b_r=0.0, c=0.0, d=1.0, h1=0.1, h2=0.0)
        r = analyze_cycle_pattern(m, "L")
        assert r.degenerate and not r.exists

    def test_bad_pattern_rejected(self, border_map):
        with pytest.raises(ValueError):
            analyze_cycle_pattern(border_map, "LX")
        with pytest.raises(ValueError):
            analyze_cycle_pattern(border_map, "")


class TestTwoCycleAndCollision:
    def test_two_cycle_frozen(self, border_map):
        x_left, x_right = two_cycle_points_x(border_map)
        assert x_left == pytest.approx(-0.577474566003593, abs=1e-15)
        assert x_right == pytest.approx(0.06000525189601246, abs=1e-15)
        assert x_left <= 0 < x_right

    def test_border_collision_value(self, border_map):
        h1_star = border_collision_h1(border_map)
        assert h1_star == pytest.approx(0.24 / 0.85, abs=1e-16)

    def test_fixed_points_collide_at_star(self, border_map):
        import dataclasses

        h1_star = border_collision_h1(border_map)
        m_star = dataclasses.replace(border_map, h1=h1_star)
        for side in ("left", "right"):
            assert fixed_point_2d(m_star, side).point[0] == pytest.approx(0.0, abs=1e-15)
