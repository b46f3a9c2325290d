import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pldyn import (
    AffinePiece,
    DegenerateBasisError,
    RegionCode,
    eigen_structure,
    orbit_closed_form,
    real_side_basis,
)


def _piece(J, b=None):
    J = np.asarray(J, dtype=float)
    if b is None:
        b = np.zeros(len(J))
    return AffinePiece(J, np.asarray(b, dtype=float), RegionCode((0,) * len(J)))


class TestEigenStructure:
    def test_diagonal(self):
        E = eigen_structure(np.diag([0.5, -2.0, 1.0]))
        assert E.n_stable == 1
        assert E.n_unstable == 1
        assert E.n_marginal == 1
        assert E.is_semisimple

    def test_labels_follow_magnitude(self):
        E = eigen_structure(np.diag([0.2, 3.0]))
        assert sorted(E.labels) == ["stable", "unstable"]

    def test_complex_pair_counts_twice(self):
        th = 0.7
        R = 0.5 * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        E = eigen_structure(R)
        assert E.n_stable == 2
        assert np.allclose(np.abs(E.values), 0.5)

    def test_jordan_block_detected(self):
        J = np.array([[0.5, 1.0], [0.0, 0.5]])
        E = eigen_structure(J)
        assert not E.is_semisimple
        assert any(b.size == 2 for b in E.blocks)

    def test_marginal_band(self):
        E = eigen_structure(np.diag([1.0 + 1e-12, 0.3]))
        assert E.n_marginal == 1


class TestOrbitClosedForm:
    def test_matches_iteration_generic(self):
        rng = np.random.default_rng(2)
        J = rng.normal(size=(3, 3)) * 0.5
        b = rng.normal(size=3)
        piece = _piece(J, b)
        z0 = rng.normal(size=3)
        z = z0.copy()
        for t in range(1, 12):
            z = piece.apply(z)
            zt = orbit_closed_form(piece, z0, t)
            np.testing.assert_allclose(zt, z, rtol=1e-10, atol=1e-10)

    def test_t_zero_is_identity(self):
        piece = _piece(np.diag([0.3, 0.9]), [1.0, -1.0])
        z0 = np.array([2.0, -5.0])
        np.testing.assert_array_equal(orbit_closed_form(piece, z0, 0), z0)

    def test_defective_block(self):
        # J is a single 3x3 Jordan block: powers need the binomial weights
        lam = 0.8
        J = lam * np.eye(3) + np.diag([1.0, 1.0], k=1)
        piece = _piece(J, [0.1, -0.2, 0.3])
        z0 = np.array([1.0, 1.0, 1.0])
        z = z0.copy()
        for _ in range(9):
            z = piece.apply(z)
        np.testing.assert_allclose(orbit_closed_form(piece, z0, 9), z, rtol=1e-10)

    def test_unit_eigenvalue_bias_path(self):
        # I - J singular: the geometric-series shortcut must be bypassed
        J = np.diag([1.0, 0.5])
        piece = _piece(J, [1.0, 1.0])
        z0 = np.zeros(2)
        z7 = orbit_closed_form(piece, z0, 7)
        np.testing.assert_allclose(z7, [7.0, (1 - 0.5**7) / 0.5], rtol=1e-12)

    def test_rotation_pair_long_horizon(self):
        th = 2.0
        J = 0.999 * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        piece = _piece(J)
        z0 = np.array([1.0, 0.0])
        z = z0.copy()
        for _ in range(200):
            z = piece.apply(z)
        np.testing.assert_allclose(orbit_closed_form(piece, z0, 200), z, atol=1e-9)


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1),
       st.integers(min_value=1, max_value=25))
def test_closed_form_orbit_random(seed, t):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    J = rng.normal(size=(n, n)) * 0.6
    b = rng.normal(size=n)
    piece = _piece(J, b)
    z0 = rng.normal(size=n)
    z = z0.copy()
    for _ in range(t):
        z = piece.apply(z)
    zt = orbit_closed_form(piece, z0, t)
    np.testing.assert_allclose(zt, z, rtol=1e-8, atol=1e-8)


class TestRealSideBasis:
    def test_saddle_dimensions(self):
        E = eigen_structure(np.diag([0.5, 2.0, -3.0]))
        stab = real_side_basis(E, "stable")
        unst = real_side_basis(E, "unstable")
        assert stab.dim == 1
        assert unst.dim == 2
        np.testing.assert_allclose(np.abs(stab.basis[:, 0]), [1, 0, 0])

    def test_complex_pair_gives_plane(self):
        th = 1.1
        J = np.zeros((3, 3))
        J[:2, :2] = 2.0 * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        J[2, 2] = 0.1
        S = real_side_basis(eigen_structure(J), "unstable")
        assert S.dim == 2
        assert S.groups[0].kind == "pair"
        # the pair contributes real and imaginary columns, both real vectors
        assert S.basis.dtype == float

    def test_empty_side(self):
        S = real_side_basis(eigen_structure(np.diag([0.1, 0.2])), "unstable")
        assert S.dim == 0

    def test_basis_spans_invariant_subspace(self):
        rng = np.random.default_rng(4)
        # random similarity of a fixed spectrum keeps sides well defined
        D = np.diag([0.3, -0.7, 1.8, 2.5])
        V = rng.normal(size=(4, 4))
        J = V @ D @ np.linalg.inv(V)
        S = real_side_basis(eigen_structure(J), "unstable")
        assert S.dim == 2
        # J maps the span into itself
        for k in range(S.dim):
            v = S.basis[:, k]
            w = J @ v
            resid = w - S.basis @ np.linalg.lstsq(S.basis, w, rcond=None)[0]
            assert np.linalg.norm(resid) < 1e-9


def test_degenerate_basis_raises():
    # a defective complex pair cannot produce a real eigen-spanned side
    th = 0.9
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    J = np.block([[2 * R, np.eye(2)], [np.zeros((2, 2)), 2 * R]])
    E = eigen_structure(J)
    with pytest.raises(DegenerateBasisError):
        real_side_basis(E, "unstable")
