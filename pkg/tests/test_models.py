import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pldyn import AlRnn, RegionCode, StandardPlrnn, relu


def test_relu_basics():
    x = np.array([-2.0, -0.0, 0.0, 3.5])
    np.testing.assert_array_equal(relu(x), [0.0, 0.0, 0.0, 3.5])


class TestRegionCode:
    def test_from_signs_zero_is_off(self):
        # the open half-space convention: pre-activation exactly 0 -> bit 0
        code = RegionCode.from_signs(np.array([-1.0, 0.0, 1e-300, 2.0]))
        assert code.bits == (0, 0, 1, 1)

    def test_str_and_len(self):
        code = RegionCode((0, 1, 1, 0))
        assert str(code) == "0110"
        assert len(code) == 4

    def test_hamming_and_flip(self):
        a = RegionCode((0, 1, 0))
        b = a.flip((0, 2))
        assert b.bits == (1, 1, 1)
        assert a.hamming(b) == 2
        assert a.hamming(a) == 0

    def test_as_array_dtype(self):
        arr = RegionCode((1, 0)).as_array()
        assert arr.dtype == float
        np.testing.assert_array_equal(arr, [1.0, 0.0])


class TestStandardPlrnn:
    def test_step_matches_affine_piece(self, small_plrnn):
        rng = np.random.default_rng(0)
        for _ in range(50):
            z = rng.normal(size=small_plrnn.dim) * 3
            piece = small_plrnn.affine_piece(small_plrnn.region_of(z))
            np.testing.assert_allclose(small_plrnn.step(z), piece.apply(z),
                                       rtol=0, atol=1e-12)

    def test_step_batch_matches_rows(self, small_plrnn):
        rng = np.random.default_rng(1)
        Z = rng.normal(size=(64, small_plrnn.dim))
        out = small_plrnn.step_batch(Z)
        for i in range(len(Z)):
            np.testing.assert_allclose(out[i], small_plrnn.step(Z[i]), atol=1e-12)

    def test_strict_rejects_offdiagonal_A(self):
        A = np.array([[0.5, 0.1], [0.0, 0.5]])
        W = np.array([[0.0, 0.3], [-0.2, 0.0]])
        with pytest.raises(ValueError):
            StandardPlrnn(A=A, W=W, h1=np.zeros(2), strict=True)
        # non-strict accepts full matrices (border-map conversions need this)
        m = StandardPlrnn(A=A, W=W, h1=np.zeros(2))
        assert m.variant == "standard"

    def test_strict_rejects_nonzero_W_diagonal(self):
        A = np.diag([0.5, -0.2])
        W = np.array([[0.1, 0.3], [-0.2, 0.0]])
        with pytest.raises(ValueError):
            StandardPlrnn(A=A, W=W, h1=np.zeros(2), strict=True)

    def test_random_is_strict_conforming(self):
        m = StandardPlrnn.random(6, np.random.default_rng(3))
        assert np.allclose(m.A, np.diag(np.diag(m.A)))
        assert np.allclose(np.diag(m.W), 0.0)

    def test_region_count(self, small_plrnn):
        assert small_plrnn.n_regions() == 16
        regions = list(small_plrnn.all_regions())
        assert len(regions) == 16
        assert len({r.bits for r in regions}) == 16

    def test_border_gaps(self, small_plrnn):
        z = np.array([0.5, -0.25, 0.0, 1.0])
        np.testing.assert_allclose(small_plrnn.border_gaps(z), [0.5, 0.25, 0.0, 1.0])


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_step_is_continuous_at_borders(seed):
    """Adjacent pieces agree on their shared border hyperplane."""
    rng = np.random.default_rng(seed)
    m = StandardPlrnn.random(3, rng)
    z = rng.normal(size=3)
    i = int(rng.integers(0, 3))
    z[i] = 0.0  # on the border of unit i
    r0 = m.region_of(z)
    r1 = r0.flip((i,))
    p0 = m.affine_piece(r0).apply(z)
    p1 = m.affine_piece(r1).apply(z)
    np.testing.assert_allclose(p0, p1, atol=1e-12)


class TestShallow:
    def test_jacobian_matches_finite_difference(self, shallow_plrnn):
        m = shallow_plrnn
        rng = np.random.default_rng(5)
        z = rng.normal(size=m.dim)
        # stay clear of activation borders so the finite difference is clean
        while np.min(m.border_gaps(z)) < 1e-3:
            z = rng.normal(size=m.dim)
        J = m.affine_piece(m.region_of(z)).J
        eps = 1e-7
        J_fd = np.empty_like(J)
        for j in range(m.dim):
            dz = np.zeros(m.dim)
            dz[j] = eps
            J_fd[:, j] = (m.step(z + dz) - m.step(z - dz)) / (2 * eps)
        np.testing.assert_allclose(J, J_fd, atol=1e-6)

    def test_step_matches_affine_piece(self, shallow_plrnn):
        rng = np.random.default_rng(6)
        for _ in range(50):
            z = rng.normal(size=shallow_plrnn.dim) * 2
            piece = shallow_plrnn.affine_piece(shallow_plrnn.region_of(z))
            np.testing.assert_allclose(shallow_plrnn.step(z), piece.apply(z), atol=1e-12)

    def test_n_bits_is_hidden_width(self, shallow_plrnn):
        assert shallow_plrnn.n_bits == 5
        assert shallow_plrnn.dim == 3


class TestAlRnn:
    @pytest.fixture
    def model(self):
        rng = np.random.default_rng(9)
        return AlRnn.random(5, 2, rng)

    def test_forced_bits(self, model):
        assert model.forced_bits() == {0: 1, 1: 1, 2: 1}
        assert model.free_bit_positions() == (3, 4)
        assert model.n_regions() == 4

    def test_region_of_forces_linear_units(self, model):
        z = np.array([-3.0, -1.0, -2.0, 0.5, -0.5])
        code = model.region_of(z)
        assert code.bits[:3] == (1, 1, 1)
        assert code.bits[3:] == (1, 0)

    def test_rejects_region_with_cleared_linear_bit(self, model):
        bad = RegionCode((0, 1, 1, 1, 0))
        with pytest.raises(ValueError):
            model.affine_piece(bad)

    def test_step_matches_affine_piece(self, model):
        rng = np.random.default_rng(10)
        for _ in range(20):
            z = rng.normal(size=model.dim)
            piece = model.affine_piece(model.region_of(z))
            np.testing.assert_allclose(model.step(z), piece.apply(z), atol=1e-12)
