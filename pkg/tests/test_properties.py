"""Property-based tests of the numerical invariants."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from polarhe.data.embedding import EmbeddingBatch
from polarhe.data.mueller import StokesVector
from polarhe.decoupling.correlation import batch_normalize, cross_correlation
from polarhe.polarimetry.decomposition import derive_properties, lu_chipman_decompose
from polarhe.polarimetry.elements import (
    linear_retarder,
    mueller_apply,
    random_physical_mueller,
    rotate_element,
)
from polarhe.polarimetry.maps import render_map

from tests import PolarHETest

seeds = st.integers(min_value=0, max_value=2**32 - 1)
angles = st.floats(min_value=-1.4, max_value=1.4)

# the unpolarized beam and the six poles of the Poincare sphere
POLES = [
    StokesVector(1.0, 1.0, 0.0, 0.0),
    StokesVector(1.0, -1.0, 0.0, 0.0),
    StokesVector(1.0, 0.0, 1.0, 0.0),
    StokesVector(1.0, 0.0, -1.0, 0.0),
    StokesVector(1.0, 0.0, 0.0, 1.0),
    StokesVector(1.0, 0.0, 0.0, -1.0),
]


def wrap_half_turn(angle):
    """Wrap an axis difference into [-pi/2, pi/2)."""

    return (angle + np.pi / 2) % np.pi - np.pi / 2


def normalized_pair(seed, batch_size=12, dim=5):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(batch_size, dim))
    b = a @ rng.normal(size=(dim, dim)) + rng.normal(size=(batch_size, dim))
    return a, b


def correlation(a, b):
    return cross_correlation(
        batch_normalize(EmbeddingBatch(a)), batch_normalize(EmbeddingBatch(b))
    ).values


class TestPolarimetryProperties(PolarHETest):
    """Invariants of the polar decomposition."""

    @settings(deadline=None)
    @given(
        axis=angles,
        turn=angles,
        retardance=st.floats(min_value=0.2, max_value=2.9),
    )
    def test_rotation_equivariance(self, axis, turn, retardance):
        """Test that rotating a retarder shifts its fast axis by the same angle."""

        element = linear_retarder(axis, retardance)
        _, before, _ = derive_properties(element)
        _, after, _ = derive_properties(rotate_element(element, turn))
        assert abs(wrap_half_turn(after - before - turn)) < 1e-9

    @settings(deadline=None)
    @given(seed=seeds)
    def test_range_containment(self, seed):
        """Test that derived properties stay in their ranges."""

        retardance, axis, depolarization = derive_properties(
            random_physical_mueller(np.random.default_rng(seed))
        )
        assert 0.0 <= retardance <= np.pi
        assert -np.pi / 2 <= axis < np.pi / 2
        assert 0.0 <= depolarization <= 1.0

    @settings(deadline=None)
    @given(seed=seeds)
    def test_retarder_purity(self, seed):
        """Test that the retarder factor preserves every pure polarization state."""

        _, m_ret, _ = lu_chipman_decompose(
            random_physical_mueller(np.random.default_rng(seed))
        )
        unpolarized = mueller_apply(m_ret, StokesVector(1.0, 0.0, 0.0, 0.0))
        np.testing.assert_allclose(unpolarized.to_array(), [1, 0, 0, 0], atol=1e-9)
        for pole in POLES:
            out = mueller_apply(m_ret, pole)
            assert abs(out.degree_of_polarization - 1.0) < 1e-9


    @settings(deadline=None)
    @given(seed=seeds)
    def test_physical_light_stays_physical(self, seed):
        """Test that a physical element maps every pure state to physical light."""

        element = random_physical_mueller(np.random.default_rng(seed))
        for pole in POLES:
            assert pole.is_physical()
            assert mueller_apply(element, pole).is_physical(tol=1e-9)
        assert not StokesVector(1.0, 0.8, 0.8, 0.0).is_physical()


class TestRenderProperties(PolarHETest):
    """Invariants of map rendering."""

    @settings(deadline=None)
    @given(
        values=st.lists(
            st.floats(min_value=-10.0, max_value=10.0), min_size=1, max_size=50
        ),
        lo=st.floats(min_value=-5.0, max_value=0.0),
        width=st.floats(min_value=0.1, max_value=5.0),
    )
    def test_linear_monotone(self, values, lo, width):
        """Test that linear rendering preserves order."""

        ordered = np.sort(np.asarray(values))[np.newaxis, :]
        raster = render_map(ordered, (lo, lo + width))
        assert raster.dtype == np.uint8
        assert np.all(np.diff(raster.astype(int)) >= 0)

    @settings(deadline=None)
    @given(axis=st.floats(min_value=-np.pi / 2, max_value=np.pi / 2, exclude_max=True))
    def test_cyclic_periodic(self, axis):
        """Test that angles a half turn apart render alike."""

        raster = render_map(
            np.array([[axis, axis + np.pi]]), (-np.pi / 2, np.pi / 2), style="cyclic"
        )
        assert abs(int(raster[0, 0]) - int(raster[0, 1])) <= 1

    @settings(deadline=None)
    @given(axis=st.floats(min_value=0.0, max_value=np.pi / 2, exclude_max=True))
    def test_cyclic_drops_sign(self, axis):
        """Test that mirrored orientations render to one level."""

        raster = render_map(
            np.array([[axis, -axis]]), (-np.pi / 2, np.pi / 2), style="cyclic"
        )
        assert abs(int(raster[0, 0]) - int(raster[0, 1])) <= 1


class TestCorrelationProperties(PolarHETest):
    """Invariants of the cross-correlation matrix."""

    @settings(max_examples=50, deadline=None)
    @given(seed=seeds)
    def test_symmetry(self, seed):
        """Test that swapping the batches transposes the matrix."""

        a, b = normalized_pair(seed)
        np.testing.assert_allclose(correlation(a, b), correlation(b, a).T, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(seed=seeds)
    def test_sample_permutation(self, seed):
        """Test that reordering samples leaves the matrix unchanged."""

        a, b = normalized_pair(seed)
        order = np.random.default_rng(seed).permutation(a.shape[0])
        np.testing.assert_allclose(
            correlation(a[order], b[order]), correlation(a, b), atol=1e-12
        )

    @settings(max_examples=50, deadline=None)
    @given(seed=seeds)
    def test_dimension_permutation(self, seed):
        """Test that permuting dimensions permutes rows and columns alike."""

        a, b = normalized_pair(seed)
        rng = np.random.default_rng(seed)
        rows, cols = rng.permutation(a.shape[1]), rng.permutation(b.shape[1])
        expected = correlation(a, b)[np.ix_(rows, cols)]
        np.testing.assert_allclose(
            correlation(a[:, rows], b[:, cols]), expected, atol=1e-12
        )
