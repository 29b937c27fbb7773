import numpy as np
import pytest

from polarhe.data.mueller import MuellerImage, MuellerMatrix, StokesVector
from polarhe.exceptions import DecompositionError, InvalidArgumentError
from polarhe.polarimetry.decomposition import (
    derive_all_properties,
    derive_properties,
    lu_chipman_decompose,
)
from polarhe.polarimetry.elements import (
    diattenuator,
    linear_polarizer,
    linear_retarder,
    mueller_apply,
    partial_depolarizer,
    random_physical_mueller,
    rotate_element,
    rotation_matrix,
    validate_mueller,
)
from polarhe.polarimetry.maps import intensity_image, property_maps, render_map

from tests import PolarHETest


class TestMuellerAlgebra(PolarHETest):
    """Test Stokes propagation and element constructors."""

    def test_identity_preserves_stokes(self):
        """Test that the identity element leaves a beam unchanged."""

        s = StokesVector(1.0, 0.3, -0.2, 0.1)
        assert mueller_apply(MuellerMatrix.identity(), s) == s

    def test_horizontal_polarizer(self):
        """Test that a horizontal polarizer halves unpolarized light."""

        out = mueller_apply(linear_polarizer(0.0), StokesVector(1.0, 0.0, 0.0, 0.0))
        assert out.to_array() == pytest.approx([0.5, 0.5, 0.0, 0.0], abs=self.ATOL)

    def test_quarter_wave_circularizes(self):
        """Test that a quarter-wave plate at 45 degrees turns linear into circular."""

        qwp = linear_retarder(np.pi / 4, np.pi / 2)
        out = mueller_apply(qwp, StokesVector(1.0, 1.0, 0.0, 0.0))
        assert abs(out.s3) == pytest.approx(1.0, abs=self.ATOL)
        assert out.degree_of_polarization == pytest.approx(1.0)

    def test_non_finite_apply(self):
        """Test that non-finite inputs are rejected."""

        with pytest.raises(InvalidArgumentError):
            mueller_apply(MuellerMatrix.identity(), StokesVector(np.nan, 0, 0, 0))

    def test_rotation_composes(self):
        """Test that frame rotations add their angles."""

        both = rotation_matrix(0.2) @ rotation_matrix(0.3)
        np.testing.assert_allclose(both.m, rotation_matrix(0.5).m, atol=self.ATOL)

    def test_rotated_retarder(self):
        """Test that rotating a retarder moves its fast axis."""

        rotated = rotate_element(linear_retarder(0.0, 1.0), 0.4)
        expected = linear_retarder(0.4, 1.0)
        np.testing.assert_allclose(rotated.m, expected.m, atol=self.ATOL)

    def test_bad_elements(self):
        """Test that out-of-range element parameters raise errors."""

        with pytest.raises(InvalidArgumentError):
            partial_depolarizer(1.2, 0.5, 0.5)
        with pytest.raises(InvalidArgumentError):
            diattenuator([0.8, 0.8, 0.0])
        with pytest.raises(InvalidArgumentError):
            MuellerMatrix(np.eye(3))


class TestValidation(PolarHETest):
    """Test the physical-validity check."""

    def test_valid_elements(self):
        """Test that canonical elements pass."""

        for m in (
            MuellerMatrix.identity(),
            linear_polarizer(0.3),
            linear_retarder(0.1, 2.0),
            partial_depolarizer(0.4, 0.4, 0.4),
            diattenuator([0.3, 0.0, 0.2]),
        ):
            assert validate_mueller(m).valid

    def test_zero_transmittance(self):
        """Test that a zero matrix fails with its reason."""

        report = validate_mueller(MuellerMatrix(np.zeros((4, 4))))
        assert not report.valid
        assert report.reason == "zero transmittance"

    def test_unphysical_probe(self):
        """Test that an amplifying matrix reports the failing probe."""

        m = np.eye(4)
        m[1, 1] = 1.5
        report = validate_mueller(MuellerMatrix(m))
        assert not report.valid
        assert report.reason == "unphysical output"
        assert report.probe_index == 1

    def test_non_finite(self):
        """Test that a NaN entry fails the check."""

        m = np.eye(4)
        m[2, 3] = np.nan
        assert validate_mueller(MuellerMatrix(m)).reason == "non-finite entries"

    def test_bad_tolerance(self):
        """Test that a non-positive tolerance is rejected."""

        with pytest.raises(InvalidArgumentError):
            validate_mueller(MuellerMatrix.identity(), tol=0.0)


class TestDecomposition(PolarHETest):
    """Test the polar decomposition and the derived properties."""

    def test_identity(self):
        """Test that the identity decomposes into identities."""

        for factor in lu_chipman_decompose(MuellerMatrix.identity()):
            np.testing.assert_allclose(factor.m, np.eye(4), atol=self.ATOL)
        assert derive_properties(MuellerMatrix.identity()) == pytest.approx(
            (0.0, 0.0, 0.0), abs=self.ATOL
        )

    def test_quarter_wave_plate(self):
        """Test the retardance and axis of a quarter-wave plate."""

        retardance, axis, depolarization = derive_properties(
            linear_retarder(np.pi / 8, np.pi / 2)
        )
        assert retardance == pytest.approx(np.pi / 2, abs=self.ATOL)
        assert axis == pytest.approx(np.pi / 8, abs=self.ATOL)
        assert depolarization == pytest.approx(0.0, abs=self.ATOL)

    def test_depolarizer(self):
        """Test the depolarization power of a uniform partial depolarizer."""

        _, _, depolarization = derive_properties(partial_depolarizer(0.4, 0.4, 0.4))
        assert depolarization == pytest.approx(0.6, abs=self.ATOL)

    def test_diattenuator(self):
        """Test that a diattenuator reports its diattenuation and nothing else."""

        retardance, _, depolarization, d = derive_all_properties(
            diattenuator([0.0, 0.5, 0.0], transmittance=0.7)
        )
        assert d == pytest.approx(0.5, abs=self.ATOL)
        assert retardance == pytest.approx(0.0, abs=1e-7)
        assert depolarization == pytest.approx(0.0, abs=self.ATOL)

    def test_axis_wraps(self):
        """Test that an axis of pi/2 is reported as -pi/2."""

        _, axis, _ = derive_properties(linear_retarder(np.pi / 2, 1.0))
        assert axis == pytest.approx(-np.pi / 2, abs=self.ATOL)

    def test_half_wave_axis(self):
        """Test the fast axis of a half-wave plate."""

        retardance, axis, _ = derive_properties(linear_retarder(0.3, np.pi))
        assert retardance == pytest.approx(np.pi, abs=1e-6)
        assert axis == pytest.approx(0.3, abs=1e-6)

    def test_remultiply(self):
        """Test that the factors remultiply to the normalised input."""

        rng = np.random.default_rng(7)
        for _ in range(50):
            m = random_physical_mueller(rng)
            m_depol, m_ret, m_diatten = lu_chipman_decompose(m)
            product = (m_depol @ m_ret @ m_diatten).m
            assert np.linalg.norm(product - m.m / m.m[0, 0]) < 1e-8
            # the retarder block is a proper rotation
            block = m_ret.m[1:, 1:]
            np.testing.assert_allclose(block @ block.T, np.eye(3), atol=1e-8)
            assert np.linalg.det(block) == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize(
        "m, reason",
        [
            (np.zeros((4, 4)), "zero_transmittance"),
            (np.full((4, 4), np.nan), "non_finite"),
            (linear_polarizer(0.0).m, "diattenuation"),
            (np.diag([1.0, 0.0, 0.0, 0.0]), "singular"),
        ],
    )
    def test_failures(self, m, reason):
        """Test that each failure mode raises with its reason code."""

        with pytest.raises(DecompositionError) as err:
            lu_chipman_decompose(MuellerMatrix(m))
        assert err.value.reason == reason


class TestMaps(PolarHETest):
    """Test per-pixel maps and their renderings."""

    def test_identity_image(self):
        """Test that an identity image gives all-zero maps."""

        maps = property_maps(MuellerImage.filled(MuellerMatrix.identity(), 3, 2))
        assert maps.valid_mask.all()
        for name in ("retardance", "fast_axis", "depolarization", "diattenuation"):
            assert np.all(getattr(maps, name) == 0.0)

    def test_invalid_pixels_masked(self):
        """Test that failing pixels are masked and hold the sentinel."""

        matrices = np.broadcast_to(linear_retarder(0.2, 1.0).m, (2, 2, 4, 4)).copy()
        matrices[0, 1] = 0.0
        maps = property_maps(MuellerImage.from_matrices(matrices))
        assert maps.valid_mask.tolist() == [[True, False], [True, True]]
        assert maps.retardance[0, 1] == 0.0
        assert maps.retardance[1, 1] == pytest.approx(1.0, abs=self.ATOL)

    def test_linear_render(self):
        """Test that pi/2 renders mid-scale over (0, pi)."""

        raster = render_map(np.array([[0.0, np.pi / 2, np.pi, 5.0]]), (0.0, np.pi))
        assert raster.dtype == np.uint8
        assert raster[0, 0] == 0
        assert abs(int(raster[0, 1]) - 127) <= 1
        assert raster[0, 2] == 255
        assert raster[0, 3] == 255

    def test_cyclic_render(self):
        """Test that both ends of a cyclic range render alike."""

        raster = render_map(
            np.array([[-np.pi / 2, 0.0, np.pi / 2 - 1e-12]]),
            (-np.pi / 2, np.pi / 2),
            style="cyclic",
        )
        assert raster[0, 0] == raster[0, 2] == 0
        assert raster[0, 1] == 255

    def test_bad_render_arguments(self):
        """Test that an empty range or unknown style raises an error."""

        with pytest.raises(InvalidArgumentError):
            render_map(np.zeros((1, 1)), (1.0, 1.0))
        with pytest.raises(InvalidArgumentError):
            render_map(np.zeros((1, 1)), (0.0, 1.0), style="log")

    def test_intensity_image(self):
        """Test that the transmittance is scaled by its maximum."""

        data = np.zeros((1, 2, 16))
        data[0, :, 0] = [0.5, 2.0]
        img = intensity_image(MuellerImage(data))
        assert img.pixels.tolist() == [[0.25, 1.0]]
