import json

import numpy as np
import pytest

from polarhe.config import PipelineConfig, load_config
from polarhe.data.mueller import MuellerImage, MuellerMatrix
from polarhe.data.slide import GrayImage, RegistrationBounds, RigidTransform
from polarhe.exceptions import InvalidArgumentError, RegistrationError
from polarhe.io.pgm import read_pgm
from polarhe.io.pmm import read_mueller_image
from polarhe.slide.correction import flat_field_correct
from polarhe.slide.pipeline import SlidePipeline
from polarhe.slide.registration import ncc, register_rigid, resample
from polarhe.slide.tiling import PATCH_MANIFEST, extract_patches, tile_grid
from polarhe.slide.tissue import tissue_mask

from tests import PolarHETest
from tests.conftest import SMOKE_BOUNDS, mueller_from_intensity


def checkerboard(size=128, block=8):
    ys, xs = np.mgrid[0:size, 0:size]
    return 0.5 + 0.1 * np.where((xs // block + ys // block) % 2 == 0, 1.0, -1.0)


class TestFlatField(PolarHETest):
    """Test the illumination correction."""

    def test_uniform(self):
        """Test that a uniform image is unchanged."""

        out = flat_field_correct(GrayImage(np.full((40, 50), 0.5)), window=16)
        np.testing.assert_allclose(out.pixels, 0.5, atol=1e-12)

    def test_removes_gain_ramp(self):
        """Test that a horizontal gain ramp is divided out of a checkerboard."""

        board = checkerboard()
        ramp = 0.8 + 0.4 * np.arange(128) / 127.0
        out = flat_field_correct(GrayImage(board * ramp[np.newaxis, :]), window=32)
        inner = (slice(16, -16), slice(16, -16))
        relative = out.pixels[inner] / board[inner] - 1.0
        assert np.max(np.abs(relative)) < 0.02

    def test_preserves_mean(self):
        """Test that the global mean survives the correction."""

        ramp = 0.8 + 0.4 * np.arange(128) / 127.0
        img = GrayImage(checkerboard() * ramp[np.newaxis, :])
        out = flat_field_correct(img, window=32)
        assert out.pixels.max() < 1.0
        assert abs(out.pixels.mean() - img.pixels.mean()) < 1e-12

    def test_bad_input(self):
        """Test that an all-zero image or an empty window is rejected."""

        with pytest.raises(InvalidArgumentError):
            flat_field_correct(GrayImage(np.zeros((8, 8))))
        with pytest.raises(InvalidArgumentError):
            flat_field_correct(GrayImage(np.ones((8, 8))), window=0)


class TestResample(PolarHETest):
    """Test bilinear warping and its coverage mask."""

    def test_identity(self, textured_image):
        """Test that the identity reproduces the image with full coverage."""

        out, coverage = resample(textured_image, RigidTransform.identity(), (128, 128))
        np.testing.assert_array_equal(out.pixels, textured_image.pixels)
        assert coverage.all()

    def test_integer_shift(self, textured_image):
        """Test that an integer translation moves pixels exactly."""

        shift = RigidTransform(translation=(3, 2))
        out, coverage = resample(textured_image, shift, (128, 128))
        np.testing.assert_array_equal(
            out.pixels[2:, 3:], textured_image.pixels[:-2, :-3]
        )
        assert not coverage[:2, :].any() and not coverage[:, :3].any()
        assert coverage[2:, 3:].all()
        assert np.all(out.pixels[~coverage] == 0.0)

    def test_larger_canvas(self, textured_image):
        """Test that pixels beyond the source footprint are uncovered."""

        out, coverage = resample(textured_image, RigidTransform.identity(), (140, 130))
        assert (out.width, out.height) == (140, 130)
        assert coverage.sum() == 128 * 128

    def test_default_frame(self):
        """Test that an omitted size resamples into the common 2304 x 1296 frame."""

        out, coverage = resample(GrayImage(np.ones((20, 30))), RigidTransform())
        assert (out.width, out.height) == (2304, 1296)
        assert coverage.sum() == 20 * 30

    def test_mueller_channels(self, textured_image):
        """Test that every Mueller channel is warped with the same coordinates."""

        transform = RigidTransform(rotation=0.1, center=textured_image.center)
        gray, _ = resample(textured_image, transform, (128, 128))
        mueller_in = mueller_from_intensity(textured_image.pixels)
        mueller, _ = resample(mueller_in, transform, (128, 128))
        expected = mueller_from_intensity(gray.pixels)
        np.testing.assert_allclose(mueller.data, expected.data, atol=1e-12)

    def test_inverse(self):
        """Test that a transform composed with its inverse is the identity."""

        transform = RigidTransform(0.3, (4.0, -2.5), 1.05, (10.0, 20.0))
        points = np.array([[0.0, 0.0], [13.0, -7.0], [100.0, 50.0]])
        back = transform.inverse().apply(transform.apply(points))
        np.testing.assert_allclose(back, points, atol=1e-9)
        np.testing.assert_allclose(
            transform.apply_inverse(transform.apply(points)), points, atol=1e-9
        )


class TestNCC(PolarHETest):
    """Test the registration similarity."""

    def test_values(self, textured_image):
        """Test perfect, inverted and constant inputs."""

        a = textured_image.pixels
        assert ncc(a, a) == pytest.approx(1.0)
        assert ncc(a, 1.0 - a) == pytest.approx(-1.0)
        assert ncc(a, np.ones_like(a)) == 0.0


class TestTissue(PolarHETest):
    """Test Otsu tissue segmentation."""

    def test_bimodal(self):
        """Test that the darker half of a two-level image is tissue."""

        pixels = np.full((64, 64), 0.8)
        pixels[:, :32] = 0.2
        result = tissue_mask(GrayImage(pixels))
        assert not result.degenerate
        assert result.mask[:, :32].all()
        assert not result.mask[:, 32:].any()
        assert result.fraction == 0.5

    def test_single_valued(self):
        """Test that a blank image yields a degenerate empty mask."""

        result = tissue_mask(GrayImage(np.ones((16, 16))))
        assert result.degenerate
        assert not result.mask.any()

    def test_affine_invariance(self):
        """Test that the mask ignores affine intensity changes."""

        levels = np.random.default_rng(0).integers(0, 9, size=(48, 48)) / 8.0
        levels[:, :24] = np.minimum(levels[:, :24], 0.25)
        first = tissue_mask(GrayImage(levels))
        second = tissue_mask(GrayImage(0.5 * levels + 0.25))
        np.testing.assert_array_equal(first.mask, second.mask)

    def test_speckle_removed(self):
        """Test that isolated dark pixels are opened away."""

        pixels = np.full((32, 32), 0.9)
        pixels[:, :16] = 0.1
        pixels[8, 24] = 0.1
        result = tissue_mask(GrayImage(pixels))
        assert not result.mask[8, 24]


class TestTiling(PolarHETest):
    """Test the sliding-window patch layout."""

    def test_all_tissue(self):
        """Test the window origins of a fully covered image."""

        grid = tile_grid(np.ones((448, 448), dtype=bool), 224, 224, 0.1)
        assert grid.origins == [(0, 0), (224, 0), (0, 224), (224, 224)]
        assert grid.num_kept == 4

    def test_background(self):
        """Test that an empty mask keeps nothing."""

        grid = tile_grid(np.zeros((448, 448), dtype=bool), 224, 224, 0.1)
        assert grid.num_total == 4
        assert grid.num_kept == 0

    def test_matches_brute_force(self):
        """Test the tissue fractions and flags against a direct count."""

        mask = np.random.default_rng(1).random((48, 64)) < 0.5
        grid = tile_grid(mask, 16, 8, 0.5)
        expected = [
            (x, y)
            for y in range(0, 48 - 16 + 1, 8)
            for x in range(0, 64 - 16 + 1, 8)
            if mask[y : y + 16, x : x + 16].sum() >= 0.5 * 256
        ]
        assert grid.kept_origins == expected

    def test_threshold_monotone(self):
        """Test that raising the threshold never keeps more windows."""

        mask = np.random.default_rng(2).random((64, 64)) < 0.3
        kept = [
            set(tile_grid(mask, 16, 16, threshold).kept_origins)
            for threshold in (0.0, 0.2, 0.3, 0.4, 1.0)
        ]
        for looser, stricter in zip(kept[:-1], kept[1:]):
            assert stricter <= looser
        assert len(kept[0]) == 16

    def test_bad_arguments(self):
        """Test that invalid layouts and mismatched images are rejected."""

        with pytest.raises(InvalidArgumentError):
            tile_grid(np.ones((8, 8), dtype=bool), 0, 4)
        with pytest.raises(InvalidArgumentError):
            tile_grid(np.ones((8, 8), dtype=bool), 4, 4, 1.5)
        with pytest.raises(InvalidArgumentError):
            extract_patches(
                {"he": GrayImage(np.ones((8, 9)))}, np.ones((8, 8)), None, 4, 4
            )

    def test_written_patches(self, tmp_path, textured_image):
        """Test the patch files and the JSON-lines manifest."""

        images = {
            "he": textured_image,
            "polarization": MuellerImage.filled(MuellerMatrix.identity(), 128, 128),
        }
        mask = np.zeros((128, 128), dtype=bool)
        mask[:64, :] = True
        grid, records = extract_patches(images, mask, tmp_path, 64, 64, 0.5)

        assert grid.kept_origins == [(0, 0), (64, 0)]
        assert [r.path for r in records] == [
            "he/he_x00000_y00000.pgm",
            "polarization/polarization_x00000_y00000.pmm",
            "he/he_x00064_y00000.pgm",
            "polarization/polarization_x00064_y00000.pmm",
        ]
        he = read_pgm(tmp_path / records[2].path)
        assert (he.width, he.height) == (64, 64)
        np.testing.assert_allclose(
            he.pixels, textured_image.pixels[:64, 64:], atol=0.5 / 255 + 1e-12
        )
        polarization = read_mueller_image(tmp_path / records[1].path)
        assert polarization.data.shape == (64, 64, 16)

        lines = (tmp_path / PATCH_MANIFEST).read_text().splitlines()
        assert [json.loads(line) for line in lines] == [r.as_dict() for r in records]

    def test_nothing_written_without_directory(self, textured_image):
        """Test that records carry empty paths when no directory is given."""

        mask = np.ones((128, 128), dtype=bool)
        _, records = extract_patches({"he": textured_image}, mask, None, 64, 64)
        assert len(records) == 4
        assert all(r.path == "" for r in records)


class TestRegistration(PolarHETest):
    """Test similarity registration."""

    BOUNDS = RegistrationBounds(
        max_rotation=2.0, min_scale=0.98, max_scale=1.02, max_shift=16
    )

    def test_identity(self, textured_image):
        """Test that an image registers onto itself with the identity."""

        transform = register_rigid(textured_image, textured_image, self.BOUNDS)
        assert abs(transform.rotation) < np.deg2rad(0.1)
        assert transform.translation == pytest.approx((0.0, 0.0), abs=0.1)
        assert transform.scale == pytest.approx(1.0, abs=1e-3)

    def test_translation(self, blob_field, textured_image):
        """Test that a (7, -3) pixel shift is recovered to within a pixel."""

        truth = RigidTransform(translation=(7.0, -3.0), center=textured_image.center)
        moving = GrayImage(blob_field(128, 128, transform=truth))
        transform = register_rigid(moving, textured_image, self.BOUNDS)
        assert transform.center == textured_image.center
        assert transform.translation == pytest.approx((7.0, -3.0), abs=1.0)
        assert abs(transform.rotation) < np.deg2rad(0.5)

    def test_rotation(self, blob_field, textured_image):
        """Test that a 5 degree rotation is recovered to within half a degree."""

        truth = RigidTransform(rotation=np.deg2rad(5.0), center=textured_image.center)
        moving = GrayImage(blob_field(128, 128, transform=truth))
        bounds = RegistrationBounds(max_rotation=8.0, min_scale=1.0, max_scale=1.0)
        transform = register_rigid(moving, textured_image, bounds, threads=2)
        assert abs(transform.rotation - np.deg2rad(5.0)) < np.deg2rad(0.5)

    @pytest.mark.parametrize(
        "degrees, scale, shift",
        [
            (0.0, 1.0, (-7.0, 3.0)),
            (0.0, 1.0, (-12.0, 6.0)),
            (0.0, 1.0, (-30.0, 12.0)),
            (9.5, 0.96, (-30.0, 12.0)),
            (-6.0, 1.04, (21.0, -25.0)),
        ],
    )
    def test_round_trip(self, blob_field, degrees, scale, shift):
        """Test that a warped copy registers back to the transform that made it."""

        reference = GrayImage(blob_field(192, 192))
        truth = RigidTransform(
            rotation=np.deg2rad(degrees),
            translation=shift,
            scale=scale,
            center=reference.center,
        )
        moving, _ = resample(reference, truth, (192, 192))
        bounds = RegistrationBounds(
            max_rotation=10.0, min_scale=0.95, max_scale=1.05, max_shift=32
        )
        transform = register_rigid(moving, reference, bounds, threads=4)
        assert abs(transform.rotation - truth.rotation) < np.deg2rad(0.5)
        assert transform.scale == pytest.approx(scale, abs=0.01)
        assert transform.translation == pytest.approx(shift, abs=1.0)

        assert abs(transform.rotation) <= np.deg2rad(bounds.max_rotation) + 1e-12
        assert bounds.min_scale <= transform.scale <= bounds.max_scale
        assert max(map(abs, transform.translation)) <= bounds.max_shift

    def test_refinement_stays_in_bounds(self, textured_image):
        """Test that a transform outside the search space is clipped to it."""

        truth = RigidTransform(
            translation=(20.0, -3.0), scale=1.04, center=textured_image.center
        )
        moving, _ = resample(textured_image, truth, (128, 128))
        bounds = RegistrationBounds(
            max_rotation=1.0, min_scale=0.98, max_scale=1.02, max_shift=16
        )
        transform = register_rigid(moving, textured_image, bounds, floor=-1.0)
        assert abs(transform.rotation) <= np.deg2rad(1.0) + 1e-12
        assert 0.98 <= transform.scale <= 1.02
        assert max(map(abs, transform.translation)) <= 16

    def test_floor(self, textured_image):
        """Test that an unreachable floor raises with the best score."""

        with pytest.raises(RegistrationError) as err:
            register_rigid(textured_image, textured_image, self.BOUNDS, floor=1.5)
        assert err.value.score <= 1.0 + 1e-9
        assert err.value.floor == 1.5

    def test_bounds(self):
        """Test the coarse grids and invalid bounds."""

        bounds = RegistrationBounds(max_rotation=2.0, min_scale=0.98, max_scale=1.02)
        assert np.rad2deg(bounds.rotations()) == pytest.approx([0, -1, 1, -2, 2])
        assert bounds.scales() == pytest.approx([0.98, 1.0, 1.02])
        with pytest.raises(InvalidArgumentError):
            RegistrationBounds(min_scale=1.1, max_scale=1.0)


class TestPipeline(PolarHETest):
    """Test the end-to-end slide preparation."""

    def config(self, **overrides):
        values = {
            "polarization": "unused.pmm",
            "he": "unused.pgm",
            "bounds": SMOKE_BOUNDS,
        }
        values.update(overrides)
        return PipelineConfig.from_dict(values)

    def test_recovers_shift(self, shifted_pair):
        """Test that the H&E image is aligned and every window is kept."""

        mueller, he, truth = shifted_pair
        result = SlidePipeline(self.config(out_size=[448, 448])).process(mueller, he)
        assert result.transform.translation == pytest.approx(truth.translation, abs=1.0)
        assert abs(result.transform.rotation) < np.deg2rad(0.5)
        assert (result.num_kept, result.num_total) == (4, 4)
        assert len(result.records) == 8

    def test_no_tissue(self):
        """Test that a blank reference skips registration and keeps nothing."""

        mueller = MuellerImage.filled(MuellerMatrix.identity(), 300, 300)
        he = GrayImage(np.full((300, 300), 0.9))
        result = SlidePipeline(self.config(out_size=[300, 300])).process(mueller, he)
        assert result.tissue.degenerate
        assert result.transform.translation == (0.0, 0.0)
        assert (result.num_kept, result.num_total) == (0, 1)
        assert result.records == []

    def test_smoke(self, smoke_pair, tmp_path):
        """Test a run from a configuration file on identical inputs."""

        config = PipelineConfig.from_dict(load_config(smoke_pair), smoke_pair.parent)
        out = tmp_path / "out"
        result = SlidePipeline(config).run(out)
        assert result.num_kept == 4
        assert result.transform.translation == pytest.approx((0.0, 0.0), abs=0.5)
        assert len((out / PATCH_MANIFEST).read_text().splitlines()) == 8

    def test_config(self, tmp_path):
        """Test path resolution and required keys of a pipeline configuration."""

        config = PipelineConfig.from_dict(
            {"polarization": "a.pmm", "he": "/data/b.pgm"}, base_dir=tmp_path
        )
        assert config.polarization == str(tmp_path / "a.pmm")
        assert config.he == "/data/b.pgm"
        with pytest.raises(InvalidArgumentError):
            PipelineConfig.from_dict({"he": "b.pgm"})
        with pytest.raises(InvalidArgumentError):
            self.config(stride=0)
        with pytest.raises(InvalidArgumentError):
            SlidePipeline(self.config(), threads=0)

    def test_frame_size(self):
        """Test the default common frame and a frame read from JSON."""

        assert self.config().out_size == (2304, 1296)
        assert self.config(out_size=[640, 480]).out_size == (640, 480)
        with pytest.raises(InvalidArgumentError):
            self.config(out_size=[640])
