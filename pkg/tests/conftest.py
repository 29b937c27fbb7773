"""Module for storing fixtures used in polarhe tests."""

import json

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from polarhe.config import ExperimentConfig  # noqa: E402
from polarhe.data.mueller import MuellerImage  # noqa: E402
from polarhe.data.slide import GrayImage, RigidTransform  # noqa: E402
from polarhe.data.training import EncoderSpec, SyntheticConfig, TrainConfig  # noqa: E402
from polarhe.experiment import DecouplingExperiment  # noqa: E402
from polarhe.io.pgm import write_pgm  # noqa: E402
from polarhe.io.pmm import write_mueller_image  # noqa: E402
from polarhe.polarimetry.elements import linear_retarder  # noqa: E402
from polarhe.training.synthetic import generate_synthetic  # noqa: E402

# side of the pipeline smoke images
SMOKE_SIZE = 448
# narrow registration search of the smoke inputs
SMOKE_BOUNDS = {
    "max_rotation": 2.0,
    "min_scale": 0.98,
    "max_scale": 1.02,
    "max_shift": 16,
}


def _blob_field(width, height, transform=None, seed=0, background_width=0):
    """Smooth random texture, optionally seen through a transform.

    The texture lives in a fixed frame; pixel ``q`` of the returned image
    shows the texture at ``transform^-1(q)``. Texture coordinates with
    ``x < background_width`` are bright background.
    """

    rng = np.random.default_rng(seed)
    n_blobs = 120
    centers = rng.uniform(-32.0, 512.0, size=(n_blobs, 2))
    sigmas = rng.uniform(5.0, 12.0, size=n_blobs)
    amplitudes = rng.normal(size=n_blobs)

    ys, xs = np.mgrid[0:height, 0:width].astype(float)
    points = np.stack([xs, ys], axis=-1)
    if transform is not None:
        points = transform.apply_inverse(points)
    px, py = points[..., 0], points[..., 1]

    field = np.zeros((height, width))
    for (cx, cy), sigma, amplitude in zip(centers, sigmas, amplitudes):
        field += amplitude * np.exp(-((px - cx) ** 2 + (py - cy) ** 2) / (2 * sigma**2))
    tissue = 0.4 + 0.15 * np.tanh(field)
    return np.where(px < background_width, 0.95, tissue)


@pytest.fixture(scope="session")
def blob_field():
    """Return the textured test-image generator."""

    return _blob_field


@pytest.fixture(scope="session")
def textured_image():
    """A 128 x 128 smooth random texture."""

    return GrayImage(_blob_field(128, 128))


def mueller_from_intensity(intensity):
    """Mueller image of a quarter-wave plate scaled by a transmittance map."""

    element = linear_retarder(np.pi / 6, np.pi / 2).m.reshape(16)
    return MuellerImage(np.asarray(intensity)[:, :, np.newaxis] * element)


@pytest.fixture
def smoke_pair(tmp_path):
    """Write an identical H&E / polarization pair and its pipeline config."""

    intensity = _blob_field(SMOKE_SIZE, SMOKE_SIZE, background_width=40)
    write_mueller_image(tmp_path / "polarization.pmm", mueller_from_intensity(intensity))
    write_pgm(tmp_path / "he.pgm", GrayImage(intensity / intensity.max()))
    config = {
        "polarization": "polarization.pmm",
        "he": "he.pgm",
        "bounds": SMOKE_BOUNDS,
        "out_size": [SMOKE_SIZE, SMOKE_SIZE],
    }
    path = tmp_path / "pipeline.json"
    path.write_text(json.dumps(config))
    return path


@pytest.fixture
def shifted_pair(blob_field):
    """A polarization image and a larger H&E image of the same texture.

    The H&E image shows the reference texture through a (7, -3) pixel shift.
    """

    transform = RigidTransform(translation=(7.0, -3.0), center=(223.5, 223.5))
    intensity = blob_field(SMOKE_SIZE, SMOKE_SIZE, background_width=40)
    he = blob_field(470, 460, transform=transform, background_width=40)
    return mueller_from_intensity(intensity), GrayImage(he / he.max()), transform


@pytest.fixture(scope="session")
def small_experiment_config():
    """A fast synthetic experiment configuration."""

    return ExperimentConfig(
        synthetic=SyntheticConfig(
            n_shared=4,
            n_unique_h=4,
            n_unique_p=4,
            obs_dim_h=16,
            obs_dim_p=16,
            n_samples=512,
            n_classes=3,
        ),
        encoder=EncoderSpec(encoder_widths=(32, 16), projector_widths=(32, 32, 16)),
        train=TrainConfig(
            batch_size=64,
            steps=20,
            learning_rate=1e-2,
            log_every=5,
            metrics_every=5,
            eval_size=128,
        ),
        ablation_variants=("full", "no_both"),
        ablation_ratios=(0.75,),
        ablation_seeds=(0,),
    )


@pytest.fixture(scope="session")
def small_dataset(small_experiment_config):
    """Paired synthetic samples of the fast configuration."""

    return generate_synthetic(small_experiment_config.synthetic)


@pytest.fixture(scope="session")
def small_experiment(small_experiment_config):
    """A trained experiment of the fast configuration."""

    experiment = DecouplingExperiment(small_experiment_config)
    experiment.train()
    return experiment


@pytest.fixture
def experiment_config_path(tmp_path, small_experiment_config):
    """Write the fast experiment configuration as JSON."""

    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(small_experiment_config.to_dict()))
    return path
