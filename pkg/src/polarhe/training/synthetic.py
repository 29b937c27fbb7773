"""Synthetic paired-modality data and view augmentation."""

import numpy as np

from polarhe.data.training import AugmentParams, PairedDataset, SyntheticConfig


def _label_functionals(rng: np.random.Generator, cfg: SyntheticConfig) -> np.ndarray:
    """Rows of the linear functionals whose argmax is the class label."""

    raw = rng.normal(size=(cfg.n_shared, cfg.n_classes))
    if cfg.n_classes <= cfg.n_shared:
        # orthonormal rows give i.i.d. scores and balanced classes
        q, _ = np.linalg.qr(raw)
        return q.T
    return raw.T / np.sqrt(cfg.n_shared)


def _mixing(
    rng: np.random.Generator, obs_dim: int, n_shared: int, n_unique: int, weight: float
) -> np.ndarray:
    n_in = n_shared + n_unique
    a = rng.normal(scale=1.0 / np.sqrt(n_in), size=(obs_dim, n_in))
    a[:, n_shared:] *= weight
    return a


def generate_synthetic(cfg: SyntheticConfig) -> PairedDataset:
    """Sample a paired dataset with known shared and unique factors.

    Each modality observes a ``tanh`` of a fixed random mixing of the shared
    factors and its own unique factors, plus Gaussian noise. Labels are the
    argmax of fixed linear functionals of the shared factors only.

    Args:
        cfg (SyntheticConfig): Generator settings

    Returns:
        PairedDataset: Observations, latent factors and labels
    """

    rng = np.random.default_rng(cfg.seed)

    # fixed generative structure
    a_h = _mixing(rng, cfg.obs_dim_h, cfg.n_shared, cfg.n_unique_h, cfg.unique_weight)
    a_p = _mixing(rng, cfg.obs_dim_p, cfg.n_shared, cfg.n_unique_p, cfg.unique_weight)
    functionals = _label_functionals(rng, cfg)

    # latent factors
    z_shared = rng.standard_normal((cfg.n_samples, cfg.n_shared))
    z_unique_h = rng.standard_normal((cfg.n_samples, cfg.n_unique_h))
    z_unique_p = rng.standard_normal((cfg.n_samples, cfg.n_unique_p))

    # observations
    h = np.tanh(np.hstack([z_shared, z_unique_h]) @ a_h.T)
    p = np.tanh(np.hstack([z_shared, z_unique_p]) @ a_p.T)
    h = h + rng.normal(scale=cfg.noise_std, size=h.shape)
    p = p + rng.normal(scale=cfg.noise_std, size=p.shape)

    labels = np.argmax(z_shared @ functionals.T, axis=1)
    return PairedDataset(
        h=h,
        p=p,
        z_shared=z_shared,
        z_unique_h=z_unique_h,
        z_unique_p=z_unique_p,
        labels=labels,
    )


def augment(
    x: np.ndarray, params: AugmentParams, rng: np.random.Generator
) -> np.ndarray:
    """One augmented view: additive Gaussian noise, then random masking.

    Args:
        x (np.ndarray): Observations, any shape
        params (AugmentParams): Noise level and masked fraction
        rng (np.random.Generator): Source of randomness, advanced by the call

    Returns:
        np.ndarray: The augmented copy of ``x``
    """

    x = np.asarray(x, dtype=float)
    view = x + rng.normal(scale=params.noise_std, size=x.shape)
    keep = rng.random(x.shape) >= params.mask_fraction
    return np.where(keep, view, 0.0)
