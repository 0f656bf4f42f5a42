"""Seeded synthetic multi-view datasets for tests and demos."""

from __future__ import annotations

import numpy as np

from .dataset import MultiViewDataset


def latent_two_view(n: int = 200, seed: int = 0, dims=(6, 8), n_classes: int = 3,
                    noise: float = 0.2) -> MultiViewDataset:
    """Two views generated from one planted 2-D latent factor.

    The latent point ``z`` is uniform on the unit square and its class is
    the angular sector around the square's center. Each view is a random
    non-negative mixture of ``z`` plus independent Gaussian noise, so the
    views agree only through ``z``.
    """
    rng = np.random.default_rng(seed)
    z = rng.uniform(size=(n, 2))
    angle = np.arctan2(z[:, 1] - 0.5, z[:, 0] - 0.5)
    labels = np.floor((angle + np.pi) / (2 * np.pi) * n_classes).astype(int) % n_classes + 1
    views = []
    for d in dims:
        mix = rng.uniform(0.2, 1.0, size=(2, d))
        views.append(z @ mix + noise * rng.normal(size=(n, d)))
    return MultiViewDataset(tuple(views), labels, ("view_a", "view_b"))


def quadrant_two_view(n: int = 200, seed: int = 0, noise: float = 0.1) -> MultiViewDataset:
    """View 1 sees only the x coordinate, view 2 only y; the label is the quadrant.

    Either view alone can at best tell two of the four classes apart.
    """
    rng = np.random.default_rng(seed)
    xy = rng.uniform(-1.0, 1.0, size=(n, 2))
    labels = 1 + (xy[:, 0] > 0).astype(int) + 2 * (xy[:, 1] > 0).astype(int)
    v1 = xy[:, :1] + noise * rng.normal(size=(n, 1))
    v2 = xy[:, 1:] + noise * rng.normal(size=(n, 1))
    return MultiViewDataset((v1, v2), labels, ("x_view", "y_view"))


def noise_view_dataset(n: int = 150, seed: int = 0, n_classes: int = 3,
                       informative_dim: int = 4, noise_dim: int = 4) -> MultiViewDataset:
    """One view of class-dependent Gaussian blobs, one view of pure noise."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % n_classes + 1
    rng.shuffle(labels)
    means = rng.uniform(0.0, 4.0, size=(n_classes, informative_dim))
    v1 = means[labels - 1] + 0.6 * rng.normal(size=(n, informative_dim))
    v2 = rng.normal(size=(n, noise_dim))
    return MultiViewDataset((v1, v2), labels, ("signal", "noise"))


GENERATORS = {
    "latent": latent_two_view,
    "quadrant": quadrant_two_view,
    "noise": noise_view_dataset,
}
