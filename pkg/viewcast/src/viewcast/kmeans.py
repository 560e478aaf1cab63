"""K-means viewpoint quantization: gaze directions become a class vocabulary."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.cluster import KMeans


@dataclass(frozen=True)
class CentroidVocabulary:
    """Unit-norm cluster centroids; frozen once fitted."""

    centroids: np.ndarray  # (K, 3)

    def __post_init__(self) -> None:
        c = self.centroids
        if c.ndim != 2 or c.shape[1] != 3 or c.shape[0] < 1:
            raise ValueError("centroids must be a (K, 3) array")
        norms = np.linalg.norm(c, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValueError("centroids must be unit length")
        c.flags.writeable = False

    @property
    def size(self) -> int:
        return int(self.centroids.shape[0])

    def assign(self, points: np.ndarray) -> np.ndarray:
        """Nearest-centroid class ids (greatest dot product on the sphere)."""
        pts = np.asarray(points, dtype=np.float64)
        return np.argmax(pts @ self.centroids.T, axis=-1)

    def decode(self, ids: np.ndarray) -> np.ndarray:
        return self.centroids[np.asarray(ids, dtype=np.int64)]


def fit_centroids(points: np.ndarray, k: int, seed: int = 0) -> CentroidVocabulary:
    """Standard K-means over unit vectors, centroids renormalized."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if k < 1:
        raise ValueError("k must be positive")
    distinct = np.unique(np.round(pts, 12), axis=0)
    if distinct.shape[0] < k:
        raise ValueError(
            f"k={k} exceeds the {distinct.shape[0]} distinct training points"
        )
    km = KMeans(n_clusters=k, n_init=10, random_state=seed)
    km.fit(pts)
    centers = km.cluster_centers_
    norms = np.linalg.norm(centers, axis=1, keepdims=True)
    if (norms == 0).any():
        raise ValueError("degenerate centroid at the origin")
    return CentroidVocabulary(centers / norms)
