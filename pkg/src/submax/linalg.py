"""Top singular triplet by power iteration on the Gram operator."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .rng import generator


class SingularTriplet(NamedTuple):
    value: float
    left: np.ndarray
    right: np.ndarray
    iterations: int
    converged: bool


def top_singular_triplet(A, seed: int = 0, tol: float = 1e-9,
                         max_iter: int = 10_000) -> SingularTriplet:
    """Largest singular value of A with its left/right singular vectors.

    Iterates v <- A^T A v / |A^T A v| from a seeded Gaussian start and stops
    once the relative change of the singular value estimate drops below
    ``tol``. Signs are fixed so the largest-magnitude entry of the left
    vector is positive.
    """
    A = np.asarray(A, dtype=np.float64)
    v = generator(seed).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        x = A @ v
        y = A.T @ x
        norm_y = np.linalg.norm(y)
        if norm_y == 0.0:
            converged = True
            break
        v = y / norm_y
        new_sigma = float(np.sqrt(norm_y))  # |A^T A v| -> sigma_1^2 as v converges
        if abs(new_sigma - sigma) <= tol * new_sigma:
            sigma = new_sigma
            converged = True
            break
        sigma = new_sigma
    u = A @ v
    value = float(np.linalg.norm(u))
    if value > 0:
        u /= value
    if u[np.argmax(np.abs(u))] < 0:
        u, v = -u, -v
    return SingularTriplet(value, u, v, it, converged)
