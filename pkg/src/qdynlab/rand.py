"""Seeded random quantum objects (Haar unitaries, random states and maps)."""
from __future__ import annotations

import numpy as np

from .states import DensityMatrix, Observable, StateVector


def random_state(rng: np.random.Generator, dim: int) -> StateVector:
    """Haar-random pure state (normalized complex gaussian vector)."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(v / np.linalg.norm(v))


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    # fix the phase ambiguity so the distribution is Haar
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> Observable:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return Observable(scale * 0.5 * (z + np.conj(z.T)))


def random_density(rng: np.random.Generator, dim: int) -> DensityMatrix:
    """Random full-rank density matrix (normalized Wishart)."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    w = z @ np.conj(z.T)
    return DensityMatrix(w / np.trace(w))
