"""Dense density-matrix states, pure ensembles and observables.

Everything is exact linear algebra on small complex matrices: validation on
construction, no silent repair. Arrays held by the value types are frozen
(non-writeable views) so instances can be shared freely across threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, ValidationError

#: Hard cap on Hilbert-space dimension; everything here is desk-scale dense.
MAX_DIM = 4096

NORM_TOL = 1e-12
HERM_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-9
WEIGHT_TOL = 1e-12
PURITY_TOL = 1e-9


def _frozen_complex_matrix(entries, what: str) -> np.ndarray:
    m = np.array(entries, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValidationError(f"{what}: expected a nonempty square matrix, got shape {m.shape}")
    if m.shape[0] > MAX_DIM:
        raise ValidationError(f"{what}: dimension {m.shape[0]} exceeds the cap {MAX_DIM}")
    m.setflags(write=False)
    return m


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.conj(m.T)


def hermiticity_defect(m: np.ndarray) -> float:
    """Max-abs deviation of a matrix from its own conjugate transpose."""
    return float(np.abs(m - dagger(m)).max())


@dataclass(frozen=True)
class StateVector:
    """A normalized pure state."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size == 0:
            raise ValidationError(f"state vector must be a nonempty 1-d array, got shape {amps.shape}")
        if amps.size > MAX_DIM:
            raise ValidationError(f"state dimension {amps.size} exceeds the cap {MAX_DIM}")
        nrm = float(np.linalg.norm(amps))
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValidationError(f"state vector norm {nrm!r} deviates from 1 beyond {NORM_TOL}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> np.ndarray:
        """Rank-one projector |psi><psi| as a plain array."""
        return np.outer(self.amplitudes, np.conj(self.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    """A hermitian, unit-trace, positive-semidefinite matrix.

    ``psd_tol`` is the amount of negative eigenvalue tolerated; time
    integrators pass a looser bound to absorb accumulated scheme error.
    """

    entries: np.ndarray
    psd_tol: float = PSD_TOL

    def __post_init__(self):
        m = _frozen_complex_matrix(self.entries, "density matrix")
        if hermiticity_defect(m) > HERM_TOL:
            raise ValidationError(
                f"density matrix is not hermitian within {HERM_TOL} "
                f"(defect {hermiticity_defect(m):.3e})"
            )
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"density matrix trace {tr!r} deviates from 1 beyond {TRACE_TOL}")
        min_eig = float(np.linalg.eigvalsh(0.5 * (m + dagger(m))).min())
        if min_eig < -self.psd_tol:
            raise ValidationError(
                f"density matrix has eigenvalue {min_eig:.3e} below -{self.psd_tol}"
            )
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class Observable:
    """A hermitian operator."""

    entries: np.ndarray

    def __post_init__(self):
        m = _frozen_complex_matrix(self.entries, "observable")
        defect = hermiticity_defect(m)
        if defect > HERM_TOL:
            raise ValidationError(f"observable is not hermitian within {HERM_TOL} (defect {defect:.3e})")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class PureEnsemble:
    """Weighted collection of pure states on a common space.

    Weights are strictly positive and sum to one; they need not be normalized
    quantum amplitudes, just classical mixture weights.
    """

    members: Tuple[Tuple[float, StateVector], ...]

    def __post_init__(self):
        members = tuple((float(w), s) for w, s in self.members)
        if not members:
            raise ValidationError("ensemble must contain at least one member")
        dims = {s.dim for _, s in members}
        if len(dims) != 1:
            raise DimensionMismatch(f"ensemble members live on mixed dimensions {sorted(dims)}")
        for w, _ in members:
            if not w > 0.0:
                raise ValidationError(f"ensemble weight {w!r} is not strictly positive")
        total = sum(w for w, _ in members)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValidationError(f"ensemble weights sum to {total!r}, not 1 within {WEIGHT_TOL}")
        object.__setattr__(self, "members", members)

    @property
    def dim(self) -> int:
        return self.members[0][1].dim


def basis_state(dim: int, index: int) -> StateVector:
    """Computational basis vector |index> on a dim-dimensional space."""
    if not 0 <= index < dim:
        raise ValidationError(f"basis index {index} out of range for dimension {dim}")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(amps)


def normalized_state(amplitudes: Iterable[complex]) -> StateVector:
    """Build a StateVector from unnormalized amplitudes."""
    amps = np.asarray(list(amplitudes) if not isinstance(amplitudes, np.ndarray) else amplitudes,
                      dtype=np.complex128)
    nrm = float(np.linalg.norm(amps))
    if nrm == 0.0:
        raise ValidationError("cannot normalize the zero vector")
    return StateVector(amps / nrm)


def pure_density(state: StateVector) -> DensityMatrix:
    """Rank-one density matrix of a pure state."""
    return DensityMatrix(state.projector())


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim, dtype=np.complex128) / dim)


def from_ensemble(e: PureEnsemble) -> DensityMatrix:
    """Mix an ensemble into its density matrix: sum_k w_k |psi_k><psi_k|."""
    rho = np.zeros((e.dim, e.dim), dtype=np.complex128)
    for w, s in e.members:
        rho += w * s.projector()
    return DensityMatrix(rho)


def expectation(obs: Observable, rho: DensityMatrix) -> float:
    """tr(A rho); the imaginary part must vanish to 1e-12 and is dropped."""
    if obs.dim != rho.dim:
        raise DimensionMismatch(f"observable dim {obs.dim} vs state dim {rho.dim}")
    val = complex(np.trace(obs.entries @ rho.entries))
    if abs(val.imag) > 1e-12:
        raise ValidationError(f"expectation value has imaginary part {val.imag:.3e}")
    return val.real


def hamiltonian_propagator(h: Observable, t: float) -> np.ndarray:
    """Unitary exp(-i h t) via spectral decomposition of the hermitian generator."""
    evals, vecs = np.linalg.eigh(h.entries)
    phases = np.exp(-1j * evals * t)
    return (vecs * phases) @ dagger(vecs)


def unitary_evolve(rho: DensityMatrix, h: Observable, t: float) -> DensityMatrix:
    """Closed-system evolution rho -> U rho U^dagger with U = exp(-i h t)."""
    if h.dim != rho.dim:
        raise DimensionMismatch(f"hamiltonian dim {h.dim} vs state dim {rho.dim}")
    u = hamiltonian_propagator(h, t)
    return DensityMatrix(u @ rho.entries @ dagger(u))


def partial_trace(rho: DensityMatrix, dims: Sequence[int], keep: str) -> DensityMatrix:
    """Trace out one tensor factor of a bipartite state.

    ``dims = (d_first, d_second)`` with the first factor varying slowest in the
    composite index; ``keep`` selects which factor survives, "first" or
    "second".
    """
    da, db = int(dims[0]), int(dims[1])
    if da * db != rho.dim:
        raise DimensionMismatch(f"cannot factor dimension {rho.dim} as {da}x{db}")
    if keep not in ("first", "second"):
        raise ValidationError(f"keep must be 'first' or 'second', got {keep!r}")
    blocks = rho.entries.reshape(da, db, da, db)
    if keep == "first":
        out = np.einsum("ajbj->ab", blocks)
    else:
        out = np.einsum("iaib->ab", blocks)
    return DensityMatrix(out)


def purity(rho: DensityMatrix) -> float:
    """tr(rho^2), in [1/dim, 1]."""
    val = complex(np.trace(rho.entries @ rho.entries))
    return val.real


def is_pure(rho: DensityMatrix, tol: float = PURITY_TOL) -> bool:
    """True when tr(rho^2) = 1 within tol."""
    return abs(purity(rho) - 1.0) <= tol
