"""Markovian open-system evolution: generator, RK4 integrator, dephasing forms.

The generator convention is
    d rho/dt = -i[h, rho] + sum_n alpha_n (2 B_n rho B_n^+ - B_n^+B_n rho - rho B_n^+B_n)
with strictly positive rates alpha_n.  Note the factor 2 on the sandwich term;
jump operators in the stochastic unraveling absorb it as L_n = sqrt(2 alpha_n) B_n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from . import kernels
from .errors import DimensionMismatch, IntegrationError, ValidationError
from .states import DensityMatrix, Observable, dagger, hermiticity_defect

GENERATOR_TOL = 1e-12
STORED_HERM_TOL = 1e-9
STORED_TRACE_TOL = 1e-9
STORED_PSD_TOL = 1e-8


@dataclass(frozen=True)
class LindbladGenerator:
    """Hamiltonian part plus weighted jump terms (alpha_n, B_n), alpha_n > 0."""

    h: Observable
    jumps: Tuple[Tuple[float, np.ndarray], ...] = ()

    def __post_init__(self):
        jumps = []
        for alpha, op in self.jumps:
            a = float(alpha)
            if not a > 0.0:
                raise ValidationError(f"jump rate {a!r} is not strictly positive")
            m = np.array(op, dtype=np.complex128)
            if m.shape != (self.h.dim, self.h.dim):
                raise DimensionMismatch(
                    f"jump operator shape {m.shape} vs hamiltonian dim {self.h.dim}")
            m.setflags(write=False)
            jumps.append((a, m))
        object.__setattr__(self, "jumps", tuple(jumps))

    @property
    def dim(self) -> int:
        return self.h.dim

    def stacked(self):
        """(h, B stack, B^+ stack, B^+B stack, alpha array) for the kernels."""
        d = self.dim
        n = len(self.jumps)
        bs = np.zeros((n, d, d), dtype=np.complex128)
        bds = np.zeros((n, d, d), dtype=np.complex128)
        bdbs = np.zeros((n, d, d), dtype=np.complex128)
        alphas = np.zeros(n)
        for k, (a, b) in enumerate(self.jumps):
            bs[k] = b
            bds[k] = dagger(b)
            bdbs[k] = bds[k] @ b
            alphas[k] = a
        return np.array(self.h.entries), bs, bds, bdbs, alphas


@dataclass(frozen=True)
class IntegrationSpec:
    """Fixed-step integration window; the only scheme is classic RK4."""

    t_final: float
    dt: float
    scheme: str = "rk4"

    def __post_init__(self):
        if self.scheme != "rk4":
            raise ValidationError(f"unknown scheme {self.scheme!r}; only 'rk4' is implemented")
        if self.dt <= 0.0:
            raise ValidationError(f"dt must be positive, got {self.dt!r}")
        if self.t_final < 0.0:
            raise ValidationError(f"t_final must be nonnegative, got {self.t_final!r}")
        if self.t_final > 0.0 and self.dt > self.t_final * (1 + 1e-12):
            raise ValidationError(f"dt={self.dt!r} exceeds t_final={self.t_final!r}")

    def n_steps(self) -> int:
        if self.t_final == 0.0:
            return 0
        n = round(self.t_final / self.dt)
        if abs(n * self.dt - self.t_final) > 1e-9 * max(1.0, self.t_final):
            raise ValidationError(
                f"t_final={self.t_final!r} is not an integer multiple of dt={self.dt!r}")
        return int(n)


def generator_apply(g: LindbladGenerator, rho: DensityMatrix) -> np.ndarray:
    """Right-hand side d rho/dt; traceless and hermitian within 1e-12."""
    out = generator_apply_matrix(g, rho.entries)
    tr = abs(complex(np.trace(out)))
    herm = hermiticity_defect(out)
    scale = max(1.0, float(np.abs(rho.entries).max()))
    if tr > GENERATOR_TOL * scale or herm > GENERATOR_TOL * scale:
        raise ValidationError(
            f"generator output violates structure (trace {tr:.3e}, hermiticity {herm:.3e})")
    return out


def generator_apply_matrix(g: LindbladGenerator, m: np.ndarray) -> np.ndarray:
    """Generator acting on an arbitrary matrix (no structural validation)."""
    h, bs, bds, bdbs, alphas = g.stacked()
    return kernels._rhs_numpy(h, bs, bds, bdbs, alphas, np.asarray(m, dtype=np.complex128))


def propagate_matrix(g: LindbladGenerator, m0: np.ndarray, t_final: float, dt: float,
                     rehermitize: bool = True, store_every: int = 0) -> np.ndarray:
    """Low-level RK4 propagation of an arbitrary matrix under the generator.

    With ``store_every=0`` only the final matrix returns; a positive value
    returns the list of (t, matrix) snapshots every that many steps (always
    including t=0 and the final time).  Re-hermitization must be off when
    complex-linearity of the flow matters (e.g. propagating basis matrices).
    """
    spec = IntegrationSpec(t_final, dt)
    n = spec.n_steps()
    h, bs, bds, bdbs, alphas = g.stacked()
    m = np.array(m0, dtype=np.complex128)
    if m.shape != (g.dim, g.dim):
        raise DimensionMismatch(f"matrix shape {m.shape} vs generator dim {g.dim}")
    if store_every <= 0:
        return kernels.rk4_propagate(h, bs, bds, bdbs, alphas, m, dt, n, rehermitize)
    out: List[Tuple[float, np.ndarray]] = [(0.0, m.copy())]
    done = 0
    while done < n:
        chunk = min(store_every, n - done)
        m = kernels.rk4_propagate(h, bs, bds, bdbs, alphas, m, dt, chunk, rehermitize)
        done += chunk
        out.append((done * dt, m.copy()))
    return out


def integrate(g: LindbladGenerator, rho0: DensityMatrix, spec: IntegrationSpec,
              store_every: int = 1) -> List[Tuple[float, DensityMatrix]]:
    """Integrate a density matrix, validating every stored state.

    Stored states must stay hermitian and unit-trace within 1e-9 with min
    eigenvalue >= -1e-8; a violation aborts with a diagnostic suggesting a
    smaller step.
    """
    if rho0.dim != g.dim:
        raise DimensionMismatch(f"state dim {rho0.dim} vs generator dim {g.dim}")
    if store_every < 1:
        raise ValidationError(f"store_every must be >= 1, got {store_every}")
    n = spec.n_steps()
    h, bs, bds, bdbs, alphas = g.stacked()
    m = np.array(rho0.entries)
    result: List[Tuple[float, DensityMatrix]] = [(0.0, rho0)]
    done = 0
    while done < n:
        chunk = min(store_every, n - done)
        m = kernels.rk4_propagate(h, bs, bds, bdbs, alphas, m, spec.dt, chunk, True)
        done += chunk
        t = done * spec.dt
        herm = hermiticity_defect(m)
        tr = abs(complex(np.trace(m)) - 1.0)
        if herm > STORED_HERM_TOL or tr > STORED_TRACE_TOL:
            raise IntegrationError(
                f"integration lost structure at t={t:.6g} (hermiticity {herm:.3e}, "
                f"trace drift {tr:.3e}); the step size {spec.dt} is too large")
        try:
            state = DensityMatrix(m, psd_tol=STORED_PSD_TOL)
        except ValidationError as exc:
            raise IntegrationError(
                f"integration left the state space at t={t:.6g}: {exc}; "
                f"the step size {spec.dt} is too large") from exc
        result.append((t, state))
    return result


def dephasing_analytic(b: Observable, alpha: float, rho0: DensityMatrix,
                       t: float) -> DensityMatrix:
    """Closed-form pure dephasing for a diagonal pointer observable.

    Entry (i, j) of the initial state is damped by exp(-alpha (b_i - b_j)^2 t);
    populations are untouched.
    """
    if alpha <= 0.0:
        raise ValidationError(f"alpha must be strictly positive, got {alpha!r}")
    bm = b.entries
    off = np.abs(bm - np.diag(np.diagonal(bm))).max()
    if off > 1e-12:
        raise ValidationError(
            f"pointer observable must be diagonal (off-diagonal magnitude {off:.3e})")
    if b.dim != rho0.dim:
        raise DimensionMismatch(f"observable dim {b.dim} vs state dim {rho0.dim}")
    diag = np.real(np.diagonal(bm))
    gaps = diag[:, None] - diag[None, :]
    factors = np.exp(-alpha * gaps ** 2 * t)
    return DensityMatrix(rho0.entries * factors)


def decoherence_time(alpha: float, b1: float, b2: float) -> float:
    """1 / (alpha (b1-b2)^2); equal pointer values give an infinite lifetime."""
    if alpha <= 0.0:
        raise ValidationError(f"alpha must be strictly positive, got {alpha!r}")
    gap = (float(b1) - float(b2)) ** 2
    if gap == 0.0:
        return math.inf
    return 1.0 / (alpha * gap)
