"""Quantum-jump Monte-Carlo unraveling of the dissipative generator.

Scheme (first order in dt): from the current normalized state, each channel
fires with probability p_n = 2 alpha_n <psi|B_n^+B_n|psi> dt; a firing channel
applies L_n = sqrt(2 alpha_n) B_n and renormalizes, otherwise the state is
pushed through the exact drift propagator exp(-i H_eff dt) with
H_eff = h - i sum_n alpha_n B_n^+B_n and renormalized.  Averaging the particle
projectors reproduces the density-matrix evolution with O(1/sqrt(N))
statistical error.

Randomness contract: a counter-based Philox generator keyed by the seed
produces (a) the initial-state choices and (b) a [step, 2, particle] block of
uniforms per integration segment, so any parallel execution schedule consumes
identical numbers.  Ensemble reductions always run in fixed particle order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from . import kernels
from .errors import DimensionMismatch, StepSizeError, ValidationError
from .lindblad import LindbladGenerator
from .states import DensityMatrix, PureEnsemble, StateVector, dagger

#: stability bound on any single-channel jump probability per step
STABILITY_LIMIT = 0.1


@dataclass(frozen=True)
class UnravelingScheme:
    """Precomputed per-step operators for the jump unraveling."""

    dt: float
    drift: np.ndarray          # exp(-i H_eff dt)
    jump_ops: np.ndarray       # [n, d, d] L_n = sqrt(2 alpha_n) B_n
    rate_ops: np.ndarray       # [n, d, d] L_n^+ L_n

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValidationError(f"dt must be positive, got {self.dt!r}")
        for name in ("drift", "jump_ops", "rate_ops"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.complex128)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.drift.shape[0]

    @classmethod
    def from_generator(cls, g: LindbladGenerator, dt: float) -> "UnravelingScheme":
        d = g.dim
        n = len(g.jumps)
        ls = np.zeros((n, d, d), dtype=np.complex128)
        cs = np.zeros((n, d, d), dtype=np.complex128)
        sink = np.zeros((d, d), dtype=np.complex128)
        for k, (alpha, b) in enumerate(g.jumps):
            ls[k] = np.sqrt(2.0 * alpha) * b
            cs[k] = dagger(ls[k]) @ ls[k]
            sink += alpha * (dagger(b) @ b)
        h_eff = np.asarray(g.h.entries) - 1j * sink
        drift = expm(-1j * h_eff * float(dt))
        return cls(float(dt), drift, ls, cs)


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Weighted particle cloud of pure states plus the seed that produced it."""

    particles: Tuple[Tuple[float, StateVector], ...]
    rng_seed: int

    def __post_init__(self):
        parts = tuple((float(w), s) for w, s in self.particles)
        if not parts:
            raise ValidationError("trajectory ensemble must hold at least one particle")
        dims = {s.dim for _, s in parts}
        if len(dims) != 1:
            raise DimensionMismatch(f"particles live on mixed dimensions {sorted(dims)}")
        total = sum(w for w, _ in parts)
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"particle weights sum to {total!r}, not 1")
        object.__setattr__(self, "particles", parts)

    @property
    def dim(self) -> int:
        return self.particles[0][1].dim

    def amplitude_block(self) -> np.ndarray:
        return np.stack([s.amplitudes for _, s in self.particles])


def _checked_step_stats(max_single: float, max_total: float, norm_bad: bool, dt: float):
    if norm_bad:
        raise StepSizeError("a jump produced a numerically zero state; check the jump operators")
    if max_total >= 1.0:
        raise StepSizeError(
            f"total jump probability {max_total:.3f} >= 1 in one step; reduce dt={dt!r}")
    if max_single >= STABILITY_LIMIT:
        raise StepSizeError(
            f"single-channel jump probability {max_single:.3f} exceeds the stability "
            f"bound {STABILITY_LIMIT}; reduce dt={dt!r}")


def step(psi: StateVector, scheme: UnravelingScheme, rng: np.random.Generator) -> StateVector:
    """Advance a single particle one step, drawing two uniforms from rng."""
    if psi.dim != scheme.dim:
        raise DimensionMismatch(f"state dim {psi.dim} vs scheme dim {scheme.dim}")
    u = rng.random(2)
    block = psi.amplitudes[None, :]
    out, _, max_single, max_total, bad = kernels.trajectory_step_block_numpy(
        block, scheme.drift, scheme.jump_ops, scheme.rate_ops, scheme.dt,
        u[:1], u[1:])
    _checked_step_stats(max_single, max_total, bad, scheme.dt)
    return StateVector(out[0])


def _sample_initial_block(source: PureEnsemble, n_particles: int,
                          rng: np.random.Generator) -> np.ndarray:
    weights = np.array([w for w, _ in source.members])
    stack = np.stack([s.amplitudes for _, s in source.members])
    choice = rng.choice(len(weights), size=n_particles, p=weights / weights.sum())
    return stack[choice].copy()


def evolve_ensemble(source: PureEnsemble, g: LindbladGenerator, t_final: float, dt: float,
                    n_particles: int, seed: int,
                    checkpoints: Optional[Sequence[float]] = None,
                    ) -> List[Tuple[float, TrajectoryEnsemble]]:
    """Evolve n_particles sampled from ``source`` and return checkpoint ensembles.

    Deterministic for a fixed (seed, dt, checkpoint list): the Philox stream is
    consumed in a fixed [step, 2, particle] layout.  Checkpoints must be
    multiples of dt; the default is the single checkpoint t_final.
    """
    if n_particles < 1:
        raise ValidationError(f"n_particles must be >= 1, got {n_particles}")
    if dt <= 0.0:
        raise ValidationError(f"dt must be positive, got {dt!r}")
    if source.dim != g.dim:
        raise DimensionMismatch(f"ensemble dim {source.dim} vs generator dim {g.dim}")
    times = sorted(set(float(t) for t in (checkpoints if checkpoints is not None else [t_final])))
    steps_to: List[int] = []
    for t in times:
        if t < 0.0 or t > t_final * (1 + 1e-12):
            raise ValidationError(f"checkpoint {t!r} outside [0, {t_final!r}]")
        k = round(t / dt)
        if abs(k * dt - t) > 1e-9 * max(1.0, t_final):
            raise ValidationError(f"checkpoint {t!r} is not a multiple of dt={dt!r}")
        steps_to.append(int(k))

    scheme = UnravelingScheme.from_generator(g, dt)
    rng = np.random.Generator(np.random.Philox(seed))
    psis = _sample_initial_block(source, n_particles, rng)
    weights = tuple(1.0 / n_particles for _ in range(n_particles))

    history: List[Tuple[float, TrajectoryEnsemble]] = []
    done = 0
    for target_steps, t in zip(steps_to, times):
        while done < target_steps:
            seg = min(256, target_steps - done)
            u = rng.random((seg, 2, n_particles))
            for s in range(seg):
                psis, _, max_single, max_total, bad = kernels.trajectory_step_block(
                    psis, scheme.drift, scheme.jump_ops, scheme.rate_ops, dt,
                    u[s, 0], u[s, 1])
                _checked_step_stats(max_single, max_total, bad, dt)
            done += seg
        ens = TrajectoryEnsemble(
            tuple((w, StateVector(psis[i])) for i, w in enumerate(weights)), seed)
        history.append((t, ens))
    return history


def ensemble_density(e: TrajectoryEnsemble) -> DensityMatrix:
    """Weighted projector average, validated as a density matrix."""
    mean, _, _ = ensemble_density_with_se(e)
    return DensityMatrix(mean)


def ensemble_density_with_se(e: TrajectoryEnsemble) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(mean density, entrywise SE of real part, entrywise SE of imag part).

    Standard errors treat the particles as i.i.d. draws with their weights;
    for uniform weights this is the usual sample SE of the projector entries.
    """
    block = e.amplitude_block()
    w = np.array([wt for wt, _ in e.particles])
    projs = np.einsum("ni,nj->nij", block, np.conj(block))
    mean = np.einsum("n,nij->ij", w, projs)
    n = len(w)
    if n > 1:
        var_re = np.einsum("n,nij->ij", w, (projs.real - mean.real) ** 2)
        var_im = np.einsum("n,nij->ij", w, (projs.imag - mean.imag) ** 2)
        se_re = np.sqrt(var_re / (n - 1))
        se_im = np.sqrt(var_im / (n - 1))
    else:
        se_re = np.zeros_like(mean.real)
        se_im = np.zeros_like(mean.imag)
    mean = 0.5 * (mean + dagger(mean))
    return mean, se_re, se_im
