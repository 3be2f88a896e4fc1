"""Truncated multi-oscillator Fock spaces and open-field vacuum decay demos.

The basis enumerates occupation tuples under a total-occupation cap (and
optional per-oscillator caps), which keeps many-mode spaces tractable:
lowering operators are exact on the truncated basis, raising operators are
exact below the cap.

Two single-site coupling demos ship.  The ordinary one couples a two-species
field sum w_m (b_m^+ e^{i phi_m} + a_m e^{-i phi_m}) with w_m = 1/sqrt(2 p0_m)
to a memoryless bath, so the bare vacuum decays at 2 alpha sum_m w_m^2 per
site.  The tachyonic counterpart keeps only lowering parts with the mode
damping weights under the root, so the bare vacuum is exactly stationary and
only populated states relax.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import ValidationError
from .lindblad import (IntegrationSpec, LindbladGenerator,
                       generator_apply_matrix, integrate)
from .states import MAX_DIM, DensityMatrix, Observable

DEFAULT_TOTAL_CAP = 2


@dataclass(frozen=True)
class FockSpace:
    """Occupation-tuple basis for ``n_oscillators`` modes under caps."""

    n_oscillators: int
    total_cap: int
    per_osc_cap: Tuple[int, ...]
    occupations: Tuple[Tuple[int, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.occupations)

    def index(self, occ: Sequence[int]) -> int:
        return self._lookup[tuple(occ)]

    @property
    def _lookup(self) -> Dict[Tuple[int, ...], int]:
        cache = self.__dict__.get("_lookup_cache")
        if cache is None:
            cache = {occ: i for i, occ in enumerate(self.occupations)}
            object.__setattr__(self, "_lookup_cache", cache)
        return cache

    @property
    def vacuum_index(self) -> int:
        return self.index((0,) * self.n_oscillators)


def build_space(n_oscillators: int, total_cap: int = DEFAULT_TOTAL_CAP,
                per_osc_cap: Optional[Sequence[int]] = None) -> FockSpace:
    """Enumerate occupations with sum(n) <= total_cap and n_k <= per-cap."""
    if n_oscillators < 1:
        raise ValidationError(f"need at least one oscillator, got {n_oscillators}")
    if total_cap < 1:
        raise ValidationError(f"total occupation cap must be >= 1, got {total_cap}")
    caps = tuple(int(c) for c in (per_osc_cap if per_osc_cap is not None
                                  else [total_cap] * n_oscillators))
    if len(caps) != n_oscillators or any(c < 0 for c in caps):
        raise ValidationError(f"per-oscillator caps {caps} malformed for {n_oscillators} modes")

    states: List[Tuple[int, ...]] = []

    def extend(prefix: Tuple[int, ...], used: int):
        if len(prefix) == n_oscillators:
            states.append(prefix)
            return
        k = len(prefix)
        for n in range(min(caps[k], total_cap - used) + 1):
            extend(prefix + (n,), used + n)

    extend((), 0)
    if len(states) > MAX_DIM:
        raise ValidationError(
            f"truncated basis has {len(states)} states, beyond the {MAX_DIM} cap")
    return FockSpace(n_oscillators, total_cap, caps, tuple(states))


def annihilation(space: FockSpace, k: int) -> np.ndarray:
    """Matrix of a_k on the truncated basis (exact: lowering stays inside)."""
    if not 0 <= k < space.n_oscillators:
        raise ValidationError(f"oscillator index {k} out of range")
    dim = space.dim
    op = np.zeros((dim, dim), dtype=np.complex128)
    for col, occ in enumerate(space.occupations):
        n = occ[k]
        if n > 0:
            lowered = occ[:k] + (n - 1,) + occ[k + 1:]
            op[space.index(lowered), col] = math.sqrt(n)
    return op


def number_operator(space: FockSpace, k: int) -> np.ndarray:
    """Occupation of oscillator k, built directly as an exact integer diagonal."""
    if not 0 <= k < space.n_oscillators:
        raise ValidationError(f"oscillator index {k} out of range")
    counts = [occ[k] for occ in space.occupations]
    return np.diag(np.asarray(counts, dtype=np.complex128))


def mode_frequencies(n_modes: int, mass: float = 1.0) -> np.ndarray:
    """p0_m = sqrt(mass^2 + p_m^2) on the momentum grid p_m = m / n_modes."""
    if n_modes < 1:
        raise ValidationError(f"need at least one mode, got {n_modes}")
    momenta = np.arange(n_modes, dtype=float) / n_modes
    return np.sqrt(mass ** 2 + momenta ** 2)


class FieldModel(NamedTuple):
    space: FockSpace
    generator: LindbladGenerator
    coupling: np.ndarray
    vacuum_decay_rate: float


def ordinary_field_demo(n_modes: int, alpha: float,
                        total_cap: int = DEFAULT_TOTAL_CAP,
                        mass: float = 1.0,
                        phases: Optional[Sequence[float]] = None) -> FieldModel:
    """Two-species relativistic modes coupled through the local field.

    Oscillators 0..n_modes-1 are the particle modes (a), the rest the
    antiparticle modes (b); the free energy is sum p0 (n_a + n_b) and the
    coupling operator creates b quanta and absorbs a quanta, so the vacuum
    decays at 2 alpha sum_m 1/(2 p0_m).
    """
    if alpha <= 0.0:
        raise ValidationError(f"coupling rate must be positive, got {alpha}")
    p0 = mode_frequencies(n_modes, mass)
    w = 1.0 / np.sqrt(2.0 * p0)
    ph = np.zeros(n_modes) if phases is None else np.asarray(phases, dtype=float)
    if ph.shape != (n_modes,):
        raise ValidationError(f"need {n_modes} phases, got shape {ph.shape}")
    space = build_space(2 * n_modes, total_cap)
    field = np.zeros((space.dim, space.dim), dtype=np.complex128)
    h = np.zeros((space.dim, space.dim), dtype=np.complex128)
    for m in range(n_modes):
        a_m = annihilation(space, m)
        b_m = annihilation(space, n_modes + m)
        field += w[m] * (b_m.conj().T * np.exp(1j * ph[m]) + a_m * np.exp(-1j * ph[m]))
        h += p0[m] * (a_m.conj().T @ a_m + b_m.conj().T @ b_m)
    gen = LindbladGenerator(Observable(h), ((float(alpha), field),))
    rate = 2.0 * float(alpha) * float(np.sum(w ** 2))
    return FieldModel(space, gen, field, rate)


def tachyonic_field_demo(n_modes: int, alpha: float,
                         damping_weights: Sequence[float],
                         total_cap: int = DEFAULT_TOTAL_CAP,
                         phases: Optional[Sequence[float]] = None) -> FieldModel:
    """Lowering-only mode sum: the bare vacuum is exactly stationary.

    ``damping_weights`` are the per-mode damping rates entering under the
    square root; there is no free Hamiltonian for the damped continuum.
    """
    if alpha <= 0.0:
        raise ValidationError(f"coupling rate must be positive, got {alpha}")
    etas = np.asarray(damping_weights, dtype=float)
    if etas.shape != (n_modes,) or etas.min() <= 0.0:
        raise ValidationError(f"need {n_modes} positive damping weights")
    ph = np.zeros(n_modes) if phases is None else np.asarray(phases, dtype=float)
    if ph.shape != (n_modes,):
        raise ValidationError(f"need {n_modes} phases, got shape {ph.shape}")
    space = build_space(n_modes, total_cap)
    field = np.zeros((space.dim, space.dim), dtype=np.complex128)
    for m in range(n_modes):
        field += math.sqrt(etas[m]) * annihilation(space, m) * np.exp(-1j * ph[m])
    h = Observable(np.zeros((space.dim, space.dim), dtype=np.complex128))
    gen = LindbladGenerator(h, ((float(alpha), field),))
    return FieldModel(space, gen, field, 0.0)


def vacuum_projector(space: FockSpace) -> DensityMatrix:
    rho = np.zeros((space.dim, space.dim), dtype=np.complex128)
    rho[space.vacuum_index, space.vacuum_index] = 1.0
    return DensityMatrix(rho)


def vacuum_generator_norm(model: FieldModel) -> float:
    """sup-norm of the generator applied to the bare vacuum."""
    rho = vacuum_projector(model.space).entries
    return float(np.abs(generator_apply_matrix(model.generator, np.array(rho))).max())


def vacuum_survival(model: FieldModel, t_final: float, dt: float,
                    store_every: int = 1) -> List[Tuple[float, float]]:
    """(t, vacuum population) along the Lindblad evolution from the vacuum."""
    spec = IntegrationSpec(t_final=t_final, dt=dt)
    hist = integrate(model.generator, vacuum_projector(model.space), spec,
                     store_every=store_every)
    v = model.space.vacuum_index
    return [(t, float(np.real(rho.entries[v, v]))) for t, rho in hist]


class DecayFit(NamedTuple):
    rate: float
    curvature: float
    n_points: int


def fit_decay_rate(samples: Sequence[Tuple[float, float]],
                   window: Tuple[float, float] = (0.01, 0.1)) -> DecayFit:
    """Two-parameter fit ln S = -rate t + curvature t^2 on a depth window.

    Only samples with -ln S inside ``window`` enter, which keeps the rate
    read-off within the early-decay regime without assuming the rate first.
    """
    lo, hi = window
    ts, ys = [], []
    for t, s in samples:
        if s <= 0.0:
            continue
        depth = -math.log(s)
        if lo <= depth <= hi:
            ts.append(t)
            ys.append(math.log(s))
    if len(ts) < 3:
        raise ValidationError(
            f"only {len(ts)} samples in the decay window {window}; integrate further")
    t = np.asarray(ts)
    design = np.column_stack([-t, t ** 2])
    coef, *_ = np.linalg.lstsq(design, np.asarray(ys), rcond=None)
    return DecayFit(float(coef[0]), float(coef[1]), len(ts))
