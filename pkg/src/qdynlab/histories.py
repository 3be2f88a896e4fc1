"""Chained-projection histories and projective-decoherence experiments.

A projector family fixes, for each of N times, a complete orthogonal set of
projectors ("slots").  A branch picks one slot per time; its probability is
the chain expectation

    <psi| P_1 P_2 ... P_N ... P_2 P_1 |psi>  =  || P_N ... P_2 P_1 |psi> ||^2

with P_i the slot projector conjugated into the Heisenberg picture at time
t_i.  Branch probabilities always sum to one over a complete family, but
individual single-time quantities keep their conventional values only when
all Heisenberg projectors commute; the commutation residual quantifies the
obstruction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, ValidationError
from .lindblad import dephasing_analytic
from .states import (Observable, StateVector, dagger, hamiltonian_propagator,
                     pure_density)

FAMILY_TOL = 1e-10
PROB_FLOOR = -1e-10


@dataclass(frozen=True)
class ProjectorFamily:
    """Times plus, per time, a complete orthogonal projector set."""

    times: Tuple[float, ...]
    slots: Tuple[Tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if not times:
            raise ValidationError("projector family needs at least one time")
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValidationError(f"times must be strictly increasing, got {times}")
        if len(self.slots) != len(times):
            raise ValidationError(
                f"{len(times)} times but {len(self.slots)} projector sets")
        frozen = []
        dim = None
        for group in self.slots:
            ops = []
            for p in group:
                m = np.array(p, dtype=np.complex128)
                if m.ndim != 2 or m.shape[0] != m.shape[1]:
                    raise ValidationError(f"projector must be square, got shape {m.shape}")
                if dim is None:
                    dim = m.shape[0]
                elif m.shape[0] != dim:
                    raise DimensionMismatch("projector sets on mixed dimensions")
                m.setflags(write=False)
                ops.append(m)
            if not ops:
                raise ValidationError("each time needs at least one projector")
            frozen.append(tuple(ops))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "slots", tuple(frozen))

    @property
    def dim(self) -> int:
        return self.slots[0][0].shape[0]

    @property
    def n_times(self) -> int:
        return len(self.times)


class FamilyReport(NamedTuple):
    orthogonality: float
    completeness: float
    idempotence: float
    hermiticity: float
    valid: bool


def validate_family(f: ProjectorFamily, tol: float = FAMILY_TOL) -> FamilyReport:
    """Worst orthogonality / completeness / idempotence defects across all times."""
    worst_orth = worst_comp = worst_idem = worst_herm = 0.0
    eye = np.eye(f.dim)
    for group in f.slots:
        total = np.zeros((f.dim, f.dim), dtype=np.complex128)
        for i, p in enumerate(group):
            worst_herm = max(worst_herm, float(np.abs(p - dagger(p)).max()))
            worst_idem = max(worst_idem, float(np.abs(p @ p - p).max()))
            total += p
            for q in group[i + 1:]:
                worst_orth = max(worst_orth, float(np.abs(p @ q).max()))
        worst_comp = max(worst_comp, float(np.abs(total - eye).max()))
    valid = max(worst_orth, worst_comp, worst_idem, worst_herm) <= tol
    return FamilyReport(worst_orth, worst_comp, worst_idem, worst_herm, valid)


def basis_family(times: Sequence[float], dim: int) -> ProjectorFamily:
    """Rank-one computational-basis projectors repeated at every time."""
    projs = tuple(np.diag(np.eye(dim)[k]).astype(np.complex128) for k in range(dim))
    return ProjectorFamily(tuple(times), tuple(projs for _ in times))


def hopping_hamiltonian(dim: int, coupling: float = 1.0) -> Observable:
    """Nearest-neighbor hopping chain; generic enough to frustrate commutation."""
    m = np.zeros((dim, dim), dtype=np.complex128)
    for k in range(dim - 1):
        m[k, k + 1] = m[k + 1, k] = coupling
    return Observable(m)


def heisenberg_projectors(f: ProjectorFamily, h: Observable) -> List[List[np.ndarray]]:
    """P_i(t_i) = U^+(t_i) P_i U(t_i) for every time and slot."""
    if h.dim != f.dim:
        raise DimensionMismatch(f"hamiltonian dim {h.dim} vs family dim {f.dim}")
    out = []
    for t, group in zip(f.times, f.slots):
        u = hamiltonian_propagator(h, t)
        ud = dagger(u)
        out.append([ud @ p @ u for p in group])
    return out


def history_probability(psi: StateVector, h: Observable, f: ProjectorFamily,
                        branch: Sequence[int]) -> float:
    """Probability of one branch (a slot index per time)."""
    report = validate_family(f)
    if not report.valid:
        raise ValidationError(f"projector family fails validation: {report}")
    if len(branch) != f.n_times:
        raise ValidationError(f"branch length {len(branch)} vs {f.n_times} times")
    heis = heisenberg_projectors(f, h)
    vec = psi.amplitudes.copy()
    for i, n in enumerate(branch):
        if not 0 <= n < len(f.slots[i]):
            raise ValidationError(f"branch index {n} out of range at time {f.times[i]}")
        vec = heis[i][n] @ vec
    val = float(np.real(np.vdot(vec, vec)))
    if val < PROB_FLOOR:
        raise ValidationError(f"branch probability {val:.3e} below the clipping floor")
    return min(max(val, 0.0), 1.0)


def all_branch_probabilities(psi: StateVector, h: Observable,
                             f: ProjectorFamily) -> Dict[Tuple[int, ...], float]:
    """Probabilities of every branch, keyed by the slot-index tuple."""
    report = validate_family(f)
    if not report.valid:
        raise ValidationError(f"projector family fails validation: {report}")
    heis = heisenberg_projectors(f, h)
    out: Dict[Tuple[int, ...], float] = {}

    def descend(i: int, vec: np.ndarray, key: Tuple[int, ...]):
        if i == f.n_times:
            val = float(np.real(np.vdot(vec, vec)))
            if val < PROB_FLOOR:
                raise ValidationError(f"branch probability {val:.3e} below the clipping floor")
            out[key] = min(max(val, 0.0), 1.0)
            return
        for n, p in enumerate(heis[i]):
            descend(i + 1, p @ vec, key + (n,))

    descend(0, psi.amplitudes.copy(), ())
    return out


def commutation_residual(f: ProjectorFamily, h: Observable) -> float:
    """max spectral norm of [P_i, P_j] over all pairs of Heisenberg projectors."""
    heis = heisenberg_projectors(f, h)
    flat = [p for group in heis for p in group]
    worst = 0.0
    for i, p in enumerate(flat):
        for q in flat[i + 1:]:
            worst = max(worst, float(np.linalg.norm(p @ q - q @ p, 2)))
    return worst


class ClassicalChainCheck(NamedTuple):
    """Defects of the classical reading of a (commuting) family."""

    max_product_defect: float
    max_marginal_defect: float


def classical_chain_check(psi: StateVector, h: Observable,
                          f: ProjectorFamily) -> ClassicalChainCheck:
    """Compare branch probabilities against the classical factorized reading.

    For commuting Heisenberg projectors, each branch probability equals the
    plain time-ordered product expectation <psi|P_1 ... P_N|psi> and the
    single-time marginals recovered by summing branches equal <psi|P_in|psi>.
    Both defects vanish within 1e-10 exactly when the commutation residual
    does.
    """
    heis = heisenberg_projectors(f, h)
    branch_probs = all_branch_probabilities(psi, h, f)
    worst_prod = 0.0
    for key, prob in branch_probs.items():
        op = np.eye(f.dim, dtype=np.complex128)
        for i, n in enumerate(key):
            op = op @ heis[i][n]
        plain = float(np.real(np.vdot(psi.amplitudes, op @ psi.amplitudes)))
        worst_prod = max(worst_prod, abs(prob - plain))
    worst_marg = 0.0
    for i in range(f.n_times):
        for n, p in enumerate(heis[i]):
            direct = float(np.real(np.vdot(psi.amplitudes, p @ psi.amplitudes)))
            summed = sum(prob for key, prob in branch_probs.items() if key[i] == n)
            worst_marg = max(worst_marg, abs(direct - summed))
    return ClassicalChainCheck(worst_prod, worst_marg)


def coarse_grain(f: ProjectorFamily, time_index: int, merge: Tuple[int, int]) -> ProjectorFamily:
    """Merge two slots at one time by summing their projectors."""
    i, j = sorted(merge)
    if i == j:
        raise ValidationError("cannot merge a slot with itself")
    group = list(f.slots[time_index])
    if not 0 <= j < len(group):
        raise ValidationError(f"slot index {j} out of range at time index {time_index}")
    merged = group[i] + group[j]
    new_group = [merged] + [p for k, p in enumerate(group) if k not in (i, j)]
    slots = list(f.slots)
    slots[time_index] = tuple(new_group)
    return ProjectorFamily(f.times, tuple(slots))


def projective_decoherence(rho: np.ndarray, projectors: Sequence[np.ndarray]) -> np.ndarray:
    """Full basis decoherence rho -> sum_n P_n rho P_n."""
    out = np.zeros_like(rho)
    for p in projectors:
        out += p @ rho @ p
    return out


def zeno_dephasing_experiment(psi0: StateVector, h: Observable,
                              basis_values: Sequence[float], n_steps: int,
                              t_final: float) -> List[dict]:
    """Alternate unitary steps with full projective decoherence in a basis.

    ``basis_values`` are the pointer values b_n attached to the computational
    basis states (they set the matched dephasing rate).  Each row reports the
    off-diagonal magnitude just after the unitary half step and just after the
    projection, together with the closed-form dephasing envelope for the
    matched rate alpha_eff = 1/(min_gap^2 dt): coherence suppressed to 1/e per
    cycle for the closest pointer pair, complete suppression in the projective
    limit.
    """
    dim = psi0.dim
    if h.dim != dim or len(basis_values) != dim:
        raise DimensionMismatch("state, hamiltonian and pointer values must share one dimension")
    if n_steps < 1:
        raise ValidationError(f"n_steps must be >= 1, got {n_steps}")
    dt = t_final / n_steps
    vals = np.array([float(v) for v in basis_values])
    gaps = np.abs(vals[:, None] - vals[None, :])
    offdiag_gaps = gaps[~np.eye(dim, dtype=bool)]
    if offdiag_gaps.size == 0 or offdiag_gaps.min() == 0.0:
        raise ValidationError("pointer values must be pairwise distinct")
    alpha_eff = 1.0 / (offdiag_gaps.min() ** 2 * dt)
    pointer = Observable(np.diag(vals).astype(np.complex128))

    projs = [np.diag(np.eye(dim)[k]).astype(np.complex128) for k in range(dim)]
    u = hamiltonian_propagator(h, dt)
    rho = psi0.projector()
    rho0_coh = pure_density(psi0)
    mask = ~np.eye(dim, dtype=bool)

    rows: List[dict] = [{
        "t": 0.0,
        "offdiag_pre": float(np.abs(rho[mask]).max()),
        "offdiag_post": float(np.abs(projective_decoherence(rho, projs)[mask]).max()),
        "dephasing_envelope": float(np.abs(rho0_coh.entries[mask]).max()),
        "population_0": float(np.real(rho[0, 0])),
    }]
    rho = projective_decoherence(rho, projs)
    for k in range(1, n_steps + 1):
        rho = u @ rho @ dagger(u)
        pre = float(np.abs(rho[mask]).max())
        rho = projective_decoherence(rho, projs)
        post = float(np.abs(rho[mask]).max())
        envelope = dephasing_analytic(pointer, alpha_eff, rho0_coh, k * dt)
        rows.append({
            "t": k * dt,
            "offdiag_pre": pre,
            "offdiag_post": post,
            "dephasing_envelope": float(np.abs(envelope.entries[mask]).max()),
            "population_0": float(np.real(rho[0, 0])),
        })
    return rows
