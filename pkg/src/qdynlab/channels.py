"""Completely positive maps, hermiticity-preserving maps, and their tests.

Conventions
-----------
A Kraus channel is a list of (weight, operator) terms with strictly positive
weights and the completeness sum ``sum_n w_n A_n^+ A_n = 1``.  The more general
hermiticity-preserving maps add conjugation terms that act on a density matrix
as ``w * (B rho B^+)^*`` (entrywise complex conjugation in the computational
basis).  On hermitian inputs that is the transpose map composed with ordinary
Kraus conjugation, so the unique complex-linear extension used for the Choi
construction is ``X -> conj(B) X^T conj(B)^+``; on density matrices both forms
agree entrywise.  The conjugation semantics are therefore basis-dependent, and
the basis is always the computational one.

The Choi matrix uses the column-stacking convention
``C = sum_ij |i><j| (x) m(|i><j|)``; complete positivity is equivalent to
``C >= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Tuple, Union

import numpy as np

from .errors import DimensionMismatch, ValidationError
from .rand import random_state
from .states import MAX_DIM, DensityMatrix, dagger, hermiticity_defect

COMPLETENESS_TOL = 1e-10
UNITARY_TOL = 1e-10
DILATION_TOL = 1e-10
CP_TOL = 1e-9
CHOI_HERM_TOL = 1e-10


def _term_tuple(terms, what: str) -> Tuple[Tuple[float, np.ndarray], ...]:
    out = []
    dim = None
    for weight, op in terms:
        w = float(weight)
        m = np.array(op, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"{what}: operator must be square, got shape {m.shape}")
        if dim is None:
            dim = m.shape[0]
            if dim > MAX_DIM:
                raise ValidationError(f"{what}: dimension {dim} exceeds the cap {MAX_DIM}")
        elif m.shape[0] != dim:
            raise DimensionMismatch(f"{what}: mixed operator dimensions {dim} and {m.shape[0]}")
        m.setflags(write=False)
        out.append((w, m))
    return tuple(out)


def _completeness_sum(terms) -> np.ndarray:
    dim = terms[0][1].shape[0]
    acc = np.zeros((dim, dim), dtype=np.complex128)
    for w, op in terms:
        acc += w * (dagger(op) @ op)
    return acc


@dataclass(frozen=True)
class KrausChannel:
    """Trace-preserving CP map given as positive-weighted Kraus terms."""

    terms: Tuple[Tuple[float, np.ndarray], ...]

    def __post_init__(self):
        terms = _term_tuple(self.terms, "kraus channel")
        if not terms:
            raise ValidationError("kraus channel needs at least one term")
        for w, _ in terms:
            if not w > 0.0:
                raise ValidationError(f"kraus weight {w!r} is not strictly positive")
        defect = np.abs(_completeness_sum(terms) - np.eye(terms[0][1].shape[0])).max()
        if defect > COMPLETENESS_TOL:
            raise ValidationError(
                f"kraus completeness sum deviates from identity by {defect:.3e} "
                f"(tolerance {COMPLETENESS_TOL})"
            )
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self) -> int:
        return self.terms[0][1].shape[0]


@dataclass(frozen=True)
class HermiticityPreservingMap:
    """Map with ordinary Kraus terms plus entrywise-conjugation terms.

    ``linear_terms`` carry real weights of either sign; ``conjugation_terms``
    carry strictly positive weights.  The combined completeness constraint
    ``sum w A^+A + sum w~ B^+B = 1`` holds within 1e-10.
    """

    linear_terms: Tuple[Tuple[float, np.ndarray], ...]
    conjugation_terms: Tuple[Tuple[float, np.ndarray], ...] = ()

    def __post_init__(self):
        lin = _term_tuple(self.linear_terms, "map linear terms")
        conj = _term_tuple(self.conjugation_terms, "map conjugation terms")
        if not lin and not conj:
            raise ValidationError("map needs at least one term")
        for w, _ in conj:
            if not w > 0.0:
                raise ValidationError(f"conjugation weight {w!r} is not strictly positive")
        dims = {op.shape[0] for _, op in lin + conj}
        if len(dims) > 1:
            raise DimensionMismatch(f"mixed operator dimensions {sorted(dims)}")
        dim = dims.pop()
        acc = np.zeros((dim, dim), dtype=np.complex128)
        for w, op in lin + conj:
            acc += w * (dagger(op) @ op)
        defect = np.abs(acc - np.eye(dim)).max()
        if defect > COMPLETENESS_TOL:
            raise ValidationError(
                f"combined completeness sum deviates from identity by {defect:.3e}"
            )
        object.__setattr__(self, "linear_terms", lin)
        object.__setattr__(self, "conjugation_terms", conj)

    @property
    def dim(self) -> int:
        terms = self.linear_terms or self.conjugation_terms
        return terms[0][1].shape[0]


@dataclass(frozen=True)
class ChoiMatrix:
    """Choi matrix of a map on a dim-dimensional space (entries are dim^2 x dim^2)."""

    entries: np.ndarray
    dim: int

    def __post_init__(self):
        m = np.array(self.entries, dtype=np.complex128)
        d = int(self.dim)
        if m.shape != (d * d, d * d):
            raise DimensionMismatch(f"choi matrix shape {m.shape} does not match dim {d}")
        defect = hermiticity_defect(m)
        if defect > CHOI_HERM_TOL:
            raise ValidationError(f"choi matrix not hermitian within {CHOI_HERM_TOL} (defect {defect:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "dim", d)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries).min())


AnyMap = Union[KrausChannel, HermiticityPreservingMap]


def apply_map_matrix(m: AnyMap, x: np.ndarray) -> np.ndarray:
    """Apply the complex-linear extension of the map to an arbitrary matrix.

    Conjugation terms act as conj(B) X^T conj(B)^+, which coincides with
    (B X B^+)^* for hermitian X.
    """
    x = np.asarray(x, dtype=np.complex128)
    if isinstance(m, KrausChannel):
        lin, conj = m.terms, ()
    else:
        lin, conj = m.linear_terms, m.conjugation_terms
    dim = (lin or conj)[0][1].shape[0]
    if x.shape != (dim, dim):
        raise DimensionMismatch(f"input shape {x.shape} vs map dimension {dim}")
    out = np.zeros_like(x)
    for w, op in lin:
        out += w * (op @ x @ dagger(op))
    for w, op in conj:
        bc = np.conj(op)
        out += w * (bc @ x.T @ dagger(bc))
    return out


def apply_kraus(c: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    """Apply a Kraus channel; the output is validated as a density matrix."""
    return DensityMatrix(apply_map_matrix(c, rho.entries))


class GeneralMapResult(NamedTuple):
    """Output of a hermiticity-preserving map plus its positivity report."""

    matrix: np.ndarray
    hermiticity_defect: float
    trace_defect: float
    min_eigenvalue: float
    positive: bool


def apply_general(m: HermiticityPreservingMap, rho: DensityMatrix,
                  psd_tol: float = 1e-9) -> GeneralMapResult:
    """Apply a general map; positivity is reported, not guaranteed."""
    out = apply_map_matrix(m, rho.entries)
    herm = hermiticity_defect(out)
    trace = abs(complex(np.trace(out)) - 1.0)
    min_eig = float(np.linalg.eigvalsh(0.5 * (out + dagger(out))).min())
    return GeneralMapResult(out, float(herm), float(trace), min_eig, min_eig >= -psd_tol)


def choi_matrix(m: AnyMap) -> ChoiMatrix:
    """C = sum_ij |i><j| (x) m(|i><j|)."""
    if isinstance(m, KrausChannel):
        dim = m.dim
    else:
        dim = m.dim
    c = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    unit = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(dim):
        for j in range(dim):
            unit[i, j] = 1.0
            block = apply_map_matrix(m, unit)
            c[i * dim:(i + 1) * dim, j * dim:(j + 1) * dim] = block
            unit[i, j] = 0.0
    # hermitize away representation roundoff before the type-level check
    c = 0.5 * (c + dagger(c))
    return ChoiMatrix(c, dim)


def is_completely_positive(m: AnyMap, tol: float = CP_TOL) -> Tuple[bool, float]:
    """(CP within tol, min Choi eigenvalue)."""
    min_eig = choi_matrix(m).min_eigenvalue()
    return (min_eig >= -tol, min_eig)


class PositivityScan(NamedTuple):
    """Worst value of <phi| m(|psi><psi|) |phi> found over sampled pure states."""

    positive: bool
    worst_value: float
    witness_in: np.ndarray
    witness_out: np.ndarray


def is_positive_on_pure(m: AnyMap, samples: int = 500, seed: int = 0,
                        qubit_grid: int = 0, tol: float = 1e-12) -> PositivityScan:
    """Positivity scan over pure input states and pure test vectors.

    Random sampling by default; ``qubit_grid=n`` switches to an exhaustive
    Bloch-sphere grid (n polar x 2n azimuthal points) and requires dim 2.
    """
    dim = m.dim
    if qubit_grid:
        if dim != 2:
            raise DimensionMismatch("qubit_grid scanning requires a dim-2 map")
        thetas = np.linspace(0.0, np.pi, qubit_grid)
        phis = np.linspace(0.0, 2 * np.pi, 2 * qubit_grid, endpoint=False)
        vecs = [np.array([np.cos(t / 2), np.exp(1j * p) * np.sin(t / 2)])
                for t in thetas for p in phis]
    else:
        rng = np.random.default_rng(seed)
        vecs = [random_state(rng, dim).amplitudes for _ in range(samples)]
    worst = np.inf
    wit_in = wit_out = vecs[0]
    for psi in vecs:
        out = apply_map_matrix(m, np.outer(psi, np.conj(psi)))
        out = 0.5 * (out + dagger(out))
        evals, evecs = np.linalg.eigh(out)
        if evals[0] < worst:
            worst = float(evals[0])
            wit_in, wit_out = psi, evecs[:, 0]
    return PositivityScan(worst >= -tol, worst, wit_in, wit_out)


def compose(first: KrausChannel, second: KrausChannel) -> KrausChannel:
    """Channel applying ``first`` then ``second`` (terms (w2*w1, A2 A1))."""
    if first.dim != second.dim:
        raise DimensionMismatch(f"cannot compose dims {first.dim} and {second.dim}")
    terms = [(w2 * w1, a2 @ a1) for w2, a2 in second.terms for w1, a1 in first.terms]
    return KrausChannel(tuple(terms))


def dilate_and_trace(u: np.ndarray, env: DensityMatrix,
                     rho: DensityMatrix) -> Tuple[DensityMatrix, KrausChannel]:
    """Couple to an environment, evolve unitarily, trace the environment out.

    Returns both the partial-trace result and the equivalent Kraus channel
    built from the environment's spectral decomposition (terms
    (lam_p, <l| u |psi_p>) over environment basis bras l and strictly positive
    environment eigenvalues).  The two routes must agree entrywise within
    1e-10; disagreement raises.
    """
    u = np.asarray(u, dtype=np.complex128)
    da, db = rho.dim, env.dim
    if u.shape != (da * db, da * db):
        raise DimensionMismatch(f"unitary shape {u.shape} does not match {da}x{db} product space")
    unit_defect = np.abs(dagger(u) @ u - np.eye(da * db)).max()
    if unit_defect > UNITARY_TOL:
        raise ValidationError(
            f"dilation matrix is not unitary within {UNITARY_TOL} (defect {unit_defect:.3e}); "
            "re-orthogonalize it before calling"
        )
    # direct route
    joint = np.kron(rho.entries, env.entries)
    evolved = u @ joint @ dagger(u)
    blocks = evolved.reshape(da, db, da, db)
    direct = np.einsum("ajbj->ab", blocks)

    # kraus route from the environment spectrum
    evals, evecs = np.linalg.eigh(env.entries)
    terms = []
    u_blocks = u.reshape(da, db, da, db)
    for p in range(db):
        lam = float(evals[p])
        if lam <= 1e-14:
            continue
        psi_p = evecs[:, p]
        # <l|u|psi_p> : for each environment output index l, a da x da block
        for l in range(db):
            op = np.einsum("abj,j->ab", u_blocks[:, l, :, :], psi_p)
            terms.append((lam, op))
    channel = KrausChannel(tuple(terms))
    via_kraus = apply_map_matrix(channel, rho.entries)
    defect = float(np.abs(direct - via_kraus).max())
    if defect > DILATION_TOL:
        raise ValidationError(
            f"dilation routes disagree by {defect:.3e} (tolerance {DILATION_TOL})"
        )
    return DensityMatrix(0.5 * (direct + dagger(direct))), channel


# ---------------------------------------------------------------------------
# stock maps used by tests and the channel-check experiment

def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel(((1.0, np.eye(dim, dtype=np.complex128)),))


def qubit_dephasing_channel() -> KrausChannel:
    """Full phase damping: rho -> (rho + Z rho Z)/2."""
    z = np.diag([1.0, -1.0]).astype(np.complex128)
    return KrausChannel(((0.5, np.eye(2, dtype=np.complex128)), (0.5, z)))


def qubit_depolarizing_channel() -> KrausChannel:
    """Fully depolarizing qubit channel rho -> I/2."""
    sx = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    sy = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
    sz = np.diag([1.0, -1.0]).astype(np.complex128)
    eye = np.eye(2, dtype=np.complex128)
    return KrausChannel(tuple((0.25, p) for p in (eye, sx, sy, sz)))


def conjugation_map(dim: int) -> HermiticityPreservingMap:
    """Pure entrywise conjugation rho -> rho^* (positive but not CP for dim >= 2)."""
    return HermiticityPreservingMap((), ((1.0, np.eye(dim, dtype=np.complex128)),))


def mixed_sign_map() -> HermiticityPreservingMap:
    """A textbook positivity violator: rho -> 2 rho - X rho X."""
    sx = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    return HermiticityPreservingMap(((2.0, np.eye(2, dtype=np.complex128)), (-1.0, sx)), ())


def random_kraus_channel(rng: np.random.Generator, dim: int, n_terms: int = 3) -> KrausChannel:
    """Random CP channel from a Haar unitary dilation (always trace preserving)."""
    big = dim * n_terms
    z = rng.standard_normal((big, dim)) + 1j * rng.standard_normal((big, dim))
    q, _ = np.linalg.qr(z)  # isometry: q^+ q = 1 on the dim-dim input
    ops = [q[l * dim:(l + 1) * dim, :] for l in range(n_terms)]
    return KrausChannel(tuple((1.0, op) for op in ops))
