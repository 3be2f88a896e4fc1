import numpy as np
import pytest

from qdynlab.errors import ValidationError
from qdynlab.histories import (
    ProjectorFamily,
    all_branch_probabilities,
    basis_family,
    classical_chain_check,
    coarse_grain,
    commutation_residual,
    heisenberg_projectors,
    history_probability,
    hopping_hamiltonian,
    projective_decoherence,
    validate_family,
    zeno_dephasing_experiment,
)
from qdynlab.rand import random_state, random_unitary
from qdynlab.states import Observable, basis_state, normalized_state


def _frame_family(rng, dim, ranks, times):
    """Projector slots built from one random orthonormal frame per time."""
    slots = []
    for _ in times:
        u = random_unitary(rng, dim)
        cols = np.split(np.arange(dim), np.cumsum(ranks)[:-1])
        slots.append(tuple(u[:, c] @ np.conj(u[:, c].T) for c in cols))
    return ProjectorFamily(tuple(times), tuple(tuple(s) for s in slots))


def test_basis_family_is_valid():
    f = basis_family([0.5, 1.0], 3)
    report = validate_family(f)
    assert report.valid
    assert report.orthogonality < 1e-14
    assert report.completeness < 1e-14


def test_validate_flags_bad_families():
    plus = np.full((2, 2), 0.5)
    p0 = np.diag([1.0, 0.0])
    f = ProjectorFamily((1.0,), ((plus, p0),))
    report = validate_family(f)
    assert not report.valid
    assert report.orthogonality > 0.1
    assert report.completeness > 0.1


def test_validate_random_frame_family():
    rng = np.random.default_rng(6)
    f = _frame_family(rng, 4, (2, 2), [0.7, 1.4])
    assert validate_family(f).valid


def test_family_requires_increasing_times():
    p = (np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    with pytest.raises(ValidationError):
        ProjectorFamily((1.0, 1.0), (p, p))
    with pytest.raises(ValidationError):
        ProjectorFamily((2.0, 1.0), (p, p))


def test_branch_probabilities_sum_to_one():
    rng = np.random.default_rng(13)
    for dim, ranks, times in [(2, (1, 1), [0.5]),
                              (4, (2, 2), [0.3, 0.9]),
                              (4, (1, 1, 2), [0.2, 0.5, 1.1]),
                              (8, (4, 4), [0.4, 0.8, 1.2])]:
        f = _frame_family(rng, dim, ranks, times)
        h = Observable(np.diag(np.arange(dim, dtype=float)))
        psi = random_state(rng, dim)
        probs = all_branch_probabilities(psi, h, f)
        assert len(probs) == len(ranks) ** len(times)
        total = sum(probs.values())
        assert abs(total - 1.0) < 1e-10
        assert min(probs.values()) >= 0.0


def test_single_time_branch_is_born_rule():
    f = basis_family([1.0], 2)
    h = Observable(np.zeros((2, 2)))
    psi = normalized_state([0.6, 0.8])
    assert abs(history_probability(psi, h, f, (0,)) - 0.36) < 1e-12
    assert abs(history_probability(psi, h, f, (1,)) - 0.64) < 1e-12


def test_history_probability_rejects_bad_branch():
    f = basis_family([1.0], 2)
    h = Observable(np.zeros((2, 2)))
    psi = basis_state(2, 0)
    with pytest.raises(ValidationError):
        history_probability(psi, h, f, (2,))
    with pytest.raises(ValidationError):
        history_probability(psi, h, f, (0, 0))


def test_commutation_residual_zero_for_diagonal_setup():
    f = basis_family([0.5, 1.0], 3)
    h = Observable(np.diag([0.0, 1.0, 3.0]))  # commutes with every basis projector
    assert commutation_residual(f, h) < 1e-14


def test_commutation_residual_positive_for_hopping():
    f = basis_family([0.5, 1.0], 3)
    assert commutation_residual(f, hopping_hamiltonian(3)) > 0.1


def test_classical_chain_factorization_when_commuting():
    rng = np.random.default_rng(23)
    f = basis_family([0.4, 0.9, 1.3], 4)
    h = Observable(np.diag([0.0, 0.7, 1.1, 2.0]))
    psi = random_state(rng, 4)
    assert commutation_residual(f, h) < 1e-12
    check = classical_chain_check(psi, h, f)
    assert check.max_product_defect < 1e-10
    assert check.max_marginal_defect < 1e-10


def test_classical_chain_defect_appears_with_interference():
    f = basis_family([0.5, 1.0], 2)
    h = hopping_hamiltonian(2)
    check = classical_chain_check(basis_state(2, 0), h, f)
    assert check.max_product_defect > 0.1
    assert check.max_marginal_defect > 0.1


def test_heisenberg_projectors_are_projectors():
    f = basis_family([0.5, 1.0], 3)
    h = hopping_hamiltonian(3, coupling=0.7)
    for slot in heisenberg_projectors(f, h):
        for p in slot:
            assert np.abs(p @ p - p).max() < 1e-12
            assert np.abs(p - np.conj(p.T)).max() < 1e-12


def test_coarse_grain_merges_probabilities():
    rng = np.random.default_rng(29)
    f = basis_family([0.5, 1.0], 3)
    h = Observable(np.diag([0.0, 1.0, 2.5]))
    psi = random_state(rng, 3)
    fine = all_branch_probabilities(psi, h, f)
    merged = coarse_grain(f, 1, (0, 2))
    coarse = all_branch_probabilities(psi, h, merged)
    # slot count at the merged time drops by one
    assert len(coarse) == 3 * 2
    # with a commuting hamiltonian the merged branch is the exact sum
    for first in range(3):
        expect = fine[(first, 0)] + fine[(first, 2)]
        assert abs(coarse[(first, 0)] - expect) < 1e-12


def test_projective_decoherence_removes_cross_blocks():
    rho = np.full((2, 2), 0.5, dtype=complex)
    out = projective_decoherence(rho, [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    assert np.abs(out - np.diag([0.5, 0.5])).max() < 1e-14


def test_zeno_population_formula():
    # repeated projection onto the pointer basis freezes a hopping qubit:
    # pop0 after n kicks over total time T is (1 + cos^n(2T/n)) / 2
    psi0 = basis_state(2, 0)
    h = hopping_hamiltonian(2)
    t_final = 1.0
    for n_steps in (4, 8, 16):
        rows = zeno_dephasing_experiment(psi0, h, [1.0, -1.0], n_steps, t_final)
        pop = rows[-1]["population_0"]
        expected = 0.5 * (1.0 + np.cos(2.0 * t_final / n_steps) ** n_steps)
        assert abs(pop - expected) < 1e-9


def test_zeno_leakage_shrinks_with_more_projections():
    psi0 = basis_state(2, 0)
    h = hopping_hamiltonian(2)
    leaks = []
    for n_steps in (2, 4, 8, 16, 32):
        rows = zeno_dephasing_experiment(psi0, h, [1.0, -1.0], n_steps, 1.0)
        leaks.append(1.0 - rows[-1]["population_0"])
    assert all(a > b for a, b in zip(leaks, leaks[1:]))


def test_zeno_rows_carry_envelope_columns():
    rows = zeno_dephasing_experiment(basis_state(2, 0), hopping_hamiltonian(2),
                                     [1.0, -1.0], 5, 1.0)
    assert len(rows) == 6  # includes the t=0 row
    for row in rows:
        assert set(row) >= {"t", "offdiag_pre", "offdiag_post",
                            "dephasing_envelope", "population_0"}
        assert row["offdiag_post"] <= row["offdiag_pre"] + 1e-15
