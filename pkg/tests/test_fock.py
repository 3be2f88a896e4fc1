import numpy as np
import pytest

from qdynlab.errors import ValidationError
from qdynlab.fock import (
    annihilation,
    build_space,
    fit_decay_rate,
    mode_frequencies,
    number_operator,
    ordinary_field_demo,
    tachyonic_field_demo,
    vacuum_generator_norm,
    vacuum_projector,
    vacuum_survival,
)


def test_space_dimensions_with_total_cap_two():
    # 2M oscillators, total occupation <= 2: dim = 1 + 2M + 2M(2M+1)/2
    for n_modes, dim in [(1, 6), (2, 15), (4, 45), (8, 153)]:
        space = build_space(2 * n_modes, total_cap=2)
        assert space.dim == dim


def test_space_enumeration_small():
    space = build_space(2, total_cap=2)
    occs = set(space.occupations)
    assert (0, 0) in occs
    assert (2, 0) in occs and (1, 1) in occs
    assert (3, 0) not in occs
    assert space.index((0, 0)) == space.vacuum_index


def test_per_oscillator_cap():
    space = build_space(2, total_cap=3, per_osc_cap=[1, 3])
    assert all(occ[0] <= 1 for occ in space.occupations)
    assert (0, 3) in set(space.occupations)


def test_annihilation_matrix_elements():
    space = build_space(1, total_cap=3)
    a = annihilation(space, 0)
    # <n-1| a |n> = sqrt(n) exactly on the truncated ladder
    for n in (1, 2, 3):
        row = space.index((n - 1,))
        col = space.index((n,))
        assert abs(a[row, col] - np.sqrt(n)) < 1e-15
    assert np.abs(a[:, space.index((0,))]).max() == 0.0


def test_number_operator_is_diagonal_count():
    space = build_space(2, total_cap=2)
    for k in (0, 1):
        n_op = number_operator(space, k)
        expected = np.diag([occ[k] for occ in space.occupations]).astype(complex)
        assert np.abs(n_op - expected).max() == 0.0


def test_commutator_below_the_cap():
    # [a, a+] = 1 holds on every state whose occupation stays under the cap
    space = build_space(1, total_cap=4)
    a = annihilation(space, 0)
    comm = a @ a.conj().T - a.conj().T @ a
    for n in range(4):
        idx = space.index((n,))
        assert abs(comm[idx, idx] - 1.0) < 1e-14


def test_mode_frequencies_relativistic_form():
    freqs = mode_frequencies(4)
    expected = np.sqrt(1.0 + (np.arange(4) / 4.0) ** 2)
    assert np.abs(freqs - expected).max() < 1e-15
    heavy = mode_frequencies(4, mass=2.0)
    assert np.abs(heavy - np.sqrt(4.0 + (np.arange(4) / 4.0) ** 2)).max() < 1e-15


def test_ordinary_demo_rate_closed_form():
    # vacuum decay rate 2 alpha sum_m w_m^2 with w_m = 1/sqrt(2 p0_m)
    for n_modes in (1, 2, 4):
        model = ordinary_field_demo(n_modes, alpha=0.25)
        expected = 0.25 * np.sum(1.0 / mode_frequencies(n_modes))
        assert abs(model.vacuum_decay_rate - expected) < 1e-12


def test_ordinary_vacuum_is_not_stationary():
    model = ordinary_field_demo(1, alpha=0.25)
    assert vacuum_generator_norm(model) > 1e-3


def test_tachyonic_vacuum_is_exactly_stationary():
    model = tachyonic_field_demo(2, alpha=0.25, damping_weights=[0.5, 0.25])
    assert model.vacuum_decay_rate == 0.0
    assert vacuum_generator_norm(model) == 0.0


def test_tachyonic_demo_validates_weights():
    with pytest.raises(ValidationError):
        tachyonic_field_demo(2, alpha=0.25, damping_weights=[0.5])
    with pytest.raises(ValidationError):
        tachyonic_field_demo(2, alpha=0.25, damping_weights=[0.5, -0.1])


def test_vacuum_survival_starts_at_one_and_decays():
    model = ordinary_field_demo(1, alpha=0.25)
    samples = vacuum_survival(model, t_final=0.4, dt=2e-3, store_every=20)
    ts = [t for t, _ in samples]
    ss = [s for _, s in samples]
    assert ts[0] == 0.0
    assert abs(ss[0] - 1.0) < 1e-12
    assert all(a >= b - 1e-12 for a, b in zip(ss, ss[1:]))
    assert ss[-1] < 1.0 - 1e-3


def test_tachyonic_survival_is_flat():
    model = tachyonic_field_demo(1, alpha=0.25, damping_weights=[0.4])
    samples = vacuum_survival(model, t_final=0.3, dt=2e-3, store_every=30)
    assert abs(samples[-1][1] - 1.0) < 1e-9


def test_fit_recovers_synthetic_rate():
    # ln S = -rate t + curvature t^2 exactly => least squares is exact
    rate, curv = 0.8, 0.05
    ts = np.linspace(0.0, 0.2, 60)
    samples = [(t, float(np.exp(-rate * t + curv * t * t))) for t in ts]
    fit = fit_decay_rate(samples, window=(0.01, 0.1))
    assert abs(fit.rate - rate) < 1e-10
    assert abs(fit.curvature - curv) < 1e-8
    assert fit.n_points >= 3


def test_fit_window_needs_enough_points():
    samples = [(0.0, 1.0), (1.0, 0.1)]
    with pytest.raises(ValidationError):
        fit_decay_rate(samples)


def test_measured_rate_matches_ladder_value():
    model = ordinary_field_demo(2, alpha=0.25)
    depth_time = 0.12 / model.vacuum_decay_rate
    dt = depth_time / 200.0
    samples = vacuum_survival(model, t_final=depth_time, dt=dt)
    fit = fit_decay_rate(samples)
    assert abs(fit.rate - model.vacuum_decay_rate) / model.vacuum_decay_rate < 0.01


def test_vacuum_projector_shape():
    space = build_space(2, total_cap=2)
    rho = vacuum_projector(space)
    assert rho.dim == space.dim
    assert abs(rho.entries[space.vacuum_index, space.vacuum_index] - 1.0) < 1e-15
