"""End-to-end acceptance checks, one test per headline guarantee.

Each test prints the measured figure next to its tolerance so a verbose
run doubles as a scoreboard.
"""
import time

import numpy as np

from qdynlab.bell import (coplanar_directions, deterministic_strategy_oracle,
                          fit_lhv, pair_grid, quantum_targets)
from qdynlab.channels import (apply_map_matrix, conjugation_map,
                              dilate_and_trace, is_completely_positive)
from qdynlab.cli import main
from qdynlab.fock import (fit_decay_rate, ordinary_field_demo,
                          tachyonic_field_demo, vacuum_generator_norm,
                          vacuum_survival)
from qdynlab.histories import (ProjectorFamily, all_branch_probabilities,
                               basis_family, classical_chain_check,
                               commutation_residual, hopping_hamiltonian)
from qdynlab.kernels import active_backend
from qdynlab.lindblad import (IntegrationSpec, LindbladGenerator,
                              dephasing_analytic, integrate)
from qdynlab.rand import random_density, random_hermitian, random_unitary
from qdynlab.states import (DensityMatrix, Observable, PureEnsemble,
                            StateVector, basis_state, hermiticity_defect,
                            normalized_state, pure_density)
from qdynlab.tachyon import (boundary_scan, cut_self_consistency,
                             demo_density, holomorphy_residual)
from qdynlab.trajectories import ensemble_density_with_se, evolve_ensemble


def _dephasing(alpha, values):
    b = np.diag(np.asarray(values, dtype=np.complex128))
    zero = Observable(np.zeros_like(b))
    return LindbladGenerator(zero, ((alpha, b),)), Observable(b)


def test_dephasing_matches_closed_form_within_1e8_and_5s():
    alpha = 0.1
    gen, b_obs = _dephasing(alpha, [1.0, -1.0])
    rho0 = pure_density(normalized_state(np.ones(2, dtype=np.complex128)))
    spec = IntegrationSpec(t_final=5.0, dt=1e-3)
    backend = active_backend()
    integrate(gen, rho0, IntegrationSpec(t_final=0.01, dt=1e-3))  # warm-up
    t0 = time.perf_counter()
    history = integrate(gen, rho0, spec, store_every=50)
    elapsed = time.perf_counter() - t0
    worst = 0.0
    for t, rho in history:
        analytic = dephasing_analytic(b_obs, alpha, rho0, t)
        worst = max(worst, float(np.abs(rho.entries - analytic.entries).max()))
    print(f"dephasing: max|err| {worst:.3e} (tol 1e-8), "
          f"{elapsed:.2f} s on {backend} (limit 5 s)")
    assert worst < 1e-8
    assert elapsed < 5.0


def test_conservation_laws_hold_for_100_random_generators():
    rng = np.random.default_rng(42)
    spec = IntegrationSpec(t_final=1.0, dt=0.01)
    worst_trace = worst_herm = 0.0
    worst_eig = np.inf
    for trial in range(100):
        dim = int(rng.integers(2, 5))
        h = random_hermitian(rng, dim)
        jumps = []
        for _ in range(int(rng.integers(1, 3))):
            b = (rng.normal(size=(dim, dim))
                 + 1j * rng.normal(size=(dim, dim))) / 2.0
            jumps.append((float(rng.uniform(0.05, 0.3)), b))
        gen = LindbladGenerator(h, tuple(jumps))
        rho0 = random_density(rng, dim)
        for t, rho in integrate(gen, rho0, spec, store_every=5):
            m = rho.entries
            worst_trace = max(worst_trace, abs(float(np.trace(m).real) - 1.0)
                              + abs(float(np.trace(m).imag)))
            worst_herm = max(worst_herm, hermiticity_defect(m))
            worst_eig = min(worst_eig, float(np.linalg.eigvalsh(m)[0]))
    print(f"conservation: trace drift {worst_trace:.3e} (tol 1e-9), "
          f"herm {worst_herm:.3e} (tol 1e-9), min eig {worst_eig:.3e} (floor -1e-8)")
    assert worst_trace < 1e-9
    assert worst_herm < 1e-9
    assert worst_eig >= -1e-8


def test_dilation_routes_agree_and_conjugation_is_not_cp():
    rng = np.random.default_rng(7)
    worst = 0.0
    for trial in range(50):
        d_env = 2 if trial % 2 == 0 else 3
        u = random_unitary(rng, 2 * d_env)
        env = DensityMatrix(np.diag([1.0] + [0.0] * (d_env - 1)).astype(complex))
        rho = random_density(rng, 2)
        direct, channel = dilate_and_trace(u, env, rho)  # raises above 1e-10
        cp, min_eig = is_completely_positive(channel)
        assert cp
        assert min_eig >= -1e-9
        worst = max(worst, float(np.abs(direct.entries
                                        - apply_map_matrix(channel, rho.entries)).max()))
    _, neg = is_completely_positive(conjugation_map(2))
    print(f"dilation: worst route disagreement {worst:.3e} (tol 1e-10); "
          f"conjugation Choi min eig {neg:.3f} (< 0)")
    assert worst <= 1e-10
    assert neg < 0.0


def test_unraveling_reproduces_master_equation_within_3_se():
    alpha, dt, n = 0.5, 0.01, 10_000
    gen, _ = _dephasing(alpha, [1.0, -1.0])
    psi = normalized_state(np.ones(2, dtype=np.complex128))
    source = PureEnsemble(((1.0, psi),))
    checkpoints = [0.5, 1.0, 2.0]
    history = evolve_ensemble(source, gen, 2.0, dt, n, seed=20240817,
                              checkpoints=checkpoints)
    reference = dict(integrate(gen, pure_density(psi),
                               IntegrationSpec(t_final=2.0, dt=dt),
                               store_every=50))
    worst_ratio = 0.0
    for t, ens in history:
        mean, se_re, se_im = ensemble_density_with_se(ens)
        diff = np.abs(mean - reference[t].entries)
        band = 3.0 * np.hypot(se_re, se_im) + 1e-12
        worst_ratio = max(worst_ratio, float((diff / band).max()))
        assert np.all(diff <= band)
    print(f"unraveling: worst |mean-ode| / 3SE = {worst_ratio:.2f} "
          f"(must stay < 1) at t in {checkpoints}")


def test_unraveling_is_decomposition_independent():
    alpha, dt, n = 0.5, 0.01, 10_000
    gen, _ = _dephasing(alpha, [1.0, -1.0])
    up, down = basis_state(2, 0), basis_state(2, 1)
    plus = normalized_state(np.array([1.0, 1.0], dtype=complex))
    minus = normalized_state(np.array([1.0, -1.0], dtype=complex))
    mixtures = (PureEnsemble(((0.5, up), (0.5, down))),
                PureEnsemble(((0.5, plus), (0.5, minus))))
    stats = []
    for seed, source in zip((11, 12), mixtures):
        history = evolve_ensemble(source, gen, 1.0, dt, n, seed=seed,
                                  checkpoints=[1.0])
        stats.append(ensemble_density_with_se(history[-1][1]))
    (m1, r1, i1), (m2, r2, i2) = stats
    diff = np.abs(m1 - m2)
    band = 3.0 * np.sqrt(np.hypot(r1, i1) ** 2 + np.hypot(r2, i2) ** 2) + 1e-12
    print(f"decomposition independence: worst diff/3SE = {float((diff/band).max()):.2f}")
    assert np.all(diff <= band)


def test_branch_probabilities_sum_to_one_up_to_dim_8():
    rng = np.random.default_rng(3)
    worst = 0.0
    cases = []
    h2 = hopping_hamiltonian(2, 1.0)
    cases.append((normalized_state(np.ones(2, dtype=complex)), h2,
                  basis_family((0.3, 0.6, 0.9, 1.2, 1.5, 1.8), 2)))
    h5 = hopping_hamiltonian(5, 0.7)
    cases.append((normalized_state(rng.normal(size=5) + 1j * rng.normal(size=5)),
                  h5, basis_family((0.4, 0.8, 1.2), 5)))
    h8 = hopping_hamiltonian(8, 1.0)
    cases.append((normalized_state(rng.normal(size=8) + 1j * rng.normal(size=8)),
                  h8, basis_family((0.5, 1.0), 8)))
    # dim 8 over six times with two-block coarse projectors
    slots = []
    for _ in range(6):
        u = random_unitary(rng, 8)
        slots.append((u[:, :4] @ u[:, :4].conj().T, u[:, 4:] @ u[:, 4:].conj().T))
    cases.append((normalized_state(rng.normal(size=8) + 1j * rng.normal(size=8)),
                  h8, ProjectorFamily((0.2, 0.5, 0.8, 1.1, 1.4, 1.7),
                                      tuple(slots))))
    for psi, h, family in cases:
        probs = all_branch_probabilities(psi, h, family)
        worst = max(worst, abs(sum(probs.values()) - 1.0))
    print(f"histories: worst |sum p - 1| = {worst:.3e} over {len(cases)} "
          f"families (tol 1e-10)")
    assert worst < 1e-10


def test_commuting_families_factorize_classically():
    # diagonal projectors and a diagonal hamiltonian commute exactly
    dim = 4
    h = Observable(np.diag([0.0, 0.4, 1.1, 1.9]).astype(complex))
    family = basis_family((0.5, 1.0, 1.5), dim)
    psi = normalized_state(np.arange(1.0, dim + 1.0) + 0.0j)
    residual = commutation_residual(family, h)
    check = classical_chain_check(psi, h, family)
    print(f"classical chain: residual {residual:.3e}, product defect "
          f"{check.max_product_defect:.3e}, marginal defect "
          f"{check.max_marginal_defect:.3e} (tol 1e-10)")
    assert residual < 1e-12
    assert check.max_product_defect < 1e-10
    assert check.max_marginal_defect < 1e-10


def test_no_local_model_matches_the_coplanar_fan():
    dirs = coplanar_directions()
    pairs = pair_grid(3, include_diagonal=True)
    targets = quantum_targets(dirs, pairs, "paper")
    oracle = deterministic_strategy_oracle(pairs, targets, 3)
    fit = fit_lhv(pairs, targets, 3, n_restarts=4, seed=5)
    gap_vs_scale = fit.error / max(abs(t) for t in targets)
    print(f"bell: oracle optimum {oracle.error:.6f} > 0, fit {fit.error:.6f}, "
          f"discrepancy / largest weight = {gap_vs_scale:.0%} (soft report)")
    assert oracle.error > 0.0
    assert fit.error >= oracle.error - 1e-9


def test_boundary_values_are_consistent_and_absorptive():
    density = demo_density(10.0, 1.0)
    consistency = cut_self_consistency(density, 2.0)
    rows = boundary_scan(density, np.linspace(-8.0, 8.0, 1001))
    assert len(rows) == 1000  # s = 0 sits on the branch point and is skipped
    worst_im = min(min(r["im_upper"], r["im_lower"]) for r in rows)
    rng = np.random.default_rng(99)
    worst_cr = 0.0
    for _ in range(100):
        z = complex(rng.uniform(-6.0, 6.0),
                    rng.uniform(0.5, 4.0) * (1 if rng.random() < 0.5 else -1))
        worst_cr = max(worst_cr, holomorphy_residual(density, z))
    print(f"spectral function: cut residual {consistency.residual:.3e} (tol 1e-3), "
          f"scan min Im {worst_im:.3e} (floor -1e-9), "
          f"worst CR residual {worst_cr:.3e} (tol 1e-6)")
    assert consistency.residual < 1e-3
    assert worst_im >= -1e-9
    assert worst_cr < 1e-6


def test_field_demo_rates_and_stationary_tachyonic_vacuum():
    alpha = 0.25
    tach = tachyonic_field_demo(2, alpha, [1.0, 0.7], total_cap=2)
    norm = vacuum_generator_norm(tach)
    dims, rates, theory = [], [], []
    for n_modes in (1, 2, 4, 8):
        model = ordinary_field_demo(n_modes, alpha, total_cap=2)
        t_final = 0.12 / model.vacuum_decay_rate
        samples = vacuum_survival(model, t_final, t_final / 200, store_every=10)
        fit = fit_decay_rate(samples)
        dims.append(model.space.dim)
        rates.append(fit.rate)
        theory.append(model.vacuum_decay_rate)
    rel = [abs(r - g) / g for r, g in zip(rates, theory)]
    print(f"field demo: tachyonic vacuum norm {norm:.3e} (tol 1e-12); dims {dims}; "
          f"ordinary rate rel errs {[f'{e:.1e}' for e in rel]} (tol 1%)")
    assert norm < 1e-12
    assert dims == [6, 15, 45, 153]
    assert all(e < 0.01 for e in rel)
    assert all(b > a for a, b in zip(rates, rates[1:]))


def test_identical_config_and_seed_reproduce_output_bytes(tmp_path):
    base = ["unravel", "--seed", "5", "--t-final", "1.0", "--dt", "0.01",
            "--n-particles", "500", "--n-checkpoints", "2"]
    files = [tmp_path / n for n in ("a.csv", "b.csv", "a.json", "b.json")]
    assert main(base + ["--out", str(files[0])]) == 0
    assert main(base + ["--out", str(files[1])]) == 0
    assert main(base + ["--out", str(files[2]), "--format", "json"]) == 0
    assert main(base + ["--out", str(files[3]), "--format", "json"]) == 0
    same_csv = files[0].read_bytes() == files[1].read_bytes()
    same_json = files[2].read_bytes() == files[3].read_bytes()
    print(f"reproducibility: csv bytes identical {same_csv}, "
          f"json bytes identical {same_json}")
    assert same_csv and same_json
