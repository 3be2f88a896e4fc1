"""qdynlab: open quantum dynamics, local-model fits and spectral boundary values.

The package groups four strands that share one set of state types:

* states / channels - density matrices, Kraus and general hermiticity-
  preserving maps, Choi tests, dilations;
* lindblad / trajectories / kernels - a dissipative generator with a fixed-
  step integrator, its jump unraveling, and the jit/numpy kernel pair
  underneath both;
* histories / bell - chained projector probabilities and hidden-variable
  fits for coincidence weights;
* quadrature / tachyon / fock - double-exponential quadrature, boundary
  values of a spectral representation with support below zero, and truncated
  Fock-space decay demos.
"""

__version__ = "0.1.0"

from .bell import (FitResult, OracleResult, StochasticModel, angle_between,
                   deterministic_strategy_oracle, fibonacci_sphere, fit_lhv,
                   hemispheric_model, hemispheric_overlap, orthogonal_directions,
                   pair_grid, quantum_targets, quantum_weight)
from .channels import (ChoiMatrix, HermiticityPreservingMap, KrausChannel,
                       apply_general, apply_kraus, apply_map_matrix, choi_matrix,
                       compose, conjugation_map, dilate_and_trace,
                       identity_channel, is_completely_positive,
                       is_positive_on_pure, mixed_sign_map,
                       qubit_dephasing_channel, qubit_depolarizing_channel,
                       random_kraus_channel)
from .errors import (ConfigError, DimensionMismatch, IntegrationError,
                     QdynlabError, StepSizeError, ValidationError)
from .fock import (FockSpace, annihilation, build_space, fit_decay_rate,
                   mode_frequencies, number_operator, ordinary_field_demo,
                   tachyonic_field_demo, vacuum_generator_norm, vacuum_survival)
from .histories import (ProjectorFamily, all_branch_probabilities, basis_family,
                        classical_chain_check, coarse_grain,
                        commutation_residual, heisenberg_projectors,
                        history_probability, hopping_hamiltonian,
                        validate_family, zeno_dephasing_experiment)
from .kernels import active_backend, jit_disabled
from .lindblad import (IntegrationSpec, LindbladGenerator, decoherence_time,
                       dephasing_analytic, generator_apply, integrate,
                       propagate_matrix)
from .quadrature import QuadratureResult, principal_value, tanh_sinh
from .rand import random_density, random_hermitian, random_state, random_unitary
from .states import (DensityMatrix, Observable, PureEnsemble, StateVector,
                     basis_state, expectation, from_ensemble,
                     hamiltonian_propagator, maximally_mixed, normalized_state,
                     partial_trace, pure_density, purity, unitary_evolve)
from .tachyon import (SpectralDensity, boundary_function, boundary_scan,
                      cut_self_consistency, demo_density, dissipation_rate,
                      edge_values, holomorphy_residual, reflection_defect,
                      retarded_imaginary)
from .trajectories import (TrajectoryEnsemble, UnravelingScheme,
                           ensemble_density, ensemble_density_with_se,
                           evolve_ensemble)

__all__ = [name for name in dir() if not name.startswith("_")]
