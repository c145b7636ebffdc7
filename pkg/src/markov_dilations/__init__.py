"""Classical dilations of finite-state Markov evolutions and their quantum extension."""
from .chain import (PathLaw, TrajectoryRecord, automaton_path_law, exact_path_law,
                    marginal_consistency, path_frequency_check, simulate, simulate_arrays,
                    stochastic_equation_residual, verify_markov)
from .decompose import (ConvexDecomposition, decompose_full, decompose_greedy, greedy_steps,
                        label_of_map, map_from_label, recombine)
from .dilation import (MINIMAL, UNIVERSAL, Coupling, DilationSpec, EnvironmentAlphabet,
                       GlobalState, alpha_apply, build_alphabet, build_coupling, cocycle_apply,
                       dilate, env_component, induced_transition, shift, universal_q)
from .errors import DilationError
from .model import (DeterministicMap, Distribution, MatrixSequence, StateSpace,
                    StochasticMatrix, det_matrix, evolve_observable, validate_stochastic)
from .quantum import (DiagonalObservable, EnvVector, KrausChannel, UnitaryV, WindowOperator,
                      automorphism_J, automorphism_J_inverse, build_env_vector, build_unitary,
                      check_cqd1, check_cqd2, conditional_expectation, davis_channel, flow,
                      heisenberg_apply, kraus_channel, permutation_automorphism,
                      verify_cms_extension)
from .report import VerificationReport

__version__ = "0.1.0"

__all__ = [
    "PathLaw",
    "TrajectoryRecord",
    "automaton_path_law",
    "exact_path_law",
    "marginal_consistency",
    "path_frequency_check",
    "simulate",
    "simulate_arrays",
    "stochastic_equation_residual",
    "verify_markov",
    "ConvexDecomposition",
    "decompose_full",
    "decompose_greedy",
    "greedy_steps",
    "label_of_map",
    "map_from_label",
    "recombine",
    "MINIMAL",
    "UNIVERSAL",
    "Coupling",
    "DilationSpec",
    "EnvironmentAlphabet",
    "GlobalState",
    "alpha_apply",
    "build_alphabet",
    "build_coupling",
    "cocycle_apply",
    "dilate",
    "env_component",
    "induced_transition",
    "shift",
    "universal_q",
    "DilationError",
    "DeterministicMap",
    "Distribution",
    "MatrixSequence",
    "StateSpace",
    "StochasticMatrix",
    "det_matrix",
    "evolve_observable",
    "validate_stochastic",
    "DiagonalObservable",
    "EnvVector",
    "KrausChannel",
    "UnitaryV",
    "WindowOperator",
    "automorphism_J",
    "automorphism_J_inverse",
    "build_env_vector",
    "build_unitary",
    "check_cqd1",
    "check_cqd2",
    "conditional_expectation",
    "davis_channel",
    "flow",
    "heisenberg_apply",
    "kraus_channel",
    "permutation_automorphism",
    "verify_cms_extension",
    "VerificationReport",
]
