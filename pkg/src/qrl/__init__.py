"""Simulator and claim checker for quantum reinforcement learning circuits."""
from .analysis import (
    ScenarioReport,
    basis_agreement,
    build_report,
    check_outcome_injectivity,
    exchange_invariance_error,
    learning_fidelity,
    recover_mixed_params,
)
from .circuit import Circuit, parse, run, to_text
from .gates import apply_cnot, apply_gxor, apply_xor
from .kernels import BACKEND
from .measure import enumerate_branches, sample_branch
from .protocols import (
    build,
    build_larger_env_feedback,
    build_larger_env_register_rich,
    build_mixed_state,
    build_multiqubit,
    build_multiqudit,
    build_qudit,
    build_single_qubit,
    purify,
)
from .state import DensityOperator, PureState, SystemLayout, density_fidelity, partial_trace

__version__ = "0.1.0"
