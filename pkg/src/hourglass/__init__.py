"""Networks of hourglass clocks: interacting renewal processes in which a
site firing resets its own countdown and kicks its neighbours' countdowns
up (inhibition) or, on hitting a short fuse, down to an immediate firing
(excitation).

The package bundles an event-driven simulator with two interchangeable
backends, exact and Monte-Carlo phase classification of restrictions,
enumeration of limiting firing patterns in paired-block networks, and the
correlation learning rule that stores a chosen pattern family as exactly
those limiting patterns.
"""

from .analysis import (
    Classification,
    FrequencyEstimate,
    MCSettings,
    SimBudget,
    Verdict,
    analytic_pi_inhibitory,
    balance_report,
    check_balance,
    classify_inductive,
    critical_wI,
    estimate_frequencies,
    is_trap,
    linear_approx_wI,
    second_vector_field,
)
from .config import (
    ExperimentConfig,
    SweepSpec,
    config_sha256,
    load_config,
    load_sweep,
    parse_config,
    parse_sweep,
    render_config,
)
from .connections import (
    ConnectionSpec,
    Restriction,
    block_connections,
    restrict,
    torus_connections,
)
from .distributions import (
    DistributionSpec,
    RngHandle,
    deterministic,
    exponential,
)
from .engine import SimState, fire, init_state, next_event, run
from .errors import (
    AllSitesFrozenError,
    BudgetError,
    ConfigError,
    HourglassError,
    InsufficientDataError,
    MixedSignError,
)
from .experiments import run_sweep, simulate_experiment
from .patterns import (
    Pattern,
    PatternFamily,
    brute_force_traps,
    enumerate_traps,
    full_family,
    hebb_connections,
    validate_pattern_family,
    verify_storage,
)
from .topology import (
    BlockStructure,
    Topology,
    TorusGeometry,
    build_block_network,
    build_torus,
    sublattice_lambda0,
)

__version__ = "0.1.0"

__all__ = [
    "AllSitesFrozenError",
    "BlockStructure",
    "BudgetError",
    "Classification",
    "ConfigError",
    "ConnectionSpec",
    "DistributionSpec",
    "ExperimentConfig",
    "FrequencyEstimate",
    "HourglassError",
    "InsufficientDataError",
    "MCSettings",
    "MixedSignError",
    "Pattern",
    "PatternFamily",
    "Restriction",
    "RngHandle",
    "SimBudget",
    "SimState",
    "SweepSpec",
    "Topology",
    "TorusGeometry",
    "Verdict",
    "analytic_pi_inhibitory",
    "balance_report",
    "block_connections",
    "brute_force_traps",
    "build_block_network",
    "build_torus",
    "check_balance",
    "classify_inductive",
    "config_sha256",
    "critical_wI",
    "deterministic",
    "enumerate_traps",
    "estimate_frequencies",
    "exponential",
    "fire",
    "full_family",
    "hebb_connections",
    "init_state",
    "is_trap",
    "linear_approx_wI",
    "load_config",
    "load_sweep",
    "next_event",
    "parse_config",
    "parse_sweep",
    "render_config",
    "restrict",
    "run",
    "run_sweep",
    "second_vector_field",
    "simulate_experiment",
    "sublattice_lambda0",
    "torus_connections",
    "validate_pattern_family",
    "verify_storage",
    "__version__",
]
