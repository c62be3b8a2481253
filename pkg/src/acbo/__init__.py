"""Causal Bayesian optimization against adversarial interventions.

An agent softly intervenes on an unknown structural causal model while an
adversary (weather, other players, perturbations) intervenes too. The agent
keeps multiplicative weights over its finite action set and feeds them
optimistic counterfactual reward estimates obtained by propagating per-node
GP confidence tubes through the known graph.
"""

from .errors import AcboError
from .graph import (
    ActionProfile,
    CausalGraph,
    GroundTruthScm,
    NoiseSpec,
    RoundRecord,
    expected_reward,
    simulate_round,
    validate_graph,
)
from .gp import (
    BetaSchedule,
    ConfidenceModel,
    GpPosterior,
    Kernel,
    beta_at,
    information_gain,
    posterior_update,
)
from .oracle import EtaFunction, UcbRequest, propagate, ucb, ucb_bruteforce
from .mw import (
    MwState,
    cbo_mw_round,
    fixed_horizon_rate,
    hedge_regret_bound,
    mw_sample,
    mw_update,
)
from .distributed import (
    AgentBank,
    CounterfactualScorer,
    check_dr_submodular,
    curvature_estimate,
    dcbo_round,
)
from .baselines import FlatGpModel, gpmw_round, gpucb_round, mcbo_round
from .harness import ExperimentConfig, RunLog, emit_csv, hindsight_regret, run_experiment

__version__ = "0.1.0"

__all__ = [
    "AcboError",
    "ActionProfile",
    "AgentBank",
    "BetaSchedule",
    "CausalGraph",
    "ConfidenceModel",
    "CounterfactualScorer",
    "EtaFunction",
    "ExperimentConfig",
    "FlatGpModel",
    "GpPosterior",
    "GroundTruthScm",
    "Kernel",
    "MwState",
    "NoiseSpec",
    "RoundRecord",
    "RunLog",
    "UcbRequest",
    "beta_at",
    "cbo_mw_round",
    "check_dr_submodular",
    "curvature_estimate",
    "dcbo_round",
    "emit_csv",
    "expected_reward",
    "fixed_horizon_rate",
    "gpmw_round",
    "gpucb_round",
    "hedge_regret_bound",
    "hindsight_regret",
    "information_gain",
    "mcbo_round",
    "mw_sample",
    "mw_update",
    "posterior_update",
    "propagate",
    "run_experiment",
    "simulate_round",
    "ucb",
    "ucb_bruteforce",
    "validate_graph",
]
