"""Label-efficient Bayesian assessment of black-box classifiers.

Quantifies classifier performance (accuracy, calibration, confusion, cost,
group differences) from model scores plus a trickle of labels, and actively
chooses which instances to label so the assessment converges with far fewer
labels than random sampling.
"""

from .engine import (ActiveSession, SessionConfig, Trajectory, make_replay_oracle,
                     run_experiment, run_session)
from .metrics import (ece_exact, ece_posterior, expected_cost_posterior,
                      rank_distribution, reliability_diagram, rope_compare)
from .pool import (CostMatrix, GroupIndex, PartitionSpec, Pool, PredictionRecord,
                   assign_groups, estimate_group_weights, ingest_predictions,
                   load_cost_matrix)
from .posterior import BetaPosterior, DirichletPosterior, PosteriorSummary
from .priors import PriorConfig, beta_priors, dirichlet_priors
from .strategies import StrategyConfig
from .synth import SynthSpec, synth_pool

__version__ = "0.1.0"

__all__ = [
    "ActiveSession", "BetaPosterior", "CostMatrix", "DirichletPosterior",
    "GroupIndex", "PartitionSpec", "Pool", "PosteriorSummary",
    "PredictionRecord", "PriorConfig", "SessionConfig", "StrategyConfig",
    "SynthSpec", "Trajectory", "assign_groups", "beta_priors",
    "dirichlet_priors", "ece_exact", "ece_posterior",
    "estimate_group_weights", "expected_cost_posterior", "ingest_predictions",
    "load_cost_matrix", "make_replay_oracle", "rank_distribution",
    "reliability_diagram", "rope_compare", "run_experiment", "run_session",
    "synth_pool",
]
