"""Sliding-window EIRP budgets and smooth EIRP control.

Library plus simulation CLI for keeping windowed-average EIRP consumption
under a configured threshold while a minimum EIRP level stays guaranteed:
exact and conservative budget trackers, a drift-plus-penalty controller with
greedy and cautious baselines, a sparse Zipf traffic model, and the closed
loop tying them together.
"""

from .budget import (
    BudgetState,
    ConservativeBudgetState,
    EmfConfig,
    budget_from_omega,
    budget_oracle_minform,
    budget_scratch,
    omega_naive,
)
from .policy import (
    POLICY_KINDS,
    CautiousPolicy,
    ControlDecision,
    DppConfig,
    DppPolicy,
    DppState,
    GreedyPolicy,
    alpha_fair,
    cautious_control,
    dpp_control,
    greedy_control,
    make_policy,
    queue_update,
)
from .sim import (
    ComplianceReport,
    SimConfig,
    SimTrace,
    compare_budgets,
    queue_zero_every_window,
    run_simulation,
    score_trace,
    sweep_v,
    verify_compliance,
)
from .traffic import TrafficConfig, TrafficModel

__version__ = "0.1.0"

__all__ = [
    "BudgetState",
    "CautiousPolicy",
    "ComplianceReport",
    "ConservativeBudgetState",
    "ControlDecision",
    "DppConfig",
    "DppPolicy",
    "DppState",
    "EmfConfig",
    "GreedyPolicy",
    "POLICY_KINDS",
    "SimConfig",
    "SimTrace",
    "TrafficConfig",
    "TrafficModel",
    "alpha_fair",
    "budget_from_omega",
    "budget_oracle_minform",
    "budget_scratch",
    "cautious_control",
    "compare_budgets",
    "dpp_control",
    "greedy_control",
    "make_policy",
    "omega_naive",
    "queue_update",
    "queue_zero_every_window",
    "run_simulation",
    "score_trace",
    "sweep_v",
    "verify_compliance",
    "__version__",
]
