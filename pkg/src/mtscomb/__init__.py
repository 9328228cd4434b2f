"""Combining MTS heuristics under m-delayed bandit access."""

from .access import BudgetViolation, QueryGateway, wrap_bounded
from .combiner import (
    CombinerConfig,
    ExplorationSchedule,
    RunResult,
    auto_config,
    hedge_hyperparams,
    run_combiner,
    run_doubling,
    sample_schedule,
    share_hyperparams,
)
from .core import (
    HeuristicPath,
    Instance,
    MetricSpace,
    heuristic_step_cost,
    normalize_costs,
    offline_opt,
    opt_k,
    read_instance,
    solution_cost,
    validate_metric,
    write_instance,
)
from .transport import greedy_transport_plan, round_step, tv_emd

__version__ = "0.1.0"
