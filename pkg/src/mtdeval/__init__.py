"""Roaming-IDS moving-target-defense evaluation against a risk-sensitive attacker."""

from .clairvoyant import (
    AugmentedMdp,
    RegretReport,
    build_augmented,
    dynamic_regret,
    induced_online_policy,
    solve_optimal,
)
from .defense import DefenseConfig, IdsSchedule, build_schedule, sample_placement
from .experiments import distance_regret_study, sweep_frequency, sweep_ids_count
from .graph import AttackGraph, Exploit, generate_synthetic, hop_distance, load_graph, parse_graph
from .lp import LpSolution, StandardLp, solve
from .planner import Backend, plan_step
from .risk import (
    FiniteHorizonProblem,
    RiskPolicy,
    build_dual_lp,
    build_primal_lp,
    evaluate_policy,
    extract_policy,
    value_recursion,
)
from .rng import Rng, derive_seed
from .sim import EpisodeResult, MonteCarloStats, run_episode, run_monte_carlo
from .stats import chi_squared, wilson_interval

__version__ = "0.1.0"
