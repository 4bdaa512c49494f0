"""Value-oriented wind power prediction intervals.

A contextual bandit picks the quantile proportions of each interval so that
the downstream VPP dispatch is cheap, rather than the interval being narrow.
"""
from .agent import ActionSpace, Agent, AgentConfig, EpsilonSchedule, build_action_space, select_action
from .data import Dataset, generate_synthetic, load_csv, split, write_csv
from .dispatch import (DayAheadSolution, GeneratorParams, InfeasibleError, RegulationParams, ScoreBreakdown,
                       VppConfig, economic_dispatch, monetary_score, settle_deviation, solve_day_ahead,
                       worst_case_recourse)
from .harness import RunConfig, evaluate_run, read_config, run, sweep, train, write_config
from .metrics import EvaluationReport, acd, evaluate, winkler
from .quantile import PredictionInterval, ProportionPair, QrBank, QrModel, pinball_loss

__version__ = "0.1.0"
