"""Entropy-optimal adaptive search under noisy sensing.

A stationary object sits somewhere in [0, 1]; sensors answer noisy
multi-region or Boolean queries about its location.  This package computes
the capacity-achieving operating points, synthesizes the partitions and
regions that realize them against any posterior, selects costed precision
modes, and reproduces the linear entropy-decay behavior by Monte Carlo.
"""

from .belief import (Partition, PiecewiseDensity, bayes_update,
                     bayes_update_gaussian, normalize_union,
                     union_complement, union_contains)
from .channel import (CapacityResult, ConvergenceError, DiscreteChannel,
                      GaussianBooleanChannel, as_operating_point,
                      asymmetric_binary_optimum, bsc, capacity,
                      factorized_joint_optimum, gaussian_boolean_mi,
                      gaussian_optimal_input, is_quasi_symmetric,
                      mutual_information, product_channel)
from .config import ConfigError, RunConfig, load_config, parse_config
from .policy import (PrecisionMode, PrecisionModeSet, PrecisionSelection,
                     ResolvedSensor, ResolvedSuite, SensingPlan, SensorSuite,
                     choose_precision_modes, mse_lower_bound,
                     plan_joint_boolean, plan_single_sensor_multi_region,
                     predict_value, resolve_suite)
from .sim import (Aggregate, ExperimentConfig, MseBoundReport, Trajectory,
                  aggregate, expected_stage_reduction, run_experiment,
                  run_replication, run_trajectories, verify_mse_bound)

__version__ = "0.1.0"

__all__ = [
    "Aggregate", "CapacityResult", "ConfigError", "ConvergenceError",
    "DiscreteChannel", "ExperimentConfig", "GaussianBooleanChannel",
    "MseBoundReport", "Partition", "PiecewiseDensity", "PrecisionMode",
    "PrecisionModeSet", "PrecisionSelection", "ResolvedSensor",
    "ResolvedSuite", "RunConfig", "SensingPlan", "SensorSuite", "Trajectory",
    "aggregate", "as_operating_point", "asymmetric_binary_optimum",
    "bayes_update", "bayes_update_gaussian", "bsc", "capacity",
    "choose_precision_modes", "expected_stage_reduction",
    "factorized_joint_optimum", "gaussian_boolean_mi",
    "gaussian_optimal_input", "is_quasi_symmetric", "load_config",
    "mse_lower_bound", "mutual_information", "normalize_union",
    "parse_config", "plan_joint_boolean", "plan_single_sensor_multi_region",
    "predict_value", "product_channel", "resolve_suite", "run_experiment",
    "run_replication", "run_trajectories", "union_complement",
    "union_contains", "verify_mse_bound",
]
