"""
DLNS Solver Configuration
This file defines the default parameters for the solvers, the simulated
message-passing substrate, the instance generators and the benchmark driver.
"""

import logging
import os

# =============================================================================
# SOLVER CONFIGURATION
# =============================================================================

SOLVER_CONFIG = {
    "p_destroy": 0.5,
    "iterations": 200,
    "init_mode": "random",           # "random" or "greedy"
    "bound_rule": "partition",       # "partition" or "memoized-mean"
    "width_cap": 12,
    "exact_row_cap": 10 ** 6,
    "dsa_probability": 0.6,
    "max_table_bytes": 256 * 1024 ** 2,
    "memory_fraction": 0.5,          # of psutil's available memory
    "gap_tolerance": 1e-9,
}

# =============================================================================
# SIMULATED SUBSTRATE
# =============================================================================

SIMULATION_CONFIG = {
    "t_cc": 1.0,                     # units per constraint check
    "t_msg": 100.0,                  # units per sequential message hop
    "max_rounds_slack": 2,           # rounds allowed beyond |A| per phase
}

# =============================================================================
# INSTANCE GENERATORS
# =============================================================================

GENERATOR_CONFIG = {
    "families": ["random", "scale-free", "grid", "meeting"],
    "n": 20,
    "p1": 0.5,
    "d": 10,
    "cost_max": 100,
    "rows": 4,
    "cols": 5,
    "max_connect_attempts": 1000,
    "meeting": {
        "meetings": 20,
        "horizon": 100,              # start slots live in [0, horizon]
        "duration_range": (1, 8),
        "preference_range": (0, 10),
        "density": 0.2,              # p1 of the meeting topology
        "private_participants": (0, 2),
    },
}

# =============================================================================
# BENCHMARK DRIVER
# =============================================================================

BENCH_CONFIG = {
    "algorithms": ["tdbr", "dpop-dbr", "dsa", "exact"],
    "destroy_strategies": ["random", "dk"],
    "csv_header": [
        "k", "sim_time", "wall_ms", "lb", "ub", "best_lb", "best_ub",
        "rho", "msgs", "payload", "max_payload", "ccs",
    ],
    "normalization_buckets": 20,
    "normalization_axes": ["sim_time", "messages"],
    "float_format": "{:.6f}",
    "batch_workers": None,           # None lets the executor decide
    "seed_env_var": "DLNS_SEED",
}

# =============================================================================
# LOGGING
# =============================================================================

LOGGING_CONFIG = {
    "level": "WARNING",
    "verbose_level": "DEBUG",
    "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
}

# =============================================================================
# EXPORT FUNCTIONS
# =============================================================================

def get_solver_config():
    """Get the solver defaults"""
    return SOLVER_CONFIG

def get_simulation_config():
    """Get the simulated-runtime constants"""
    return SIMULATION_CONFIG

def get_generator_config():
    """Get the generator defaults"""
    return GENERATOR_CONFIG

def get_meeting_config():
    """Get the meeting-scheduling calibration knobs"""
    return GENERATOR_CONFIG["meeting"]

def get_bench_config():
    """Get the benchmark driver settings"""
    return BENCH_CONFIG

def get_logging_config():
    """Get the logging settings"""
    return LOGGING_CONFIG

def get_default_seed(fallback=0):
    """Seed from the DLNS_SEED environment variable, else the fallback"""
    raw = os.environ.get(BENCH_CONFIG["seed_env_var"])
    if raw is None or not raw.strip():
        return fallback
    try:
        return int(raw)
    except ValueError:
        logging.getLogger(__name__).warning(
            "Ignoring non-integer %s=%r", BENCH_CONFIG["seed_env_var"], raw)
        return fallback

def configure_logging(verbose=False):
    """Configure root logging from LOGGING_CONFIG"""
    config = get_logging_config()
    level_name = config["verbose_level"] if verbose else config["level"]
    logging.basicConfig(level=getattr(logging, level_name), format=config["format"])
