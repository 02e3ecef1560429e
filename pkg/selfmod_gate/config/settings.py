"""Configuration settings for selfmod-gate"""
import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

TOOL_NAME = "selfmod-gate"
TOOL_VERSION = "1.0.0"

# Directory Configuration
OUTPUT_DIR = Path(os.getenv("SELFMOD_OUT", "results"))

# Logging
QUIET = os.getenv("SELFMOD_QUIET", "").lower() in ("1", "true", "yes")

# Numerical guards
MAX_FEATURE_DEGREE = 60  # raw powers overflow beyond this
STANDARDIZE_ABOVE = 8  # degrees above this are fitted on [-1, 1]-mapped inputs
PROJECTION_RADIUS = 50.0  # SGD iterates are clipped to this L2 ball
SGD_INIT_SCALE = 0.01
NOISE_CLIP = 3.0  # feature noise is clipped at +-3 sigma
COLLISION_WORK_WARN = 50_000_000  # learner updates before a collision search warns

# Representational axis
MH_DEFAULTS = {
    "dim": 1,
    "n_train": 150,
    "n_val": 60,
    "n_test": 1000,
    "noise_sigma": 1.2,
    "flip_rate": 0.35,
    "link": "logistic",
    "max_degree": 30,
    "l2_c": 1.0,
    "tol": 1e-8,
    "max_newton_iters": 100,
    "penalize_intercept": True,
    "cap": 31,
    "cap_schedule": "constant",
    "cap_scale": 1.0,
    "c0": 0.10,
    "tau_mult": 0.20,
    "delta_v": 0.05,
    "alpha": 0.9,
    "beta": 0.1,
    "stop_on_reject": True,  # Two-Gate curves end at the first rejection
    "dest_stop_on_reject": False,  # destructive policies keep modifying
    "policies": "two_gate,dest_val_nocap,dest_val,dest_train",
    "seeds": 5,
    "base_seed": 0,
}

# Algorithmic axis
MA_DEFAULTS = {
    "dim": 1,
    "n_train": 500,
    "n_val": 1000,
    "n_test": 2000,
    "noise_sigma": 0.6,
    "flip_rate": 0.20,
    "link": "logistic",
    "degree": 5,
    "eta0": 0.01,
    "batch": 32,
    "t_max": 50000,
    "l2": 1e-5,
    "budget": 2.5,
    "budget_schedule": "constant",
    "budget_scale": 1.0,
    "log_every": 250,
    "seeds": 20,
    "base_seed": 0,
}

# Substrate axis
SUBSTRATE_DEFAULTS = {
    "N": 4,
    "D": 256,
    "sizes": "250,500,1000,2000,4000",
    "targets_per_seed": 20,
    "find_collision": False,
    "collision_m": 0,  # 0 means N + 1
    "collision_D": 8,
    "collision_budget": 200000,
    "seeds": 50,
    "base_seed": 0,
}

# Oracle suites
ORACLE_DEFAULTS = {
    "suite": "all",
    "probe_trials": 200,
    "probe_net": 10000,
    "probe_test_size": 20000,
    "probe_n": 60,
    "delta": 0.05,
    "c0": 0.10,
    "sign_draws": 100000,
    "base_seed": 0,
}

# Exit codes
EXIT_OK = 0
EXIT_SOUNDNESS = 1  # an oracle assertion failed
EXIT_CONFIG = 2
EXIT_NUMERIC = 3  # fit non-convergence or SGD divergence
