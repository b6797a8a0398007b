"""
Configuration file for the cdrodeo experiment harness
"""

# Procedure settings
DEFAULT_BETA = 0.8  # Bandwidth grid ratio
DEFAULT_KERNEL = "gaussian"  # Options: gaussian, biweight
DEFAULT_VARIANT = "revdir"  # Options: revdir, direct, reverse
DEFAULT_MARGINAL = "known"  # Options: known, preestimator, chained
DEFAULT_REVERSE_GUARD = "active"  # Options: active, all
DEFAULT_REVERSE_CAP = "beta"  # Options: beta, inverse_log
DEFAULT_DIRECT_FLOOR = "auto"  # Options: auto, log, log_a

# Simulation settings (desk scale; larger runs are reachable by flags)
DEFAULT_MODEL = "b"
DEFAULT_D1 = 3
DEFAULT_N = 20000
DEFAULT_SEED = 20240101
DEFAULT_SAMPLES_B = 5  # Samples per sweep configuration
DEFAULT_POINTS_M = 10  # Evaluation points per sample
DEFAULT_REPLICATES_R = 20  # Replicates per sparsity configuration

# Sweep grids
DEFAULT_A_GRID = "0,0.5,1,1.5,2,2.5,3"
DEFAULT_BETA_GRID = "0.5,0.6,0.7,0.8,0.9"
DEFAULT_D1_GRID = "1,2,3,4"
DEFAULT_N_GRID = "10000,20000,40000,80000"

# Reconstruction grid
DEFAULT_GRID_MIN = -2.0
DEFAULT_GRID_MAX = 2.0
DEFAULT_GRID_POINTS = 41

# Marginal pre-estimator
DEFAULT_PREESTIMATOR_C = 2.0  # Auxiliary sample size is ceil(n^c)
AUX_SAMPLE_CAP = 1_000_000  # Larger auxiliary samples are truncated with a warning

# Benchmark settings
BENCH_REPEATS = 3  # Timed runs per configuration, after one warm-up run

# Output settings
CSV_FLOAT_FORMAT = "%.10g"
CSV_FORMAT_VERSION = 1

# Logging
LOG_LEVEL = "INFO"  # Options: DEBUG, INFO, WARNING, ERROR
LOG_DIR = "logs/cdrodeo"
