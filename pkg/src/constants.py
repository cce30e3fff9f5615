"""Application-wide constants."""

# Version
VERSION = "0.4.0"

# File names written into a run's output directory
CONFIG_FILE = "config.json"
HISTORY_FILE = "history.csv"
SUMMARY_FILE = "summary.json"
ITERATIONS_FILE = "iterations.csv"
PER_SEED_FILE = "per_seed.csv"
TABLE_FILE = "table.csv"
FRONT_SNAPSHOTS_FILE = "front_per_iteration.csv"
REFPOINT_TRAJECTORY_FILE = "refpoint_trajectory.csv"
CRITERION_GRID_FILE = "criterion_grid.csv"
ORACLE_FILE = "oracle.csv"

# Environment
THREADS_ENV_VAR = "TARGETMO_THREADS"
TEST_MODE_ENV_VAR = "TARGETMO_TEST_MODE"

# Hypervolume
HV_MC_SAMPLES = 1_000_000

# Gaussian processes
GP_N_STARTS = 10
GP_LENGTHSCALE_BOUNDS = (0.01, 10.0)  # multiples of the domain width
GP_INITIAL_NUGGET = 1e-8  # relative to the signal variance
GP_MAX_NUGGET = 1e-4
GP_SIM_INITIAL_JITTER = 1e-12
GP_MIN_SIGNAL_VARIANCE = 1e-12

# Criteria
N_MC = 10_000
DEAD_CRITERION = 1e-12

# Targeting
N_SIMS = 200
N_SIM_POINTS = 1000
REPAIR_RESOLUTION = 1e-6  # fraction of the broken line's length

# Convergence
N_QUAD = 100
EPSILON_RELATIVE = 1e-3

# Search
RAW_PER_DIM = 1000
N_STARTS = 10
LOCAL_BUDGET = 200
BATCH_RAW_PER_DIM = 500
BATCH_N_STARTS = 5

# NSGA-II
SBX_ETA = 15.0
SBX_PROB = 0.9
PM_ETA = 20.0

# Metrics
ORACLE_RESOLUTION = 2000
ORACLE_COMPONENT_GAP = 0.02  # f1 jump separating ZDT3 sub-fronts
RESTRICTED_W = (0.1,)

CRITERIA = ("mEI", "EHI", "q-mEI", "mq-EI")
BATCH_CRITERIA = ("q-mEI", "mq-EI")
PROBLEMS = ("quadratic", "zdt3", "p1")
ALGORITHMS = ("bayes", "nsga2")
METRICS = (
    "time_to_target",
    "hypervolume_at_R",
    "restricted_hypervolume",
    "n_dominating",
    "dist_to_PXT",
    "dist_to_PX",
    "dist_to_PYT",
    "dist_to_PY",
)
