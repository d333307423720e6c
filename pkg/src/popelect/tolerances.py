"""Acceptance bands and scales, kept in one place.

Bump ``TOLERANCE_VERSION`` whenever a value here changes so stored
validation reports can be matched to the bands they were judged against.
"""

TOLERANCE_VERSION = 1

# uniqueness / safety
UNIQUE_NS = (2**8, 2**10, 2**12, 2**16)
UNIQUE_TRIALS = 100

# backup-only analytic oracle
BACKUP_NS = (64, 128)
BACKUP_TRIALS = 1000
BACKUP_REL_TOL = 0.05

# role split after the first round: deviations measured in units of n / log2 n
ROLE_SPLIT_N = 2**16
ROLE_SPLIT_SLACK = 5.0
PASS_FRACTION = 0.95

# coin cascade
CASCADE_N = 2**18
CASCADE_PHI = 2
CASCADE_LOW = 0.45
CASCADE_HIGH = 1.1
CASCADE_MIN_EXPONENT = 2 / 3

# junta size exponents
JUNTA_LOW_EXP = 0.45
JUNTA_HIGH_EXP = 0.77

# inhibitor drag histogram
DRAG_HIST_LEVELS = (1, 2, 3)
DRAG_HIST_REL_TOL = 0.25

# epoch-2 survivors
SURVIVOR_NS = (2**14, 2**16, 2**18)

# scaling sweep
SCALING_NS = tuple(2**k for k in range(10, 18))
SCALING_TRIALS = 100
SCALING_MAX_RATIO = 2.0

# drag slowdown
DRAG_RATIO_LOW = 2.0
DRAG_RATIO_HIGH = 8.0
DRAG_RATIO_LEVELS = (0, 1, 2)

# round model
ROUND_ORACLE_F0 = tuple(2**k for k in range(3, 9))
ROUND_ORACLE_P = 0.25
ROUND_ORACLE_SAMPLES = 20000
ROUND_ORACLE_MAX_STEP = 1.5
ROUND_TEST_ALPHA = 0.05

# determinism / uniformity
CHI_N = 4
CHI_DRAWS = 10**6
CHI_MIN_P = 0.001

# shared trial set at n = 2^16
MAIN_N = 2**16
MAIN_TRIALS = 100

# budgets, in parallel time units (interactions / n)
STABILIZE_BUDGET = 200_000
DRAG_BUDGET = 400_000
FIRST_ROUND_BUDGET = 2_000
