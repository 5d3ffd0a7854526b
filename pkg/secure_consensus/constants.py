# Tolerance policy shared by pinv/rank so rank arithmetic and projector construction agree
DEFAULT_REL_TOL = 1e-10
WEIGHT_MATRIX_TOL = 1e-12
SYMMETRIC_EIGEN_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-8

# Analysis defaults
DEFAULT_BETA = 0.001
DEFAULT_P_MAX = 3
DEFAULT_TAIL_FRACTION = 0.5
MIN_RATE_TRACE_LENGTH = 20
RATE_FLOOR = 1e-14
CONVERGED_IMMEDIATELY = 0.0
EXPECTED_VALUE_TOLERANCE = 0.01

# Output
FLOAT_FORMAT = "{:.17g}"
TRACE_CSV = "trace.csv"
DETECTION_CSV = "detection-agent-{agent}.csv"
DETECTION_JSON = "detection-agent-{agent}.json"
ANALYSIS_JSON = "analysis.json"
CAMPAIGN_JSON = "campaign.json"

# Random weights
DEFAULT_RANDOM_WEIGHT_SCALE = 0.5
RANDOM_WEIGHT_ATTEMPTS = 100

# Seeds feed numpy.random.SeedSequence
MAX_SEED = 2**64 - 1
