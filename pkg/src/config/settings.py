"""
Configuration settings for the refined torsion toolkit
"""
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Logging configuration
LOG_LEVEL = os.getenv("TORSION_LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("TORSION_LOG_FILE", "")

# Numerical tolerances
RANK_TOLERANCE = float(os.getenv("RANK_TOLERANCE", 1e-8))
CLUSTER_TOLERANCE = float(os.getenv("CLUSTER_TOLERANCE", 1e-8))
CUT_TOLERANCE = float(os.getenv("CUT_TOLERANCE", 1e-12))
RELATION_TOLERANCE = float(os.getenv("RELATION_TOLERANCE", 1e-10))
SPLIT_REJECT_FACTOR = float(os.getenv("SPLIT_REJECT_FACTOR", 10))

# Random model generation
MAX_CONDITION = float(os.getenv("MAX_CONDITION", 1e3))
MAX_GENERATION_RETRIES = int(os.getenv("MAX_GENERATION_RETRIES", 50))
DEFAULT_SEED = int(os.getenv("DEFAULT_SEED", 7))

# Sweeps
ADMISSIBILITY_FLOOR = float(os.getenv("ADMISSIBILITY_FLOOR", 1e-6))
DEFAULT_JOBS = int(os.getenv("DEFAULT_JOBS", 1))

# Significant digits for CSV output
CSV_DIGITS = 17

# Supported check suites
CHECK_SUITES = [
    "witness", "identity", "angle-independence", "hermitian", "similarity",
    "circle", "eta-unitary", "comparison", "holomorphy", "cheeger-muller",
    "turaev",
]
