import os
from dotenv import load_dotenv

load_dotenv()


def _env_int(name, default):
    value = os.getenv(name)
    return int(value) if value not in (None, "") else default


def _env_float(name, default):
    value = os.getenv(name)
    return float(value) if value not in (None, "") else default


# Tower representation limits (part of the data format, not tunable)
LIT_CAP = 10**6
INC_CAP = 10**6

# Precision settings (binary digits)
START_PRECISION = _env_int("FANLAB_START_PRECISION", 64)
PRECISION_CAP = _env_int("FANLAB_PRECISION_CAP", 4096)
PRECISION_GROWTH = 4  # 64 -> 256 -> 1024 -> 4096
EXACT_GUARD_EXPONENT = _env_int("FANLAB_EXACT_GUARD", 20000)
NUMERIC_PRECISION = _env_int("FANLAB_NUMERIC_PRECISION", 256)

# Dynamics settings
DEFAULT_TOL = _env_float("FANLAB_TOL", 1e-9)
DEFAULT_DEPTH_CAP = _env_int("FANLAB_DEPTH_CAP", 200)
ORBIT_HORIZON = _env_int("FANLAB_HORIZON", 15)
MAX_INTERVAL_LEVEL = 4

# Strata and Claim 9 settings
DEFAULT_KMAX = _env_int("FANLAB_KMAX", 6)
DEFAULT_J_CAP = _env_int("FANLAB_J_CAP", 50)

# Suite settings
RANDOM_SEED = _env_int("FANLAB_SEED", 20240611)
SUITE_DEFAULTS = {
    "prop6": {"samples": 1000, "max_n": 8, "max_mag": 9, "support": 12, "pairs": 500, "depth": 60},
    "prop7": {"max_k": 3, "max_j": 20, "max_n": 2},
    "claim8": {"k": "1..6"},
    "claim9": {"n": [0, 1, 2], "N": "3..40", "c": 1},
    "sigma": {"samples": 1000, "max_n": 4},
    "tower-oracle": {"max_level": 3, "max_lit": 5, "max_inc": 2, "numeric_sample": 60},
}

LOG_LEVEL = os.getenv("FANLAB_LOG_LEVEL", "WARNING")
REPORTS_DIR = os.getenv("FANLAB_REPORTS_DIR", "reports")


COLORS = {
    # Primary palette
    "primary": "#1C4E80",      # Dark blue for spines
    "secondary": "#0091D5",    # Medium blue for endpoint markers
    "tertiary": "#6BB4C0",     # Teal blue for grid lines

    # Accent colors
    "accent": "#F17300",       # Orange for highlighted spines

    # Functional colors
    "success": "#26A69A",      # Passed certificates
    "warning": "#F9A825",      # Unknown verdicts
    "error": "#E53935",        # Failed certificates

    # Background and text
    "background": "#F5F7FA",
    "text_dark": "#000000",
    "text_light": "#333333",
}
