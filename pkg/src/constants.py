"""Package constants and capability description."""

from typing import Any

# Package version - single source of truth
PACKAGE_VERSION = "0.3.0"

# Edges are bitsets over labels 1..MAX_LABEL
MAX_LABEL = 64

# Exact-verification defaults (overridable through the environment, see src.config)
DEFAULT_MAX_ENUM_LEAVES = 9
DEFAULT_MAX_KERNEL_ENTRIES = 10**8
DEFAULT_LOG_LEVEL = "WARNING"
DEFAULT_WORKERS = 1

# Goodness-of-fit harness
GOF_MIN_EXPECTED = 5
GOF_PASS_THRESHOLD = 0.001

CHAIN_NAMES = ("uniform", "alpha", "dec-uniform", "dec-alpha")
PROJECTION_NAMES = ("none", "mass", "star", "beads")
GROWTH_MODELS = ("remy", "ford", "ford-modified")
CHECK_NAMES = (
    "stationarity",
    "kemeny-snell",
    "intertwining",
    "consistency",
    "spatial-markov",
    "decrement",
    "markov-slices",
    "resample-law",
    "first-drop-law",
    "down-invariance",
    "marginal-law",
    "insertion-law",
    "resampling-law",
    "state-space",
)

CAPABILITIES_DATA: dict[str, Any] = {
    "version": PACKAGE_VERSION,
    "chains": list(CHAIN_NAMES),
    "projections": list(PROJECTION_NAMES),
    "growth_models": list(GROWTH_MODELS),
    "checks": list(CHECK_NAMES),
    "limits": {
        "max_label": MAX_LABEL,
        "max_enum_leaves": DEFAULT_MAX_ENUM_LEAVES,
        "max_kernel_entries": DEFAULT_MAX_KERNEL_ENTRIES,
    },
}
