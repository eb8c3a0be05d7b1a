"""Numeric policy knobs, kept in one place so tests can reference them."""

# Hard cap on variables per local event group; tables are dense (2**m entries).
MAX_LEG_VARS = 12

# Structural tolerance: normalization, shared-marginal agreement, cache checks.
STRUCT_TOL = 1e-9

# Transform tolerance: zeta/moebius round trips must hold to this.
TRANSFORM_TOL = 1e-12

# Mass below this counts as zero when conditioning or forming multipliers.
ZERO_MASS = 1e-12

# Slack allowed when validating an entered constraint against its interval.
INTERVAL_SLACK = 1e-9

# Iterative proportional fitting: stop when the worst cell error drops below
# the tolerance, or after the sweep cap.
IPF_TOL = 1e-10
IPF_MAX_SWEEPS = 10_000

# Pre-renormalization drift beyond this is flagged as a numeric-health warning.
DRIFT_WARN = 1e-6
