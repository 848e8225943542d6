"""Default parameter values for the standard "2-20" fund and the distributed firm.

Engines take these as configurable inputs; nothing downstream should repeat
the literals.
"""

LIFESPAN_YEARS = 10
MGMT_FEE = 0.02
GP_COMMIT = 0.01
CARRY = 0.20

# Post-money marks of late-stage companies over their fair value.
MARKUP_INFLATION = 0.48

SUCCESSOR_TVPI_THRESHOLD = 1.5

PERFORMANCE_FEE = 0.02
SPV_ADMIN_COST = 1_000_000  # minor units (USD 10,000.00)

PERF_FEE_SHARES = {"sourcing": "0.30"}
CARRY_SHARES = {"diligence": "0.25", "success": "0.30"}

FOLLOWON_RESERVE_FRACTION = 0.40

# Outcome generator calibration: a 50-company fund's across-trial
# top-quartile DPI at year 18 lands near 2.0.
FAILURE_HAZARD = 0.07
PARETO_ALPHA = 1.1
