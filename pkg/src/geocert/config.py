"""Numerical tolerances and estimator constants.

All values are overridable through function arguments; these are the
defaults used by the pipeline and frozen into certificates.
"""

# -- pointwise geometry ----------------------------------------------------
RANK_TOL = 1e-8        # smallest singular value of the Jacobian must exceed this
SYM_TOL = 1e-10        # symmetry defect allowed in supplied second derivatives
PROJ_TOL = 1e-8        # normality of the second form against the tangent span
H_TOL = 1e-8           # |H| below this counts as minimal
UNIT_TOL = 1e-10       # |nu|_g must be within this of 1
INV_TOL = 1e-8         # ||g g^-1 - I|| allowed
FD_STEP_REL = 1e-4     # central-difference step, relative to local chart scale

# -- distance estimation ---------------------------------------------------
DIST_TOL = 1e-3        # relative accuracy target for graph distances
STENCIL = 16           # grid-graph neighborhood (8 or 16 for 2d charts)

# -- invariant estimation --------------------------------------------------
CONV_TOL = 0.02
DIV_CAP = 10.0
NOISE_TOL = 0.01
TAIL_CAP_FACTOR = 4.0  # tail for radius R is sampled on (R, TAIL_CAP_FACTOR*R]
WINDOW_FACTOR = 4.0    # window must reach rho >= WINDOW_FACTOR * R_last

# -- certificates ----------------------------------------------------------
C_MARGIN = 0.05        # relative safety margin applied to the tail bound c
C_CAP = 0.97           # refuse certificates whose padded c exceeds this
BOUND_SLACK = 1e-6     # pointwise growth bound slack: BOUND_SLACK*(1+rho^2)

def worker_count() -> int:
    """Worker cap for parallel sample loops (GEOCERT_WORKERS, default 1)."""
    import os

    try:
        return max(1, int(os.environ.get("GEOCERT_WORKERS", "1")))
    except ValueError:
        return 1


# -- radial flow -----------------------------------------------------------
PSI_MIN = 1e-3         # transversality floor
CRIT_TOL = 1e-4        # psi below this marks a critical point
NU_STAR_FLOOR = 1e-9   # sin(theta) floor below which the integrand is zeroed
LEVEL_TOL_REL = 1e-10  # level-set bisection: |R - r| <= LEVEL_TOL_REL * r
FLOW_TOL = 1e-8
FLOW_MAX_STEP = 0.05
T_MAX_FACTOR = 50.0    # default flow horizon: t_max = 50 * r
RAY_COUNT = 64         # seeds per ring
ENVELOPE_SLACK = 1e-8  # slack function on the angle envelope: slack*(1+t)
DEGENERATE_RADIUS = 0.05  # critical clusters wider than this count as degenerate
