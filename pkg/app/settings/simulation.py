# Numerical tolerances shared by the quantum library. Not environment-tunable.

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-8
ANNIHILATION_TOL = 1e-12
KL_TOL = 1e-10
RECOVERY_TOL = 1e-9
FACTOR_TOL = 1e-12
INVOLUTION_TOL = 1e-10
TIE_BREAK_TOL = 1e-8

# dt * max_j(kappa_j * |c_j|^2 + gamma_j^2) must stay below this
STEP_BOUND = 0.05

# Fraction of samples dropped from the start of a decay fit
FIT_SKIP_FRACTION = 0.1
