import logging
from typing import Optional, Sequence

import numpy as np
import pydantic
from scipy import stats

from app import settings
from app.qec.codes import Codespace
from app.qec.operators import DensityMatrix, Operator, StateVector
from app.services.errors import DimensionMismatchError, FitError

logger = logging.getLogger(__name__)


def _as_state(state) -> np.ndarray:
    return np.asarray(state, dtype=complex)


def _expect(state: np.ndarray, op: Operator) -> float:
    # vectors are treated as pure states
    if state.ndim == 1:
        return float(np.real(np.vdot(state, op @ state)))
    return float(np.real(np.trace(op @ state)))


def state_fidelity(rho, psi: StateVector) -> float:
    """<psi|rho|psi>; `rho` may also be a state vector."""
    rho = _as_state(rho)
    psi = _as_state(psi).reshape(-1)
    if rho.shape[0] != psi.shape[0]:
        raise DimensionMismatchError(f"State of dimension {rho.shape[0]} compared with a vector of dimension {psi.shape[0]}")
    if rho.ndim == 1:
        return float(abs(np.vdot(psi, rho)) ** 2)
    return float(np.real(np.vdot(psi, rho @ psi)))


def codespace_leakage(rho, cs: Codespace) -> float:
    rho = _as_state(rho)
    if rho.shape[0] != cs.projector.shape[0]:
        raise DimensionMismatchError(f"State of dimension {rho.shape[0]} on a codespace of dimension {cs.projector.shape[0]}")
    return 1.0 - _expect(rho, cs.projector)


def purity(rho) -> float:
    rho = _as_state(rho)
    if rho.ndim == 1:
        return float(np.vdot(rho, rho).real ** 2)
    return float(np.real(np.trace(rho @ rho)))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    delta = _as_state(rho) - _as_state(sigma)
    if delta.ndim != 2:
        raise DimensionMismatchError("Trace distance needs density matrices")
    # eigvalsh reads one triangle only
    delta = 0.5 * (delta + delta.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(delta))))


def logical_expectation(rho, op: Operator) -> float:
    rho = _as_state(rho)
    if rho.shape[0] != op.shape[0]:
        raise DimensionMismatchError(f"Operator of dimension {op.shape[0]} on a state of dimension {rho.shape[0]}")
    return _expect(rho, op)


class DecayFit(pydantic.BaseModel):
    rate: float
    amplitude: float
    r_squared: float
    n_points: int


def fit_exponential(
    times: Sequence[float],
    values: Sequence[float],
    skip_fraction: Optional[float] = None,
) -> DecayFit:
    """
    Least-squares fit of log(y) against t, y = amplitude * exp(-rate t).
    The first `skip_fraction` of the samples is dropped as transient.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise FitError(f"Times and values must be matching 1-D series, got {t.shape} and {y.shape}")
    skip = settings.FIT_SKIP_FRACTION if skip_fraction is None else skip_fraction
    start = int(np.floor(skip * len(t)))
    t, y = t[start:], y[start:]
    if len(t) < 2:
        raise FitError("At least two samples are needed in the fit window")
    if np.any(y <= 0):
        raise FitError(f"Non-positive value {y.min():.3e} in the fit window")
    if np.ptp(t) == 0:
        raise FitError("Fit window spans no time")

    log_y = np.log(y)
    if np.ptp(log_y) == 0:
        return DecayFit(rate=0.0, amplitude=float(y[0]), r_squared=1.0, n_points=len(t))
    result = stats.linregress(t, log_y)
    fit = DecayFit(
        rate=float(-result.slope),
        amplitude=float(np.exp(result.intercept)),
        r_squared=float(result.rvalue ** 2),
        n_points=len(t),
    )
    logger.debug(f"Exponential fit: {fit}")
    return fit
