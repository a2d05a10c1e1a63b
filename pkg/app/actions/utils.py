import logging
import re
from functools import reduce
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from functional import seq

from app.qec.codes import Codespace
from app.qec.metrics import codespace_leakage, purity, state_fidelity
from app.qec.operators import SIGMA_MINUS, X, Y, Z, Operator, StateVector
from app.qec.synthesis import CertificateReport, FeedbackScheme, check_scheme

logger = logging.getLogger(__name__)

CHANNEL_OPERATORS = {
    "spontaneous_emission": 2 * SIGMA_MINUS,
    "sigma_minus": SIGMA_MINUS,
    "X": X,
    "Y": Y,
    "Z": Z,
}

# "-i" is tried before "-", so "-i" always reads as one symbol
LOGICAL_STATE_PATTERN = re.compile(r"-i|i|[01+-]")

_SQRT_HALF = 1 / np.sqrt(2)
LOGICAL_SYMBOLS = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([_SQRT_HALF, _SQRT_HALF], dtype=complex),
    "-": np.array([_SQRT_HALF, -_SQRT_HALF], dtype=complex),
    "i": np.array([_SQRT_HALF, 1j * _SQRT_HALF], dtype=complex),
    "-i": np.array([_SQRT_HALF, -1j * _SQRT_HALF], dtype=complex),
}


def channel_matrix(operator: Optional[str], matrix: Optional[Sequence[Sequence[Any]]]) -> Operator:
    if matrix is None:
        return CHANNEL_OPERATORS[operator].copy()
    entries = [
        [complex(entry[0], entry[1]) if isinstance(entry, (list, tuple)) else complex(entry) for entry in row]
        for row in matrix
    ]
    return np.array(entries, dtype=complex)


def split_logical_state(spec: str) -> List[str]:
    symbols = LOGICAL_STATE_PATTERN.findall(spec)
    if not symbols or "".join(symbols) != spec:
        raise ValueError(f"Invalid logical state '{spec}'; use one of 0, 1, +, -, i, -i per logical qubit")
    return symbols


def parse_logical_state(spec: str, n_logical: Optional[int] = None) -> StateVector:
    """Product state over the logical qubits, first symbol on logical qubit 1."""
    symbols = split_logical_state(spec)
    if n_logical is not None and len(symbols) != n_logical:
        raise ValueError(f"Logical state '{spec}' covers {len(symbols)} logical qubits, expected {n_logical}")
    return reduce(np.kron, [LOGICAL_SYMBOLS[s] for s in symbols])


def timeseries_rows(
        times: Sequence[float],
        states: Sequence[np.ndarray],
        references: Sequence[StateVector],
        cs: Codespace,
        channel_columns: Optional[Dict[str, Sequence[float]]] = None,
) -> List[Dict[str, float]]:
    """
    Rows of t, fidelity, leakage, purity and any per-channel columns.
    `references` holds the target state at every recorded time.
    """
    channel_columns = channel_columns or {}

    def row(k):
        values = {
            "t": float(times[k]),
            "fidelity": state_fidelity(states[k], references[k]),
            "leakage": codespace_leakage(states[k], cs),
            "purity": purity(states[k]),
        }
        for name, column in channel_columns.items():
            values[name] = column[k]
        return values

    return seq(range(len(times))).map(row).to_list()


def per_channel_columns(prefix: str, scheme: FeedbackScheme, table: np.ndarray) -> Dict[str, np.ndarray]:
    """Split a (time, channel) table into named columns like jump_count_q1."""
    return {f"{prefix}_q{ch.qubit}": table[:, j] for j, ch in enumerate(scheme.channels)}


def describe_scheme(scheme: FeedbackScheme) -> Dict[str, Any]:
    return {
        "mode": scheme.mode,
        "stabilizer": str(scheme.stabilizer) if scheme.stabilizer is not None else None,
        "period": scheme.period,
        "channels": [
            {"qubit": ch.qubit, "c": ch.c, "kappa": ch.kappa, "phi": ch.phi, "gamma": ch.gamma, "eta": ch.eta}
            for ch in scheme.channels
        ],
        "operators": scheme.operators(),
        "notes": scheme.notes,
    }


def build_manifest(
        action_config, schemes: Dict[str, FeedbackScheme], reports: Dict[str, CertificateReport]
) -> Dict[str, Any]:
    return {
        "scenario": action_config.scenario,
        "config": action_config.dict(),
        "schemes": {label: describe_scheme(scheme) for label, scheme in schemes.items()},
        "certificates": {
            label: {"ok": report.ok, **report.dict()} for label, report in reports.items()
        },
        "certificates_ok": all(report.ok for report in reports.values()),
    }


def certify(action_config) -> Tuple[Dict[str, FeedbackScheme], Dict[str, CertificateReport]]:
    """Synthesize the scenario's schemes and run every certificate; nothing is integrated."""
    schemes = action_config.synthesize()
    reports = {label: check_scheme(scheme) for label, scheme in schemes.items()}
    for label, report in reports.items():
        logger.info(f"Certificates for '{label}' scheme: {'passed' if report.ok else 'FAILED'} ({len(report.checks)} checks)")
    return schemes, reports


def certificate_failures(reports: Dict[str, CertificateReport]) -> List[str]:
    return [f"{label} {check.describe()}" for label, report in reports.items() for check in report.failures]
