import numpy as np
import pytest

from app.qec.codes import GeneralizedStabilizer, build_codespace, encode
from app.qec.synthesis import ErrorChannel, synthesize_scheme


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def xx_stabilizer():
    return GeneralizedStabilizer.from_pauli("XX")


@pytest.fixture
def xx_codespace(xx_stabilizer):
    return build_codespace(xx_stabilizer)


@pytest.fixture
def two_qubit_emission():
    """Spontaneous emission on both qubits, kappa = 1"""
    return [ErrorChannel.spontaneous_emission(1), ErrorChannel.spontaneous_emission(2)]


@pytest.fixture
def two_qubit_homodyne():
    """Spontaneous emission detected at phase -pi/2, which selects S = XX in the diffusive limit"""
    return [
        ErrorChannel.spontaneous_emission(1, phi=-np.pi / 2),
        ErrorChannel.spontaneous_emission(2, phi=-np.pi / 2),
    ]


@pytest.fixture
def jump_scheme(two_qubit_emission):
    return synthesize_scheme(two_qubit_emission, mode="jump", n_qubits=2)


@pytest.fixture
def diffusive_scheme(two_qubit_homodyne):
    return synthesize_scheme(two_qubit_homodyne, mode="diffusive", n_qubits=2)


@pytest.fixture
def encoded_state(xx_codespace):
    """A generic logical state in the XX codespace"""
    logical = np.array([np.cos(0.3), np.exp(0.7j) * np.sin(0.3)])
    return encode(logical, xx_codespace)


@pytest.fixture
def random_operator(rng):
    """Factory for random non-Hermitian one-qubit operators"""
    def _make():
        return rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return _make
