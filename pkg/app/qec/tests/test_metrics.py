import numpy as np
import pytest

from app.qec.codes import encode
from app.qec.metrics import (
    DecayFit,
    codespace_leakage,
    fit_exponential,
    logical_expectation,
    purity,
    state_fidelity,
    trace_distance,
)
from app.qec.operators import density_matrix, ket, to_matrix
from app.services.errors import DimensionMismatchError, FitError


class TestFidelity:

    def test_pure_state(self, encoded_state):
        assert state_fidelity(density_matrix(encoded_state), encoded_state) == pytest.approx(1.0, abs=1e-12)

    def test_maximally_mixed(self, encoded_state):
        assert state_fidelity(np.eye(4) / 4, encoded_state) == pytest.approx(0.25)

    def test_vector_input(self):
        psi = (ket("0") + ket("1")) / np.sqrt(2)
        assert state_fidelity(ket("0"), psi) == pytest.approx(0.5)

    def test_global_phase_invariance(self, encoded_state):
        rho = np.diag([0.1, 0.2, 0.3, 0.4]).astype(complex)
        assert state_fidelity(rho, encoded_state) == pytest.approx(state_fidelity(rho, np.exp(1.3j) * encoded_state))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            state_fidelity(np.eye(4) / 4, ket("0"))


class TestLeakage:

    def test_encoded_state_does_not_leak(self, encoded_state, xx_codespace):
        assert abs(codespace_leakage(density_matrix(encoded_state), xx_codespace)) <= 1e-12

    def test_computational_state_on_xx(self, xx_codespace):
        assert codespace_leakage(density_matrix(ket("10")), xx_codespace) == pytest.approx(0.5)

    def test_unitary_on_the_complement_does_not_change_leakage(self, xx_codespace, rng):
        complement = np.eye(4) - xx_codespace.projector
        h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        h = complement @ (h + h.conj().T) @ complement
        w, v = np.linalg.eigh(h)
        unitary = v @ np.diag(np.exp(1j * w)) @ v.conj().T
        rho = density_matrix((ket("10") + ket("00")) / np.sqrt(2))
        moved = unitary @ rho @ unitary.conj().T
        assert codespace_leakage(moved, xx_codespace) == pytest.approx(codespace_leakage(rho, xx_codespace))


class TestStateMeasures:

    def test_purity(self):
        assert purity(density_matrix(ket("01"))) == pytest.approx(1.0)
        assert purity(np.eye(4) / 4) == pytest.approx(0.25)

    def test_trace_distance(self):
        assert trace_distance(density_matrix(ket("0")), density_matrix(ket("1"))) == pytest.approx(1.0)
        assert trace_distance(np.eye(2) / 2, np.eye(2) / 2) == 0

    def test_logical_expectation(self, xx_codespace):
        plus = encode(np.array([1, 1]) / np.sqrt(2), xx_codespace)
        assert logical_expectation(density_matrix(plus), to_matrix("XI")) == pytest.approx(1.0)


class TestFitExponential:

    def test_exact_decay(self):
        t = np.linspace(0, 2, 201)
        fit = fit_exponential(t, 1.7 * np.exp(-3 * t))
        assert isinstance(fit, DecayFit)
        assert fit.rate == pytest.approx(3.0, rel=1e-6)
        assert fit.amplitude == pytest.approx(1.7, rel=1e-6)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-9)

    def test_noisy_decay(self, rng):
        t = np.linspace(0, 2, 401)
        y = 0.8 * np.exp(-2.5 * t) * (1 + rng.uniform(-1e-3, 1e-3, size=t.shape))
        assert fit_exponential(t, y).rate == pytest.approx(2.5, rel=1e-2)

    def test_transient_is_skipped(self):
        t = np.linspace(0, 1, 100)
        y = np.exp(-t)
        y[:5] = 5.0
        assert fit_exponential(t, y).rate == pytest.approx(1.0, rel=1e-9)

    def test_constant_series(self):
        fit = fit_exponential(np.linspace(0, 1, 20), np.full(20, 0.5))
        assert fit.rate == 0
        assert fit.r_squared == 1

    @pytest.mark.parametrize("values", [
        np.linspace(1, -1, 20),
        np.zeros(20),
    ])
    def test_non_positive_values(self, values):
        with pytest.raises(FitError):
            fit_exponential(np.linspace(0, 1, 20), values)

    def test_too_few_points(self):
        with pytest.raises(FitError):
            fit_exponential([0.0, 1.0], [1.0, 0.5], skip_fraction=0.5)
