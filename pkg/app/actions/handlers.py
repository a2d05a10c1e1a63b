import asyncio
import logging
from typing import Dict

import numpy as np
from scipy.linalg import expm

from app.actions.configurations import (
    EncodedGateConfig,
    GeneralChannelConfig,
    ImperfectEtaSweepConfig,
    LargeGammaLimitConfig,
    NQubitSpontConfig,
    PulseVsDrivingConfig,
    TwoQubitDiffusiveConfig,
    TwoQubitJumpConfig,
)
from app.actions.core import ScenarioConfig
from app.actions.utils import (
    build_manifest,
    certificate_failures,
    certify,
    parse_logical_state,
    per_channel_columns,
    timeseries_rows,
)
from app.qec.codes import Codespace, build_codespace, encode, encoded_operators
from app.qec.dynamics import (
    StateSeries,
    TrajectoryConfig,
    ensemble_average,
    integrate_feedback_me_diffusive,
    integrate_feedback_me_jump,
    integrate_lindblad,
    integrate_pulse_me,
    run_ensemble,
    run_pulse_scheme,
    trajectory_diffusive,
    trajectory_jump,
)
from app.qec.metrics import codespace_leakage, fit_exponential, logical_expectation, purity, state_fidelity, trace_distance
from app.qec.operators import StateVector, density_matrix, ket
from app.qec.synthesis import FeedbackScheme, large_gamma_scheme, pulse_period_propagator
from app.services.activity_logger import activity_logger, log_scenario_activity
from app.services.errors import CertificateError, FitError
from app.services.results import RunResultsWriter

logger = logging.getLogger(__name__)

FEEDBACK_INTEGRATORS = {
    "jump": integrate_feedback_me_jump,
    "diffusive": integrate_feedback_me_diffusive,
    "pulse": integrate_pulse_me,
}

TRAJECTORY_RUNNERS = {
    "jump": trajectory_jump,
    "diffusive": trajectory_diffusive,
    "pulse": run_pulse_scheme,
}


def certify_schemes(action_config: ScenarioConfig, writer: RunResultsWriter) -> Dict[str, FeedbackScheme]:
    """Synthesize and certify. The manifest is written either way; a failure stops the run before any dynamics."""
    try:
        schemes, reports = certify(action_config)
    except CertificateError as e:
        writer.write_manifest({
            "scenario": action_config.scenario,
            "config": action_config.dict(),
            "certificates_ok": False,
            "error": e.message,
            "failures": e.failures,
        })
        raise
    writer.write_manifest(build_manifest(action_config, schemes, reports))
    if failures := certificate_failures(reports):
        raise CertificateError(f"Synthesized scheme for '{action_config.scenario}' failed its certificates", failures)
    return schemes


def series_summary(series: StateSeries, psi: StateVector, cs: Codespace) -> dict:
    fidelity = series.fidelity(psi)
    return {
        "final_fidelity": float(fidelity[-1]),
        "min_fidelity": float(fidelity.min()),
        "final_leakage": codespace_leakage(series.final_state, cs),
        "final_purity": purity(series.final_state),
    }


async def unravel(
        scheme: FeedbackScheme, psi: StateVector, cfg: TrajectoryConfig, series: StateSeries,
        cs: Codespace, writer: RunResultsWriter, name: str,
) -> dict:
    """Ensemble of conditioned trajectories checked against the master-equation solution."""
    initial = density_matrix(psi) if scheme.mode == "diffusive" else psi
    records = await run_ensemble(TRAJECTORY_RUNNERS[scheme.mode], initial, scheme, None, cfg, reference=psi)
    average = ensemble_average(records, series)
    if scheme.mode == "diffusive":
        columns = per_channel_columns("current", scheme, average.currents_mean)
    else:
        columns = per_channel_columns("jump_count", scheme, average.counts_mean)
    writer.write_timeseries(
        timeseries_rows(average.times, average.states, [psi] * len(average.times), cs, columns), name=name
    )
    return {
        "n_traj": average.n_traj,
        "trajectory_min_fidelity": float(min(record.fidelity_series.min() for record in records)),
        "mean_jumps": float(np.mean([len(record.events) for record in records])),
        "ensemble_trace_distance": average.max_trace_distance,
    }


async def run_protection(action_config: ScenarioConfig) -> dict:
    """Certify, integrate the feedback master equation from an encoded state and optionally unravel it."""
    writer = RunResultsWriter(action_config.run_dir)
    scheme = certify_schemes(action_config, writer)[action_config.mode]
    cs = build_codespace(scheme.stabilizer)
    psi = encode(parse_logical_state(action_config.logical_state_spec, cs.n_logical), cs)
    cfg = action_config.trajectory_config()

    series = await asyncio.to_thread(FEEDBACK_INTEGRATORS[scheme.mode], density_matrix(psi), scheme, None, cfg)
    writer.write_timeseries(timeseries_rows(series.times, series.states, [psi] * len(series.times), cs))
    summary = {
        "scenario": action_config.scenario,
        "stabilizer": str(scheme.stabilizer),
        "driving_hamiltonian_norm": float(np.linalg.norm(scheme.driving_H, 2)),
        **series_summary(series, psi, cs),
    }

    if getattr(action_config, "baseline", False):
        baseline = await asyncio.to_thread(integrate_lindblad, density_matrix(psi), None, scheme.channels, cfg)
        summary["baseline_final_fidelity"] = state_fidelity(baseline.final_state, psi)

    if cfg.n_traj:
        summary.update(await unravel(scheme, psi, cfg, series, cs, writer, "trajectories.csv"))

    writer.write_summary(summary)
    return summary


@activity_logger()
async def action_two_qubit_jump(action_config: TwoQubitJumpConfig):
    """Two qubits under detected spontaneous emission, protected by driving and jump correction."""
    logger.info(f"Executing 'two-qubit-jump' scenario with config {action_config}...")
    return await run_protection(action_config)


@activity_logger()
async def action_two_qubit_diffusive(action_config: TwoQubitDiffusiveConfig):
    """Two qubits under homodyne-detected emission, protected by current feedback."""
    logger.info(f"Executing 'two-qubit-diffusive' scenario with config {action_config}...")
    return await run_protection(action_config)


@activity_logger()
async def action_n_qubit_spont(action_config: NQubitSpontConfig):
    """Spontaneous emission on every qubit of an n-qubit register, stabilizer X^n."""
    logger.info(f"Executing 'n-qubit-spont' scenario on {action_config.n_qubits} qubits, kappas {action_config.rates()}...")
    return await run_protection(action_config)


@activity_logger()
async def action_general_channel(action_config: GeneralChannelConfig):
    """Arbitrary detected one-qubit channels with synthesized stabilizer, driving and corrections."""
    logger.info(f"Executing 'general-channel' scenario with {len(action_config.channels)} channel(s)...")
    return await run_protection(action_config)


@activity_logger()
async def action_imperfect_eta_sweep(action_config: ImperfectEtaSweepConfig):
    """Decay of logical coherence under the jump scheme as detection efficiency drops."""
    logger.info(f"Executing 'imperfect-eta-sweep' scenario over etas {action_config.etas}...")
    writer = RunResultsWriter(action_config.run_dir)
    scheme = certify_schemes(action_config, writer)["jump"]
    cs = build_codespace(scheme.stabilizer)
    xbar = encoded_operators(scheme.stabilizer).xbar[0]
    psi = encode(parse_logical_state(action_config.logical_state_spec, cs.n_logical), cs)
    cfg = action_config.trajectory_config()

    fits = []
    for eta in action_config.etas:
        channels = [ch.with_eta(eta) for ch in scheme.channels]
        series = await asyncio.to_thread(integrate_feedback_me_jump, density_matrix(psi), scheme, channels, cfg)
        writer.write_timeseries(
            timeseries_rows(series.times, series.states, [psi] * len(series.times), cs),
            name=f"timeseries_eta_{eta:g}.csv",
        )
        entry = {"eta": eta, **series_summary(series, psi, cs)}
        coherence = [logical_expectation(rho, xbar) for rho in series.states]
        try:
            fit = fit_exponential(series.times, coherence)
            entry.update(rate=fit.rate, amplitude=fit.amplitude, r_squared=fit.r_squared)
        except FitError as e:
            logger.warning(f"No decay fit for eta={eta}: {e}")
            entry.update(rate=None, amplitude=None, r_squared=None, fit_error=str(e))
        fits.append(entry)
        await log_scenario_activity(
            action_config.scenario, f"eta={eta:g}: coherence decay rate {entry['rate']}", data=entry, run_dir=writer.run_dir
        )

    ordered = [entry["rate"] for entry in sorted(fits, key=lambda e: e["eta"]) if entry["rate"] is not None]
    summary = {
        "scenario": action_config.scenario,
        "stabilizer": str(scheme.stabilizer),
        "fits": fits,
        "rates_decrease_with_eta": all(a > b for a, b in zip(ordered, ordered[1:])),
    }
    writer.write_summary(summary)
    return summary


@activity_logger()
async def action_encoded_gate(action_config: EncodedGateConfig):
    """Encoded logical rotation generated by a logical Pauli word while correction stays on."""
    logger.info(f"Executing 'encoded-gate' scenario: exp(-i {action_config.angle:.4g} {action_config.gate})...")
    writer = RunResultsWriter(action_config.run_dir)
    scheme = certify_schemes(action_config, writer)[action_config.mode]
    cs = build_codespace(scheme.stabilizer)
    generator = encoded_operators(scheme.stabilizer).logical(action_config.gate)
    H_enc = (action_config.angle / action_config.t_final) * generator
    psi = encode(parse_logical_state(action_config.logical_state_spec, cs.n_logical), cs)
    cfg = action_config.trajectory_config()

    series = await asyncio.to_thread(
        FEEDBACK_INTEGRATORS[scheme.mode], density_matrix(psi), scheme, None, cfg, hamiltonian=H_enc
    )
    targets = [expm(-1j * H_enc * t) @ psi for t in series.times]
    writer.write_timeseries(timeseries_rows(series.times, series.states, targets, cs))
    summary = {
        "scenario": action_config.scenario,
        "stabilizer": str(scheme.stabilizer),
        "gate": action_config.gate,
        "angle": action_config.angle,
        "gate_fidelity": state_fidelity(series.final_state, targets[-1]),
        "final_leakage": codespace_leakage(series.final_state, cs),
        "final_purity": purity(series.final_state),
    }
    writer.write_summary(summary)
    return summary


@activity_logger()
async def action_pulse_vs_driving(action_config: PulseVsDrivingConfig):
    """Periodic stabilizer pulses compared with constant driving under the same errors."""
    logger.info(f"Executing 'pulse-vs-driving' scenario with period {action_config.period}...")
    writer = RunResultsWriter(action_config.run_dir)
    schemes = certify_schemes(action_config, writer)
    pulsed, driven = schemes["pulse"], schemes["jump"]
    cs = build_codespace(pulsed.stabilizer)
    psi = encode(parse_logical_state(action_config.logical_state_spec, cs.n_logical), cs)
    cfg = action_config.trajectory_config()
    references = None

    results = {}
    for label, scheme in (("pulse", pulsed), ("driving", driven)):
        series = await asyncio.to_thread(FEEDBACK_INTEGRATORS[scheme.mode], density_matrix(psi), scheme, None, cfg)
        references = references or [psi] * len(series.times)
        writer.write_timeseries(timeseries_rows(series.times, series.states, references, cs), name=f"timeseries_{label}.csv")
        results[label] = series_summary(series, psi, cs)
        if cfg.n_traj:
            results[label].update(await unravel(scheme, psi, cfg, series, cs, writer, f"trajectories_{label}.csv"))

    propagator = pulse_period_propagator(pulsed)
    summary = {
        "scenario": action_config.scenario,
        "stabilizer": str(pulsed.stabilizer),
        "period": action_config.period,
        # no-jump propagator over one period is this scalar times the identity
        "period_scalar": complex(np.trace(propagator) / propagator.shape[0]),
        "fidelity_gap": results["driving"]["final_fidelity"] - results["pulse"]["final_fidelity"],
        **results,
    }
    writer.write_summary(summary)
    return summary


@activity_logger()
async def action_large_gamma_limit(action_config: LargeGammaLimitConfig):
    """Finite-offset jump schemes converging to diffusive feedback as the offset grows."""
    logger.info(f"Executing 'large-gamma-limit' scenario over gammas {action_config.gammas}...")
    writer = RunResultsWriter(action_config.run_dir)
    target_scheme = certify_schemes(action_config, writer)["diffusive"]
    S = target_scheme.stabilizer
    cs = build_codespace(S)
    psi = ket(action_config.physical_state)
    cfg = action_config.trajectory_config()

    target = await asyncio.to_thread(integrate_feedback_me_diffusive, density_matrix(psi), target_scheme, None, cfg)
    references = [psi] * len(target.times)
    writer.write_timeseries(timeseries_rows(target.times, target.states, references, cs), name="timeseries_diffusive.csv")

    comparisons = []
    for gamma in sorted(action_config.gammas):
        scheme = large_gamma_scheme(action_config.resolved_channels(), S, gamma)
        series = await asyncio.to_thread(integrate_feedback_me_jump, density_matrix(psi), scheme, None, cfg)
        writer.write_timeseries(
            timeseries_rows(series.times, series.states, references, cs), name=f"timeseries_gamma_{gamma:g}.csv"
        )
        comparisons.append({
            "gamma": gamma,
            "final_trace_distance": trace_distance(series.final_state, target.final_state),
            "max_trace_distance": max(trace_distance(a, b) for a, b in zip(series.states, target.states)),
        })
        logger.info(f"gamma={gamma:g}: trace distance to the diffusive limit {comparisons[-1]['final_trace_distance']:.3e}")

    distances = [entry["final_trace_distance"] for entry in comparisons]
    summary = {
        "scenario": action_config.scenario,
        "stabilizer": str(S),
        "comparisons": comparisons,
        "converges_monotonically": all(a > b for a, b in zip(distances, distances[1:])),
    }
    writer.write_summary(summary)
    return summary
