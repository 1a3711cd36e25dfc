import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from afcpol.detection import ChannelParams, CountRecord, run_counts
from afcpol.memory import MemoryParams
from afcpol.polarization import (LABELS, DensityMatrix2, PureQubit, analyzer_setting,
                                 canonical_state, fidelity, hwp_scan_setting,
                                 projection_probability, trace_distance)
from afcpol.tomography import (TomographyError, dark_subtract, fidelity_with_error, fit_fringe,
                               linear_inversion, loglikelihood, max_likelihood, reconstruct)

SETTINGS = [analyzer_setting(l) for l in LABELS]


def ideal_records(state, shots=10**6, scale=1.0):
    return [CountRecord("x", s, shots, int(round(shots * scale * projection_probability(state, s))))
            for s in SETTINGS]


@pytest.mark.parametrize("label", LABELS)
def test_exact_counts_reconstruct_exactly(label):
    target = canonical_state(label)
    recs = ideal_records(target)
    assert fidelity(target, linear_inversion(recs).matrix) == pytest.approx(1, abs=1e-9)
    assert fidelity(target, max_likelihood(recs).rho) == pytest.approx(1, abs=1e-6)


def test_mixed_state_reconstruction():
    rho = DensityMatrix2.from_bloch([0.3, -0.2, 0.5])
    recs = ideal_records(rho, shots=10**8)
    assert trace_distance(max_likelihood(recs).rho, rho) < 1e-6


@given(st.lists(st.integers(0, 2000), min_size=6, max_size=6).filter(lambda c: sum(c) > 0))
def test_mle_is_always_physical(clicks):
    recs = [CountRecord("x", s, 10**5, c) for s, c in zip(SETTINGS, clicks)]
    rho = max_likelihood(recs).rho.entries
    assert np.linalg.eigvalsh(rho)[0] >= -1e-10
    assert np.trace(rho).real == pytest.approx(1, abs=1e-10)


@given(st.lists(st.integers(1, 2000), min_size=6, max_size=6))
def test_mle_likelihood_beats_projected_linear_estimate(clicks):
    recs = [CountRecord("x", s, 10**5, c) for s, c in zip(SETTINGS, clicks)]
    mle = max_likelihood(recs)
    start = linear_inversion(recs).psd_projection()
    assert mle.loglik >= loglikelihood(recs, start) - 1e-9


def test_mle_agrees_with_linear_inversion_when_physical():
    recs = run_counts(["D"], SETTINGS, 0.4, MemoryParams(), ChannelParams(), seed=2)
    lin = linear_inversion(recs)
    assert lin.physical
    assert trace_distance(DensityMatrix2(lin.matrix), max_likelihood(recs).rho) < 0.02


def test_missing_projector_is_reported():
    with pytest.raises(TomographyError, match="L"):
        linear_inversion(ideal_records(canonical_state("H"))[:5])


def test_zero_counts_rejected():
    with pytest.raises(TomographyError):
        max_likelihood([CountRecord("x", s, 100, 0) for s in SETTINGS])


@given(st.integers(0, 100), st.integers(0, 100))
def test_dark_subtraction_is_clamped(clicks, dark):
    res = dark_subtract(CountRecord("x", SETTINGS[0], 100, clicks, dark))
    assert res.rate >= 0
    assert res.clamped == (clicks < dark)


def test_reconstruct_fills_fidelities():
    recs = run_counts(["R"], SETTINGS, 0.4, MemoryParams(), ChannelParams(), seed=4)
    r = reconstruct(recs, "R", resamples=100, seed=1)
    assert 0.85 < r.fidelity_raw < 0.97
    assert 0 < r.fidelity_err < 0.05
    assert r.fidelity_dark_subtracted >= r.fidelity_raw - 0.01
    d = r.to_dict()
    assert np.allclose(DensityMatrix2.from_dict(d["rho"]).entries, r.rho.entries)


def test_bootstrap_requires_enough_resamples():
    r = max_likelihood(ideal_records(canonical_state("H"), shots=1000))
    with pytest.raises(ValueError):
        fidelity_with_error(r, canonical_state("H"), resamples=10)


def _fringe_records(vis, phase, angles, shots=10**7, amp=0.02):
    p = 0.5 * amp * (1 + vis * np.cos(4 * angles - phase))
    return [CountRecord("x", hwp_scan_setting(a), shots, int(round(shots * q))) for a, q in zip(angles, p)]


@given(st.floats(0.05, 0.99), st.floats(-3, 3))
def test_fringe_fit_recovers_parameters(vis, phase):
    angles = np.linspace(0, math.pi / 2, 37)
    fit = fit_fringe(angles, _fringe_records(vis, phase, angles), resamples=20)
    assert fit.visibility == pytest.approx(vis, abs=2e-3)
    assert math.cos(fit.phase_rad - phase) == pytest.approx(1, abs=1e-3)


def test_fringe_fit_is_invariant_under_period_shift():
    angles = np.linspace(0, math.pi / 2, 37)
    recs = _fringe_records(0.7, 0.4, angles)
    a = fit_fringe(angles, recs, resamples=20)
    b = fit_fringe(angles + math.pi / 2, recs, resamples=20)
    assert a.visibility == pytest.approx(b.visibility, abs=1e-12)
    assert math.cos(a.phase_rad - b.phase_rad) == pytest.approx(1, abs=1e-12)


def test_fringe_fit_validation():
    angles = np.linspace(0, math.pi / 2, 37)
    recs = _fringe_records(0.5, 0, angles)
    with pytest.raises(ValueError):
        fit_fringe(angles[:5], recs[:5])
    with pytest.raises(ValueError):
        fit_fringe(np.linspace(0, 0.3, 37), recs)
    with pytest.raises(ValueError):
        fit_fringe(angles[:-1], recs)


def test_generic_state_fidelity_is_well_defined():
    q = PureQubit.from_vector([0.6, 0.8j])
    assert fidelity(q, max_likelihood(ideal_records(q)).rho) == pytest.approx(1, abs=1e-6)
