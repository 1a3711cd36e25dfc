import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from afcpol.detection import (ChannelParams, CountRecord, build_histogram, cell_rng,
                              click_probability, detection_probability_off_resonance,
                              expected_histogram, mean_click_probability,
                              mu_from_detection_probability, run_counts)
from afcpol.memory import MemoryParams, default_pulse, propagate_pulse
from afcpol.polarization import LABELS, analyzer_setting, canonical_state, hwp_scan_setting

MEM = MemoryParams()
CH = ChannelParams()
QUIET_MEM = MEM.with_(phase_noise_sigma_rad=0.0)
QUIET_CH = CH.with_(dark_prob_per_window=0.0)


@given(st.floats(1e-4, 30))
def test_mu_round_trip(mu):
    p = detection_probability_off_resonance(mu, CH)
    assert mu_from_detection_probability(p, CH) == pytest.approx(mu, rel=1e-9)


def test_nd_filter_above_threshold():
    assert CH.transmission(0.4) == CH.eta_t
    assert CH.transmission(3.5) == pytest.approx(CH.eta_t * CH.nd_attenuation)


@given(st.sampled_from(LABELS), st.sampled_from(LABELS), st.floats(-3, 3))
def test_no_signal_floor_is_dark_probability(inp, setting, phi):
    p = click_probability(canonical_state(inp), 0.0, MEM, CH, analyzer_setting(setting), phi)
    assert p == pytest.approx(CH.dark_prob_per_window, abs=1e-15)


@pytest.mark.parametrize("inp,setting", [("H", "V"), ("D", "A"), ("R", "L")])
def test_orthogonal_projection_never_clicks_without_noise(inp, setting):
    p = mean_click_probability(canonical_state(inp), 0.4, QUIET_MEM, QUIET_CH, analyzer_setting(setting))
    assert p < 1e-15


def test_fringe_visibility_equals_coherence_factor():
    # weak light, no dark counts: visibility is the mean inter-rail coherence
    angles = np.linspace(0, math.pi / 2, 181)
    p = np.array([mean_click_probability(canonical_state("D"), 1e-3, MEM, QUIET_CH, hwp_scan_setting(a))
                  for a in angles])
    vis = (p.max() - p.min()) / (p.max() + p.min())
    assert vis == pytest.approx(0.83, abs=1e-4)


def test_mean_click_probability_matches_monte_carlo_average():
    q = canonical_state("D")
    s = analyzer_setting("D")
    rng = np.random.default_rng(1)
    phases = rng.normal(0, MEM.phase_noise_sigma_rad, 200_000)
    mc = np.mean([click_probability(q, 0.4, MEM, CH, s, ph) for ph in phases[:20000]])
    assert mean_click_probability(q, 0.4, MEM, CH, s) == pytest.approx(mc, rel=0.01)


def test_run_counts_is_deterministic_per_seed():
    a = run_counts(["D", "R"], [analyzer_setting(l) for l in LABELS], 0.4, MEM, CH, seed=5)
    b = run_counts(["D", "R"], [analyzer_setting(l) for l in LABELS], 0.4, MEM, CH, seed=5)
    c = run_counts(["D", "R"], [analyzer_setting(l) for l in LABELS], 0.4, MEM, CH, seed=6)
    assert [r.clicks for r in a] == [r.clicks for r in b]
    assert [r.clicks for r in a] != [r.clicks for r in c]


def test_cell_streams_are_independent_of_order():
    settings = [analyzer_setting(l) for l in LABELS]
    full = run_counts(["H", "D"], settings, 0.4, MEM, CH, seed=9)
    first = run_counts(["H"], settings, 0.4, MEM, CH, seed=9)
    assert [r.clicks for r in full[:6]] == [r.clicks for r in first]
    assert cell_rng(1, 2).random() != cell_rng(1, 3).random()


def test_sampled_counts_follow_binomial_statistics():
    settings = [analyzer_setting(l) for l in LABELS]
    recs = run_counts(list(LABELS), settings, 0.4, MEM, CH, seed=11)
    chi2 = 0.0
    for r in recs:
        p = mean_click_probability(canonical_state(r.input_label), 0.4, MEM, CH, r.setting)
        chi2 += (r.clicks - r.shots * p) ** 2 / (r.shots * p * (1 - p))
    assert chi2 < stats.chi2.ppf(0.9999, len(recs))
    assert chi2 > stats.chi2.ppf(0.0001, len(recs))


def test_analytic_mode_rounds_expected_counts():
    recs = run_counts(["V"], [analyzer_setting("V")], 0.4, MEM, CH, seed=0, analytic=True)
    p = mean_click_probability(canonical_state("V"), 0.4, MEM, CH, analyzer_setting("V"))
    assert recs[0].clicks == round(p * CH.shots)


def test_count_record_validation():
    with pytest.raises(ValueError):
        CountRecord("H", analyzer_setting("H"), 10, 11)
    with pytest.raises(ValueError):
        ChannelParams(shots=0)


def test_histogram_expectation_and_sampling():
    pulse = default_pulse(MEM)
    res = propagate_pulse(pulse, MEM.with_(peak_od=0.0))
    t0, lam = expected_histogram(res.output, 0.4, CH, pulse.energy())
    signal = lam.sum() - len(lam) * CH.shots * CH.dark_prob_per_window * 10e-9 / CH.window_s
    assert signal == pytest.approx(CH.shots * 0.4 * CH.eta_t * CH.eta_d, rel=1e-6)
    h1 = build_histogram(res.output, 0.4, CH, seed=3, input_energy=pulse.energy())
    h2 = build_histogram(res.output, 0.4, CH, seed=3, input_energy=pulse.energy())
    assert np.array_equal(h1.counts, h2.counts)
    assert t0 == pytest.approx(-500e-9)
    assert h1.window_sum(-150e-9, 150e-9) == pytest.approx(h1.window_sum(-150e-9, 150e-9, expected=True), rel=0.05)
