import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from afcpol.polarization import (LABELS, DensityMatrix2, InvalidStateError, MeasurementSetting,
                                 Port, PureQubit, WaveplateSetting, analyzer_setting,
                                 analyzer_unitary, canonical_state, fidelity, hwp_scan_setting,
                                 jones_matrix, prepared_state, projection_probability,
                                 trace_distance)

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)
components = st.floats(-1, 1, allow_nan=False)


@st.composite
def qubits(draw):
    v = np.array([draw(components) + 1j * draw(components), draw(components) + 1j * draw(components)])
    if np.linalg.norm(v) < 1e-3:
        v = np.array([1, 0])
    return PureQubit.from_vector(v)


@st.composite
def settings_(draw):
    plates = []
    if draw(st.booleans()):
        plates.append(WaveplateSetting.qwp(draw(angles)))
    if draw(st.booleans()):
        plates.append(WaveplateSetting.hwp(draw(angles)))
    return MeasurementSetting(tuple(plates), draw(st.sampled_from(list(Port))))


def test_canonical_states_are_normalized_and_mutually_unbiased():
    for a in LABELS:
        for b in LABELS:
            o = canonical_state(a).overlap(canonical_state(b))
            pair = {a, b}
            if a == b:
                assert o == pytest.approx(1)
            elif pair in ({"H", "V"}, {"D", "A"}, {"R", "L"}):
                assert o == pytest.approx(0, abs=1e-15)
            else:
                assert o == pytest.approx(0.5)


def test_invalid_inputs_rejected():
    with pytest.raises(InvalidStateError):
        PureQubit(1, 1)
    with pytest.raises(InvalidStateError):
        PureQubit.from_vector([0, 0])
    with pytest.raises(ValueError):
        canonical_state("X")
    with pytest.raises(InvalidStateError):
        DensityMatrix2(np.diag([1.2, -0.2]))
    with pytest.raises(InvalidStateError):
        DensityMatrix2(np.array([[0.5, 0.5], [0.4, 0.5]]))
    with pytest.raises(InvalidStateError):
        DensityMatrix2(np.eye(2))
    with pytest.raises(ValueError):
        MeasurementSetting((WaveplateSetting.hwp(0), WaveplateSetting.qwp(0)))


@given(settings_())
def test_analyzer_is_unitary(setting):
    U = analyzer_unitary(setting)
    assert np.allclose(U.conj().T @ U, np.eye(2), atol=1e-12)


@given(angles)
def test_half_wave_plate_twice_is_identity_up_to_phase(theta):
    J = jones_matrix(WaveplateSetting.hwp(theta))
    JJ = J @ J
    assert np.allclose(JJ / JJ[0, 0], np.eye(2), atol=1e-12)
    assert abs(abs(JJ[0, 0]) - 1) < 1e-12


@given(angles)
def test_half_wave_plate_rotates_linear_polarization_by_twice_angle(theta):
    out = PureQubit.from_vector(jones_matrix(WaveplateSetting.hwp(theta)) @ np.array([1, 0]))
    expected = PureQubit.from_vector([math.cos(2 * theta), math.sin(2 * theta)])
    assert out.equivalent(expected)


@given(qubits(), settings_())
def test_ports_are_complementary(q, setting):
    total = projection_probability(q, setting) + projection_probability(q, setting.flipped())
    assert total == pytest.approx(1, abs=1e-12)


@given(qubits(), settings_())
def test_analyzed_state_is_transmitted_with_certainty(q, setting):
    target = setting.analyzed_state()
    assert projection_probability(target, setting) == pytest.approx(1, abs=1e-12)
    assert projection_probability(q, setting) == pytest.approx(target.overlap(q), abs=1e-12)


@given(qubits())
def test_pure_state_has_unit_self_fidelity(q):
    assert fidelity(q, q.density_matrix()) == pytest.approx(1, abs=1e-12)
    assert q.density_matrix().purity() == pytest.approx(1, abs=1e-12)


def test_haar_random_states_self_fidelity():
    rng = np.random.default_rng(3)
    for _ in range(200):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        q = PureQubit.from_vector(v * np.exp(1j * rng.uniform(0, 2 * math.pi)))
        assert fidelity(q, q.density_matrix()) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("label", LABELS)
def test_tomography_settings_project_onto_their_state(label):
    s = analyzer_setting(label)
    assert s.analyzed_state().equivalent(canonical_state(label))
    assert projection_probability(canonical_state(label), s) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("label", LABELS)
def test_prepared_states_match_canonical(label):
    assert prepared_state(label).equivalent(canonical_state(label))


def test_qwp_error_leaves_hwp_fringe_on_circular_input():
    def visibility(q):
        p = [projection_probability(q, hwp_scan_setting(t)) for t in np.linspace(0, math.pi / 2, 91)]
        return (max(p) - min(p)) / (max(p) + min(p))
    assert visibility(prepared_state("R")) < 1e-12
    assert visibility(prepared_state("R", qwp_error=math.radians(2))) > 0.05


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 2 * math.pi))
def test_bloch_round_trip_and_trace_distance(r, u, phi):
    z = 2 * u - 1
    rad = math.sqrt(1 - z * z)
    vec = r * np.array([rad * math.cos(phi), rad * math.sin(phi), z])
    rho = DensityMatrix2.from_bloch(vec)
    assert np.allclose(rho.bloch, vec, atol=1e-12)
    mixed = DensityMatrix2.maximally_mixed()
    assert trace_distance(rho, mixed) == pytest.approx(np.linalg.norm(vec) / 2, abs=1e-12)


def test_density_matrix_dict_round_trip():
    rho = canonical_state("R").density_matrix()
    back = DensityMatrix2.from_dict(rho.to_dict())
    assert np.array_equal(back.entries, rho.entries)


def test_waveplate_angle_is_periodic():
    assert WaveplateSetting.hwp(math.pi + 0.3).angle == pytest.approx(0.3)
