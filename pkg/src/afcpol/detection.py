"""Weak-coherent-state detection: losses, dark counts, click sampling, histograms."""
from __future__ import annotations

from dataclasses import dataclass, replace
import math

import numpy as np

from .memory import MemoryParams, PulseShape, store_and_retrieve_parametric
from .polarization import (MeasurementSetting, Port, PureQubit, analyzer_unitary,
                           canonical_state, projection_probability)


@dataclass(frozen=True)
class ChannelParams:
    eta_t: float = 0.40
    eta_d: float = 0.50
    dark_prob_per_window: float = 5e-5
    window_s: float = 400e-9
    rep_rate_hz: float = 5e4
    shots: int = 100_000
    # Extra neutral-density attenuation in front of the detector above nd_threshold_mu.
    nd_attenuation: float = 0.1
    nd_threshold_mu: float = 1.0

    def __post_init__(self):
        for name in ("eta_t", "eta_d", "nd_attenuation"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if not 0.0 <= self.dark_prob_per_window <= 0.1:
            raise ValueError("dark_prob_per_window must lie in [0, 0.1]")
        if int(self.shots) != self.shots or self.shots < 1:
            raise ValueError(f"shots must be a positive integer, got {self.shots!r}")
        if self.window_s <= 0 or self.rep_rate_hz <= 0:
            raise ValueError("window_s and rep_rate_hz must be positive")

    def transmission(self, mu: float) -> float:
        """Memory-to-detector transmission, including the ND filter at high mu."""
        if mu > self.nd_threshold_mu:
            return self.eta_t * self.nd_attenuation
        return self.eta_t

    def with_(self, **changes) -> "ChannelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class CountRecord:
    input_label: str
    setting: MeasurementSetting
    shots: int
    clicks: int
    dark_reference_clicks: int = 0

    def __post_init__(self):
        if not 0 <= self.clicks <= self.shots:
            raise ValueError(f"clicks={self.clicks} outside [0, shots={self.shots}]")
        if not 0 <= self.dark_reference_clicks <= self.shots:
            raise ValueError("dark_reference_clicks outside [0, shots]")

    @property
    def rate(self) -> float:
        return self.clicks / self.shots

    @property
    def dark_rate(self) -> float:
        return self.dark_reference_clicks / self.shots


def detection_probability_off_resonance(mu: float, ch: ChannelParams) -> float:
    """Click probability with the laser detuned from the atoms (no memory, no dark counts)."""
    return -math.expm1(-mu * ch.eta_t * ch.eta_d)


def mu_from_detection_probability(p_det: float, ch: ChannelParams) -> float:
    """Back-propagate an off-resonance click probability to the mean photon number before the memory."""
    if not 0.0 <= p_det < 1.0:
        raise ValueError(f"p_det must lie in [0, 1), got {p_det!r}")
    return -math.log1p(-p_det) / (ch.eta_t * ch.eta_d)


def _port_amplitude_sq(qubit: PureQubit, mem: MemoryParams, setting: MeasurementSetting, phases):
    """|amplitude|^2 reaching the detector port, i.e. survival * projection, per phase draw."""
    U = analyzer_unitary(setting)
    row = U[0 if setting.port is Port.TRANSMITTED else 1]
    out_h = qubit.a_h * math.sqrt(mem.eta_mem_h)
    out_v = qubit.a_v * math.sqrt(mem.eta_mem_v) * np.exp(1j * np.asarray(phases, dtype=float))
    return np.abs(row[0] * out_h + row[1] * out_v) ** 2


def click_probability(qubit: PureQubit, mu: float, mem: MemoryParams, ch: ChannelParams,
                      setting: MeasurementSetting, phase_draw: float) -> float:
    pair, survival = store_and_retrieve_parametric(qubit, mem, phase_draw)
    if survival > 0:
        q = projection_probability(PureQubit.from_vector(pair), setting)
    else:
        q = 0.0
    x = mu * ch.transmission(mu) * ch.eta_d * survival * q
    p = 1.0 - (1.0 - ch.dark_prob_per_window) * math.exp(-x)
    return min(max(p, 0.0), 1.0)


def _resolve_inputs(inputs):
    out = []
    for i, item in enumerate(inputs):
        if isinstance(item, str):
            out.append((item, canonical_state(item)))
        elif isinstance(item, PureQubit):
            out.append((f"psi{i}", item))
        else:
            label, qubit = item
            out.append((str(label), qubit))
    return out


def cell_rng(seed: int, *index: int) -> np.random.Generator:
    """Independent PCG64 substream for one simulation cell."""
    return np.random.default_rng([int(seed), *[int(i) for i in index]])


def sample_cell(qubit: PureQubit, setting: MeasurementSetting, mu: float, mem: MemoryParams,
                ch: ChannelParams, rng: np.random.Generator) -> tuple[int, int]:
    """Signal clicks and dark-reference clicks for one (input, setting) cell."""
    shots = int(ch.shots)
    if mem.phase_noise_sigma_rad > 0:
        phases = rng.normal(0.0, mem.phase_noise_sigma_rad, shots)
    else:
        phases = np.zeros(1)
    x = mu * ch.transmission(mu) * ch.eta_d * _port_amplitude_sq(qubit, mem, setting, phases)
    p = -np.expm1(-x) * (1.0 - ch.dark_prob_per_window) + ch.dark_prob_per_window
    if p.size == 1:
        clicks = int(rng.binomial(shots, float(p[0])))
    else:
        clicks = int(np.count_nonzero(rng.random(shots) < p))
    dark = int(rng.binomial(shots, ch.dark_prob_per_window))
    return clicks, dark


_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite_e.hermegauss(80)
_GH_WEIGHTS = _GH_WEIGHTS / math.sqrt(2 * math.pi)


def mean_click_probability(qubit: PureQubit, mu: float, mem: MemoryParams, ch: ChannelParams,
                           setting: MeasurementSetting) -> float:
    """Click probability averaged over the Gaussian inter-rail phase (Gauss-Hermite)."""
    phases = mem.phase_noise_sigma_rad * _GH_NODES if mem.phase_noise_sigma_rad > 0 else np.zeros(1)
    weights = _GH_WEIGHTS if mem.phase_noise_sigma_rad > 0 else np.ones(1)
    x = mu * ch.transmission(mu) * ch.eta_d * _port_amplitude_sq(qubit, mem, setting, phases)
    p = -np.expm1(-x) * (1.0 - ch.dark_prob_per_window) + ch.dark_prob_per_window
    return float(np.clip(np.sum(weights * p), 0.0, 1.0))


def run_counts(inputs, settings, mu: float, mem: MemoryParams, ch: ChannelParams,
               seed: int, analytic: bool = False) -> list[CountRecord]:
    """Simulate every (input, setting) cell; cell k uses substream (seed, k).

    ``inputs`` holds canonical labels, ``PureQubit`` objects or
    ``(label, PureQubit)`` pairs.  With ``analytic=True`` there is no sampling:
    clicks are the expected counts rounded to integers, and ``seed`` is unused.
    """
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    resolved = _resolve_inputs(inputs)
    settings = list(settings)
    records = []
    for i, (label, qubit) in enumerate(resolved):
        for j, setting in enumerate(settings):
            if analytic:
                p = mean_click_probability(qubit, mu, mem, ch, setting)
                clicks = int(round(p * ch.shots))
                dark = int(round(ch.dark_prob_per_window * ch.shots))
            else:
                rng = cell_rng(seed, i * len(settings) + j)
                clicks, dark = sample_cell(qubit, setting, mu, mem, ch, rng)
            records.append(CountRecord(label, setting, int(ch.shots), clicks, dark))
    return records


@dataclass(frozen=True, eq=False)
class TimeHistogram:
    bin_s: float
    t0_s: float
    counts: np.ndarray
    expected: np.ndarray | None = None

    def __post_init__(self):
        if self.bin_s <= 0:
            raise ValueError("bin_s must be positive")
        if np.any(np.asarray(self.counts) < 0):
            raise ValueError("histogram counts must be nonnegative")

    @property
    def bin_centers(self) -> np.ndarray:
        return self.t0_s + self.bin_s * (np.arange(len(self.counts)) + 0.5)

    def window_sum(self, lo: float, hi: float, expected: bool = False) -> float:
        c = self.bin_centers
        data = self.expected if expected else self.counts
        return float(np.sum(np.asarray(data)[(c >= lo) & (c <= hi)]))


def expected_histogram(pulse_out: PulseShape, mu: float, ch: ChannelParams, input_energy: float,
                       bin_s: float = 10e-9, t_range=(-500e-9, 1500e-9)) -> tuple[float, np.ndarray]:
    """Mean counts per bin over ``ch.shots`` pulses; times are relative to the input pulse center."""
    t_rel = pulse_out.times - pulse_out.center_s
    lo, hi = t_range
    n_bins = int(round((hi - lo) / bin_s))
    edges = lo + bin_s * np.arange(n_bins + 1)
    photons = pulse_out.intensity * pulse_out.grid_dt_s / input_energy
    per_bin, _ = np.histogram(t_rel, bins=edges, weights=photons)
    signal = mu * ch.transmission(mu) * ch.eta_d * per_bin
    dark = ch.dark_prob_per_window * bin_s / ch.window_s
    return lo, ch.shots * (signal + dark)


def build_histogram(pulse_out: PulseShape, mu: float, ch: ChannelParams, seed: int,
                    bin_s: float = 10e-9, input_energy: float | None = None,
                    t_range=(-500e-9, 1500e-9)) -> TimeHistogram:
    """Poisson-sampled arrival-time histogram accumulated over ``ch.shots`` pulses.

    ``input_energy`` normalizes the envelope so the input pulse carries ``mu``
    photons; it defaults to the energy of ``pulse_out`` itself.
    """
    if input_energy is None:
        input_energy = pulse_out.energy()
    t0, lam = expected_histogram(pulse_out, mu, ch, input_energy, bin_s, t_range)
    counts = np.random.default_rng(int(seed)).poisson(lam)
    return TimeHistogram(bin_s, t0, counts, lam)
