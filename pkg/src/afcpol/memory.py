"""Dual-rail atomic-frequency-comb (AFC) memory models.

Two descriptions of the same device:

* a parametric channel acting on the polarization qubit: each rail has its own
  storage-and-retrieval efficiency, and the interferometer adds a
  quasi-static inter-rail phase drawn once per shot;
* a spectral comb filter acting on the pulse envelope.  Light absorbed by a
  comb with tooth spacing ``Delta`` rephases and is re-emitted as an echo near
  ``1/Delta``.

The comb's complex optical depth is built from Faddeeva functions.  Its real
part is a sum of Gaussian teeth, and its imaginary part is the matching
Kramers-Kronig dispersion, so the impulse response is causal.  The amplitude
transmission has ``|t| = exp(-OD(f)/2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import math

import numpy as np
from scipy.signal import find_peaks
from scipy.special import wofz

from .polarization import PureQubit

_FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


class BandwidthError(ValueError):
    """Pulse/comb/grid combination cannot be simulated faithfully."""


def coherence_factor(sigma: float) -> float:
    """Shot-averaged inter-rail coherence exp(-sigma^2/2) for Gaussian phase noise."""
    return math.exp(-0.5 * sigma**2)


def sigma_for_coherence(c: float) -> float:
    if not 0 < c <= 1:
        raise ValueError(f"coherence must lie in (0, 1], got {c!r}")
    return math.sqrt(-2.0 * math.log(c))


@dataclass(frozen=True)
class MemoryParams:
    comb_spacing_hz: float = 2e6
    eta_mem_h: float = 0.10
    eta_mem_v: float = 0.10
    phase_noise_sigma_rad: float = field(default_factory=lambda: sigma_for_coherence(0.83))
    n_teeth: int = 4
    tooth_fwhm_hz: float = 150e3
    peak_od: float = 2.0

    def __post_init__(self):
        if not self.comb_spacing_hz > 0:
            raise ValueError("comb_spacing_hz must be positive")
        for name in ("eta_mem_h", "eta_mem_v"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if self.phase_noise_sigma_rad < 0:
            raise ValueError("phase_noise_sigma_rad must be nonnegative")
        if int(self.n_teeth) != self.n_teeth or self.n_teeth < 1:
            raise ValueError("n_teeth must be a positive integer")
        if not 0 < self.tooth_fwhm_hz < self.comb_spacing_hz:
            raise ValueError("tooth_fwhm_hz must be positive and below comb_spacing_hz")
        if self.peak_od < 0:
            raise ValueError("peak_od must be nonnegative")

    @property
    def storage_time_s(self) -> float:
        return 1.0 / self.comb_spacing_hz

    @property
    def tooth_centers_hz(self) -> np.ndarray:
        return (np.arange(self.n_teeth) - (self.n_teeth - 1) / 2.0) * self.comb_spacing_hz

    @property
    def window_hz(self) -> float:
        """Width of the transparency window holding the teeth."""
        return self.n_teeth * self.comb_spacing_hz

    def with_(self, **changes) -> "MemoryParams":
        return replace(self, **changes)


def store_and_retrieve_parametric(qubit: PureQubit, params: MemoryParams, phase_draw: float):
    """Amplitudes leaving the dual-rail memory for one shot.

    Returns the unnormalized ``(out_h, out_v)`` pair and the survival
    probability ``|out_h|^2 + |out_v|^2``.
    """
    out = np.array([
        qubit.a_h * math.sqrt(params.eta_mem_h),
        qubit.a_v * math.sqrt(params.eta_mem_v) * np.exp(1j * phase_draw),
    ])
    return out, float(np.sum(np.abs(out) ** 2))


def comb_optical_depth(params: MemoryParams, freq_hz) -> np.ndarray:
    """Complex optical depth: Gaussian absorption teeth plus their dispersion."""
    freq_hz = np.asarray(freq_hz, dtype=float)
    scale = math.sqrt(2.0) * params.tooth_fwhm_hz * _FWHM_TO_SIGMA
    d = np.zeros(freq_hz.shape, dtype=complex)
    if params.peak_od == 0:
        return d
    for fc in params.tooth_centers_hz:
        # conj() selects the causal branch for numpy's e^{-2 pi i f t} forward FFT.
        d += np.conj(wofz((freq_hz - fc) / scale))
    return params.peak_od * d


def comb_transfer_function(params: MemoryParams, freq_grid) -> np.ndarray:
    """Amplitude transmission of the comb on ``freq_grid`` (Hz, relative to comb center)."""
    f = np.sort(np.asarray(freq_grid, dtype=float))
    if f.size < 2:
        raise BandwidthError("frequency grid needs at least two points")
    df = float(np.max(np.diff(f)))
    if df > params.tooth_fwhm_hz / 10:
        raise BandwidthError(
            f"frequency resolution {df:.4g} Hz is coarser than tooth_fwhm/10 = "
            f"{params.tooth_fwhm_hz / 10:.4g} Hz; lengthen the time grid"
        )
    half = params.window_hz / 2
    if f[0] > -half or f[-1] < half:
        raise BandwidthError(
            f"frequency grid [{f[0]:.4g}, {f[-1]:.4g}] Hz does not cover the comb window +/-{half:.4g} Hz"
        )
    return np.exp(-0.5 * comb_optical_depth(params, freq_grid))


@dataclass(frozen=True, eq=False)
class PulseShape:
    fwhm_s: float
    center_s: float
    grid_dt_s: float
    samples: np.ndarray
    t0_s: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return self.t0_s + self.grid_dt_s * np.arange(len(self.samples))

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    def energy(self) -> float:
        return float(np.sum(self.intensity) * self.grid_dt_s)

    def scaled(self, alpha: complex) -> "PulseShape":
        return replace(self, samples=alpha * np.asarray(self.samples))


def grid_size(params: MemoryParams, dt_s: float, min_span_s: float = 0.0) -> int:
    """Power-of-two sample count long enough for two echoes and tooth resolution."""
    need = max(4.0 / params.comb_spacing_hz, 10.0 / params.tooth_fwhm_hz, min_span_s) / dt_s
    return 1 << int(math.ceil(math.log2(need)))


def gaussian_pulse(fwhm_s: float, dt_s: float, n_samples: int, center_s: float = 0.0,
                   lead_s: float | None = None) -> PulseShape:
    """Gaussian envelope whose intensity has FWHM ``fwhm_s``.

    ``lead_s`` is the time between the first sample and the pulse center
    (default: 16 FWHM, so boundary samples are negligible).
    """
    if lead_s is None:
        lead_s = 16 * fwhm_s
    t0 = center_s - lead_s
    t = t0 + dt_s * np.arange(n_samples)
    env = np.exp(-2.0 * math.log(2.0) * ((t - center_s) / fwhm_s) ** 2).astype(complex)
    peak = np.max(np.abs(env))
    if abs(env[0]) > 1e-6 * peak or abs(env[-1]) > 1e-6 * peak:
        raise BandwidthError("time grid too short: pulse does not vanish at the grid edges")
    return PulseShape(fwhm_s, center_s, dt_s, env, t0)


@dataclass(frozen=True)
class EchoResult:
    output: PulseShape
    echo_delay_s: float
    echo_efficiency: float


def propagate_pulse(pulse: PulseShape, params: MemoryParams) -> EchoResult:
    """Filter ``pulse`` through the comb and locate the first echo.

    The echo is the highest local maximum of the output intensity in the window
    ``(center + max(2 fwhm, t_S/2), center + 3 t_S/2)``.  If there is none (for
    example an empty pit), ``echo_delay_s`` is NaN and the efficiency is 0.
    Efficiency is the output energy within ``t_S +/- fwhm`` over the input energy.
    """
    bandwidth = 0.44 / pulse.fwhm_s
    if bandwidth >= params.window_hz:
        raise BandwidthError(
            f"pulse bandwidth {bandwidth:.4g} Hz exceeds the comb span {params.window_hz:.4g} Hz; "
            "use a longer pulse, more teeth or a wider comb spacing"
        )
    n = len(pulse.samples)
    freq = np.fft.fftfreq(n, pulse.grid_dt_s)
    t_f = comb_transfer_function(params, freq)
    out = np.fft.ifft(np.fft.fft(pulse.samples) * t_f)
    output = replace(pulse, samples=out)

    t = pulse.times - pulse.center_s
    t_s = params.storage_time_s
    intensity = np.abs(out) ** 2
    lo = max(2 * pulse.fwhm_s, 0.5 * t_s)
    in_window = (t > lo) & (t < 1.5 * t_s)
    idx = np.flatnonzero(in_window)
    delay = float("nan")
    efficiency = 0.0
    if idx.size >= 3 and params.peak_od > 0:
        peaks, _ = find_peaks(intensity[idx])
        if peaks.size:
            best = idx[peaks[np.argmax(intensity[idx][peaks])]]
            delay = float(t[best])
            gate = np.abs(t - t_s) <= pulse.fwhm_s
            efficiency = float(np.sum(intensity[gate]) / np.sum(np.abs(pulse.samples) ** 2))
    return EchoResult(output, delay, efficiency)


def default_pulse(params: MemoryParams, fwhm_s: float = 140e-9, dt_s: float = 2e-9) -> PulseShape:
    return gaussian_pulse(fwhm_s, dt_s, grid_size(params, dt_s))
