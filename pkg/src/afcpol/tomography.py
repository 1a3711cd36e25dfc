"""Single-qubit state tomography from click records, fringe fitting, dark subtraction."""
from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize

from .detection import CountRecord, cell_rng
from .polarization import (LABELS, DensityMatrix2, PureQubit, canonical_state, fidelity)

_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
# Stokes component -> (+1 eigenstate, -1 eigenstate)
_STOKES_PAIRS = {"X": ("D", "A"), "Y": ("R", "L"), "Z": ("H", "V")}


class TomographyError(ValueError):
    """Records cannot support the requested reconstruction."""


class MLEConvergenceError(RuntimeError):
    def __init__(self, message, best_rho, grad_norm):
        super().__init__(message)
        self.best_rho = best_rho
        self.grad_norm = grad_norm


class DarkCorrected(NamedTuple):
    rate: float
    clamped: bool


def dark_subtract(record: CountRecord) -> DarkCorrected:
    """Background-free click rate, clamped at zero (``clamped`` flags the clamp)."""
    raw = (record.clicks - record.dark_reference_clicks) / record.shots
    return DarkCorrected(max(raw, 0.0), raw < 0)


def _record_rate(rec: CountRecord, dark_subtracted: bool) -> float:
    return dark_subtract(rec).rate if dark_subtracted else rec.rate


def _label_of(rec: CountRecord) -> str | None:
    target = rec.setting.analyzed_state()
    for label in LABELS:
        if target.equivalent(canonical_state(label)):
            return label
    return None


def canonical_rates(records: Sequence[CountRecord], dark_subtracted: bool = False) -> dict:
    """Pooled click rate for each of the six canonical analyzer settings."""
    clicks = {}
    shots = {}
    for rec in records:
        label = _label_of(rec)
        if label is None:
            continue
        clicks[label] = clicks.get(label, 0.0) + _record_rate(rec, dark_subtracted) * rec.shots
        shots[label] = shots.get(label, 0) + rec.shots
    missing = [l for l in LABELS if l not in shots]
    if missing:
        raise TomographyError(f"missing analyzer settings for projector(s): {', '.join(missing)}")
    return {l: clicks[l] / shots[l] for l in LABELS}


@dataclass(frozen=True, eq=False)
class LinearEstimate:
    matrix: np.ndarray
    stokes: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    @property
    def physical(self) -> bool:
        return self.min_eigenvalue >= -1e-10

    def psd_projection(self) -> DensityMatrix2:
        """Clip negative eigenvalues and renormalize (used only as an MLE start)."""
        w, v = np.linalg.eigh(self.matrix)
        w = np.clip(w, 0, None)
        if w.sum() == 0:
            return DensityMatrix2.maximally_mixed()
        rho = (v * (w / w.sum())) @ v.conj().T
        return DensityMatrix2(0.5 * (rho + rho.conj().T))


def linear_inversion(records: Sequence[CountRecord], dark_subtracted: bool = False) -> LinearEstimate:
    """rho = (I + S.sigma)/2 with each Stokes component from a pair of opposite projectors.

    Trace and Hermiticity hold by construction; positivity does not, check ``physical``.
    """
    rates = canonical_rates(records, dark_subtracted)
    stokes = np.zeros(3)
    for i, (_, (plus, minus)) in enumerate(_STOKES_PAIRS.items()):
        tot = rates[plus] + rates[minus]
        stokes[i] = (rates[plus] - rates[minus]) / tot if tot > 0 else 0.0
    rho = 0.5 * (np.eye(2) + sum(s * _PAULI[k] for s, k in zip(stokes, _STOKES_PAIRS)))
    return LinearEstimate(rho, stokes)


def _t_matrix(x):
    return np.array([[x[0], 0], [x[2] + 1j * x[3], x[1]]])


def _params_from_rho(rho: np.ndarray, floor: float = 1e-3) -> np.ndarray:
    """Invert rho = T^dagger T for lower-triangular T; ``floor`` keeps the start full rank."""
    rho = (1 - floor) * rho + floor * np.eye(2) / 2
    c = rho[1, 1].real
    t1 = math.sqrt(c)
    off = rho[1, 0] / t1
    t0 = math.sqrt(max(rho[0, 0].real - abs(off) ** 2, 0.0))
    return np.array([t0, t1, off.real, off.imag])


def _rho_from_params(x) -> np.ndarray:
    T = _t_matrix(x)
    s = T.conj().T @ T
    s = s / np.trace(s).real
    return 0.5 * (s + s.conj().T)


class _Likelihood:
    """Negative log-likelihood of click counts under an unknown overall brightness.

    Counts for projector k are Poisson with mean ``A * shots_k * <v_k|rho|v_k>``;
    profiling out ``A`` leaves a multinomial-type likelihood.
    """

    def __init__(self, records, dark_subtracted):
        self.vecs = np.array([r.setting.analyzed_state().vector for r in records])
        self.n = np.array([_record_rate(r, dark_subtracted) * r.shots for r in records])
        self.s = np.array([r.shots for r in records], dtype=float)
        self.total = float(self.n.sum())
        if self.total <= 0:
            raise TomographyError("no counts to reconstruct from")
        self.mask = self.n > 0

    def _q(self, sigma):
        return np.einsum("ki,ij,kj->k", self.vecs.conj(), sigma, self.vecs).real

    def loglik(self, rho: np.ndarray) -> float:
        q = np.clip(self._q(rho), 1e-300, None)
        m = self.mask
        return float(np.sum(self.n[m] * np.log(self.s[m] * q[m])) - self.total * math.log(np.sum(self.s * q)))

    def objective(self, x):
        T = _t_matrix(x)
        sigma = T.conj().T @ T
        q = np.clip(self._q(sigma), 1e-300, None)
        m = self.mask
        norm = float(np.sum(self.s * q))
        f = -np.sum(self.n[m] * np.log(q[m])) + self.total * math.log(norm)
        w = np.zeros_like(q)
        w[m] = -self.n[m] / q[m]
        w += self.total * self.s / norm
        G = np.einsum("k,ki,kj->ij", w, self.vecs, self.vecs.conj())
        M = G @ T.conj().T
        grad = 2 * np.array([M[0, 0].real, M[1, 1].real, M[0, 1].real, -M[0, 1].imag])
        return f / self.total, grad / self.total


@dataclass(eq=False)
class TomographyResult:
    rho: DensityMatrix2
    method: str
    loglik: float
    records: tuple = ()
    dark_subtracted: bool = False
    iterations: int = 0
    grad_norm: float = 0.0
    converged: bool = True
    fidelity_raw: float = float("nan")
    fidelity_err: float = float("nan")
    fidelity_dark_subtracted: float = float("nan")
    target_label: str | None = None

    def to_dict(self) -> dict:
        return {
            "target": self.target_label,
            "method": self.method,
            "rho": self.rho.to_dict(),
            "fidelity_raw": self.fidelity_raw,
            "fidelity_err": self.fidelity_err,
            "fidelity_dark_subtracted": self.fidelity_dark_subtracted,
            "loglik": self.loglik,
            "dark_subtracted": self.dark_subtracted,
            "convergence": {
                "converged": self.converged,
                "iterations": self.iterations,
                "grad_norm": self.grad_norm,
            },
        }


def max_likelihood(records: Sequence[CountRecord], dark_subtracted: bool = False,
                   max_iter: int = 1000, gtol: float = 1e-10) -> TomographyResult:
    """Physical (PSD, unit-trace) maximum-likelihood density matrix.

    rho = T^dagger T / tr(T^dagger T) with T lower triangular, started from the
    PSD-projected linear-inversion estimate and refined by BFGS on the
    per-count log-likelihood.
    """
    records = tuple(records)
    start = linear_inversion(records, dark_subtracted).psd_projection()
    lik = _Likelihood(records, dark_subtracted)
    x0 = _params_from_rho(start.entries)
    res = minimize(lik.objective, x0, jac=True, method="BFGS",
                   options={"gtol": gtol, "maxiter": max_iter})
    grad_norm = float(np.linalg.norm(res.jac))
    rho = DensityMatrix2(_rho_from_params(res.x))
    # status 2 is a line-search stall at an optimum flat to machine precision.
    ok = res.success or (res.status == 2 and grad_norm < 1e-6)
    if not ok:
        raise MLEConvergenceError(
            f"MLE did not converge after {res.nit} iterations: {res.message}", rho, grad_norm)
    return TomographyResult(rho, "max_likelihood", lik.loglik(rho.entries), records,
                            dark_subtracted, int(res.nit), grad_norm, True)


def loglikelihood(records: Sequence[CountRecord], rho, dark_subtracted: bool = False) -> float:
    entries = rho.entries if isinstance(rho, DensityMatrix2) else np.asarray(rho)
    return _Likelihood(tuple(records), dark_subtracted).loglik(entries)


def resample_records(records: Sequence[CountRecord], rng: np.random.Generator,
                     sigma_tech: float = 0.005) -> list[CountRecord]:
    """Parametric bootstrap copy: binomial shot noise around rates jittered by sigma_tech (relative)."""
    out = []
    for rec in records:
        rate = rec.rate
        if sigma_tech > 0:
            rate *= 1.0 + sigma_tech * rng.standard_normal()
        rate = min(max(rate, 0.0), 1.0)
        clicks = int(rng.binomial(rec.shots, rate))
        dark = int(rng.binomial(rec.shots, rec.dark_rate))
        out.append(CountRecord(rec.input_label, rec.setting, rec.shots, clicks, dark))
    return out


def fidelity_with_error(result: TomographyResult, target: PureQubit, resamples: int = 100,
                        seed: int = 0, sigma_tech: float = 0.005,
                        max_failure_fraction: float = 0.05) -> tuple[float, float]:
    """Bootstrap mean and standard deviation of the fidelity to ``target``."""
    if resamples < 100:
        raise ValueError("at least 100 resamples are required")
    values = []
    failures = 0
    for b in range(resamples):
        rng = cell_rng(seed, b)
        boot = resample_records(result.records, rng, sigma_tech)
        try:
            r = max_likelihood(boot, result.dark_subtracted)
        except (MLEConvergenceError, TomographyError):
            failures += 1
            continue
        values.append(fidelity(target, r.rho))
    if failures > max_failure_fraction * resamples:
        raise MLEConvergenceError(
            f"{failures}/{resamples} bootstrap reconstructions failed", result.rho, float("nan"))
    values = np.array(values)
    return float(values.mean()), float(values.std(ddof=1))


def reconstruct(records: Sequence[CountRecord], target_label: str, resamples: int = 100,
                seed: int = 0, sigma_tech: float = 0.005) -> TomographyResult:
    """Raw MLE reconstruction plus bootstrap error and dark-subtracted fidelity.

    ``resamples = 0`` skips the bootstrap (``fidelity_err`` stays NaN).
    """
    target = canonical_state(target_label)
    result = max_likelihood(records)
    result.target_label = target_label
    result.fidelity_raw = fidelity(target, result.rho)
    if resamples:
        _, result.fidelity_err = fidelity_with_error(result, target, resamples, seed, sigma_tech)
    result.fidelity_dark_subtracted = fidelity(target, max_likelihood(records, dark_subtracted=True).rho)
    return result


@dataclass(frozen=True)
class FringeFit:
    amplitude: float
    visibility: float
    phase_rad: float
    visibility_err: float
    offset: float = field(default=0.0, repr=False)

    def model(self, theta) -> np.ndarray:
        """A (1 + V cos(4 theta - phi)) / 2."""
        theta = np.asarray(theta, dtype=float)
        return 0.5 * self.amplitude * (1 + self.visibility * np.cos(4 * theta - self.phase_rad))


def _fit_sinusoid(theta, p):
    X = np.column_stack([np.ones_like(theta), np.cos(4 * theta), np.sin(4 * theta)])
    (a, b, c), *_ = np.linalg.lstsq(X, p, rcond=None)
    return a, b, c


def fit_fringe(angles, records: Sequence[CountRecord], resamples: int = 200,
               seed: int = 0) -> FringeFit:
    """Least-squares fit of p(theta) = A (1 + V cos(4 theta - phi)) / 2 to click rates.

    Angles are HWP angles in radians, one per record.  The visibility error is a
    binomial-bootstrap standard deviation.
    """
    theta = np.asarray(angles, dtype=float)
    if len(theta) != len(records):
        raise ValueError("need one angle per record")
    if len(np.unique(np.round(theta, 12))) < 8:
        raise ValueError("fringe fit needs at least 8 distinct angles")
    if np.ptp(theta) < math.pi / 4:
        raise ValueError("angles must span at least half a fringe period (pi/4)")
    p = np.array([r.rate for r in records])
    shots = np.array([r.shots for r in records])
    a, b, c = _fit_sinusoid(theta, p)
    if a <= 0:
        raise ValueError("fringe has no positive mean click rate")
    vis = math.hypot(b, c) / a
    phase = math.atan2(c, b)
    rng = np.random.default_rng(seed)
    boot = []
    for _ in range(resamples):
        pb = rng.binomial(shots, np.clip(p, 0, 1)) / shots
        ab, bb, cb = _fit_sinusoid(theta, pb)
        if ab > 0:
            boot.append(math.hypot(bb, cb) / ab)
    err = float(np.std(boot, ddof=1)) if len(boot) > 1 else float("nan")
    return FringeFit(2 * a, min(vis, 1.0), phase, err)
