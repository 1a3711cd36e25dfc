"""Poisson photon statistics and the classical measure-and-prepare benchmark.

For an ``N``-photon qubit the best measure-and-prepare fidelity is
``(N+1)/(N+2)``.  For a weak coherent state this is averaged over the
non-vacuum Poisson distribution.  When the memory under test has efficiency
``eta < 1``, a classical device may answer only on high-photon-number shots:
it always answers above a threshold ``n_min``, answers at ``n_min`` with
probability mass ``gamma``, and never below.  Its answer rate matches ``eta``,
and that selection raises its fidelity.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

TAIL_TOL = 1e-14
MAX_TERMS = 500
_LOG_SPACE_FROM = 30


def _check_mu(mu: float, strict: bool = False) -> float:
    mu = float(mu)
    if not math.isfinite(mu) or mu < 0 or (strict and mu == 0):
        bound = "> 0" if strict else ">= 0"
        raise ValueError(f"mean photon number must be {bound}, got {mu!r}")
    return mu


def _check_eta(eta: float) -> float:
    eta = float(eta)
    if not (0.0 < eta <= 1.0):
        raise ValueError(f"efficiency must lie in (0, 1], got {eta!r}")
    return eta


def poisson_pmf(mu: float, n: int) -> float:
    """e^-mu mu^n / n!, evaluated in log space for large ``n``."""
    mu = _check_mu(mu)
    if n < 0 or int(n) != n:
        raise ValueError(f"photon number must be a nonnegative integer, got {n!r}")
    n = int(n)
    if mu == 0.0:
        return 1.0 if n == 0 else 0.0
    if n <= _LOG_SPACE_FROM:
        return math.exp(-mu) * mu**n / math.factorial(n)
    return math.exp(-mu + n * math.log(mu) - math.lgamma(n + 1))


def truncation_order(mu: float, tol: float = TAIL_TOL) -> int:
    """Smallest K whose geometric tail bound beyond K is below ``tol``.

    The bound is ``P(mu, K+1) / (1 - mu/(K+2))``, valid once ``K + 2 > mu``.
    """
    mu = _check_mu(mu)
    if mu == 0.0:
        return 0
    for k in range(MAX_TERMS + 1):
        if k + 2 <= mu:
            continue
        bound = poisson_pmf(mu, k + 1) / (1.0 - mu / (k + 2))
        if bound < tol:
            return k
    return MAX_TERMS


def pmf_table(mu: float, k_max: int | None = None, tol: float = TAIL_TOL) -> np.ndarray:
    """P(mu, N) for N = 0..k_max (defaults to :func:`truncation_order` at ``tol``)."""
    if k_max is None:
        k_max = truncation_order(mu, tol)
    return np.array([poisson_pmf(mu, n) for n in range(k_max + 1)])


def tail_table(p: np.ndarray) -> np.ndarray:
    """tails[i] = sum_{N >= i} p[N]; has one trailing zero entry."""
    tails = np.zeros(len(p) + 1)
    tails[:-1] = np.cumsum(p[::-1])[::-1]
    return tails


def _relative_table(mu: float, mass: float) -> np.ndarray:
    # neglected tail stays below TAIL_TOL relative to the conditioning mass
    return pmf_table(mu, tol=TAIL_TOL * min(1.0, mass))


def _fidelity_weights(k_max: int) -> np.ndarray:
    n = np.arange(k_max + 1, dtype=float)
    return (n + 1) / (n + 2)


def f_class_unit_efficiency(mu: float) -> float:
    """Best classical fidelity for a coherent-state qubit and a unit-efficiency memory."""
    mu = _check_mu(mu, strict=True)
    p = _relative_table(mu, -math.expm1(-mu))
    w = _fidelity_weights(len(p) - 1)
    return float(np.sum(w[1:] * p[1:]) / -math.expm1(-mu))


@dataclass(frozen=True)
class BenchmarkPoint:
    mu: float
    eta: float
    n_min: int
    gamma: float
    f_class: float

    def reconstructed_eta(self) -> float:
        """Answer rate implied by ``(n_min, gamma)``, conditioned on non-vacuum."""
        nonvac = -math.expm1(-self.mu)
        k = truncation_order(self.mu, TAIL_TOL * min(1.0, nonvac * self.eta))
        p = pmf_table(self.mu, max(k, self.n_min + 1))
        tails = tail_table(p)
        tails[1] = nonvac
        return (self.gamma + tails[self.n_min + 1]) / nonvac


def _threshold(mu: float, eta: float, p: np.ndarray, tails: np.ndarray):
    nonvac = -math.expm1(-mu)
    # tails[1] is replaced by the exact non-vacuum mass so eta == 1 selects n_min = 0.
    tails = tails.copy()
    tails[1] = nonvac
    target = nonvac * eta
    for i in range(len(p)):
        if tails[i + 1] <= target:
            gamma = min(max(target - tails[i + 1], 0.0), p[i])
            return i, gamma, tails
    # Unreachable: tails[len(p)] == 0 <= target.
    raise AssertionError("threshold search exhausted the truncated distribution")


def n_min_for_efficiency(mu: float, eta: float) -> tuple[int, float]:
    """Threshold photon number and fractional acceptance that realize ``eta``."""
    mu = _check_mu(mu, strict=True)
    eta = _check_eta(eta)
    p = _relative_table(mu, -math.expm1(-mu) * eta)
    n_min, gamma, _ = _threshold(mu, eta, p, tail_table(p))
    return n_min, float(gamma)


def f_class(mu: float, eta: float) -> BenchmarkPoint:
    mu = _check_mu(mu, strict=True)
    eta = _check_eta(eta)
    p = _relative_table(mu, -math.expm1(-mu) * eta)
    n_min, gamma, tails = _threshold(mu, eta, p, tail_table(p))
    w = _fidelity_weights(len(p) - 1)
    num = w[n_min] * gamma + np.sum(w[n_min + 1:] * p[n_min + 1:])
    den = gamma + tails[n_min + 1]
    return BenchmarkPoint(mu, eta, n_min, float(gamma), float(num / den))


def benchmark_curve(mu_grid, eta: float) -> list[BenchmarkPoint]:
    mu_grid = [float(m) for m in mu_grid]
    if not mu_grid:
        raise ValueError("mu grid is empty")
    if any(m <= 0 for m in mu_grid):
        raise ValueError("mu grid must be positive")
    if any(b <= a for a, b in zip(mu_grid, mu_grid[1:])):
        raise ValueError("mu grid must be strictly increasing")
    return [f_class(m, eta) for m in mu_grid]


SINGLE_PHOTON_BOUND = 2.0 / 3.0


def regime(fidelity: float, mu: float, eta: float, fidelity_err: float = 0.0,
           n_sigma: float = 0.0) -> str:
    """'quantum' if ``fidelity`` beats the classical bound at (mu, eta), else 'classical'.

    ``n_sigma`` standard errors are subtracted from the fidelity before comparing.
    """
    bound = f_class(mu, eta).f_class
    return "quantum" if fidelity - n_sigma * fidelity_err > bound else "classical"
