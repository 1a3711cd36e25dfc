"""Brute-force high-precision references, independent of the package code.

Everything here uses mpmath at 40 digits with explicit term-by-term sums and
no shared helpers from ``afcpol``.
"""
import mpmath as mp

mp.mp.dps = 40


def _terms(mu):
    mu = mp.mpf(mu)
    n_max = int(mu + 40 * mp.sqrt(mu) + 80)
    p = [mp.e ** (-mu)]
    for n in range(1, n_max + 1):
        p.append(p[-1] * mu / n)
    return p


def poisson(mu, n):
    mu = mp.mpf(mu)
    return mp.e ** (-mu) * mu ** n / mp.factorial(n)


def unit_efficiency(mu):
    """sum_{N>=1} P(N) (N+1)/(N+2) / (1 - P(0))."""
    p = _terms(mu)
    num = mp.fsum(p[n] * mp.mpf(n + 1) / (n + 2) for n in range(1, len(p)))
    return num / (1 - mp.e ** (-mp.mpf(mu)))


def classical(mu, eta):
    """(n_min, gamma, fidelity) by filling the answer budget from the top photon number down."""
    p = _terms(mu)
    budget = mp.mpf(eta) * (1 - mp.e ** (-mp.mpf(mu)))
    accepted = mp.mpf(0)
    num = mp.mpf(0)
    for n in range(len(p) - 1, 0, -1):
        w = mp.mpf(n + 1) / (n + 2)
        if accepted + p[n] >= budget:
            gamma = budget - accepted
            num += gamma * w
            return n, gamma, num / budget
        accepted += p[n]
        num += p[n] * w
    return 0, mp.mpf(0), num / accepted
