"""Log-gamma and digamma for positive real arguments.

log_gamma uses the Lanczos approximation (g = 7, 9 terms); digamma uses
the standard recurrence shift to x >= 10 followed by the asymptotic
series with Bernoulli-number coefficients.  Both are written here rather
than imported so that the identities they feed (ratios of Gamma values,
psi-function endpoints) have an in-tree reference implementation that
the test suite can cross-check against independent oracles.
"""

from __future__ import annotations

import math

__all__ = ["log_gamma", "digamma"]

_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

# B_{2k}/(2k) for the digamma asymptotic series.
_PSI_ASY = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def log_gamma(x: float) -> float:
    """log Gamma(x) for x > 0."""
    if x <= 0.0:
        raise ValueError("log_gamma requires x > 0")
    if x < 0.5:
        # reflection: Gamma(x)Gamma(1-x) = pi/sin(pi x)
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    z = x - 1.0
    acc = _LANCZOS[0]
    for i, c in enumerate(_LANCZOS[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)


def digamma(x: float) -> float:
    """psi(x) = Gamma'(x)/Gamma(x) for x > 0."""
    if x <= 0.0:
        raise ValueError("digamma requires x > 0")
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    for coeff in _PSI_ASY:
        series += coeff * power
        power *= inv2
    return acc + math.log(x) - 0.5 / x - series
