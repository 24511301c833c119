"""Rate functionals of completely monotone approximations.

Implements the defect Delta_alpha(z) = (g(z) - e^{-z})/z^alpha, the
second-order density G with Delta_2 = Laplace(G), and the functionals

    L[g]   = int_0^1 (1-s) nu(ds)            (operator-norm driver)
    a[g]   = int G        = (g''(0)-1)/2
    b[g]   = int (1-s) G  = (3 g''(0)+g'''(0)-2)/6
    c_a[g] = Gamma(2-a)^{-1} int Delta_{1+a} = int G(s) s^{a-2} ds
    d0[g]  = int (1-s)^2 G
    d1[g]  = int (1-s)^2 (1+s) s^{-2} G = c_0 - c_1 - b

Each functional has two evaluation routes: a measure route (exact up to
closed-form partial moments, via Fubini kernels K(tau) = the s-integral
of the weight against the G construction) and a z-quadrature route that
only needs pointwise values of g (used for power-scaled functions whose
measure is not materialized).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import quadrature
from .cmfun import CMFunction, check_b1, check_bk, power_scale
from .specialfns import digamma, log_gamma

__all__ = [
    "GDensity",
    "FunctionalValues",
    "g_density",
    "g0_density",
    "delta",
    "functional_L",
    "delta1_norm",
    "L_upper_bound",
    "L_scaled_bound",
    "c_alpha",
    "c_alpha_measure",
    "c_alpha_quad",
    "euler_c_alpha_exact",
    "a_of",
    "b_of",
    "d0_of",
    "d1_of",
    "functional_values",
    "asymptotic_c_check",
    "check_polynomial_rate",
    "euler_power_L",
]


class RequiresMeasureError(ValueError):
    pass


class DivergentError(ArithmeticError):
    pass


# ----------------------------------------------------------------------
# densities
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class GDensity:
    """The density G with Delta_2 = Laplace(G), evaluated from the measure.

    G(s) = int_0^s (s - tau) nu(dtau)   for s in [0, 1],
    G(s) = int_s^inf (tau - s) nu(dtau) for s > 1.
    """

    g: CMFunction

    def __call__(self, s):
        nu = self.g.measure
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty_like(s_arr)
        for i, si in enumerate(s_arr):
            if si <= 1.0:
                out[i] = si * nu.partial_moment(0, 0.0, si) - nu.partial_moment(1, 0.0, si)
            else:
                out[i] = nu.partial_moment(1, si, math.inf) - si * nu.partial_moment(0, si, math.inf)
        return out if np.ndim(s) else float(out[0])

    def peak(self) -> float:
        """max G = G(1) = int_0^1 (1 - tau) nu(dtau)."""
        return self(1.0)

    def integral(self) -> float:
        """int_0^inf G = int (1-tau)^2/2 nu(dtau) = (g''(0)-1)/2."""
        return 0.5 * self.g.measure.kernel_integral(lambda tau: (1.0 - tau) ** 2)


@dataclass(frozen=True)
class G0Density:
    """G0(s) = int_0^s (1-tau) nu(dtau) on [0,1]; int_s^inf (tau-1) nu(dtau) beyond."""

    g: CMFunction

    def __call__(self, s):
        nu = self.g.measure
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty_like(s_arr)
        for i, si in enumerate(s_arr):
            if si <= 1.0:
                out[i] = nu.partial_moment(0, 0.0, si) - nu.partial_moment(1, 0.0, si)
            else:
                out[i] = nu.partial_moment(1, si, math.inf) - nu.partial_moment(0, si, math.inf)
        return out if np.ndim(s) else float(out[0])

    def integral(self) -> float:
        """int G0 = int (1-tau)^2 nu(dtau) = g''(0) - 1."""
        return self.g.measure.kernel_integral(lambda tau: (1.0 - tau) ** 2)


def g_density(g: CMFunction) -> GDensity:
    if g.measure is None:
        raise RequiresMeasureError(f"{g.name}: G density needs an explicit measure")
    if not check_b1(g):
        raise ValueError("G density defined on B1")
    return GDensity(g)


def g0_density(g: CMFunction) -> G0Density:
    if g.measure is None:
        raise RequiresMeasureError(f"{g.name}: G0 density needs an explicit measure")
    return G0Density(g)


# ----------------------------------------------------------------------
# defect
# ----------------------------------------------------------------------

_SERIES_CUTOFF = 1e-3


def _diff_series(g: CMFunction, z):
    """g(z) - e^{-z} by the moment series, for small z (avoids cancellation)."""
    m2, m3, m4 = g.moments[2], g.moments[3], g.moments[4]
    z = np.asarray(z, dtype=float)
    out = 0.5 * (m2 - 1.0) * z ** 2
    if math.isfinite(m3):
        out = out - (m3 - 1.0) / 6.0 * z ** 3
        if math.isfinite(m4):
            out = out + (m4 - 1.0) / 24.0 * z ** 4
    return out


def delta(g: CMFunction, alpha: float, z):
    """Delta_alpha(z) = (g(z) - e^{-z}) / z^alpha for z > 0 (vectorized)."""
    z = np.asarray(z, dtype=float)
    use_series = (z < _SERIES_CUTOFF) & math.isfinite(g.moments[2])
    zz = np.where(z == 0.0, 1.0, z)
    direct = (g.eval_real(zz) - np.exp(-zz)) / zz ** alpha
    series = _diff_series(g, zz) / zz ** alpha if math.isfinite(g.moments[2]) else direct
    out = np.where(use_series, series, direct)
    if np.any(z == 0.0):
        if alpha == 2.0 and math.isfinite(g.moments[2]):
            out = np.where(z == 0.0, 0.5 * (g.moments[2] - 1.0), out)
        else:
            raise ValueError("Delta_alpha undefined at z = 0 unless alpha = 2 on B2")
    return out


# ----------------------------------------------------------------------
# L and the Delta_1 norm
# ----------------------------------------------------------------------

def functional_L(g: CMFunction) -> float:
    """L[g] = int_0^1 (1-s) nu(ds) (measure route)."""
    if g.measure is None:
        raise RequiresMeasureError(f"{g.name}: L needs an explicit measure")
    nu = g.measure
    return nu.partial_moment(0, 0.0, 1.0) - nu.partial_moment(1, 0.0, 1.0)


def delta1_norm(g: CMFunction) -> float:
    """The transform mass of Delta_1: int |1 - tau| nu(dtau) = 2 L[g]."""
    if g.measure is None:
        raise RequiresMeasureError(f"{g.name}: needs an explicit measure")
    return g.measure.kernel_integral(lambda tau: np.abs(1.0 - tau))


def L_upper_bound(g: CMFunction):
    """Evaluation-only upper bound for L[g] on B1.

    Returns sqrt((1+g'(1)) * int_0^1 g / (1-g(1))^2 - 1) + 2e int_0^1 (g+g'),
    with int_0^1 g' = g(1) - 1.  Degenerate when g(1) = 1 (flagged +inf).
    """
    g1 = float(np.atleast_1d(g.eval_real(np.asarray([1.0])))[0])
    dg1 = g.derivative(1.0, 1)
    if 1.0 - g1 <= 0.0:
        return math.inf, "degenerate"
    beta = quadrature.integrate(lambda s: np.asarray(g.eval_real(s), dtype=float), 0.0, 1.0)
    inner = (1.0 + dg1) * beta / (1.0 - g1) ** 2 - 1.0
    term1 = math.sqrt(max(inner, 0.0))
    term2 = 2.0 * math.e * (beta + g1 - 1.0)
    return term1 + term2, "ok"


def L_scaled_bound(g: CMFunction, n: int) -> float:
    """Upper bound for L[g_n] in terms of g'(1/n):

    2e (1 + 1/|g'(1/n)|) sqrt(1 + g'(1/n)).
    """
    dg = g.derivative(1.0 / n, 1)
    if dg == 0.0:
        return math.inf
    return 2.0 * math.e * (1.0 + 1.0 / abs(dg)) * math.sqrt(max(1.0 + dg, 0.0))


def euler_power_L(n: int) -> float:
    """Exact L[g_n] for Euler's scheme from the Gamma measure of g_n.

    With nu_n = n^n s^{n-1} e^{-ns}/(n-1)! ds one has
    int_0^1 nu_n = P(n, n) and int_0^1 s nu_n = P(n+1, n), so
    L[g_n] = P(n, n) - P(n+1, n) (regularized lower incomplete gamma P).
    """
    from scipy.special import gammainc

    return float(gammainc(n, n) - gammainc(n + 1, n))


# ----------------------------------------------------------------------
# c_alpha: measure route, quadrature route, Euler closed form
# ----------------------------------------------------------------------

def _c_kernel(tau: np.ndarray, alpha: float) -> np.ndarray:
    """K(tau) with c_alpha[g] = int K(tau) nu(dtau) (Fubini through G).

    K(tau) = int_tau^1 (s-tau) s^{alpha-2} ds  for tau <= 1,
             int_1^tau (tau-s) s^{alpha-2} ds  for tau > 1.
    """
    tau = np.asarray(tau, dtype=float)
    out = np.empty_like(tau)
    below = tau <= 1.0
    tb = tau[below]
    with np.errstate(divide="ignore", invalid="ignore"):
        if alpha == 0.0:
            vals = -np.log(tb) - 1.0 + tb
        elif alpha == 1.0:
            vals = 1.0 - tb + tb * np.log(tb)
            vals = np.where(tb == 0.0, 1.0, vals)  # tau log tau -> 0
        else:
            vals = (1.0 - tb ** alpha) / alpha - tb * (1.0 - tb ** (alpha - 1.0)) / (alpha - 1.0)
            # at tau = 0 the second term vanishes: K(0) = 1/alpha
            vals = np.where(tb == 0.0, 1.0 / alpha, vals)
    out[below] = vals
    ta = tau[~below]
    if alpha == 0.0:
        vals = ta - 1.0 - np.log(ta)
    elif alpha == 1.0:
        vals = ta * np.log(ta) - (ta - 1.0)
    else:
        vals = ta * (ta ** (alpha - 1.0) - 1.0) / (alpha - 1.0) - (ta ** alpha - 1.0) / alpha
    out[~below] = vals
    return out


def c_alpha_measure(g: CMFunction, alpha: float) -> float:
    """c_alpha by the measure route; inf when the integral diverges
    (e.g. alpha = 0 with an atom at the origin)."""
    if g.measure is None:
        raise RequiresMeasureError(f"{g.name}: measure route needs an explicit measure")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if alpha == 0.0 and g.measure.zero_atom_mass() > 0.0:
        return math.inf
    return g.measure.kernel_integral(lambda tau: _c_kernel(tau, alpha))


@dataclass(frozen=True)
class QuadValue:
    value: float
    converged: bool
    flag: str = ""


def c_alpha_quad(g: CMFunction, alpha: float, rel_tol: float = 1e-11) -> QuadValue:
    """c_alpha[g] = Gamma(2-alpha)^{-1} int_0^inf Delta_{1+alpha}(z) dz.

    Needs only pointwise values of g (plus moments for the small-z
    series), so it applies to power-scaled functions without a measure.
    When g(inf) = c > 0 the constant part of the tail is integrated
    analytically for alpha > 0; for alpha = 0 the integral genuinely
    diverges (logarithmically) and a truncated value is returned with
    converged=False.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    gamma_factor = math.exp(-log_gamma(2.0 - alpha))
    c_inf = g.limit_at_inf
    z0 = 40.0

    def integrand(z):
        return delta(g, 1.0 + alpha, z)

    head = quadrature.integrate(integrand, 0.0, min(z0, 1.0), rel_tol=rel_tol)
    if z0 > 1.0:
        head += quadrature.integrate(integrand, 1.0, z0, rel_tol=rel_tol)

    if c_inf == 0.0:
        tail = quadrature.integrate_semi_infinite(integrand, z0, rel_tol=rel_tol)
        return QuadValue(gamma_factor * (head + tail.value), tail.converged,
                         "" if tail.converged else "tail_divergent")

    if alpha == 0.0:
        # genuinely divergent: integrate the truncation to z = 1e6 and flag
        tail = quadrature.integrate_semi_infinite(integrand, z0, rel_tol=rel_tol,
                                                  max_span=1e6)
        return QuadValue(gamma_factor * (head + tail.value), False, "tail_divergent")

    def residual(z):
        z = np.asarray(z, dtype=float)
        return (g.eval_real(z) - np.exp(-z) - c_inf) / z ** (1.0 + alpha)

    tail = quadrature.integrate_semi_infinite(residual, z0, rel_tol=rel_tol)
    analytic = c_inf * z0 ** (-alpha) / alpha
    return QuadValue(gamma_factor * (head + tail.value + analytic), tail.converged,
                     "" if tail.converged else "tail_divergent")


def c_alpha(g: CMFunction, alpha: float) -> float:
    """c_alpha by the best available route (measure preferred)."""
    if g.measure is not None:
        return c_alpha_measure(g, alpha)
    qv = c_alpha_quad(g, alpha)
    if not qv.converged:
        raise DivergentError(f"c_{alpha}[{g.name}] diverges")
    return qv.value


def euler_c_alpha_exact(n: int, alpha: float) -> float:
    """Closed form for Euler's scheme:

    c_alpha[g_n] = [1 - Gamma(n+alpha)/(n^alpha Gamma(n))]/(alpha(1-alpha)),
    with digamma endpoints c_0 = log n - psi(n), c_1 = psi(n+1) - log n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if alpha == 0.0:
        return math.log(n) - digamma(n)
    if alpha == 1.0:
        return digamma(n + 1) - math.log(n)
    ratio = math.exp(log_gamma(n + alpha) - alpha * math.log(n) - log_gamma(n))
    return (1.0 - ratio) / (alpha * (1.0 - alpha))


# ----------------------------------------------------------------------
# b, d0, d1
# ----------------------------------------------------------------------

def a_of(g: CMFunction) -> float:
    if not check_bk(g, 2):
        raise ValueError(f"{g.name}: a[g] requires B2")
    return 0.5 * (g.moments[2] - 1.0)


def b_of(g: CMFunction, route: str = "closed") -> float:
    """b[g] = int (1-s) G(s) ds = (3 g''(0) + g'''(0) - 2)/6."""
    if not check_bk(g, 3):
        raise ValueError(f"{g.name}: b[g] requires B3")
    if route == "closed":
        return (3.0 * g.moments[2] - g.moments[3] - 2.0) / 6.0
    if route == "measure":
        if g.measure is None:
            raise RequiresMeasureError(f"{g.name}: measure route needs a measure")
        return g.measure.kernel_integral(lambda tau: (1.0 - tau) ** 3 / 6.0)
    raise ValueError("route must be 'closed' or 'measure'")


def d0_of(g: CMFunction, route: str = "closed") -> float:
    """d0[g] = int (1-s)^2 G(s) ds = (-3 + 6 g''(0) + 4 g'''(0) + g''''(0))/12."""
    if not check_bk(g, 4):
        raise ValueError(f"{g.name}: d0[g] requires B4")
    if route == "closed":
        return (-3.0 + 6.0 * g.moments[2] - 4.0 * g.moments[3] + g.moments[4]) / 12.0
    if route == "measure":
        if g.measure is None:
            raise RequiresMeasureError(f"{g.name}: measure route needs a measure")
        return g.measure.kernel_integral(lambda tau: (1.0 - tau) ** 4 / 12.0)
    raise ValueError("route must be 'closed' or 'measure'")


def d1_of(g: CMFunction) -> float:
    """d1[g] = int (1-s)^2 (1+s) s^{-2} G(s) ds = c_0[g] - c_1[g] - b[g].

    Computed through the identity so that it is available for
    power-scaled functions without a materialized measure.
    """
    if not check_bk(g, 4):
        raise ValueError(f"{g.name}: d1[g] requires B4")
    c0 = c_alpha(g, 0.0) if g.measure is not None else c_alpha_quad(g, 0.0).value
    c1 = c_alpha(g, 1.0) if g.measure is not None else c_alpha_quad(g, 1.0).value
    return c0 - c1 - b_of(g)


@dataclass(frozen=True)
class FunctionalValues:
    name: str
    L: float
    a: float
    b: float | None
    d0: float | None
    d1: float | None
    c: dict
    provenance: str


def functional_values(g: CMFunction, alphas=(0.0, 0.25, 0.5, 0.75, 1.0)) -> FunctionalValues:
    has_measure = g.measure is not None
    L = functional_L(g) if has_measure else math.nan
    a = a_of(g) if check_bk(g, 2) else math.nan
    b = b_of(g) if check_bk(g, 3) else None
    d0 = d0_of(g) if check_bk(g, 4) else None
    cs = {}
    if check_bk(g, 2) and g.tail_integrable:
        for al in alphas:
            cs[al] = c_alpha(g, al) if has_measure else c_alpha_quad(g, al).value
    d1 = d1_of(g) if (check_bk(g, 4) and g.tail_integrable) else None
    return FunctionalValues(
        name=g.name, L=L, a=a, b=b, d0=d0, d1=d1, c=cs,
        provenance="measure" if has_measure else "quadrature",
    )


# ----------------------------------------------------------------------
# reports
# ----------------------------------------------------------------------

def asymptotic_c_check(g: CMFunction, n_grid, alphas=(0.0, 0.25, 0.5, 0.75, 1.0)):
    """Scaled residuals n^2 |c_alpha[g_n] - (g''(0)-1)/(2n)| over a grid.

    Returns a list of rows {n, alpha, c, resid_scaled, flag}; the caller
    asserts boundedness / reports the fitted constant.
    """
    if not check_bk(g, 2):
        raise ValueError("asymptotic check requires B2")
    lead = 0.5 * (g.moments[2] - 1.0)
    rows = []
    for n in n_grid:
        gn = power_scale(g, n)
        for al in alphas:
            qv = c_alpha_quad(gn, al)
            resid = n ** 2 * abs(qv.value - lead / n)
            rows.append({
                "n": n, "alpha": al, "c": qv.value,
                "resid_scaled": resid,
                "flag": qv.flag,
            })
    return rows


def check_polynomial_rate(g: CMFunction, gamma: float,
                          tau_grid=None, n_grid=None):
    """Fitted constants for the three equivalent polynomial-decay conditions:

    (i)   g''(tau) <= c1 tau^{gamma-1} on (0, 1],
    (ii)  int_0^s tau^2 nu(dtau) <= c2 s^{1-gamma},
    (iii) 1 + g'(1/n) <= c3 n^{-gamma}.
    """
    if tau_grid is None:
        tau_grid = np.logspace(-4, 0, 25)
    if n_grid is None:
        n_grid = [2 ** k for k in range(0, 15)]
    c1 = max(g.derivative(t, 2) * t ** (1.0 - gamma) for t in tau_grid)
    c2 = math.nan
    if g.measure is not None:
        c2 = max(
            g.measure.partial_moment(2, 0.0, s) * s ** (gamma - 1.0)
            for s in np.logspace(-2, 4, 25)
        )
    c3 = max((1.0 + g.derivative(1.0 / n, 1)) * n ** gamma for n in n_grid)
    return {"c_second_deriv": c1, "c_truncated_moment": c2, "c_scaled_slope": c3}
