"""Bounded completely monotone functions, their normalized classes, and power scaling.

A CMFunction bundles a pointwise evaluator (real and complex-halfplane),
an optional explicit representing measure, the moments m_0..m_4 of that
measure (extended reals), and class tags.  The normalized classes are

    B1: m_0 = m_1 = 1;  B2: additionally m_2 < inf;  B3, B4 likewise.

Derivatives at zero are g^(k)(0) = (-1)^k m_k and are stored exactly
from the moments; finite differences appear only as test oracles.

The power scaling g_n(z) = g(z/n)^n keeps no explicit measure (the
n-fold convolution is not materialized); its derivatives at zero are
filled in closed form from those of g.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .measures import PolyExpSegment, PositiveMeasure, PowerLawSegment
from .polyexp import monomial_exp_integral

__all__ = [
    "CMFunction",
    "ScaledFamily",
    "from_measure",
    "power_scale",
    "euler",
    "euler_power",
    "spline",
    "kendall",
    "yosida",
    "hille",
    "chung",
    "frac_tail",
    "exponential",
    "check_b1",
    "check_bk",
    "BUILTIN_NAMES",
]

MOMENT_TOL = 1e-12


def _classify(moments) -> frozenset:
    tags = {"BM"}
    m0, m1, m2, m3, m4 = moments
    if abs(m0 - 1.0) <= MOMENT_TOL and abs(m1 - 1.0) <= MOMENT_TOL:
        tags.add("B1")
        if math.isfinite(m2):
            tags.add("B2")
            if math.isfinite(m3):
                tags.add("B3")
                if math.isfinite(m4):
                    tags.add("B4")
    return frozenset(tags)


@dataclass(frozen=True)
class CMFunction:
    """A bounded completely monotone function on [0, inf)."""

    name: str
    eval_real: object                       # vectorized callable, real z >= 0
    eval_complex: object = None             # callable, single complex z with Re z >= 0
    measure: PositiveMeasure | None = None
    moments: tuple = (1.0, 1.0, math.inf, math.inf, math.inf)
    lk: int | None = None                   # exponent with g in L^k(0,inf), if known
    limit_at_inf: float = 0.0               # g(inf) = mass of the atom at 0
    deriv_real: object = None               # optional callable (z, order) -> value

    @property
    def class_tags(self) -> frozenset:
        return _classify(self.moments)

    @property
    def tail_integrable(self) -> bool:
        """Whether int_1^inf g(s)/s ds < inf (fails iff g(inf) > 0 here)."""
        return self.limit_at_inf == 0.0

    def __call__(self, z):
        return self.eval_real(np.asarray(z, dtype=float))

    def eval_at(self, z: complex) -> complex:
        """g(z) for a single complex z with Re z >= 0."""
        if self.eval_complex is not None:
            return complex(self.eval_complex(z))
        if self.measure is not None:
            return self.measure.laplace(z)
        raise NotImplementedError(f"{self.name}: no complex evaluator")

    def eval_imag(self, s: float) -> complex:
        """Continuous boundary extension g(i s)."""
        return self.eval_at(1j * float(s))

    def deriv0(self, k: int) -> float:
        """g^(k)(0) = (-1)^k m_k (inf moments propagate as signed inf)."""
        m = self.moments[k]
        return ((-1.0) ** k) * m

    def derivative(self, z: float, order: int = 1) -> float:
        """g^(order)(z) for z > 0."""
        if self.deriv_real is not None:
            return float(self.deriv_real(z, order))
        if self.measure is not None:
            kernel = lambda s: (-s) ** order * np.exp(-z * s)
            return self.measure.kernel_integral(kernel)
        # fallback: Richardson central differences
        h = 1e-4 * max(1.0, abs(z))

        def fd(hh):
            if order == 1:
                return (self(z + hh) - self(z - hh)) / (2 * hh)
            if order == 2:
                return (self(z + hh) - 2 * self(z) + self(z - hh)) / hh ** 2
            raise ValueError("orders 1 and 2 only without measure")

        c1, c2 = fd(h), fd(h / 2)
        return float((4 * c2 - c1) / 3)


@dataclass(frozen=True)
class ScaledFamily:
    """A parametrized family t > 0 -> g_t in B1."""

    name: str
    factory: object

    def at(self, t: float) -> CMFunction:
        return self.factory(t)


def check_b1(g: CMFunction) -> bool:
    return "B1" in g.class_tags


def check_bk(g: CMFunction, k: int) -> bool:
    return f"B{k}" in g.class_tags


def from_measure(nu: PositiveMeasure, name: str = "measure") -> CMFunction:
    """Laplace transform of a finite positive measure."""
    mass = nu.total_mass()
    if not math.isfinite(mass):
        raise ValueError("measure must have finite total mass")
    moments = tuple(nu.moment(k) for k in range(5))

    def eval_real(z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.array([nu.laplace(complex(zz)).real for zz in z])
        return out if out.size > 1 else float(out[0])

    return CMFunction(
        name=name,
        eval_real=eval_real,
        eval_complex=nu.laplace,
        measure=nu,
        moments=moments,
        limit_at_inf=nu.zero_atom_mass(),
    )


# ----------------------------------------------------------------------
# power scaling g_n(z) = g(z/n)^n
# ----------------------------------------------------------------------

def _scaled_moments(moments, n: int):
    """Moments (= signed derivatives at 0) of g_n from those of g."""
    m0, m1, m2, m3, m4 = moments
    if not (abs(m0 - 1.0) <= MOMENT_TOL and abs(m1 - 1.0) <= MOMENT_TOL):
        raise ValueError("power scaling defined on B1 only")
    g2 = m2  # g''(0)
    g3 = -m3
    g4 = m4
    gn2 = 1.0 + (g2 - 1.0) / n if math.isfinite(g2) else math.inf
    if math.isfinite(g3) and math.isfinite(g2):
        gn3 = (-(n - 1.0) * (n - 2.0) - 3.0 * (n - 1.0) * g2 + g3) / n ** 2
    else:
        gn3 = -math.inf
    if math.isfinite(g4) and math.isfinite(g3) and math.isfinite(g2):
        gn4 = ((n - 1.0) * (n - 2.0) * (n - 3.0)
               + 6.0 * (n - 1.0) * (n - 2.0) * g2
               + 3.0 * (n - 1.0) * g2 ** 2
               - 4.0 * (n - 1.0) * g3
               + g4) / n ** 3
    else:
        gn4 = math.inf
    return (1.0, 1.0, gn2, -gn3 if math.isfinite(gn3) else math.inf, gn4)


def power_scale(g: CMFunction, n: int) -> CMFunction:
    """g_n(z) = g(z/n)^n with derivatives at zero in closed form."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    if not check_b1(g):
        raise ValueError("power scaling requires a B1 function")
    if n == 1:
        return g
    base_real = g.eval_real
    base_cplx = g.eval_at

    def eval_real(z):
        return base_real(np.asarray(z, dtype=float) / n) ** n

    def eval_complex(z):
        w = base_cplx(z / n)
        # integer powers are branch-insensitive
        return w ** n

    lk = None if g.lk is None else max(1, math.ceil(g.lk / n))
    return CMFunction(
        name=f"{g.name}_pow{n}",
        eval_real=eval_real,
        eval_complex=eval_complex,
        measure=None,
        moments=_scaled_moments(g.moments, n),
        lk=lk,
        limit_at_inf=g.limit_at_inf ** n,
    )


# ----------------------------------------------------------------------
# built-in constructors
# ----------------------------------------------------------------------

def exponential() -> CMFunction:
    """g(z) = e^{-z}, the fixed point of the scaling (measure = delta_1)."""
    nu = PositiveMeasure(atoms=((1.0, 1.0),))
    return CMFunction(
        name="exp",
        eval_real=lambda z: np.exp(-np.asarray(z, dtype=float)),
        eval_complex=lambda z: cmath.exp(-z),
        measure=nu,
        moments=(1.0, 1.0, 1.0, 1.0, 1.0),
        lk=1,
        deriv_real=lambda z, k: (-1.0) ** k * math.exp(-z),
    )


def euler() -> CMFunction:
    """g(z) = 1/(1+z), measure e^{-s} ds."""
    nu = PositiveMeasure(segments=(PolyExpSegment(0.0, math.inf, (1.0,), 1.0),))
    return CMFunction(
        name="euler",
        eval_real=lambda z: 1.0 / (1.0 + np.asarray(z, dtype=float)),
        eval_complex=lambda z: 1.0 / (1.0 + z),
        measure=nu,
        moments=(1.0, 1.0, 2.0, 6.0, 24.0),
        lk=2,
        deriv_real=lambda z, k: (-1.0) ** k * math.factorial(k) * (1.0 + z) ** (-k - 1),
    )


def euler_power(n: int) -> CMFunction:
    """Euler's g_n with its explicit Gamma measure n^n s^{n-1} e^{-ns}/(n-1)! ds.

    Unlike the generic power_scale (which drops the measure), the Euler
    family's convolution power is again polynomial-exponential, so for
    modest n we can materialize it.  Coefficients grow like e^n, so this
    is restricted to n <= 64.
    """
    if n == 1:
        return euler()
    if n > 64:
        raise ValueError("explicit Gamma measure limited to n <= 64")
    coeff = math.exp(n * math.log(n) - math.lgamma(n))
    coeffs = [0.0] * (n - 1) + [coeff]
    nu = PositiveMeasure(segments=(PolyExpSegment(0.0, math.inf, tuple(coeffs), float(n)),))
    g = from_measure(nu, name=f"euler_gamma{n}")

    def eval_real(z):
        return (1.0 + np.asarray(z, dtype=float) / n) ** (-n)

    return replace(
        g,
        eval_real=eval_real,
        eval_complex=lambda z: (1.0 + z / n) ** (-n),
        moments=_scaled_moments((1.0, 1.0, 2.0, 6.0, 24.0), n),
        lk=1,
    )


def spline() -> CMFunction:
    """g(z) = (1 - e^{-2z})/(2z), measure = (1/2) Lebesgue on [0,2]."""
    nu = PositiveMeasure(segments=(PolyExpSegment(0.0, 2.0, (0.5,), 0.0),))

    def eval_real(z):
        z = np.asarray(z, dtype=float)
        small = np.abs(z) < 1e-8
        zz = np.where(small, 1.0, z)
        out = -np.expm1(-2.0 * zz) / (2.0 * zz)
        return np.where(small, 1.0 - z + (2.0 / 3.0) * z ** 2, out)

    def eval_complex(z):
        if abs(z) < 1e-4:
            # (1 - e^{-2z})/(2z) = sum_k (-2z)^k/(k+1)!
            return 1.0 + z * (-1.0 + z * (2.0 / 3.0 + z * (-1.0 / 3.0 + z * (2.0 / 15.0))))
        return (1.0 - cmath.exp(-2.0 * z)) / (2.0 * z)

    def deriv(z, k):
        # g^(k)(z) = (1/2) int_0^2 (-s)^k e^{-zs} ds
        return 0.5 * (-1.0) ** k * monomial_exp_integral(k, z, 0.0, 2.0)

    return CMFunction(
        name="spline",
        eval_real=eval_real,
        eval_complex=eval_complex,
        measure=nu,
        moments=(1.0, 1.0, 4.0 / 3.0, 2.0, 16.0 / 5.0),
        lk=2,
        deriv_real=deriv,
    )


def kendall(t: float) -> CMFunction:
    """g_t(z) = (1-t) + t e^{-z/t}, measure (1-t) delta_0 + t delta_{1/t}."""
    if not 0.0 < t <= 1.0:
        raise ValueError("kendall requires t in (0, 1]")
    atoms = [(1.0 / t, t)]
    if t < 1.0:
        atoms.insert(0, (0.0, 1.0 - t))
    nu = PositiveMeasure(atoms=tuple(atoms))
    inv_t = 1.0 / t
    return CMFunction(
        name=f"kendall(t={t:g})",
        eval_real=lambda z: (1.0 - t) + t * np.exp(-np.asarray(z, dtype=float) / t),
        eval_complex=lambda z: (1.0 - t) + t * cmath.exp(-z / t),
        measure=nu,
        moments=(1.0, 1.0, inv_t, inv_t ** 2, inv_t ** 3),
        lk=None,
        limit_at_inf=1.0 - t,
        deriv_real=lambda z, k: t * (-inv_t) ** k * math.exp(-z * inv_t),
    )


def yosida(t: float) -> CMFunction:
    """g_t(z) = exp(-t z/(t + z)).

    The representing measure is e^{-t}[delta_0 + sum_{m>=1}
    (t^{2m}/(m!(m-1)!)) s^{m-1} e^{-ts} ds]; the series is truncated
    where the remaining mass e^{-t} t^m/m! drops below 1e-19.
    """
    if t <= 0.0:
        raise ValueError("yosida requires t > 0")
    segs = []
    m = 1
    while True:
        mass = math.exp(-t + m * math.log(t) - math.lgamma(m + 1))
        if m > 4 and mass < 1e-19:
            break
        coeff = math.exp(-t + 2 * m * math.log(t) - math.lgamma(m + 1) - math.lgamma(m))
        coeffs = [0.0] * (m - 1) + [coeff]
        segs.append(PolyExpSegment(0.0, math.inf, tuple(coeffs), t))
        m += 1
        if m > 400:
            break
    nu = PositiveMeasure(atoms=((0.0, math.exp(-t)),), segments=tuple(segs))
    moments = tuple(nu.moment(k) for k in range(5))

    def eval_real(z):
        z = np.asarray(z, dtype=float)
        return np.exp(-t * z / (t + z))

    g = CMFunction(
        name=f"yosida(t={t:g})",
        eval_real=eval_real,
        eval_complex=lambda z: cmath.exp(-t * z / (t + z)),
        measure=nu,
        moments=moments,
        lk=None,
        limit_at_inf=math.exp(-t),
    )
    return g


def hille() -> CMFunction:
    """g(z) = exp(-(1 - e^{-z})), measure e^{-1} sum_k delta_k / k!."""
    ks = range(0, 31)
    atoms = tuple((float(k), math.exp(-1.0 - math.lgamma(k + 1))) for k in ks)
    nu = PositiveMeasure(atoms=atoms)
    moments = tuple(nu.moment(k) for k in range(5))

    def eval_real(z):
        z = np.asarray(z, dtype=float)
        return np.exp(np.expm1(-z))

    return CMFunction(
        name="hille",
        eval_real=eval_real,
        eval_complex=lambda z: cmath.exp(cmath.exp(-z) - 1.0),
        measure=nu,
        moments=moments,
        lk=None,
        limit_at_inf=math.exp(-1.0),
    )


def chung(a, t: float) -> CMFunction:
    """g(z) = sum_k a_k (t/(t+z))^k for a finite coefficient sequence.

    Requires a_k >= 0, sum a_k = 1, and sum k a_k = t (so that the
    function is normalized with g(0) = 1, g'(0) = -1).
    """
    a = tuple(float(x) for x in a)
    if any(x < 0.0 for x in a):
        raise ValueError("coefficients must be nonnegative")
    if abs(sum(a) - 1.0) > 1e-12:
        raise ValueError("coefficients must sum to 1")
    if abs(sum(k * x for k, x in enumerate(a)) - t) > 1e-12:
        raise ValueError("sum of k*a_k must equal t")
    if t <= 0.0:
        raise ValueError("chung requires t > 0")
    segs = []
    for k, ak in enumerate(a):
        if k == 0 or ak == 0.0:
            continue
        coeff = ak * math.exp(k * math.log(t) - math.lgamma(k))
        coeffs = [0.0] * (k - 1) + [coeff]
        segs.append(PolyExpSegment(0.0, math.inf, tuple(coeffs), t))
    atoms = ((0.0, a[0]),) if a and a[0] > 0.0 else ()
    nu = PositiveMeasure(atoms=atoms, segments=tuple(segs))
    moments = tuple(nu.moment(k) for k in range(5))

    def eval_real(z):
        z = np.asarray(z, dtype=float)
        x = t / (t + z)
        return sum(ak * x ** k for k, ak in enumerate(a))

    def eval_complex(z):
        x = t / (t + z)
        return sum(ak * x ** k for k, ak in enumerate(a))

    return CMFunction(
        name=f"chung(t={t:g})",
        eval_real=eval_real,
        eval_complex=eval_complex,
        measure=nu,
        moments=moments,
        limit_at_inf=a[0] if a else 0.0,
    )


@lru_cache(maxsize=200000)
def _powerlaw_F(p: float, zr: float, zi: float) -> complex:
    """F(p, z) = int_0^inf e^{-zs} (1+s)^{-p} ds."""
    if zr == 0.0 and zi == 0.0:
        return complex(1.0 / (p - 1.0))
    import mpmath

    z = mpmath.mpc(zr, zi)
    return complex(mpmath.exp(z) * z ** (p - 1) * mpmath.gammainc(1 - p, z))


def frac_tail(gamma: float) -> CMFunction:
    """Heavy-tailed example: measure (1-gamma) delta_0 + gamma(gamma+1)(1+s)^{-2-gamma} ds.

    In B1 but not B2 (the second moment diverges); 1 + g'(1/n) decays
    like n^{-gamma}.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("frac_tail requires gamma in (0, 1)")
    w = gamma * (gamma + 1.0)
    nu = PositiveMeasure(
        atoms=((0.0, 1.0 - gamma),),
        segments=(PowerLawSegment(w, 2.0 + gamma),),
    )

    def eval_complex(z):
        return (1.0 - gamma) + w * _powerlaw_F(2.0 + gamma, float(np.real(z)), float(np.imag(z)))

    def eval_real(z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.array([eval_complex(complex(zz)).real for zz in z])
        return out if out.size > 1 else float(out[0])

    def deriv(z, k):
        # g^(k)(z) = w (-1)^k sum_j C(k,j)(-1)^{k-j} F(2+gamma-j, z)
        acc = 0.0
        for j in range(k + 1):
            acc += math.comb(k, j) * (-1.0) ** (k - j) * _powerlaw_F(2.0 + gamma - j, z, 0.0).real
        return w * (-1.0) ** k * acc

    return CMFunction(
        name=f"frac_tail(gamma={gamma:g})",
        eval_real=eval_real,
        eval_complex=eval_complex,
        measure=nu,
        moments=(1.0, 1.0, math.inf, math.inf, math.inf),
        limit_at_inf=1.0 - gamma,
        deriv_real=deriv,
    )


def kendall_family() -> ScaledFamily:
    return ScaledFamily("kendall", kendall)


def yosida_family() -> ScaledFamily:
    return ScaledFamily("yosida", yosida)


BUILTIN_NAMES = ("euler", "spline", "kendall", "yosida", "hille", "chung", "frac_tail", "exp")


def make_builtin(spec: str):
    """Parse a constructor string like 'kendall:t=0.5' or 'frac_tail:gamma=0.3'."""
    name, _, argstr = spec.partition(":")
    kwargs = {}
    if argstr:
        for item in argstr.split(","):
            key, _, val = item.partition("=")
            kwargs[key.strip()] = val
    if name == "euler":
        return euler()
    if name == "spline":
        return spline()
    if name == "exp":
        return exponential()
    if name == "hille":
        return hille()
    if name == "kendall":
        return kendall(float(kwargs["t"])) if "t" in kwargs else kendall_family()
    if name == "yosida":
        return yosida(float(kwargs["t"])) if "t" in kwargs else yosida_family()
    if name == "frac_tail":
        return frac_tail(float(kwargs["gamma"]))
    if name == "chung":
        coeffs = [float(x) for x in kwargs["a"].split("+")]
        return chung(coeffs, float(kwargs["t"]))
    if name == "measure":
        import json

        with open(argstr) as fh:
            desc = json.load(fh)
        atoms = tuple((float(s), float(wt)) for s, wt in desc.get("atoms", []))
        segs = tuple(
            PolyExpSegment(
                float(s["a"]),
                math.inf if s["b"] in ("inf", None) else float(s["b"]),
                tuple(float(c) for c in s["poly"]),
                float(s.get("exp_rate", 0.0)),
            )
            for s in desc.get("segments", [])
        )
        return from_measure(PositiveMeasure(atoms=atoms, segments=segs), name=f"measure:{argstr}")
    raise ValueError(f"unknown function name {name!r}; available: {', '.join(BUILTIN_NAMES)}")
