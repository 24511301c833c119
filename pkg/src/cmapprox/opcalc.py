"""Finite-dimensional operator side: generators, semigroups, fractional powers.

Generators are dense complex matrices A with spectrum in the closed
right half-plane (so that -A generates a bounded semigroup e^{-tA}).
Diagonalizable structure is carried explicitly (V, eigs, V^{-1}) so that
matrix functions can be evaluated spectrally; a Pade matrix-exponential
path and a measure-quadrature path exist independently and are
cross-validated, not trusted as oracles.

Operator norm is the spectral 2-norm throughout, which makes M_0 = 1
exact for normal gallery members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .cmfun import CMFunction, ScaledFamily
from . import quadrature

__all__ = [
    "GeneratorMatrix",
    "SemigroupConstants",
    "diag_imag",
    "diag_positive",
    "advection_periodic",
    "laplacian_dirichlet_1d",
    "make_generator",
    "semigroup_at",
    "frac_power",
    "hp_apply",
    "scheme_apply",
    "semigroup_constants",
    "test_vectors",
    "opnorm",
]

DEFAULT_SEED = 0x5EED


@dataclass(frozen=True)
class GeneratorMatrix:
    """Dense complex square matrix with right-half-plane spectrum."""

    matrix: np.ndarray
    structure: str                 # "diagonal" | "diagonalizable" | "general"
    spectrum_location: str         # "imaginary" | "positive" | "rhp"
    name: str = "A"
    eigs: np.ndarray | None = None
    V: np.ndarray | None = None
    Vinv: np.ndarray | None = None

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", A)
        if self.eigs is not None:
            object.__setattr__(self, "eigs", np.asarray(self.eigs, dtype=complex))
            if np.min(self.eigs.real) < -1e-12:
                raise ValueError("spectrum must lie in the closed right half-plane")
        if self.structure == "diagonalizable":
            recon = self.V @ np.diag(self.eigs) @ self.Vinv
            if np.linalg.norm(recon - A) > 1e-12 * max(np.linalg.norm(A), 1.0):
                raise ValueError("diagonalization factors do not reproduce the matrix")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def spectral_map(self, f) -> np.ndarray:
        """V f(Lambda) V^{-1} with f applied entrywise to the eigenvalues."""
        vals = np.array([f(lam) for lam in self.eigs], dtype=complex)
        if self.structure == "diagonal":
            return np.diag(vals)
        if self.structure == "diagonalizable":
            return self.V @ (vals[:, None] * self.Vinv)
        raise ValueError("spectral path needs diagonal/diagonalizable structure")


def opnorm(B: np.ndarray) -> float:
    return float(np.linalg.norm(B, 2))


# ----------------------------------------------------------------------
# gallery
# ----------------------------------------------------------------------

def diag_imag(k: int = 128, mod_min: float = 1e-1, mod_max: float = 1e2) -> GeneratorMatrix:
    """Diagonal skew generator with log-spaced imaginary eigenvalues (alternating signs)."""
    mods = np.logspace(math.log10(mod_min), math.log10(mod_max), k)
    signs = np.where(np.arange(k) % 2 == 0, 1.0, -1.0)
    eigs = 1j * signs * mods
    return GeneratorMatrix(np.diag(eigs), "diagonal", "imaginary",
                           name=f"diag_imag:k={k},max={mod_max:g}", eigs=eigs)


def diag_positive(k: int = 128, lam_min: float = 1e-2, lam_max: float = 1e2) -> GeneratorMatrix:
    eigs = np.logspace(math.log10(lam_min), math.log10(lam_max), k).astype(complex)
    return GeneratorMatrix(np.diag(eigs), "diagonal", "positive",
                           name=f"diag_pos:k={k}", eigs=eigs)


def advection_periodic(d: int = 256) -> GeneratorMatrix:
    """Circulant forward difference d*(I - S); eigenvalues d(1 - omega^k)."""
    A = d * (np.eye(d) - np.roll(np.eye(d), -1, axis=1)).astype(complex)
    j = np.arange(d)
    omega = np.exp(2j * np.pi * j / d)
    # the lower shift maps the k-th Fourier column to omega^{-k} times itself
    eigs = d * (1.0 - omega.conj())
    F = np.exp(2j * np.pi * np.outer(j, j) / d) / math.sqrt(d)
    Vinv = F.conj().T
    return GeneratorMatrix(A, "diagonalizable", "rhp",
                           name=f"advection:d={d}", eigs=eigs, V=F, Vinv=Vinv)


def laplacian_dirichlet_1d(d: int = 128) -> GeneratorMatrix:
    """Unscaled tridiagonal (2, -1) with eigenvalues 2 - 2 cos(k pi/(d+1))."""
    A = (2.0 * np.eye(d) - np.eye(d, k=1) - np.eye(d, k=-1)).astype(complex)
    k = np.arange(1, d + 1)
    eigs = (2.0 - 2.0 * np.cos(k * np.pi / (d + 1))).astype(complex)
    j = np.arange(1, d + 1)
    V = np.sqrt(2.0 / (d + 1)) * np.sin(np.outer(j, k) * np.pi / (d + 1)).astype(complex)
    return GeneratorMatrix(A, "diagonalizable", "positive",
                           name=f"laplacian:d={d}", eigs=eigs, V=V, Vinv=V.conj().T)


def make_generator(spec: str) -> GeneratorMatrix:
    """Parse gallery strings like 'diag_imag:k=128,max=100'."""
    name, _, argstr = spec.partition(":")
    kw = {}
    for item in filter(None, argstr.split(",")):
        key, _, val = item.partition("=")
        kw[key.strip()] = float(val)
    if name == "diag_imag":
        return diag_imag(int(kw.get("k", 128)), kw.get("min", 1e-1), kw.get("max", 1e2))
    if name == "diag_pos":
        return diag_positive(int(kw.get("k", 128)), kw.get("min", 1e-2), kw.get("max", 1e2))
    if name == "advection":
        return advection_periodic(int(kw.get("d", 256)))
    if name == "laplacian":
        return laplacian_dirichlet_1d(int(kw.get("d", 128)))
    raise ValueError(
        f"unknown generator {name!r}; available: diag_imag, diag_pos, advection, laplacian")


def test_vectors(A: GeneratorMatrix, count: int = 8, seed: int = DEFAULT_SEED) -> list[np.ndarray]:
    """Deterministic unit test vectors: all-ones, random complex, eigenvector mixtures."""
    d = A.dim
    rng = np.random.default_rng(seed)
    vecs = [np.ones(d, dtype=complex) / math.sqrt(d)]
    for _ in range(3):
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        vecs.append(v / np.linalg.norm(v))
    if A.structure in ("diagonal", "diagonalizable"):
        basis = np.eye(d, dtype=complex) if A.structure == "diagonal" else A.V
        picks = [(0, d - 1), (0, d // 2), (d // 4, 3 * d // 4), (d // 3, d - 2)]
        for i, j in picks:
            v = basis[:, i] + basis[:, j]
            vecs.append(v / np.linalg.norm(v))
    return vecs[:count]


# ----------------------------------------------------------------------
# matrix functions
# ----------------------------------------------------------------------

def semigroup_at(A: GeneratorMatrix, t: float) -> np.ndarray:
    """e^{-tA} (spectral when possible, else Pade scaling-and-squaring)."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return np.eye(A.dim, dtype=complex)
    if A.structure in ("diagonal", "diagonalizable"):
        return A.spectral_map(lambda lam: np.exp(-t * lam))
    return scipy.linalg.expm(-t * A.matrix)


def frac_power(A: GeneratorMatrix, alpha: float) -> np.ndarray:
    """A^alpha via the eigendecomposition with the principal branch (0^alpha := 0)."""
    if A.structure not in ("diagonal", "diagonalizable"):
        raise ValueError("fractional powers need diagonal/diagonalizable structure")
    if not 0.0 <= alpha <= 4.0:
        raise ValueError("alpha must lie in [0, 4]")

    def f(lam):
        if lam == 0:
            return 0.0 if alpha > 0 else 1.0
        return lam ** alpha  # principal branch: arg(lam) in [-pi/2, pi/2]

    return A.spectral_map(f)


def hp_apply(g: CMFunction, A: GeneratorMatrix, path: str = "auto") -> np.ndarray:
    """g(A) = int e^{-sA} nu(ds) by one of three routes.

    "spectral": V g(lambda) V^{-1} (preferred; exact on the gallery),
    "quadrature": atom sum + adaptive panels of density(s) e^{-sA},
    "rational": repeated solves for Euler-type g(z) = (1 + z/n)^{-n}.
    """
    if path == "auto":
        path = "spectral" if A.structure in ("diagonal", "diagonalizable") else "quadrature"
    if path == "spectral":
        return A.spectral_map(g.eval_at)
    if path == "quadrature":
        return _hp_quadrature(g, A)
    if path == "rational":
        return _hp_rational(g, A)
    raise ValueError(f"unknown path {path!r}")


def _hp_quadrature(g: CMFunction, A: GeneratorMatrix, rel_tol: float = 1e-10) -> np.ndarray:
    if g.measure is None:
        raise ValueError(f"{g.name}: quadrature route needs an explicit measure")
    d = A.dim
    out = np.zeros((d, d), dtype=complex)
    for loc, w in g.measure.atoms:
        out += w * scipy.linalg.expm(-loc * A.matrix)

    x40, w40 = np.polynomial.legendre.leggauss(40)

    def panel(seg, a, b):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes = mid + half * x40
        dens = seg.density(nodes)
        acc = np.zeros((d, d), dtype=complex)
        for s, wq, p in zip(nodes, w40, dens):
            if p != 0.0:
                acc += (half * wq * p) * scipy.linalg.expm(-s * A.matrix)
        return acc

    for seg in g.measure.segments:
        a = seg.a
        width = min(1.0, (seg.b - seg.a) if math.isfinite(seg.b) else 1.0)
        total_mass = 0.0
        while a < seg.b:
            b = min(a + width, seg.b)
            piece = panel(seg, a, b)
            out += piece
            pmass = opnorm(piece)
            total_mass = max(total_mass, opnorm(out))
            a = b
            width *= 2.0
            if math.isinf(seg.b) and pmass < 1e-14 * max(total_mass, 1e-300):
                break
            if a > seg.a + 1e6:
                break
    return out


def _hp_rational(g: CMFunction, A: np.ndarray | GeneratorMatrix) -> np.ndarray:
    """(I + A/n)^{-n} for g(z) = (1 + z/n)^{-n}, by binary-powered solves."""
    import re

    m = re.match(r"euler(?:_gamma(\d+)|_pow(\d+))?$", g.name)
    if not m:
        raise ValueError("rational route applies to Euler-type functions only")
    n = int(m.group(1) or m.group(2) or 1)
    M = A.matrix if isinstance(A, GeneratorMatrix) else np.asarray(A, dtype=complex)
    d = M.shape[0]
    base = np.linalg.solve(np.eye(d, dtype=complex) + M / n, np.eye(d, dtype=complex))
    return np.linalg.matrix_power(base, n)


def scheme_apply(g, A: GeneratorMatrix, t: float, n: int, path: str = "auto") -> np.ndarray:
    """g_t^n((t/n) A), the scheme matrix approximating e^{-tA}.

    `g` is a CMFunction or a ScaledFamily (then g_t = family.at(t)).
    """
    gt = g.at(t) if isinstance(g, ScaledFamily) else g
    if path == "auto" and A.structure in ("diagonal", "diagonalizable"):
        return A.spectral_map(lambda lam: gt.eval_at(t * lam / n) ** n)
    B = hp_apply(gt, _scaled_generator(A, t / n), path=path)
    return np.linalg.matrix_power(B, n)


def _scaled_generator(A: GeneratorMatrix, c: float) -> GeneratorMatrix:
    return GeneratorMatrix(c * A.matrix, A.structure, A.spectrum_location,
                           name=A.name, eigs=None if A.eigs is None else c * A.eigs,
                           V=A.V, Vinv=A.Vinv)


def scheme_scalar(g, t: float, n: int, lam) -> np.ndarray:
    """g_t(t lam / n)^n on an array of (complex) spectral points."""
    gt = g.at(t) if isinstance(g, ScaledFamily) else g
    return np.array([gt.eval_at(t * l / n) ** n for l in np.atleast_1d(lam)])


# ----------------------------------------------------------------------
# semigroup constants
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SemigroupConstants:
    M: tuple            # (M0, M1, M2, M3, M4)
    method: str         # "closed-form" | "sampled-sup"

    def __getitem__(self, beta):
        if float(beta).is_integer():
            return self.M[int(beta)]
        # moment interpolation for non-integer orders (valid closed form
        # for positive real spectrum; conservative bound otherwise)
        lo, hi = int(math.floor(beta)), int(math.ceil(beta))
        if self.method == "closed-form":
            return (beta / math.e) ** beta
        return 3.0 * (self.M[lo] + self.M[hi])


def semigroup_constants(A: GeneratorMatrix) -> SemigroupConstants:
    """M_beta = sup_t ||(tA)^beta e^{-tA}||.

    Positive real spectrum: M_beta = (beta/e)^beta exactly (scalar sup of
    (t lam)^beta e^{-t lam}, attained inside the spectrum for the dense
    gallery grids).  Imaginary spectrum: M_0 = 1, M_beta = inf for
    beta > 0.  Otherwise a sampled sup over a log grid in t.
    """
    if A.spectrum_location == "positive":
        M = tuple((b / math.e) ** b if b > 0 else 1.0 for b in range(5))
        return SemigroupConstants(M, "closed-form")
    if A.spectrum_location == "imaginary":
        return SemigroupConstants((1.0, math.inf, math.inf, math.inf, math.inf),
                                  "closed-form")
    ts = np.logspace(-6, 6, 512)
    M = []
    for b in range(5):
        sup = 0.0
        for t in ts:
            B = semigroup_at(A, t)
            if b > 0:
                B = np.linalg.matrix_power(t * A.matrix, b) @ B
            sup = max(sup, opnorm(B))
        M.append(sup)
    return SemigroupConstants(tuple(M), "sampled-sup")
