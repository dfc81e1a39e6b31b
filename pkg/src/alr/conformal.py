"""Dual certificates for a coreless shell ``D_R = Phi(B_R)`` under a polynomial map.

The perfect plasmon of the disk is transported by ``Psi = Phi^-1``; it stays
A-harmonic because normal derivatives are conjugated consistently on both
sides of ``dD_R``.  A cutoff between ``D_Q`` and ``D_s`` makes the trial
field compactly supported, and the free-space Poisson problem for ``v``
absorbs the defect the cutoff creates.

All integrals are taken in the preimage plane, where the cutoff annulus is
round.  Dirichlet energies are conformally invariant and the Laplacian
picks up ``|Phi'|^2``, so the Poisson source becomes ``Lap(chi psi_hat)``
there.  The logarithmic kernel transforms as

    log|Phi(z) - Phi(x)| = log|z - x| + Re log D(z, x),

with ``D`` the divided difference of ``Phi``; the first part is handled by a
polar mode expansion and the smooth second part by moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .certificates import dual_nocore
from .harmonics import EVEN, ODD, Mode
from .radial import SourceSpectrum

__all__ = [
    "InjectivityCertificate",
    "PolynomialMap",
    "PolarGrid",
    "PoissonResult",
    "MappedCertificate",
    "NumericalGateError",
    "invert",
    "mapped_plasmon",
    "plasmon_flux_jump",
    "certificate_schedule",
    "cutoff",
    "poisson_free_space",
    "dual_certificate",
    "nocore_reference",
]


class NumericalGateError(RuntimeError):
    """A self-convergence or conditioning gate failed; no result is reported."""


@dataclass(frozen=True)
class InjectivityCertificate:
    method: str
    margin: float
    boundary_winding: int
    critical_winding: int
    passed: bool


@dataclass(frozen=True)
class PolynomialMap:
    """``Phi(z) = z + c_2 z^2 + ... + c_d z^d`` with radii ``R < q < Q < s``.

    ``coefficients`` holds ``(c_2, ..., c_d)``.  ``Q`` defaults to the
    midpoint of ``(q^2/R, s)``.
    """

    coefficients: tuple = ()
    R: float = 1.5
    q: float = 1.7
    s: float = 2.2
    Q: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(complex(c) for c in self.coefficients))
        R, q, s = self.R, self.q, self.s
        if not (1 < R < q < s):
            raise ValueError("need 1 < R < q < s")
        if not s > q**2 / R:
            raise ValueError(f"need s > q^2/R = {q**2 / R:.6g}")
        if self.Q is None:
            object.__setattr__(self, "Q", 0.5 * (q**2 / R + s))
        if not (q**2 / R < self.Q < s):
            raise ValueError(f"Q must lie in (q^2/R, s) = ({q**2 / R:.6g}, {s:.6g})")
        if not self.injectivity.passed:
            raise ValueError(f"Phi is not certified injective on B_s ({self.injectivity.method})")

    @classmethod
    def identity(cls, R: float, q: float, s: float, Q: float | None = None) -> "PolynomialMap":
        return cls((), R, q, s, Q)

    @property
    def degree(self) -> int:
        c = list(self.coefficients)
        while c and c[-1] == 0:
            c.pop()
        return len(c) + 1

    @property
    def is_identity(self) -> bool:
        return self.degree == 1

    def _poly(self) -> np.ndarray:
        return np.array([0.0, 1.0, *self.coefficients], complex)

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(np.asarray(z, complex), self._poly())

    def derivative(self, z):
        return np.polynomial.polynomial.polyval(np.asarray(z, complex), np.polynomial.polynomial.polyder(self._poly()))

    def divided_difference(self, z, x):
        """``D(z, x) = (Phi(z) - Phi(x)) / (z - x)``, polynomial in both arguments."""
        z, x = np.broadcast_arrays(np.asarray(z, complex), np.asarray(x, complex))
        out = np.ones(z.shape, complex)
        for j, c in enumerate(self.coefficients, start=2):
            h = np.zeros(z.shape, complex)
            for i in range(j):
                h = h + z**i * x ** (j - 1 - i)
            out = out + c * h
        return out

    @cached_property
    def injectivity(self) -> InjectivityCertificate:
        s = self.s
        margin = 1.0 - sum(j * abs(c) * s ** (j - 1) for j, c in enumerate(self.coefficients, start=2))
        n = 2048
        t = 2 * np.pi * np.arange(n) / n
        zb = s * np.exp(1j * t)
        wind = _winding(self(zb))
        crit = _winding(self.derivative(zb))
        if self.degree <= 6 and margin > 0:
            # Re Phi' > 0 on the convex disk
            return InjectivityCertificate("derivative-bound", margin, wind, crit, wind == 1 and crit == 0)
        simple = wind == 1 and crit == 0 and not _self_intersects(self(zb))
        return InjectivityCertificate("winding", margin, wind, crit, simple)

    def boundary(self, radius: float, n: int = 256) -> np.ndarray:
        return self(radius * np.exp(2j * np.pi * np.arange(n) / n))


def _winding(w: np.ndarray) -> int:
    if np.any(w == 0):
        return -1
    d = np.angle(np.roll(w, -1) / w)
    return int(round(np.sum(d) / (2 * np.pi)))


def _self_intersects(w: np.ndarray) -> bool:
    """Proper crossings between non-adjacent edges of a closed polygon."""
    a, b = w, np.roll(w, -1)
    n = len(w)

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    for i in range(n):
        j = np.arange(i + 2, n if i else n - 1)
        if not len(j):
            continue
        p, r = a[i], b[i] - a[i]
        qq, sv = a[j], b[j] - a[j]
        den = cross(r, sv)
        ok = den != 0
        t = cross(qq - p, sv) / np.where(ok, den, 1)
        u = cross(qq - p, r) / np.where(ok, den, 1)
        if np.any(ok & (t > 0) & (t < 1) & (u > 0) & (u < 1)):
            return True
    return False


def invert(phi: PolynomialMap, w, tol: float = 1e-12, maxiter: int = 60):
    """``z`` in ``B_s`` with ``Phi(z) = w`` by Newton's method.

    Points where the direct iteration stalls are continued along
    ``Phi_t(z) = z + t (Phi(z) - z)``.  Injectivity on ``B_s`` makes the
    root unique.
    """
    w = np.asarray(w, complex)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    if phi.is_identity:
        z = w.copy()
    else:
        z = _newton(phi, w, w.copy(), 1.0, maxiter)
        bad = ~np.isfinite(z) | (np.abs(phi(z) - w) > tol) | (np.abs(z) >= phi.s)
        if np.any(bad):
            zb = w[bad].copy()
            for t in np.linspace(0, 1, 33)[1:]:
                zb = _newton(phi, w[bad], zb, t, maxiter)
            z[bad] = zb
    if np.any(np.abs(z) >= phi.s):
        raise ValueError("point lies outside D_s")
    res = np.abs(phi(z) - w)
    if np.any(res > tol):
        raise NumericalGateError(f"inversion residual {res.max():.3e} above {tol:.1e}")
    return z[0] if scalar else z


def _newton(phi, w, z, t, maxiter):
    p = phi._poly()
    p_t = p.copy()
    p_t[2:] *= t
    dp = np.polynomial.polynomial.polyder(p_t)
    for _ in range(maxiter):
        f = np.polynomial.polynomial.polyval(z, p_t) - w
        step = f / np.polynomial.polynomial.polyval(z, dp)
        z = z - step
        if np.all(np.abs(step) <= 1e-15 * np.maximum(1, np.abs(z))):
            break
    return z


def mapped_plasmon(phi: PolynomialMap, k: int, points, parity: str = EVEN, side: str | None = None):
    """Value and gradient of ``psi_k o Psi`` with ``psi_k`` the disk plasmon at ``R``.

    ``psi_k = r^k cos(k theta)`` inside ``B_R`` and ``R^2k r^-k cos(k theta)``
    outside (``sin`` for odd parity).  Returns ``(value, grad_x, grad_y)``.  ``side``
    forces the inner or outer branch, for evaluation on ``dD_R``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    x = np.asarray(points, complex)
    zeta = invert(phi, x)
    return _plasmon_at(phi, k, zeta, parity, side)


def _plasmon_at(phi, k, zeta, parity, side):
    R = phi.R
    zeta = np.asarray(zeta, complex)
    inside = np.abs(zeta) < R if side is None else np.full(zeta.shape, side == "in")
    G = np.where(inside, zeta**k, R ** (2 * k) * zeta ** (-k))
    dG = np.where(inside, k * zeta ** (k - 1), -k * R ** (2 * k) * zeta ** (-k - 1)) / phi.derivative(zeta)
    if parity == ODD:
        # Im(z^k) inside, -R^2k Im(z^-k) outside: both equal r^+-k sin(k theta) scaled
        rot = np.where(inside, -1j, 1j)
        G, dG = rot * G, rot * dG
    # grad Re(f) = conj(f') as a complex vector
    g = np.conj(dG)
    return np.real(G), g.real, g.imag


def plasmon_flux_jump(phi: PolynomialMap, k: int, n: int = 256, parity: str = EVEN) -> float:
    """Max jump of ``nu . A grad psi`` across ``dD_R``, relative to the local gradient."""
    zeta = phi.R * np.exp(2j * np.pi * np.arange(n) / n)
    nu = phi.derivative(zeta) * zeta / abs(phi.R)
    nu = nu / np.abs(nu)
    _, gxi, gyi = _plasmon_at(phi, k, zeta, parity, "in")
    _, gxo, gyo = _plasmon_at(phi, k, zeta, parity, "out")
    fin = gxi * nu.real + gyi * nu.imag
    fout = gxo * nu.real + gyo * nu.imag
    scale = np.maximum(np.hypot(gxi, gyi), np.hypot(gxo, gyo))
    scale = np.where(scale > 0, scale, 1.0)
    # A = -1 inside, +1 outside
    return float(np.max(np.abs(fout + fin) / scale))


def certificate_schedule(phi: PolynomialMap, eta: float) -> tuple[int, float]:
    """``k = round(ln eta / ln(R/Q))`` (at least 1) and ``lam^2 = (Q/R^3)^k / k``."""
    if not eta > 0:
        raise ValueError("loss eta must be positive")
    k = max(1, int(round(math.log(eta) / math.log(phi.R / phi.Q))))
    lam = math.sqrt((phi.Q / phi.R**3) ** k / k)
    return k, lam


def cutoff(rho, Q: float, s: float, order: int = 0):
    """Quintic smoothstep ``chi`` (or a derivative): 1 on ``[0, Q]``, 0 on ``[s, inf)``."""
    rho = np.asarray(rho, float)
    L = s - Q
    t = np.clip((rho - Q) / L, 0.0, 1.0)
    inside = (rho > Q) & (rho < s)
    if order == 0:
        return 1.0 - (10 * t**3 - 15 * t**4 + 6 * t**5)
    if order == 1:
        return np.where(inside, -(30 * t**2 - 60 * t**3 + 30 * t**4) / L, 0.0)
    if order == 2:
        return np.where(inside, -(60 * t - 180 * t**2 + 120 * t**3) / L**2, 0.0)
    raise ValueError("order must be 0, 1 or 2")


@dataclass(frozen=True)
class PolarGrid:
    """Gauss-Legendre nodes on the support annulus ``[a, b]`` times a uniform angle grid."""

    a: float
    b: float
    nr: int
    ntheta: int

    def __post_init__(self):
        if not 0 < self.a < self.b:
            raise ValueError("support annulus needs 0 < a < b")
        if self.nr < 2 or self.ntheta < 4:
            raise ValueError("grid too coarse")

    @cached_property
    def nodes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x, wx = np.polynomial.legendre.leggauss(self.nr)
        r = 0.5 * (self.b - self.a) * x + 0.5 * (self.b + self.a)
        wr = 0.5 * (self.b - self.a) * wx
        theta = 2 * np.pi * np.arange(self.ntheta) / self.ntheta
        return r, wr, theta

    def refined(self) -> "PolarGrid":
        return PolarGrid(self.a, self.b, 2 * self.nr, 2 * self.ntheta)


@dataclass(frozen=True, eq=False)
class PoissonResult:
    """Decaying solution of ``Lap v = g`` for ``g`` supported in an annulus."""

    energy: float
    grid: PolarGrid
    modes: np.ndarray = field(repr=False)
    coefficients: np.ndarray = field(repr=False)
    self_convergence: float = 0.0

    def __call__(self, r, theta):
        """``v(r, theta)``, integrating each mode separately on either side of ``r``."""
        r = np.asarray(r, float)
        theta = np.asarray(theta, float)
        shape = np.broadcast(r, theta).shape
        r, theta = np.broadcast_to(r, shape).ravel(), np.broadcast_to(theta, shape).ravel()
        a, b, nr = self.grid.a, self.grid.b, self.grid.nr
        x, wx = np.polynomial.legendre.leggauss(nr)
        # Legendre interpolants of the radial mode profiles on [a, b]
        V = np.polynomial.legendre.legvander(x, nr - 1)
        leg = (V * wx[:, None]).T @ self.coefficients.T * (2 * np.arange(nr) + 1)[:, None] / 2
        out = np.zeros(r.shape, complex)
        for lo, hi, below in ((a, np.clip(r, a, b), True), (np.clip(r, a, b), b, False)):
            t = 0.5 * (hi - lo)[:, None] * x + 0.5 * (hi + lo)[:, None]
            w = 0.5 * (hi - lo)[:, None] * wx
            prof = np.polynomial.legendre.legval((2 * t - a - b) / (b - a), leg)
            for j, n in enumerate(self.modes):
                gn = prof[j]
                if n == 0:
                    kern = np.log(np.maximum(r[:, None], t))
                else:
                    m = abs(n)
                    kern = -((t / r[:, None]) ** m if below else (r[:, None] / t) ** m) / (2 * m)
                out += np.sum(gn * kern * t * w, axis=1) * np.exp(1j * n * theta)
        return np.real(out).reshape(shape)


def _cumulative(vals: np.ndarray, grid: PolarGrid) -> np.ndarray:
    """``int_a^r f dt`` at the Gauss nodes from the Legendre interpolant of ``f``."""
    x, wx = np.polynomial.legendre.leggauss(grid.nr)
    V = np.polynomial.legendre.legvander(x, grid.nr - 1)
    c = (V * wx[:, None]).T @ vals * (2 * np.arange(grid.nr) + 1)[:, None] / 2
    ci = np.polynomial.legendre.legint(c, lbnd=-1)
    return np.polynomial.legendre.legval(x, ci).T * 0.5 * (grid.b - grid.a) if vals.ndim == 1 else (
        np.polynomial.legendre.legvander(x, grid.nr) @ ci * 0.5 * (grid.b - grid.a)
    )


def _poisson_once(g: np.ndarray, grid: PolarGrid, mode_tol: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Energy ``-int v g`` mode by mode.

    The kernel ``(r</r>)^n`` is split at the diagonal so that both the
    inner cumulative integral and the outer integral have smooth integrands.
    """
    r, wr, _ = grid.nodes
    gh = np.fft.fft(g, axis=1) / grid.ntheta
    ns = np.fft.fftfreq(grid.ntheta, 1.0 / grid.ntheta).astype(int)
    peak = np.max(np.abs(gh)) if gh.size else 0.0
    keep = [j for j in range(grid.ntheta) if np.max(np.abs(gh[:, j])) > mode_tol * peak]
    E = 0.0
    for j in keep:
        n = ns[j]
        gn = gh[:, j]
        if n == 0:
            inner = _cumulative(np.stack([(gn * r).real, (gn * r).imag], axis=1), grid)
            inner = inner[:, 0] + 1j * inner[:, 1]
            E += -4 * np.pi * float(np.real(np.sum(np.conj(gn) * r * np.log(r) * inner * wr)))
        else:
            m = abs(n)
            # scale by b^m to keep powers bounded
            f = gn * (r / grid.b) ** (m + 1)
            inner = _cumulative(np.stack([f.real, f.imag], axis=1), grid)
            inner = inner[:, 0] + 1j * inner[:, 1]
            outer = np.conj(gn) * r * (r / grid.b) ** (-m)
            E += 2 * np.pi / m * grid.b * float(np.real(np.sum(outer * inner * wr)))
    return E, ns[keep], gh[:, keep].T


def poisson_free_space(
    g: Callable,
    support: tuple[float, float],
    nr: int = 24,
    ntheta: int = 64,
    tol: float = 1e-6,
    max_refine: int = 4,
) -> PoissonResult:
    """Bounded solution of ``Lap v = g`` in the plane and ``int |grad v|^2``.

    ``g(r, theta)`` must vanish outside ``support = (a, b)`` and have zero
    mean.  Per angular mode the radial Green kernel is ``-(r</r>)^n / 2n``
    (``log r>`` for ``n = 0``); the energy ``-int v g`` is summed mode by
    mode.  The grid is doubled until two successive energies agree to
    ``tol`` relative.
    """
    a, b = support
    probe_t = 2 * np.pi * np.arange(64) / 64
    for rr in (a * (1 - 1e-3), b * (1 + 1e-3), 2 * b):
        if np.any(np.abs(g(np.full(64, rr), probe_t)) > 0):
            raise ValueError(f"source does not vanish at r = {rr:.6g}: support not inside the grid annulus")
    grid = PolarGrid(a, b, nr, ntheta)
    prev = None
    for _ in range(max_refine + 1):
        r, _, theta = grid.nodes
        vals = np.asarray(g(r[:, None], theta[None, :]), float)
        E, ns, coef = _poisson_once(vals, grid, 1e-14)
        if prev is not None:
            change = abs(E - prev) / max(abs(E), 1e-300)
            if change <= tol:
                return PoissonResult(E, grid, ns, coef, change)
        prev = E
        grid = grid.refined()
    raise NumericalGateError(f"Poisson energy not self-converged to {tol:.1e} after {max_refine} refinements")


@dataclass(frozen=True)
class MappedCertificate:
    """Lower bound ``J = coupling - psi term - v term`` for the mapped plasmon.

    ``terms`` are signed contributions.  ``J_opt`` uses the maximizing
    multiple of the same trial pair.
    """

    k: int
    lam: float
    J_lower: float
    terms: tuple[float, float, float]
    lam_opt: float
    J_opt: float
    self_convergence: float
    flux_residual: float
    extra: dict = field(default_factory=dict, repr=False, compare=False)


def _plasmon_radial(k, R, rho):
    """``f = R^2k rho^-k`` and its first two derivatives (outer plasmon profile)."""
    f = np.exp(2 * k * np.log(R) - k * np.log(rho))
    return f, -k * f / rho, k * (k + 1) * f / rho**2


def _psi_energy(phi: PolynomialMap, k: int, n: int) -> float:
    """``int |grad (chi psi_k)|^2`` over the preimage plane (conformally invariant)."""
    R, Q, s = phi.R, phi.Q, phi.s
    e = np.pi * k * R ** (2 * k) + np.pi * k * R ** (4 * k) * (R ** (-2 * k) - Q ** (-2 * k))
    x, wx = np.polynomial.legendre.leggauss(n)
    rho = 0.5 * (s - Q) * x + 0.5 * (s + Q)
    w = 0.5 * (s - Q) * wx
    f, df, _ = _plasmon_radial(k, R, rho)
    chi, dchi = cutoff(rho, Q, s), cutoff(rho, Q, s, 1)
    u, du = chi * f, dchi * f + chi * df
    return float(e + np.pi * np.sum((du**2 + (k / rho) ** 2 * u**2) * rho * w))


def _source(phi: PolynomialMap, k: int, parity: str):
    """``Lap(chi psi_k)`` in the cutoff annulus of the preimage plane."""
    R, Q, s = phi.R, phi.Q, phi.s
    trig = np.cos if parity == EVEN else np.sin

    def g(rho, theta):
        rho = np.asarray(rho, float)
        f, df, _ = _plasmon_radial(k, R, np.maximum(rho, R))
        c1, c2 = cutoff(rho, Q, s, 1), cutoff(rho, Q, s, 2)
        radial = c2 * f + 2 * c1 * df + c1 * f / rho
        return np.where((rho > Q) & (rho < s), radial, 0.0) * trig(k * np.asarray(theta))

    return g


def _log_divided_difference_coeffs(phi: PolynomialMap, J: int, radius: float):
    """Taylor coefficients ``a_jl`` of ``log D(z, x)`` for ``j, l <= J``."""
    n = 1 << int(np.ceil(np.log2(4 * (J + 1))))
    t = 2 * np.pi * np.arange(n) / n
    z = radius * np.exp(1j * t)
    D = phi.divided_difference(z[:, None], z[None, :])
    if np.any(D.real <= 0):
        raise NumericalGateError("divided difference leaves the right half-plane; log D branch unresolved")
    raw = np.fft.fft2(np.log(D)) / n**2
    mid = slice(n // 2 - 2, n // 2 + 2)
    tail = float(max(np.max(np.abs(raw[mid, :])), np.max(np.abs(raw[:, mid]))))
    scale = radius ** -np.arange(J + 1.0)
    return raw[: J + 1, : J + 1] * scale[:, None] * scale[None, :], tail


def _moments(g_vals: np.ndarray, grid: PolarGrid, J: int) -> np.ndarray:
    """``m_j = int g z^j dA`` for ``j = 0..J``."""
    r, wr, _ = grid.nodes
    # int g e^{ij theta} dtheta = 2 pi * conj-mode coefficient -j
    gh = np.fft.fft(g_vals, axis=1) / grid.ntheta
    out = np.zeros(J + 1, complex)
    for j in range(J + 1):
        col = (-j) % grid.ntheta
        out[j] = 2 * np.pi * np.sum(gh[:, col] * r ** (j + 1) * wr)
    return out


def _v_energy(phi: PolynomialMap, k: int, parity: str, tol: float):
    """Free-space energy of the Poisson field with source ``Lap(chi psi_k)`` in the physical plane."""
    g = _source(phi, k, parity)
    ntheta = max(64, 1 << int(np.ceil(np.log2(8 * k))))
    res = poisson_free_space(g, (phi.Q, phi.s), nr=24, ntheta=ntheta, tol=tol)
    if phi.is_identity:
        return res.energy, res.self_convergence, 0.0
    # smooth part of the transported logarithmic kernel
    J = 2 * k + 8
    vals = []
    grids = [res.grid, res.grid.refined()]
    A, tail = _log_divided_difference_coeffs(phi, J, phi.s)
    for grid in grids:
        r, _, theta = grid.nodes
        m = _moments(np.asarray(g(r[:, None], theta[None, :]), float), grid, J)
        vals.append(-float(np.real(m @ A @ m)) / (2 * np.pi))
    corr = vals[1]
    change = abs(vals[1] - vals[0]) / max(abs(res.energy + corr), 1e-300)
    if change > tol:
        raise NumericalGateError(f"kernel correction not self-converged ({change:.2e})")
    return res.energy + corr, max(res.self_convergence, change), tail


def _coupling(phi: PolynomialMap, k: int, parity: str, F: SourceSpectrum, n: int) -> float:
    """``int_{dD_q} F psi_k ds`` through the pullback ``F o Phi`` on ``dB_q``."""
    q, R = phi.q, phi.R
    t = 2 * np.pi * np.arange(n) / n
    Fq = np.zeros(n)
    for mode, amp in F.entries():
        Fq += amp * mode.trig(t)
    trig = np.cos if parity == EVEN else np.sin
    jac = np.abs(phi.derivative(q * np.exp(1j * t))) * q
    psi = np.exp(2 * k * np.log(R) - k * np.log(q)) * trig(k * t)
    return float(np.sum(Fq * psi * jac) * 2 * np.pi / n)


def dual_certificate(
    phi: PolynomialMap,
    F: SourceSpectrum,
    eta: float,
    k: int | None = None,
    lam: float | None = None,
    parity: str = EVEN,
    tol: float = 1e-6,
) -> MappedCertificate:
    """Dual lower bound from ``psi = lam h (psi_k o Psi)`` and its Poisson corrector.

    ``F`` lists the Fourier coefficients of ``F o Phi`` on ``dB_q``.  By
    default ``k`` and ``lam`` follow :func:`certificate_schedule`.  Each term
    is computed by quadrature and must be stable to ``tol`` under grid
    doubling.
    """
    if not eta > 0:
        raise ValueError("loss eta must be positive")
    k_s, lam_s = certificate_schedule(phi, eta)
    k = k_s if k is None else int(k)
    lam = lam_s if lam is None else float(lam)
    if k < 1:
        raise ValueError("k must be >= 1")
    nq = max(512, 1 << int(np.ceil(np.log2(8 * (k + F.kmax + 16)))))
    c = _coupling(phi, k, parity, F, nq)
    c2 = _coupling(phi, k, parity, F, 2 * nq)
    p_psi = _psi_energy(phi, k, 48)
    p_psi2 = _psi_energy(phi, k, 96)
    p_v, conv_v, tail = _v_energy(phi, k, parity, tol)
    conv = max(conv_v, abs(c2 - c) / max(abs(c), 1e-300), abs(p_psi2 - p_psi) / p_psi)
    if conv > tol:
        raise NumericalGateError(f"certificate terms not self-converged ({conv:.2e})")
    # J(lam) = lam c - lam^2 (eta/2 P_psi + P_v / (2 eta))
    b = 0.5 * eta * p_psi + 0.5 * p_v / eta
    terms = (lam * c, -0.5 * eta * lam**2 * p_psi, -0.5 * lam**2 * p_v / eta)
    lam_opt = c / (2 * b)
    J_opt = c * lam_opt - b * lam_opt**2
    flux = plasmon_flux_jump(phi, k, parity=parity)
    extra = {"coupling_unit": c, "psi_energy_unit": p_psi, "v_energy_unit": p_v, "log_kernel_tail": tail, "Q": phi.Q}
    return MappedCertificate(k, lam, float(sum(terms)), terms, lam_opt, J_opt, conv, flux, extra)


def nocore_reference(phi: PolynomialMap, F: SourceSpectrum, eta: float, k: int, lam: float | None = None):
    """Closed-form coreless certificate at the same ``k`` and ``lam``, for degeneration checks."""
    return dual_nocore(phi.R, phi.q, k, F.amplitude(Mode(k, EVEN)), eta, lam)
