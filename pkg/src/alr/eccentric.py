"""Non-resonance construction for an off-center circular core.

The core is ``Sigma = B_rho(z0)`` with ``0 in Sigma`` and ``Sigma`` inside
the unit disk.  ``A = +1`` in the core and outside ``B_R``, ``-1`` in
``B_R minus Sigma``.  Complex notation ``z = x1 + i x2`` is used; ``w``
denotes ``z - z0``.

Elementary fields are ``Re(c z^-k)`` in the shell continued harmonically
into the core.  On the core circle the exterior Laurent series in ``w``
mirrors the interior Taylor series, so the two one-sided normal
derivatives cancel in the flux jump ``-d_nu|out - d_nu|in``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import binom

from .certificates import PrimalCertificate, _core_layer, radial_V_hat
from .harmonics import (
    EVEN,
    ODD,
    LayerDensity,
    LayeredHarmonicField,
    Mode,
    flux_jump,
    interaction_coeff,
    single_layer_energy,
    single_layer_solve,
)
from .radial import SingularSystemError, SourceSpectrum, k_cutoff

__all__ = [
    "EccentricConfig",
    "TruncationError",
    "AdmissibilityReport",
    "TwoCenterField",
    "ErrorExpansion",
    "CorrectionCoefficients",
    "GalerkinResult",
    "admissibility",
    "build_V",
    "boundary_error",
    "pointwise_flux_error",
    "m_cutoff",
    "corrections",
    "verify_corrections",
    "primal_certificate",
    "galerkin_solve",
]


class TruncationError(ValueError):
    """The expansion order is too low for the requested accuracy; carries the tail bound."""

    def __init__(self, message: str, bound: float):
        super().__init__(message)
        self.bound = bound


@dataclass(frozen=True)
class AdmissibilityReport:
    """The three geometric conditions with their slacks (positive = satisfied)."""

    q_over_R3: tuple[bool, float]
    eps_condition: tuple[bool, float, float]
    shift_condition: tuple[bool, float]

    @property
    def passed(self) -> bool:
        return self.q_over_R3[0] and self.eps_condition[0] and self.shift_condition[0]


@dataclass(frozen=True)
class EccentricConfig:
    R: float
    q: float
    eta: float
    source: SourceSpectrum
    rho: float
    z0: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "z0", complex(self.z0))
        if not (1 < self.R < self.q):
            raise ValueError("need 1 < R < q")
        if not self.eta > 0:
            raise ValueError("loss eta must be positive")
        if not (0 < self.rho <= 1):
            raise ValueError("core radius must lie in (0, 1]")
        if abs(self.z0) >= self.rho:
            raise ValueError("the origin must lie inside the core")
        if abs(self.z0) + self.rho > 1 + 1e-15:
            raise ValueError("the core must lie inside the unit disk")
        if self.source.power is not None and self.source.power <= 1 and self.source.K is None:
            raise ValueError("source spectrum must be absolutely summable")

    @property
    def concentric(self) -> bool:
        return self.z0 == 0 and self.rho == 1

    @cached_property
    def admissibility(self) -> AdmissibilityReport:
        return admissibility(self)

    def with_eta(self, eta: float) -> "EccentricConfig":
        return dataclasses.replace(self, eta=eta)


def admissibility(config: EccentricConfig) -> AdmissibilityReport:
    """Evaluate ``q > R^3``, ``(eps0 + R^2/q)/(1-eps1)^2 < 1/R`` and ``1 + eps0 <= R``.

    ``eps0 = |z0|`` and ``eps1 = 1 - rho``.
    """
    R, q = config.R, config.q
    e0, e1 = abs(config.z0), 1 - config.rho
    lhs = (e0 + R**2 / q) / (1 - e1) ** 2
    rhs = 1 / R
    return AdmissibilityReport(
        (q > R**3, q - R**3),
        (lhs < rhs, lhs, rhs),
        (1 + e0 <= R, R - 1 - e0),
    )


def _laurent(amp: float, parity: str) -> complex:
    """``c`` with ``amp * r^-k trig(k t) = Re(c z^-k)``."""
    return complex(amp) if parity == EVEN else 1j * amp


def _taylor(amp: float, parity: str) -> complex:
    """``c`` with ``amp * r^k trig(k t) = Re(c z^k)``."""
    return complex(amp) if parity == EVEN else -1j * amp


def _inner_coeffs(laurent: dict[int, complex], rho: float, z0: complex, M: int) -> np.ndarray:
    """Taylor coefficients in ``w`` of the harmonic extension of ``Re sum c_k z^-k``.

    ``e_m = conj(c_k binom(-k, m-k) z0^(m-k)) rho^(-2m)``, summed over k.
    """
    e = np.zeros(M + 1, complex)
    for k, c in laurent.items():
        if k > M:
            raise ValueError(f"expansion order M={M} below wave number {k}")
        for m in range(k, M + 1):
            e[m] += np.conj(c * interaction_coeff(m, k, rho, z0) / (np.pi * rho)) * rho ** (-2 * m)
    return e


def _extension_tail(laurent: dict[int, complex], rho: float, z0: complex, M: int) -> float:
    """Sup bound on the circle for the discarded Taylor terms, via the Q-weighted estimate."""
    Q = 0.5 * (rho - abs(z0))
    x = (abs(z0) + Q) / rho
    if x == 0:
        return 0.0
    return float(sum(abs(c) * Q ** (1 - k) * x**M / (rho * (1 - x)) for k, c in laurent.items()))


@dataclass(frozen=True, eq=False)
class TwoCenterField:
    """Field given by origin bands outside the core and a Taylor series in ``w`` inside.

    ``outer`` must not be evaluated inside the core; ``inner`` holds ``e_m``
    with ``u = Re sum e_m w^m`` for ``|w| < rho``.
    """

    outer: LayeredHarmonicField
    rho: float
    z0: complex
    inner: np.ndarray = field(repr=False)
    laurent: dict = field(default_factory=dict, repr=False)
    tail_bound: float = 0.0

    def _in_core(self, z):
        return np.abs(np.asarray(z, complex) - self.z0) < self.rho

    def __call__(self, z):
        z = np.asarray(z, complex)
        out = np.real(self.outer(z))
        core = self._in_core(z)
        if np.any(core):
            w = z[core] - self.z0
            out[core] = np.real(np.polynomial.polynomial.polyval(w, self.inner))
        return out

    def core_normal_derivative(self, phi, side: str):
        """``d_nu`` on the core circle from inside or outside (``nu`` outward of the core)."""
        nu = np.exp(1j * np.asarray(phi, float))
        z = self.z0 + self.rho * nu
        if side == "in":
            m = np.arange(len(self.inner))
            return np.real(np.polynomial.polynomial.polyval(z - self.z0, m * self.inner)) / self.rho
        gx, gy = self.outer.gradient(z)
        return np.real(gx * nu.real + gy * nu.imag)

    def inner_energy(self) -> float:
        m = np.arange(len(self.inner))
        return float(np.sum(np.pi * m * (np.abs(self.inner) * self.rho**m) ** 2))


def build_V(
    config: EccentricConfig,
    M: int | None = None,
    modes: list[tuple[Mode, float]] | None = None,
    tol: float = 1e-12,
) -> TwoCenterField:
    """Main part ``V = sum lambda_k v_k`` with ``lambda_k = -a_k (q/2k) q^-k R^2k``.

    Outside the core the bands coincide with the concentric elementary
    fields; inside the core the harmonic extension is truncated at order M.
    Without ``M`` the smallest order whose tail bound is below ``tol`` (relative)
    is used; an explicit ``M`` with a larger tail raises
    :class:`TruncationError`.
    """
    R, q, rho, z0 = config.R, config.q, config.rho, config.z0
    entries = config.source.entries() if modes is None else modes
    kmax = max((m.k for m, _ in entries), default=0)
    # the innermost origin band is never evaluated (it lies inside the core)
    inner_r = 0.5 * (rho - abs(z0))
    bp = (inner_r, R, q)
    ms = tuple(m for m, _ in entries)
    c = np.zeros((4, len(ms), 2), complex)
    laurent: dict[int, complex] = {}
    for j, (mode, amp) in enumerate(entries):
        k = mode.k
        lam = -amp * q / (2 * k) * q ** (-k) * R ** (2 * k)
        c[1, j, 1] = lam
        c[2, j, 0] = lam * R ** (-2 * k)
        c[3, j, 1] = lam * (q / R) ** (2 * k)
        laurent[k] = laurent.get(k, 0j) + _laurent(lam, mode.parity)
    outer = LayeredHarmonicField(0.0, bp, ms, c)
    scale = max((abs(v) * (rho + abs(z0)) ** (-k) for k, v in laurent.items()), default=0.0)
    if M is None:
        M = kmax + 20
        while _extension_tail(laurent, rho, z0, M) > tol * scale and M < kmax + 2000:
            M += 10
    tail = _extension_tail(laurent, rho, z0, M)
    if tail > tol * max(scale, 1e-300):
        raise TruncationError(f"core extension truncated at M={M}: tail bound {tail:.3e} above tolerance", tail)
    inner = _inner_coeffs(laurent, rho, z0, M) if laurent else np.zeros(M + 1, complex)
    return TwoCenterField(outer, rho, z0, inner, laurent, tail)


def _V_energy(V: TwoCenterField, R: float) -> float:
    """Dirichlet energy of :func:`build_V` output in closed form.

    Inside ``B_R`` the energy is twice the core energy minus the
    ``|c_k|^2 pi k R^-2k`` boundary term on ``|z| = R``; outside it is the
    band energy.
    """
    e_core = V.inner_energy()
    boundary = sum(np.pi * k * (abs(c) * R ** (-k)) ** 2 for k, c in V.laurent.items())
    return 2 * e_core - boundary + V.outer.energy((R, np.inf))


@dataclass(frozen=True)
class ErrorExpansion:
    """Flux defect ``F = Re sum mu_m w^m`` of ``V`` on the core circle.

    ``F = A_out d_nu V|out - A_in d_nu V|in`` with ``A_out = -1``, ``A_in = +1``.
    """

    mu_out: np.ndarray
    mu_in: np.ndarray
    m_star: int
    C_hat: float

    @property
    def mu(self) -> np.ndarray:
        return self.mu_out + self.mu_in


def m_cutoff(rho: float, R: float, eta: float) -> int:
    """Smallest integer ``m >= 1`` with ``(rho/R)^(2m) <= eta``."""
    m = 1
    while (rho / R) ** (2 * m) > eta:
        m += 1
    return m


def boundary_error(config: EccentricConfig, M: int | None = None, V: TwoCenterField | None = None) -> ErrorExpansion:
    """Expand the flux defect of ``V`` on the core circle in powers of ``w``.

    The exterior part ``-d_nu Re(c z^-k)|out`` follows from the Laurent
    series of ``z^-k`` about ``z0``, the interior part from the harmonic
    extension; both are truncated at order M.
    """
    V = build_V(config, M) if V is None else V
    M = len(V.inner) - 1
    rho, z0 = config.rho, config.z0
    m = np.arange(M + 1)
    # exterior Laurent coefficients d_n w^-n mirror to conj(d_n) rho^-2n w^n on the circle
    mirrored = np.zeros(M + 1, complex)
    for k, c in V.laurent.items():
        n = np.arange(k, M + 1)
        # binom(-k, j) = (-1)^j binom(k+j-1, j)
        d = c * (-1.0) ** (n - k) * binom(n - 1, n - k) * z0 ** (n - k)
        mirrored[k:] += np.conj(d) * rho ** (-2.0 * n)
    mu_out = (m / rho) * mirrored
    mu_in = -(m / rho) * V.inner
    mu = mu_out + mu_in
    C = float(np.max(np.abs(mu) * config.R ** m.astype(float), initial=0.0))
    return ErrorExpansion(mu_out, mu_in, m_cutoff(rho, config.R, config.eta), C)


def pointwise_flux_error(V: TwoCenterField, n: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Flux defect of ``V`` sampled directly at ``n`` points of the core circle."""
    phi = 2 * np.pi * np.arange(n) / n
    F = -V.core_normal_derivative(phi, "out") - V.core_normal_derivative(phi, "in")
    return phi, F


@dataclass(frozen=True)
class CorrectionCoefficients:
    """Amplitudes of the plasmon corrections ``Re(z^k)`` and ``Im(z^k)``, k = 1..m*."""

    beta_hat: np.ndarray
    beta_tilde: np.ndarray
    C: float


def corrections(error: ErrorExpansion, config: EccentricConfig) -> CorrectionCoefficients:
    """``beta_hat_k - i beta_tilde_k = (rho/k) sum_{m=k}^{m*} mu_m binom(m-1,k-1) (-z0)^(m-k)``."""
    rho, z0 = config.rho, config.z0
    mu = error.mu
    ms = min(error.m_star, len(mu) - 1)
    bh = np.zeros(ms + 1)
    bt = np.zeros(ms + 1)
    for k in range(1, ms + 1):
        mm = np.arange(k, ms + 1)
        s = np.sum(mu[mm] * binom(mm - 1, k - 1) * (-z0) ** (mm - k))
        b = rho / k * s
        bh[k], bt[k] = b.real, -b.imag
    ks = np.arange(1, ms + 1)
    growth = config.R ** (-ks.astype(float)) * (1 + abs(z0)) ** (ks - 1.0)
    C = float(np.max(np.hypot(bh[1:], bt[1:]) / growth, initial=0.0))
    return CorrectionCoefficients(bh, bt, C)


def verify_corrections(corr: CorrectionCoefficients, error: ErrorExpansion, config: EccentricConfig, n: int = 256) -> float:
    """Max pointwise gap between ``sum beta d_nu (plasmon)`` and the low part of ``F``."""
    rho, z0 = config.rho, config.z0
    phi = 2 * np.pi * np.arange(n) / n
    w = rho * np.exp(1j * phi)
    z = z0 + w
    lhs = np.zeros(n)
    for k in range(1, len(corr.beta_hat)):
        X = w * z ** (k - 1)
        lhs += k / rho * (corr.beta_hat[k] * X.real + corr.beta_tilde[k] * X.imag)
    ms = min(error.m_star, len(error.mu) - 1)
    F_low = np.real(np.polynomial.polynomial.polyval(w, np.where(np.arange(len(error.mu)) <= ms, error.mu, 0)))
    return float(np.max(np.abs(lhs - F_low)))


def _density_from_series(coeffs: np.ndarray, rho: float, z0: complex, m_min: int = 1) -> LayerDensity:
    """Layer density ``Re sum c_m w^m`` on the core circle as cos/sin amplitudes."""
    modes, amps = [], []
    for m in range(m_min, len(coeffs)):
        c = coeffs[m] * rho**m
        if c.real != 0:
            modes.append(Mode(m, EVEN))
            amps.append(c.real)
        if c.imag != 0:
            modes.append(Mode(m, ODD))
            amps.append(-c.imag)
    return LayerDensity(rho, z0, tuple(modes), amps)


def primal_certificate(config: EccentricConfig, M: int | None = None, n_quad: int | None = None) -> PrimalCertificate:
    """Primal upper bound for the eccentric core.

    Modes up to ``k* = k(eta)`` use the two-center fields of :func:`build_V`;
    higher modes use the source-radius plasmon whose flux defects on the
    core circle and on ``|z| = R`` are absorbed by single layers in ``w``.
    Residual defects of ``V`` are split at ``m*``: the low part is cancelled
    by shell plasmons, the high part goes into ``w``.  Terms with a common
    center are closed form; the layer interaction across centers uses the
    trapezoid rule on the core circle.
    """
    R, q, eta, rho, z0 = config.R, config.q, config.eta, config.rho, config.z0
    k_star = k_cutoff(R, eta)
    entries = config.source.entries()
    low = [(m, a) for m, a in entries if m.k <= k_star]
    high = [(m, a) for m, a in entries if m.k > k_star]
    V = build_V(config, M, low)
    M = len(V.inner) - 1
    err = boundary_error(config, V=V)
    corr = corrections(err, config)

    # origin-centered part of v: high-frequency plasmons at q and corrections at R
    G = LayeredHarmonicField.zero(0.0, (R, q))
    w_R = LayeredHarmonicField.zero(0.0, (R,))
    g_core = LayerDensity(rho, z0, (), [])
    for mode, amp in high:
        k = mode.k
        lam = -amp * q / (2 * k) * q ** (-k)
        G = G + lam * radial_V_hat(k, q, mode.parity)
        w_R = w_R + single_layer_solve(LayerDensity(R, 0.0, (mode,), [-2 * k * lam * R ** (k - 1)]))
        g_core = g_core + _core_layer(k, mode.parity, rho, z0) * (-lam)
    for k in range(1, len(corr.beta_hat)):
        for parity, b in ((EVEN, corr.beta_hat[k]), (ODD, corr.beta_tilde[k])):
            if b != 0:
                G = G + 0.5 * b * _shell_plasmon(k, R, parity)
                g_core = g_core + _core_layer(k, parity, rho, z0) * (-0.5 * b)
    # F_high enters -Lap w = -F_high
    mu_high = np.where(np.arange(len(err.mu)) > err.m_star, err.mu, 0)
    if np.any(mu_high != 0):
        g_core = g_core + _density_from_series(-mu_high, rho, z0)

    # energies
    e_V = _V_energy(V, R)
    e_G = G.energy()
    cross = 0.0
    for b in G.breakpoints:
        jumps = G.radial_derivative(b, "out") - G.radial_derivative(b, "in")
        tv = V.outer.refine(G.breakpoints).with_modes(sorted(set(V.outer.modes) | set(G.modes)))
        t = tv.trace(b, "in")
        idx = [tv.modes.index(m) for m in G.modes]
        cross += -np.pi * b * float(np.real(np.sum(t[idx] * jumps)))
    # split the v energy: concentric-type fields with k <= k* vs the rest
    t_low = 0.5 * eta * e_V
    t_high = 0.5 * eta * (e_G + 2 * cross)

    n_quad = n_quad or max(512, 4 * (M + config.source.kmax) + 64)
    phi = 2 * np.pi * np.arange(n_quad) / n_quad
    zc = z0 + rho * np.exp(1j * phi)
    e_w = w_R.energy() + single_layer_energy(g_core)
    if g_core.modes and w_R.modes:
        # int grad w_R . grad w_core = int_{core circle} w_R g_core
        e_w += 2 * float(np.real(np.sum(w_R(zc) * g_core(phi))) * 2 * np.pi * rho / n_quad)
    t_w = e_w / (2 * eta)

    w_core = single_layer_solve(g_core) if g_core.modes else None
    res = _eccentric_residual(config, V, G, w_R, w_core, g_core)
    extra = {
        "m_star": err.m_star,
        "mu_decay_constant": err.C_hat,
        "beta_constant": corr.C,
        "extension_tail": V.tail_bound,
        "cross_V_G": cross,
        "M": M,
    }
    return PrimalCertificate(k_star, t_low + t_high + t_w, (t_low, t_high, t_w), res, extra=extra)


def _shell_plasmon(k: int, R: float, parity: str) -> LayeredHarmonicField:
    """Plasmon ``r^k`` inside ``R`` and ``R^2k r^-k`` outside, on breakpoints ``(R, q)``-compatible form."""
    c = np.zeros((2, 1, 2), complex)
    c[0, 0, 0] = 1.0
    c[1, 0, 1] = R ** (2 * k)
    return LayeredHarmonicField(0.0, (R,), (Mode(k, parity),), c)


def _eccentric_residual(config, V, G, w_R, w_core, g_core, n: int = 256) -> float:
    """Relative residual of ``[A d_nu v] - [d_nu w] - F`` on the core circle, ``|z| = R`` and ``|z| = q``."""
    R, q, rho, z0 = config.R, config.q, config.rho, config.z0
    scale = max((abs(a) for _, a in config.source.entries()), default=0.0)
    if scale == 0:
        return 0.0
    worst = 0.0
    # core circle, pointwise
    phi = 2 * np.pi * np.arange(n) / n
    nu = np.exp(1j * phi)
    z = z0 + rho * nu
    jump = -V.core_normal_derivative(phi, "out") - V.core_normal_derivative(phi, "in")
    if G.modes:
        gx, gy = G.gradient(z)
        jump = jump - 2 * np.real(gx * nu.real + gy * nu.imag)
    if w_core is not None:
        jump = jump + np.real(g_core(phi))
    worst = max(worst, float(np.max(np.abs(jump))) / scale)
    # origin circles, per mode
    bp = V.outer.breakpoints
    A = [1.0, -1.0, 1.0, 1.0]
    vo = V.outer + G.refine(bp)
    wo = w_R.refine(bp) if w_R.modes else None
    for b in (R, q):
        jv = flux_jump(vo, A, b)
        jw = flux_jump(wo, np.ones(4), b) if wo is not None else None
        for m in jv.modes:
            target = config.source.amplitude(m) if b == q else 0.0
            val = jv.amplitude(m) - (jw.amplitude(m) if jw is not None else 0.0) - target
            worst = max(worst, abs(val) / scale)
    return float(worst)


@dataclass(frozen=True, eq=False)
class GalerkinResult:
    """Truncated two-center solution of the lossy transmission problem."""

    E: float
    E_source: float
    identity_residual: float
    cond: float
    M: int
    coefficients: np.ndarray = field(repr=False)
    _basis: tuple = field(repr=False, default=())
    _eta: float = 0.0

    def region_of(self, z):
        z = np.asarray(z, complex)
        _, _, rho, z0, R, q = self._basis[0]
        reg = np.full(z.shape, 2)
        reg[np.abs(z) >= q] = 3
        reg[np.abs(z) < R] = 1
        reg[np.abs(z - z0) < rho] = 0
        return reg

    def __call__(self, z):
        z = np.asarray(z, complex)
        reg = self.region_of(z)
        out = np.zeros(z.shape, complex)
        for r in range(4):
            sel = reg == r
            if np.any(sel):
                out[sel] = _eval_region(self._basis[1][r], self.coefficients, z[sel], None)[0]
        return out


def _basis_functions(M, rho, z0, R, q):
    """Scaled basis per region as tuples ``(column, center, power, scale, anti)``."""
    regions = [[], [], [], []]
    col = 0

    def add(r, c, p, s, anti):
        nonlocal col
        regions[r].append((col, c, p, s, anti))
        col += 1

    for m in range(M + 1):
        add(0, z0, m, rho ** (-m), False)
        if m:
            add(0, z0, m, rho ** (-m), True)
    for n in range(M + 1):
        add(1, 0.0, n, R ** (-n), False)
        if n:
            add(1, 0.0, n, R ** (-n), True)
    for m in range(1, M + 1):
        add(1, z0, -m, rho**m, False)
        add(1, z0, -m, rho**m, True)
    for n in range(M + 1):
        add(2, 0.0, n, q ** (-n), False)
        if n:
            add(2, 0.0, n, q ** (-n), True)
    for n in range(1, M + 1):
        add(2, 0.0, -n, R**n, False)
        add(2, 0.0, -n, R**n, True)
    for n in range(1, M + 1):
        add(3, 0.0, -n, q**n, False)
        add(3, 0.0, -n, q**n, True)
    return regions, col


def _eval_region(basis, coeffs, z, nu):
    """Values (and normal derivatives if ``nu`` given) of a region's basis.

    Returns the field if ``coeffs`` is given, else the matrices.
    """
    ncol = max(b[0] for b in basis) + 1
    V = np.zeros((len(z), ncol), complex)
    D = np.zeros((len(z), ncol), complex) if nu is not None else None
    for col, c, p, s, anti in basis:
        d = z - c
        if anti:
            d = np.conj(d)
        V[:, col] = s * d ** float(p)
        if nu is not None:
            dp = s * p * d ** float(p - 1) if p != 0 else 0.0
            D[:, col] = dp * (np.conj(nu) if anti else nu)
    if coeffs is not None:
        c = coeffs[:ncol]
        return V @ c, (D @ c if D is not None else None)
    return V, D


def galerkin_solve(config: EccentricConfig, M: int = 40, N: int | None = None, max_cond: float = 1e12) -> GalerkinResult:
    """Solve the lossy problem with truncated two-center harmonic expansions.

    Core: powers of ``w`` and ``conj(w)``.  Shell: powers of ``z`` plus
    negative powers of ``w``.  Matrix annulus and exterior: powers of ``z``.
    Continuity of ``u`` and of ``a d_nu u`` (flux jump ``F`` on ``|z| = q``)
    is imposed on Fourier modes ``-M..M`` of each circle.  The energy is
    assembled from boundary pairings ``int conj(u) d_nu u`` per region.
    """
    R, q, eta, rho, z0 = config.R, config.q, config.eta, config.rho, config.z0
    regions, ncol = _basis_functions(M, rho, z0, R, q)
    a = np.array([1.0, -1.0, 1.0, 1.0]) + 1j * eta
    N = N or max(256, int(2 ** np.ceil(np.log2(8 * (M + 1)))))
    t = 2 * np.pi * np.arange(N) / N
    nu = np.exp(1j * t)
    circles = [(z0, rho, 0, 1), (0.0, R, 1, 2), (0.0, q, 2, 3)]
    keep = np.r_[0 : M + 1, N - M : N]
    rows, rhs = [], []
    src = np.zeros(N)
    for mode, amp in config.source.entries():
        src += amp * mode.trig(t)
    for ci, (c, r, rin, rout) in enumerate(circles):
        z = c + r * nu
        Vi, Di = _eval_region(regions[rin], None, z, nu)
        Vo, Do = _eval_region(regions[rout], None, z, nu)
        cont = np.zeros((N, ncol), complex)
        cont[:, : Vi.shape[1]] += Vi
        cont[:, : Vo.shape[1]] -= Vo
        flux = np.zeros((N, ncol), complex)
        flux[:, : Do.shape[1]] += a[rout] * Do
        flux[:, : Di.shape[1]] -= a[rin] * Di
        fc = np.fft.fft(cont, axis=0)[keep] / N
        ff = np.fft.fft(flux, axis=0)[keep] / N
        rhs_f = np.fft.fft(src if ci == 2 else np.zeros(N))[keep] / N
        rows.append(fc)
        rhs.append(np.zeros(len(keep), complex))
        rows.append(ff[1:])
        rhs.append(rhs_f[1:])
    A_mat = np.vstack(rows)
    b = np.concatenate(rhs)
    cond = float(np.linalg.cond(A_mat))
    if not np.isfinite(cond) or cond > max_cond:
        raise SingularSystemError(f"Galerkin system with M={M} is ill-conditioned; raise M or move off degeneracy", cond)
    x = np.linalg.solve(A_mat, b)

    def pairing(region, c, r, sign):
        z = c + r * nu
        u, du = _eval_region(regions[region], x, z, nu)
        return sign * float(np.real(np.sum(np.conj(u) * du))) * 2 * np.pi * r / N

    grad2 = (
        pairing(0, z0, rho, 1)
        + pairing(1, 0.0, R, 1) + pairing(1, z0, rho, -1)
        + pairing(2, 0.0, q, 1) + pairing(2, 0.0, R, -1)
        + pairing(3, 0.0, q, -1)
    )
    E = 0.5 * eta * grad2
    uq, _ = _eval_region(regions[2], x, q * nu, nu)
    E_src = -0.5 * float(np.imag(np.sum(src * np.conj(uq)) * 2 * np.pi * q / N))
    resid = abs(E - E_src) / abs(E) if E != 0 else abs(E_src)
    return GalerkinResult(E, E_src, resid, cond, M, x, ((None, None, rho, z0, R, q), regions), eta)
