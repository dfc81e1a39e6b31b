"""Closed-form primal (upper) and dual (lower) energy certificates.

Dual pairs ``(v, psi)`` satisfy ``div(A grad psi) + eta Lap v = 0`` and give

    J = int f psi - (eta/2) int |grad psi|^2 - (eta/2) int |grad v|^2 <= E.

Primal pairs ``(v, w)`` satisfy ``div(A grad v) - Lap w = f`` and give

    I = (eta/2) int |grad v|^2 + (1/(2 eta)) int |grad w|^2 >= E.

All trial fields are layered harmonic fields, so every term is evaluated
exactly rather than estimated.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import binom

from .harmonics import (
    EVEN,
    ODD,
    LayerDensity,
    LayeredHarmonicField,
    Mode,
    flux_jump,
    plasmon_wave,
    single_layer_energy,
    single_layer_solve,
)
from .radial import RadialConfig, SourceSpectrum, energy, k_cutoff

__all__ = [
    "DualCertificate",
    "PrimalCertificate",
    "SandwichReport",
    "dual_nocore",
    "dual_with_core",
    "best_dual_nocore",
    "primal_radial",
    "radial_v_hat",
    "radial_V_hat",
    "sandwich_check",
]


@dataclass(frozen=True)
class DualCertificate:
    """Lower bound ``J`` built from ``psi = lambda * plasmon_k``.

    ``terms`` are ``(coupling, -(eta/2)|grad psi|^2, -(eta/2)|grad v|^2)``.
    ``a`` and ``b`` describe the quadratic ``J(lambda) = a lambda - b lambda^2``.
    ``lam_sched`` is the closed-form amplitude ``q alpha_k (R/q)^k / (2 (R+1) k)``
    and ``J_sched`` its value, never above ``J_opt``.
    """

    kind: str
    k: int
    lam: float
    J: float
    terms: tuple[float, float, float]
    a: float
    b: float
    lam_opt: float
    J_opt: float
    lam_sched: float | None = None
    J_sched: float | None = None
    constraint_residual: float = 0.0
    conclusive: bool = True

    def value(self, lam: float) -> float:
        return self.a * lam - self.b * lam**2


@dataclass(frozen=True)
class PrimalCertificate:
    """Upper bound ``I`` with its three energy terms.

    ``terms`` are ``((eta/2)|grad v_low|^2, (eta/2)|grad v_high|^2,
    (1/2eta)|grad w|^2)``.
    """

    k_star: int
    I: float
    terms: tuple[float, float, float]
    constraint_residual: float = 0.0
    v: LayeredHarmonicField | None = field(default=None, repr=False, compare=False)
    w: LayeredHarmonicField | None = field(default=None, repr=False, compare=False)
    extra: dict = field(default_factory=dict, repr=False, compare=False)


def _quadratic(a: float, b: float, lam: float | None):
    lam_opt = a / (2 * b) if b > 0 else 0.0
    lam_use = lam_opt if lam is None else float(lam)
    return lam_use, a * lam_use - b * lam_use**2, lam_opt, a * lam_opt - b * lam_opt**2


def dual_nocore(R: float, q: float, k: int, alpha_k: float, eta: float, lam: float | None = None) -> DualCertificate:
    """Dual certificate for the coreless shell ``B_R``.

    ``psi`` is a multiple of the perfect plasmon wave, which is A-harmonic
    everywhere, so ``v = 0``.  Without ``lam`` the exact maximizer
    ``a / 2b`` of the quadratic is used.
    """
    if not q > R > 0:
        raise ValueError("need q > R > 0")
    if k < 1:
        raise ValueError("k must be >= 1")
    if not eta > 0:
        raise ValueError("eta must be positive")
    if alpha_k == 0:
        warnings.warn("alpha_k = 0: the certificate is trivial", RuntimeWarning, stacklevel=2)
        return DualCertificate("no-core", k, 0.0, 0.0, (0.0, 0.0, 0.0), 0.0, 0.0, 0.0, 0.0, conclusive=False)
    a = alpha_k * np.pi * q ** (1 - k) * R ** (2 * k)
    b = eta * np.pi * k * R ** (2 * k)
    lam_use, J, lam_opt, J_opt = _quadratic(a, b, lam)
    terms = (a * lam_use, -b * lam_use**2, 0.0)
    # the plasmon is A-harmonic at R: zero flux jump
    coef = np.array([-1.0, 1.0])
    res = flux_jump(plasmon_wave(k, R), coef, R).max_abs()
    return DualCertificate("no-core", k, lam_use, J, terms, a, b, lam_opt, J_opt, constraint_residual=res)


def best_dual_nocore(R: float, q: float, eta: float, spectrum: SourceSpectrum) -> DualCertificate:
    """Largest single-mode coreless dual certificate over the spectrum."""
    best = None
    for mode, amp in spectrum.entries():
        c = dual_nocore(R, q, mode.k, amp, eta)
        if best is None or c.J > best.J:
            best = c
    if best is None:
        return DualCertificate("no-core", 0, 0.0, 0.0, (0.0, 0.0, 0.0), 0.0, 0.0, 0.0, 0.0, conclusive=False)
    return best


def _core_layer(k: int, parity: str, rho: float, z0: complex) -> LayerDensity:
    """Density of ``div(A grad Re/Im z^k)`` on the core circle.

    With ``A = +1`` inside and ``-1`` outside the core the jump is
    ``-2 d_nu`` of the plasmon, which expands in finitely many powers of
    ``z - z0``.
    """
    modes, amps = [], []
    for j in range(1, k + 1):
        c = binom(k, j) * complex(z0) ** (k - j)
        if parity == ODD:
            # Im(c w^j) = rho^j (Im c cos + Re c sin)
            pair = (c.imag, c.real)
        else:
            # Re(c w^j) = rho^j (Re c cos - Im c sin)
            pair = (c.real, -c.imag)
        scale = -2.0 * (j / rho) * rho**j
        for parity_j, val in zip((EVEN, ODD), pair):
            if val != 0:
                modes.append(Mode(j, parity_j))
                amps.append(scale * val)
    return LayerDensity(rho, z0, tuple(modes), amps)


def dual_with_core(
    R: float,
    q: float,
    eta: float,
    spectrum: SourceSpectrum,
    k: int | None = None,
    lam: float | None = None,
    parity: str = EVEN,
    rho: float = 1.0,
    z0: complex = 0.0,
) -> DualCertificate:
    """Dual certificate with a circular core ``B_rho(z0)`` inside ``B_1``.

    ``k`` defaults to the smallest integer with ``R^-k < eta``.  The plasmon
    fails to be A-harmonic only on the core circle; ``v`` is the single-layer
    potential cancelling that defect.  The scheduled amplitude
    ``c0 alpha (R/q)^k / (2 C0 k)`` with ``c0 = pi q`` and ``C0 = pi (R+1)``
    is reported next to the exact maximizer.
    """
    if not (1 < R < q):
        raise ValueError("need 1 < R < q")
    if not eta > 0:
        raise ValueError("eta must be positive")
    if abs(z0) >= rho or abs(z0) + rho > 1 + 1e-15:
        raise ValueError("core must contain the origin and lie in the unit disk")
    k = k_cutoff(R, eta) if k is None else int(k)
    alpha = spectrum.amplitude(Mode(k, parity))
    kind = "with-core" if z0 == 0 and rho == 1 else "eccentric-core"
    if alpha == 0:
        warnings.warn(f"spectrum has no component on mode k={k}; certificate is inconclusive", RuntimeWarning, stacklevel=2)
        return DualCertificate(kind, k, 0.0, 0.0, (0.0, 0.0, 0.0), 0.0, 0.0, 0.0, 0.0, conclusive=False)
    a = alpha * np.pi * q ** (1 - k) * R ** (2 * k)
    b_psi = eta * np.pi * k * R ** (2 * k)
    layer = _core_layer(k, parity, rho, z0)
    # v solves -Lap v = layer / eta for unit lambda
    b_v = 0.5 * eta * single_layer_energy(layer * (1 / eta))
    b = b_psi + b_v
    lam_use, J, lam_opt, J_opt = _quadratic(a, b, lam)
    lam_sched = np.pi * q * alpha * (R / q) ** k / (2 * np.pi * (R + 1) * k)
    J_sched = a * lam_sched - b * lam_sched**2
    terms = (a * lam_use, -b_psi * lam_use**2, -b_v * lam_use**2)
    res = _dual_residual(k, parity, R, rho, z0, layer, eta)
    return DualCertificate(kind, k, lam_use, J, terms, a, b, lam_opt, J_opt, lam_sched, J_sched, res)


def _dual_residual(k, parity, R, rho, z0, layer, eta, n=64):
    """Pointwise ``[A d_nu psi] + eta [d_nu v]`` on the core circle, unit lambda."""
    t = 2 * np.pi * np.arange(n) / n
    nu = np.exp(1j * t)
    z = z0 + rho * nu
    psi = plasmon_wave(k, R, parity)
    gx, gy = psi.gradient(z)
    dpsi = (gx * nu.real + gy * nu.imag).real
    # A jumps from +1 (core) to -1 (shell); psi is smooth across the core circle
    jump_psi = -2.0 * dpsi
    v = single_layer_solve(layer * (1 / eta))
    d_out = v.radial_derivative(rho, "out")
    d_in = v.radial_derivative(rho, "in")
    jump_v = sum((do - di) * m.trig(t) for m, do, di in zip(v.modes, d_out, d_in))
    total = jump_psi + eta * np.real(jump_v)
    return float(np.max(np.abs(total)) / max(np.max(np.abs(jump_psi)), 1e-300))


def radial_v_hat(k: int, R: float, q: float, parity: str = EVEN) -> LayeredHarmonicField:
    """Elementary field that is A-harmonic off ``r = q`` for the unit core.

    Bands: ``r^k`` (core), ``r^-k`` (shell), ``R^-2k r^k`` (matrix),
    ``(q/R)^2k r^-k`` (outside the source circle).
    """
    c = np.zeros((4, 1, 2), complex)
    c[0, 0, 0] = 1.0
    c[1, 0, 1] = 1.0
    c[2, 0, 0] = R ** (-2 * k)
    c[3, 0, 1] = (q / R) ** (2 * k)
    return LayeredHarmonicField(0.0, (1.0, R, q), (Mode(k, parity),), c)


def radial_V_hat(k: int, q: float, parity: str = EVEN) -> LayeredHarmonicField:
    """Plasmon wave for the source radius: ``r^k`` inside ``q``, ``q^2k r^-k`` outside."""
    return plasmon_wave(k, q, parity)


def primal_radial(R: float, q: float, eta: float, spectrum: SourceSpectrum, core: bool = True, k_star: int | None = None) -> PrimalCertificate:
    """Primal certificate with a low/high frequency split at ``k*``.

    Modes ``k <= k*`` use :func:`radial_v_hat`, which satisfies the
    constraint exactly.  Modes ``k > k*`` use :func:`radial_V_hat`; its flux
    defects on ``r = 1`` and ``r = R`` are absorbed by the single-layer
    field ``w``.  Without a core every mode is treated as high frequency.
    """
    if not (1 < R < q):
        raise ValueError("need 1 < R < q")
    if not eta > 0:
        raise ValueError("eta must be positive")
    if k_star is None:
        k_star = k_cutoff(R, eta) if core else 0
    elif not core and k_star != 0:
        raise ValueError("without a core only k* = 0 is available")
    bp = (1.0, R, q) if core else (R, q)
    v_low = LayeredHarmonicField.zero(0.0, bp)
    v_high = LayeredHarmonicField.zero(0.0, bp)
    w = LayeredHarmonicField.zero(0.0, bp)
    for mode, amp in spectrum.entries():
        k = mode.k
        if k <= k_star:
            lam = -amp * q / (2 * k) * q ** (-k) * R ** (2 * k)
            v_low = v_low + lam * radial_v_hat(k, R, q, mode.parity)
        else:
            lam = -amp * q / (2 * k) * q ** (-k)
            v_high = v_high + lam * radial_V_hat(k, q, mode.parity)
            # flux defect of lam * V_hat at R (and at 1 with a core); -Lap w = -defect
            g_R = -lam * 2 * k * R ** (k - 1)
            w = w + single_layer_solve(LayerDensity(R, 0.0, (mode,), [g_R]))
            if core:
                w = w + single_layer_solve(LayerDensity(1.0, 0.0, (mode,), [2 * k * lam]))
    t_low = 0.5 * eta * v_low.energy()
    t_high = 0.5 * eta * v_high.energy()
    t_w = w.energy() / (2 * eta)
    v = (v_low + v_high).refine(bp)
    w = w.refine(bp)
    res = _primal_residual(v, w, spectrum, core, q)
    return PrimalCertificate(k_star, t_low + t_high + t_w, (t_low, t_high, t_w), res, v, w)


def _primal_residual(v: LayeredHarmonicField, w: LayeredHarmonicField, spectrum: SourceSpectrum, core: bool, q: float) -> float:
    """Max over breakpoints of ``|[A d_r v] - [d_r w] - F|`` relative to ``max |F|``."""
    A = [1.0, -1.0, 1.0, 1.0] if core else [-1.0, 1.0, 1.0]
    ones = np.ones(v.n_regions)
    scale = max((abs(a) for _, a in spectrum.entries()), default=0.0)
    if scale == 0:
        return 0.0
    worst = 0.0
    for b in v.breakpoints:
        jv = flux_jump(v, A, b)
        jw = flux_jump(w, ones, b) if v.modes else jv * 0
        for m in jv.modes:
            target = spectrum.amplitude(m) if b == q else 0.0
            worst = max(worst, abs(jv.amplitude(m) - jw.amplitude(m) - target) / scale)
    return float(worst)


@dataclass(frozen=True)
class SandwichReport:
    J: float
    E: float
    I: float
    lower_margin: float
    upper_margin: float
    dual: DualCertificate
    primal: PrimalCertificate

    @property
    def ok(self) -> bool:
        return self.lower_margin >= -1e-10 and self.upper_margin >= -1e-10


def sandwich_check(config: RadialConfig) -> SandwichReport:
    """Evaluate ``J <= E <= I`` for one configuration.

    Margins are ``(E - J)/E`` and ``(I - E)/E`` (absolute when ``E = 0``).
    """
    rep = energy(config)
    E = rep.E
    s = config.source
    if config.core:
        k = k_cutoff(config.R, config.eta)
        parity = EVEN if s.amplitude(Mode(k, EVEN)) != 0 or s.amplitude(Mode(k, ODD)) == 0 else ODD
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            dual = dual_with_core(config.R, config.q, config.eta, s, parity=parity)
    else:
        dual = best_dual_nocore(config.R, config.q, config.eta, s)
    primal = primal_radial(config.R, config.q, config.eta, s, core=config.core)
    scale = E if E > 0 else 1.0
    return SandwichReport(dual.J, E, primal.I, (E - dual.J) / scale, (primal.I - E) / scale, dual, primal)
