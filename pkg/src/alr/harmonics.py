"""Piecewise-harmonic fields on circular layers.

A field is stored as coefficient bands around a common center.  In the
region between two consecutive breakpoints every angular mode carries a
pair ``(c+, c-)`` multiplying ``r**k`` and ``r**-k``.  Coefficients are
complex so that lossy fields fit in the same container.

The flux-jump convention used throughout the package is

    [a d_r u] = a_out * d_r u|_out - a_in * d_r u|_in

with the outward radial normal.  A layer density ``g`` on a circle enters
``-Lap w = g`` so that ``[d_r w] = -g``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import binom

__all__ = [
    "Mode",
    "LayeredHarmonicField",
    "LayerDensity",
    "InteractionTable",
    "ShiftedExpansion",
    "PowerSeries",
    "InfiniteEnergyError",
    "TruncationWarning",
    "plasmon_wave",
    "gradient_energy",
    "flux_jump",
    "single_layer_solve",
    "single_layer_energy",
    "interaction_coeff",
    "interaction_quadrature",
    "interaction_table",
    "q_weighted_sum",
    "shifted_trace_expansion",
    "reexpand_about_origin",
]

EVEN = "even"
ODD = "odd"


class InfiniteEnergyError(ValueError):
    """Raised when a requested Dirichlet energy diverges."""


class TruncationWarning(UserWarning):
    """A truncated expansion may not meet its accuracy target."""


@dataclass(frozen=True, order=True)
class Mode:
    """Angular mode ``cos(k theta)`` (even) or ``sin(k theta)`` (odd)."""

    k: int
    parity: str = EVEN

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ValueError(f"wave number must be a nonnegative integer, got {self.k}")
        if self.parity not in (EVEN, ODD):
            raise ValueError(f"parity must be 'even' or 'odd', got {self.parity!r}")
        if self.k == 0 and self.parity == ODD:
            raise ValueError("k = 0 has no odd (sine) mode")
        object.__setattr__(self, "k", int(self.k))

    def trig(self, theta):
        return np.cos(self.k * theta) if self.parity == EVEN else np.sin(self.k * theta)

    def dtrig(self, theta):
        """Derivative of :meth:`trig` with respect to theta."""
        if self.parity == EVEN:
            return -self.k * np.sin(self.k * theta)
        return self.k * np.cos(self.k * theta)


def _as_modes(modes: Iterable) -> tuple[Mode, ...]:
    out = []
    for m in modes:
        if isinstance(m, Mode):
            out.append(m)
        elif isinstance(m, (tuple, list)):
            out.append(Mode(*m))
        else:
            out.append(Mode(int(m)))
    return tuple(out)


def _pow(r, e):
    """``r**e`` for positive radii, returning +inf instead of warning."""
    with np.errstate(over="ignore", divide="ignore"):
        return np.power(np.asarray(r, dtype=float), np.asarray(e, dtype=float))


def _band_energy(k, cp, cm, r1, r2):
    """Dirichlet energy of ``(cp r^k + cm r^-k) trig(k theta)`` on r1 < r < r2.

    Cross terms between ``cp`` and ``cm`` integrate to zero.  Products are
    formed as ``(|c| r^k)**2`` so that large radii and tiny coefficients do
    not overflow separately.
    """
    if k == 0:
        return 0.0
    e = 0.0
    if cp != 0:
        if not np.isfinite(r2):
            raise InfiniteEnergyError("growing band r^k on an unbounded region")
        e += np.pi * k * ((abs(cp) * r2**k) ** 2 - (abs(cp) * r1**k) ** 2)
    if cm != 0:
        if r1 <= 0:
            raise InfiniteEnergyError("singular band r^-k reaching the center")
        outer = 0.0 if not np.isfinite(r2) else (abs(cm) * r2 ** (-k)) ** 2
        e += np.pi * k * ((abs(cm) * r1 ** (-k)) ** 2 - outer)
    return float(e)


@dataclass(frozen=True, eq=False)
class LayeredHarmonicField:
    """Piecewise-harmonic field around ``center``.

    ``coeffs`` has shape ``(len(breakpoints) + 1, len(modes), 2)``; the last
    axis holds ``(c+, c-)``.  Region 0 is the disk inside the first
    breakpoint and the last region extends to infinity.
    """

    center: complex
    breakpoints: tuple[float, ...]
    modes: tuple[Mode, ...]
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        if any(b <= 0 for b in bp) or any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError(f"breakpoints must be positive and strictly increasing: {bp}")
        modes = _as_modes(self.modes)
        if len(set(modes)) != len(modes):
            raise ValueError("duplicate modes")
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (len(bp) + 1, len(modes), 2):
            raise ValueError(f"coeffs shape {c.shape} does not match regions x modes x 2")
        for j, m in enumerate(modes):
            if m.k == 0:
                if np.any(c[:, j, 1] != 0):
                    raise ValueError("k = 0 bands carry constants only (store them in c+)")
            else:
                if c[0, j, 1] != 0:
                    raise ValueError(f"innermost region must be regular for {m}")
                if c[-1, j, 0] != 0:
                    raise InfiniteEnergyError(f"outermost region must decay for {m}")
        c.setflags(write=False)
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "coeffs", c)

    # -- construction helpers -------------------------------------------------
    @classmethod
    def zero(cls, center: complex = 0.0, breakpoints: Sequence[float] = ()):
        return cls(center, tuple(breakpoints), (), np.zeros((len(breakpoints) + 1, 0, 2)))

    @property
    def n_regions(self) -> int:
        return len(self.breakpoints) + 1

    def region_edges(self, i: int) -> tuple[float, float]:
        edges = (0.0,) + self.breakpoints + (np.inf,)
        return edges[i], edges[i + 1]

    def region_of(self, r: float, side: str = "in") -> int:
        """Region index of radius ``r``; at a breakpoint ``side`` picks in/out."""
        i = int(np.searchsorted(self.breakpoints, r, side="left"))
        if side == "out" and i < len(self.breakpoints) and np.isclose(r, self.breakpoints[i], rtol=1e-14, atol=0):
            i += 1
        return i

    def mode_index(self, mode: Mode) -> int | None:
        try:
            return self.modes.index(mode)
        except ValueError:
            return None

    def band(self, region: int, mode: Mode) -> tuple[complex, complex]:
        j = self.mode_index(mode)
        if j is None:
            return 0j, 0j
        cp, cm = self.coeffs[region, j]
        return complex(cp), complex(cm)

    def refine(self, breakpoints: Iterable[float]) -> "LayeredHarmonicField":
        """Same field on the union of its breakpoints and ``breakpoints``."""
        new_bp = tuple(sorted(set(self.breakpoints) | {float(b) for b in breakpoints}))
        if new_bp == self.breakpoints:
            return self
        new = np.zeros((len(new_bp) + 1, len(self.modes), 2), complex)
        for i in range(len(new_bp) + 1):
            lo = 0.0 if i == 0 else new_bp[i - 1]
            hi = np.inf if i == len(new_bp) else new_bp[i]
            probe = lo + 1.0 if not np.isfinite(hi) else 0.5 * (lo + hi)
            new[i] = self.coeffs[self.region_of(probe)]
        return LayeredHarmonicField(self.center, new_bp, self.modes, new)

    def with_modes(self, modes: Iterable[Mode]) -> "LayeredHarmonicField":
        """Same field listing ``modes`` (a superset of the current ones)."""
        modes = _as_modes(modes)
        new = np.zeros((self.n_regions, len(modes), 2), complex)
        for j, m in enumerate(self.modes):
            if m not in modes:
                raise ValueError(f"mode {m} would be dropped")
            new[:, modes.index(m)] = self.coeffs[:, j]
        return LayeredHarmonicField(self.center, self.breakpoints, modes, new)

    def _aligned(self, other: "LayeredHarmonicField"):
        if self.center != other.center:
            raise ValueError("fields with different centers cannot be added as bands")
        a = self.refine(other.breakpoints)
        b = other.refine(self.breakpoints)
        modes = tuple(sorted(set(a.modes) | set(b.modes)))
        return a.with_modes(modes), b.with_modes(modes)

    def __add__(self, other):
        a, b = self._aligned(other)
        return LayeredHarmonicField(a.center, a.breakpoints, a.modes, a.coeffs + b.coeffs)

    def __mul__(self, s):
        return LayeredHarmonicField(self.center, self.breakpoints, self.modes, self.coeffs * complex(s))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    # -- evaluation -----------------------------------------------------------
    def _polar(self, z):
        d = np.asarray(z, dtype=complex) - self.center
        return np.abs(d), np.angle(d)

    def _radial_parts(self, r):
        """Per-point region index and coefficient arrays ``(npts, nmodes, 2)``."""
        idx = np.searchsorted(self.breakpoints, r, side="left")
        return self.coeffs[idx]

    def __call__(self, z):
        r, th = self._polar(z)
        shape = r.shape
        r, th = r.ravel(), th.ravel()
        c = self._radial_parts(r)
        out = np.zeros(r.shape, complex)
        for j, m in enumerate(self.modes):
            cp, cm = c[:, j, 0], c[:, j, 1]
            rad = cp * _pow(r, m.k)
            if m.k > 0:
                with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                    rad = rad + np.where(cm == 0, 0.0, cm * _pow(r, -m.k))
            out += rad * m.trig(th)
        return out.reshape(shape)

    def gradient(self, z):
        """Cartesian gradient ``(d_x u, d_y u)`` as complex arrays."""
        r, th = self._polar(z)
        shape = r.shape
        r, th = r.ravel(), th.ravel()
        c = self._radial_parts(r)
        gr = np.zeros(r.shape, complex)
        gt = np.zeros(r.shape, complex)
        for j, m in enumerate(self.modes):
            if m.k == 0:
                continue
            k = m.k
            cp, cm = c[:, j, 0], c[:, j, 1]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                sing = np.where(cm == 0, 0.0, cm * _pow(r, -k - 1))
            reg = cp * _pow(r, k - 1)
            gr += k * (reg - sing) * m.trig(th)
            gt += (reg + sing) * m.dtrig(th)
        gx = gr * np.cos(th) - gt * np.sin(th)
        gy = gr * np.sin(th) + gt * np.cos(th)
        return gx.reshape(shape), gy.reshape(shape)

    def trace(self, radius: float, side: str = "in") -> np.ndarray:
        """Per-mode amplitudes of the field on the circle of ``radius``."""
        c = self.coeffs[self.region_of(radius, side)]
        ks = np.array([m.k for m in self.modes], dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            sing = np.where(c[:, 1] == 0, 0.0, c[:, 1] * _pow(radius, -ks))
        return c[:, 0] * _pow(radius, ks) + sing

    def radial_derivative(self, radius: float, side: str = "in") -> np.ndarray:
        """Per-mode amplitudes of ``d_r`` on the circle of ``radius``."""
        c = self.coeffs[self.region_of(radius, side)]
        ks = np.array([m.k for m in self.modes], dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            sing = np.where(c[:, 1] == 0, 0.0, c[:, 1] * _pow(radius, -ks - 1))
        return ks * (c[:, 0] * _pow(radius, ks - 1) - sing)

    def energy(self, region: tuple[float, float] | None = None) -> float:
        return gradient_energy(self, region)


@dataclass(frozen=True, eq=False)
class LayerDensity:
    """Density ``g(theta)`` carried by the circle ``|z - center| = radius``."""

    radius: float
    center: complex
    modes: tuple[Mode, ...]
    amplitudes: np.ndarray = field(repr=False)
    allow_mean: bool = False

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("layer radius must be positive")
        modes = _as_modes(self.modes)
        a = np.array(self.amplitudes, dtype=complex).reshape(len(modes))
        if not self.allow_mean:
            for m, g in zip(modes, a):
                if m.k == 0 and g != 0:
                    raise ValueError("layer density has a k = 0 component; pass allow_mean=True")
        a.setflags(write=False)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "amplitudes", a)

    def amplitude(self, mode: Mode) -> complex:
        return complex(self.amplitudes[self.modes.index(mode)]) if mode in self.modes else 0j

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape, complex)
        for m, g in zip(self.modes, self.amplitudes):
            out += g * m.trig(theta)
        return out

    def __add__(self, other: "LayerDensity") -> "LayerDensity":
        if other.radius != self.radius or other.center != self.center:
            raise ValueError("densities live on different circles")
        modes = tuple(sorted(set(self.modes) | set(other.modes)))
        amps = [self.amplitude(m) + other.amplitude(m) for m in modes]
        return LayerDensity(self.radius, self.center, modes, amps, self.allow_mean or other.allow_mean)

    def __mul__(self, s):
        return LayerDensity(self.radius, self.center, self.modes, self.amplitudes * complex(s), self.allow_mean)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.amplitudes), initial=0.0))


def plasmon_wave(k: int, R: float, parity: str = EVEN) -> LayeredHarmonicField:
    """Perfect plasmon wave: ``r^k`` inside ``R`` and ``R^{2k} r^{-k}`` outside.

    It is continuous and its flux ``A d_r`` is continuous for ``A = -1``
    inside and ``+1`` outside the circle.
    """
    if k < 1:
        raise ValueError("a decaying plasmon wave needs k >= 1")
    if not R > 0:
        raise ValueError("R must be positive")
    c = np.zeros((2, 1, 2), complex)
    c[0, 0, 0] = 1.0
    c[1, 0, 1] = R ** (2 * k)
    return LayeredHarmonicField(0.0, (R,), (Mode(k, parity),), c)


def gradient_energy(fld: LayeredHarmonicField, region: tuple[float, float] | None = None) -> float:
    """``int |grad u|^2`` over the plane or over the annulus ``region``.

    Uses the closed form per band; modes are orthogonal so energies add.
    """
    lo, hi = (0.0, np.inf) if region is None else (float(region[0]), float(region[1]))
    if lo < 0 or hi <= lo:
        raise ValueError(f"invalid annulus {region}")
    total = 0.0
    for i in range(fld.n_regions):
        a, b = fld.region_edges(i)
        r1, r2 = max(a, lo), min(b, hi)
        if r2 <= r1:
            continue
        for j, m in enumerate(fld.modes):
            cp, cm = fld.coeffs[i, j]
            if m.k > 0 and cm != 0 and r1 == 0:
                raise InfiniteEnergyError("singular band reaching the center")
            total += _band_energy(m.k, cp, cm, r1, r2)
    return total


def flux_jump(fld: LayeredHarmonicField, coefficients: Sequence[complex], radius: float) -> LayerDensity:
    """Jump ``a_out d_r u|_out - a_in d_r u|_in`` at a breakpoint.

    ``coefficients`` lists one value of ``a`` per region of ``fld``.
    """
    a = np.asarray(coefficients, dtype=complex)
    if a.shape != (fld.n_regions,):
        raise ValueError(f"need {fld.n_regions} region coefficients, got {a.shape}")
    hits = [i for i, b in enumerate(fld.breakpoints) if np.isclose(b, radius, rtol=1e-14, atol=0)]
    if not hits:
        raise ValueError(f"{radius} is not a breakpoint of the field")
    i = hits[0]
    r = fld.breakpoints[i]
    d_in = fld.radial_derivative(r, "in")
    d_out = fld.radial_derivative(r, "out")
    t_out, t_in = a[i + 1] * d_out, a[i] * d_in
    amps = t_out - t_in
    # differences within rounding of the two fluxes are exact cancellations
    scale = np.maximum(np.abs(t_out), np.abs(t_in))
    amps = np.where(np.abs(amps) <= 8 * np.finfo(float).eps * scale, 0.0, amps)
    keep = [j for j, m in enumerate(fld.modes) if m.k > 0]
    return LayerDensity(r, fld.center, tuple(fld.modes[j] for j in keep), amps[keep])


def single_layer_solve(density: LayerDensity) -> LayeredHarmonicField:
    """Decaying solution of ``-Lap w = g`` for a layer density ``g``.

    For amplitude ``g`` on mode ``k`` at radius ``a`` the solution is
    ``(g a / 2k) (r/a)^k`` inside and ``(g a / 2k) (a/r)^k`` outside.
    """
    a = density.radius
    modes, amps = [], []
    for m, g in zip(density.modes, density.amplitudes):
        if m.k == 0:
            if g != 0:
                raise ValueError("k = 0 density has no decaying single-layer solution")
            continue
        modes.append(m)
        amps.append(g)
    c = np.zeros((2, len(modes), 2), complex)
    for j, (m, g) in enumerate(zip(modes, amps)):
        h = g * a / (2 * m.k)
        c[0, j, 0] = h * a ** (-m.k)
        c[1, j, 1] = h * a ** m.k
    return LayeredHarmonicField(density.center, (a,), tuple(modes), c)


def single_layer_energy(density: LayerDensity) -> float:
    """``int |grad w|^2`` of :func:`single_layer_solve` in closed form."""
    a = density.radius
    return float(sum(np.pi * a**2 * abs(g) ** 2 / (2 * m.k) for m, g in zip(density.modes, density.amplitudes) if m.k > 0))


# -- shifted-center interaction coefficients ----------------------------------

def _check_circle(rho: float, z0: complex):
    if not rho > 0:
        raise ValueError("rho must be positive")
    if abs(z0) >= rho:
        raise ValueError(f"the origin must lie inside the circle: |z0| = {abs(z0)} >= rho = {rho}")


def interaction_coeff(m: int, k: int, rho: float, z0: complex) -> complex:
    """Exact value of ``int_{|z-z0|=rho} Re(z^-k) (z-z0)^m dH1``."""
    if m < 0 or k < 0:
        raise ValueError("m and k must be nonnegative")
    _check_circle(rho, z0)
    if m == 0:
        return complex(2 * np.pi * rho) if k == 0 else 0j
    if m < k:
        return 0j
    d = m - k
    return complex((-1) ** d * np.pi * rho * binom(m - 1, d) * complex(z0) ** d)


def _analytic_radius(m: int, k: int, rho: float, a: float, N: int) -> float:
    # circle for the z^-k half: |w| = x|z0| with x^m / (x - 1)^k smallest,
    # kept far enough from the pole that aliasing stays below exp(-40)
    if a == 0:
        return rho
    if m < k:
        # the integrand decays like |w|^(m-k); a wide circle keeps the zero clean
        return 4.0 * rho
    x = m / (m - k) if m > k else 1.0 + max(m, 1)
    return a * max(x, 1.0 + 40.0 / N)


def _split_quadrature(m: int, k: int, rho: float, z0: complex, N: int) -> complex:
    a = abs(z0)
    t = 2 * np.pi * np.arange(N) / N
    e = np.exp(1j * t)
    # Re(z^-k) = (z^-k + conj(z)^-k) / 2 with w = z - z0 and rho dt = rho dw / (i w);
    # each half is a contour integral that may be moved off the circle
    w = _analytic_radius(m, k, rho, a, N) * e
    first = np.mean((z0 + w) ** (-k) * w**m)
    # on |w| = rho, conj(z) = conj(z0) + rho^2 / w; analytic for |w| < rho^2 / |z0|
    w = 0.5 * (a if a > 0 else rho) * e
    second = np.mean(w ** (k + m) * (np.conj(z0) * w + rho**2) ** (-k))
    return complex(np.pi * rho * (first + second))


def interaction_quadrature(m: int, k: int, rho: float, z0: complex, N: int = 4096, deform: bool = True) -> complex:
    """Trapezoid evaluation of the interaction integral with ``N`` nodes.

    With ``deform`` the analytic and anti-analytic halves of ``Re(z^-k)`` are
    integrated on circles moved toward their singularities (Cauchy), which
    avoids the ``(rho/|z0|)^(m-k)`` cancellation of the plain rule on
    ``|z - z0| = rho``.  ``deform=False`` gives the plain rule.
    """
    if m < 0 or k < 0:
        raise ValueError("m and k must be nonnegative")
    _check_circle(rho, z0)
    if deform:
        return _split_quadrature(m, k, float(rho), complex(z0), N)
    t = 2 * np.pi * np.arange(N) / N
    w = rho * np.exp(1j * t)
    z = z0 + w
    f = np.real(z ** (-float(k))) * w**m
    return complex(np.sum(f) * (2 * np.pi * rho / N))


@dataclass(frozen=True, eq=False)
class InteractionTable:
    """Matrix of interaction coefficients ``I[m, k]``, 0 <= m <= M, 0 <= k <= K."""

    rho: float
    z0: complex
    entries: np.ndarray = field(repr=False)
    method: str = "exact"

    @property
    def M(self) -> int:
        return self.entries.shape[0] - 1

    @property
    def K(self) -> int:
        return self.entries.shape[1] - 1


def interaction_table(M: int, K: int, rho: float, z0: complex, method: str = "exact", N: int = 4096) -> InteractionTable:
    """Tabulate ``I[m, k]`` exactly or by ``N``-point quadrature."""
    _check_circle(rho, z0)
    tab = np.zeros((M + 1, K + 1), complex)
    if method == "exact":
        for m in range(M + 1):
            for k in range(K + 1):
                tab[m, k] = interaction_coeff(m, k, rho, z0)
    elif method == "quadrature":
        for m in range(M + 1):
            for k in range(K + 1):
                tab[m, k] = _split_quadrature(m, k, float(rho), complex(z0), N)
    else:
        raise ValueError(f"unknown method {method!r}")
    tab.setflags(write=False)
    return InteractionTable(float(rho), complex(z0), tab, method)


def q_weighted_sum(m: int, rho: float, z0: complex, Q: float, K: int | None = None) -> tuple[float, float]:
    """``sum_k Q^k |I[m, k]|`` and its closed-form bound ``pi rho Q (|z0| + Q)^(m-1)``."""
    if m < 1:
        raise ValueError("the weighted estimate is stated for m >= 1")
    K = m if K is None else K
    s = sum(Q**k * abs(interaction_coeff(m, k, rho, z0)) for k in range(1, K + 1))
    return float(s), float(np.pi * rho * Q * (abs(z0) + Q) ** (m - 1))


@dataclass(frozen=True, eq=False)
class ShiftedExpansion:
    """Coefficients ``e[m]`` with ``f = Re sum_m e[m] (z - z0)^m`` on a circle."""

    rho: float
    z0: complex
    coeffs: np.ndarray = field(repr=False)
    tail_bound: float = 0.0

    def __call__(self, z):
        w = np.asarray(z, dtype=complex) - self.z0
        return np.real(np.polynomial.polynomial.polyval(w, self.coeffs))

    def normal_derivative(self, z):
        """Outward normal derivative of the harmonic extension on the circle."""
        w = np.asarray(z, dtype=complex) - self.z0
        m = np.arange(len(self.coeffs))
        return np.real(np.polynomial.polynomial.polyval(w, m * self.coeffs)) / self.rho


def shifted_trace_expansion(k: int, rho: float, z0: complex, M: int, amplitude: complex = 1.0, tol: float = 1e-12) -> ShiftedExpansion:
    """Expand ``Re(amplitude z^-k)`` on ``|z - z0| = rho`` in powers of ``z - z0``.

    For unit amplitude the coefficients are ``conj(I[m, k]) / (pi rho^(2m+1))``.
    The returned polynomial is also the harmonic extension into the disk.
    A :class:`TruncationWarning` is issued when the sup-norm tail bound on the
    circle exceeds ``tol`` times the size of the function.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_circle(rho, z0)
    c = np.zeros(M + 1, complex)
    for m in range(k, M + 1):
        # general amplitude: conj(a * binom(-k, m-k) z0^(m-k)) rho^(-2m)
        c[m] = np.conj(complex(amplitude) * interaction_coeff(m, k, rho, z0) / (np.pi * rho)) * rho ** (-2 * m)
    # sup of the dropped terms: sum_{m>M} binom(m-1, m-k) |z0|^(m-k) rho^-m;
    # term ratios x (k+j)/(j+1) decrease in j, so a geometric bound applies
    x = abs(z0) / rho
    j = max(M - k + 1, 0)
    term = abs(amplitude) * rho ** (-k) * binom(k - 1 + j, j) * x**j
    ratio = x * (k + j) / (j + 1)
    if term == 0:
        tail = 0.0
    elif ratio < 1:
        tail = float(term / (1 - ratio))
    else:
        tail = float(abs(amplitude) * rho ** (-k) * (1 - x) ** (-k))
    scale = abs(amplitude) * (rho + abs(z0)) ** (-k)
    c.setflags(write=False)
    if tail > tol * scale:
        warnings.warn(
            f"shifted expansion of order {M} for k={k}: tail bound {tail:.3e} exceeds tolerance",
            TruncationWarning,
            stacklevel=2,
        )
    return ShiftedExpansion(float(rho), complex(z0), c, float(tail))


@dataclass(frozen=True, eq=False)
class PowerSeries:
    """Finite sum ``sum_j coeffs[j] z^powers[j]`` about the origin."""

    powers: np.ndarray
    coeffs: np.ndarray

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, complex)
        for p, c in zip(self.powers, self.coeffs):
            out += c * z ** float(p)
        return out


def reexpand_about_origin(m: int, z0: complex, J: int | None = None) -> PowerSeries:
    """Re-express ``(z - z0)^m`` in powers of ``z``.

    For ``m >= 0`` the binomial sum is finite and exact.  For ``m < 0`` the
    series ``sum_j binom(|m|+j-1, j) z0^j z^(m-j)`` is truncated after ``J``
    terms and is valid for ``|z| > |z0|``.
    """
    z0 = complex(z0)
    if m >= 0:
        j = np.arange(m + 1)
        coeffs = np.array([binom(m, i) * (-z0) ** (m - i) for i in j], complex)
        return PowerSeries(j, coeffs)
    if J is None:
        raise ValueError("a truncation J is needed for negative powers")
    n = -m
    j = np.arange(J + 1)
    coeffs = np.array([binom(n + i - 1, i) * z0**i for i in j], complex)
    return PowerSeries(m - j, coeffs)
