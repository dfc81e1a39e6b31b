"""Exact per-mode solver for concentric core-shell-matrix geometries.

The coefficient is ``a = A + i eta`` with ``A = +1`` in the core ``r < 1``
and in the matrix ``r > R``, and ``A = -1`` in the shell ``1 < r < R``.
Without a core the shell is the whole disk ``r < R``.  The source is a line
density ``F(theta)`` on ``r = q`` entering as ``[a d_r u] = F``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .harmonics import EVEN, ODD, LayeredHarmonicField, Mode

__all__ = [
    "SourceSpectrum",
    "RadialConfig",
    "ModeSolution",
    "EnergyReport",
    "SweepResult",
    "ResonanceVerdict",
    "SingularSystemError",
    "k_cutoff",
    "default_truncation",
    "critical_radius",
    "region_coefficients",
    "solve_mode",
    "solve",
    "energy",
    "eta_sweep",
    "classify_resonance",
]


class SingularSystemError(ArithmeticError):
    """The interface system is singular or too badly conditioned."""

    def __init__(self, message: str, cond: float):
        super().__init__(f"{message} (condition number {cond:.3e})")
        self.cond = cond


def k_cutoff(R: float, eta: float) -> int:
    """Smallest integer ``k >= 1`` with ``R**-k < eta`` (strict)."""
    if not R > 1:
        raise ValueError("cutoff needs R > 1")
    if not eta > 0:
        raise ValueError("eta must be positive")
    k = 1
    while R ** (-k) >= eta:
        k += 1
    return k


def default_truncation(R: float, eta_min: float) -> int:
    """Default spectrum truncation ``max(60, 3 k*(eta_min))``."""
    return max(60, 3 * k_cutoff(R, eta_min))


def critical_radius(R: float, r0: float = 1.0) -> float:
    """Critical source radius ``r0 (R / r0)^(3/2)``."""
    if not r0 > 0 or R < r0:
        raise ValueError("need R >= r0 > 0")
    return float(r0 * (R / r0) ** 1.5)


@dataclass(frozen=True)
class SourceSpectrum:
    """Fourier coefficients of ``F = sum alpha_k cos(k t) + beta_k sin(k t)``.

    ``alpha`` and ``beta`` are tuples of ``(k, value)`` pairs.  Spectra built
    by :meth:`algebraic` remember their generator so that the energy of the
    discarded tail can be bounded.
    """

    alpha: tuple[tuple[int, float], ...] = ()
    beta: tuple[tuple[int, float], ...] = ()
    power: float | None = None
    scale: tuple[float, float] = (1.0, 0.0)
    K: int | None = None

    def __post_init__(self):
        for name in ("alpha", "beta"):
            pairs = tuple((int(k), float(v)) for k, v in getattr(self, name))
            ks = [k for k, _ in pairs]
            if any(k < 1 for k in ks):
                raise ValueError("source spectra have no k = 0 entry (zero mean)")
            if len(set(ks)) != len(ks):
                raise ValueError(f"repeated wave number in {name}")
            object.__setattr__(self, name, tuple(sorted(pairs)))
        if self.power is not None and not self.power > 0:
            raise ValueError("generator power must be positive")

    @classmethod
    def algebraic(cls, p: float, K: int, even: float = 1.0, odd: float = 0.0) -> "SourceSpectrum":
        """``alpha_k = even * k^-p`` and ``beta_k = odd * k^-p`` for ``k <= K``."""
        if K < 1:
            raise ValueError("K must be >= 1")
        ks = range(1, K + 1)
        alpha = tuple((k, even * k ** (-p)) for k in ks) if even else ()
        beta = tuple((k, odd * k ** (-p)) for k in ks) if odd else ()
        return cls(alpha, beta, float(p), (float(even), float(odd)), int(K))

    @classmethod
    def single(cls, k: int, amplitude: float, parity: str = EVEN) -> "SourceSpectrum":
        if parity == EVEN:
            return cls(alpha=((k, amplitude),))
        return cls(beta=((k, amplitude),))

    def entries(self) -> list[tuple[Mode, float]]:
        """Nonzero ``(mode, amplitude)`` pairs, even modes first."""
        out = [(Mode(k, EVEN), a) for k, a in self.alpha if a != 0]
        out += [(Mode(k, ODD), b) for k, b in self.beta if b != 0]
        return out

    def amplitude(self, mode: Mode) -> float:
        pairs = self.alpha if mode.parity == EVEN else self.beta
        return dict(pairs).get(mode.k, 0.0)

    @property
    def kmax(self) -> int:
        ks = [k for k, _ in self.alpha] + [k for k, _ in self.beta]
        return max(ks, default=0)

    def l1_norm(self) -> float:
        return float(sum(abs(v) for _, v in self.alpha) + sum(abs(v) for _, v in self.beta))

    def is_empty(self) -> bool:
        return not self.entries()


@dataclass(frozen=True)
class RadialConfig:
    """Concentric geometry: unit core (optional), shell up to ``R``, source at ``q``."""

    R: float
    q: float
    eta: float
    source: SourceSpectrum = field(default_factory=SourceSpectrum)
    core: bool = True

    def __post_init__(self):
        if not (1 < self.R < self.q):
            raise ValueError(f"need 1 < R < q, got R={self.R}, q={self.q}")
        if not self.eta > 0:
            raise ValueError("loss eta must be positive")

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (1.0, self.R, self.q) if self.core else (self.R, self.q)

    def with_eta(self, eta: float) -> "RadialConfig":
        return dataclasses.replace(self, eta=eta)


def region_coefficients(config: RadialConfig, lossless: bool = False) -> np.ndarray:
    """Per-region values of ``a = A + i eta`` (or ``A`` if ``lossless``)."""
    A = [1.0, -1.0, 1.0, 1.0] if config.core else [-1.0, 1.0, 1.0]
    return np.array(A, complex) + (0 if lossless else 1j * config.eta)


@dataclass(frozen=True, eq=False)
class ModeSolution:
    field: LayeredHarmonicField
    mode: Mode
    amplitude: float
    cond: float
    interface_residual: float

    def trace_at_source(self, q: float) -> complex:
        return complex(self.field.trace(q)[0]) if self.field.modes else 0j


def _interface_system(edges, a, k, src_index, F):
    """Assemble the scaled 2(n-1) system for one mode.

    Region ``i`` uses ``A_i (r/hi)^k + B_i (lo/r)^k``; the innermost region
    has no ``B`` and the outermost none of ``A``.
    """
    n = len(a)
    # unknown index per (region, part)
    idx = {}
    for i in range(n):
        if i < n - 1:
            idx[i, 0] = len(idx)
        if i > 0:
            idx[i, 1] = len(idx)
    N = len(idx)
    M = np.zeros((N, N), complex)
    rhs = np.zeros(N, complex)

    def val(i, r):
        lo, hi = edges[i], edges[i + 1]
        out = {}
        if (i, 0) in idx:
            out[idx[i, 0]] = (r / hi) ** k
        if (i, 1) in idx:
            out[idx[i, 1]] = (lo / r) ** k
        return out

    def der(i, r):
        # r/k * d/dr of the scaled basis
        lo, hi = edges[i], edges[i + 1]
        out = {}
        if (i, 0) in idx:
            out[idx[i, 0]] = (r / hi) ** k
        if (i, 1) in idx:
            out[idx[i, 1]] = -((lo / r) ** k)
        return out

    row = 0
    for j in range(n - 1):
        b = edges[j + 1]
        for col, v in val(j, b).items():
            M[row, col] += v
        for col, v in val(j + 1, b).items():
            M[row, col] -= v
        row += 1
        for col, v in der(j + 1, b).items():
            M[row, col] += a[j + 1] * v
        for col, v in der(j, b).items():
            M[row, col] -= a[j] * v
        if j == src_index:
            rhs[row] = F * b / k
        row += 1
    return M, rhs, idx


def solve_mode(config: RadialConfig, mode: Mode, amplitude: float | None = None) -> ModeSolution:
    """Solve the interface problem for one angular mode.

    Continuity of ``u`` and ``a d_r u`` at the shell interfaces, and
    ``[a d_r u] = F_k`` at ``r = q``.  ``amplitude`` defaults to the source
    coefficient of ``mode``.
    """
    if mode.k < 1:
        raise ValueError("solve_mode needs k >= 1")
    F = config.source.amplitude(mode) if amplitude is None else float(amplitude)
    bp = config.breakpoints
    edges = (0.0,) + bp + (np.inf,)
    a = region_coefficients(config)
    k = mode.k
    n = len(a)
    coeffs = np.zeros((n, 1, 2), complex)
    if F == 0:
        fld = LayeredHarmonicField(0.0, bp, (mode,), coeffs)
        return ModeSolution(fld, mode, 0.0, 1.0, 0.0)
    M, rhs, idx = _interface_system(edges, a, k, len(bp) - 1, F)
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularSystemError(f"interface system for {mode} is singular", cond)
    sol = np.linalg.solve(M, rhs)
    for (i, part), col in idx.items():
        lo, hi = edges[i], edges[i + 1]
        coeffs[i, 0, part] = sol[col] * hi ** (-k) if part == 0 else sol[col] * lo**k
    fld = LayeredHarmonicField(0.0, bp, (mode,), coeffs)
    res = _interface_residual(fld, a, F, config.q)
    return ModeSolution(fld, mode, F, cond, res)


def _interface_residual(fld: LayeredHarmonicField, a, F, q) -> float:
    """Largest relative continuity / flux mismatch over all breakpoints."""
    worst = 0.0
    for i, b in enumerate(fld.breakpoints):
        u_in, u_out = fld.trace(b, "in"), fld.trace(b, "out")
        d_in, d_out = fld.radial_derivative(b, "in"), fld.radial_derivative(b, "out")
        jump = a[i + 1] * d_out - a[i] * d_in
        target = F if b == q else 0.0
        su = max(np.max(np.abs(u_in)), np.max(np.abs(u_out)), 1e-300)
        sd = max(np.max(np.abs(a[i] * d_in)), np.max(np.abs(a[i + 1] * d_out)), abs(F), 1e-300)
        worst = max(worst, float(np.max(np.abs(u_in - u_out)) / su), float(np.max(np.abs(jump - target)) / sd))
    return worst


def solve(config: RadialConfig) -> LayeredHarmonicField:
    """Full field: the sum of all per-mode solutions."""
    total = LayeredHarmonicField.zero(0.0, config.breakpoints)
    for mode, _ in config.source.entries():
        total = total + solve_mode(config, mode).field
    return total


@dataclass(frozen=True)
class EnergyReport:
    """Dissipation ``E = (eta/2) int |grad u|^2`` with per-mode detail."""

    E: float
    per_mode: tuple[tuple[Mode, float], ...]
    identity_residual: float
    tail_bound: float = 0.0
    max_cond: float = 1.0
    max_interface_residual: float = 0.0


def _tail_bound(config: RadialConfig) -> float:
    """Bound on the energy of modes beyond the truncation of a generator spectrum.

    Each discarded mode is bounded by the all-high comparison pair of the
    primal principle, ``(pi q^2 a_k^2 / 4k) (eta + (R/q)^(2k) / eta)``.
    """
    s = config.source
    if s.power is None or s.K is None:
        return 0.0
    p, K, q, eta = s.power, s.K, config.q, config.eta
    x = (config.R / q) ** 2
    c2 = s.scale[0] ** 2 + s.scale[1] ** 2
    first = eta * K ** (-2 * p) / (2 * p)
    second = x ** (K + 1) * K ** (-2 * p - 1) / (eta * (1 - x))
    return float(np.pi * q**2 * c2 / 4 * (first + second))


def energy(config: RadialConfig) -> EnergyReport:
    """Exact dissipation summed over the modes of the source spectrum."""
    per_mode = []
    E = 0.0
    E_src = 0.0
    cmax, rmax = 1.0, 0.0
    for mode, amp in config.source.entries():
        sol = solve_mode(config, mode)
        e = 0.5 * config.eta * sol.field.energy()
        # -(1/2) Im int F conj(u) dH1 = (1/2) F pi q Im U(q)
        e_src = 0.5 * amp * np.pi * config.q * sol.trace_at_source(config.q).imag
        per_mode.append((mode, e))
        E += e
        E_src += e_src
        cmax, rmax = max(cmax, sol.cond), max(rmax, sol.interface_residual)
    resid = abs(E - E_src) / E if E > 0 else abs(E_src)
    return EnergyReport(E, tuple(per_mode), float(resid), _tail_bound(config), cmax, rmax)


@dataclass(frozen=True)
class SweepResult:
    etas: tuple[float, ...]
    values: tuple[float, ...]

    def __iter__(self):
        return iter(zip(self.etas, self.values))


def eta_sweep(config: RadialConfig, etas: Sequence[float]) -> SweepResult:
    """Independent exact solves on a decreasing grid of losses."""
    etas = tuple(float(e) for e in etas)
    if not etas:
        raise ValueError("empty eta grid")
    if any(e2 >= e1 for e1, e2 in zip(etas, etas[1:])):
        raise ValueError("eta grid must be strictly decreasing")
    values = tuple(energy(config.with_eta(e)).E for e in etas)
    return SweepResult(etas, values)


@dataclass(frozen=True)
class ResonanceVerdict:
    verdict: str
    slope: float
    ratio: float


def classify_resonance(etas: Iterable[float] | SweepResult, values: Iterable[float] | None = None) -> ResonanceVerdict:
    """Classify a sweep by the log-log slope over its last decade.

    Resonant if the slope is at most -0.5.  Non-resonant if the slope is at
    least -0.1 and max/min over the last two decades is at most 10.
    Otherwise inconclusive.
    """
    if isinstance(etas, SweepResult):
        etas, values = etas.etas, etas.values
    e = np.asarray(list(etas), float)
    v = np.asarray(list(values), float)
    if e.size < 2 or e.size != v.size:
        raise ValueError("need at least two (eta, value) pairs")
    emin = e.min()
    two = e <= 100 * emin * (1 + 1e-12)
    if np.all(v[two] == 0):
        return ResonanceVerdict("non-resonant", 0.0, 1.0)
    if np.any(v <= 0):
        return ResonanceVerdict("inconclusive", float("nan"), float("inf"))
    last = e <= 10 * emin * (1 + 1e-12)
    if last.sum() < 2:
        last = np.argsort(e)[:2]
    slope = float(np.polyfit(np.log(e[last]), np.log(v[last]), 1)[0])
    ratio = float(v[two].max() / v[two].min())
    if slope <= -0.5:
        verdict = "resonant"
    elif slope >= -0.1 and ratio <= 10:
        verdict = "non-resonant"
    else:
        verdict = "inconclusive"
    return ResonanceVerdict(verdict, slope, ratio)
