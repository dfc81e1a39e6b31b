"""Plasmonic eigenvalue checks on spheres and half-spaces in ``n`` dimensions.

On a sphere of radius R the field is ``r^l Y`` inside and ``c r^-(l+n-2) Y``
outside, with ``c`` fixed by continuity.  All quantities are closed-form
powers of R, so the residuals carry no discretization error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

__all__ = [
    "SphericalPlasmonProblem",
    "RootReport",
    "sphere_flux_residual",
    "residual_root",
    "halfspace_plasmon_check",
]


@dataclass(frozen=True)
class SphericalPlasmonProblem:
    """Interior coefficient ``epsilon`` inside ``|x| < R``, 1 outside, in dimension ``n``."""

    n: int
    l: int
    R: float = 1.0
    epsilon: float = -1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension must be at least 2")
        if self.l < 1:
            raise ValueError("degree l must be at least 1")
        if not self.R > 0:
            raise ValueError("radius must be positive")

    @property
    def exterior_exponent(self) -> int:
        return -(self.l + self.n - 2)

    @property
    def exterior_amplitude(self) -> float:
        """``c = R^(2l+n-2)`` so that both profiles agree at ``r = R``."""
        return self.R ** (2 * self.l + self.n - 2)

    def profile(self, r):
        r = np.asarray(r, float)
        return np.where(r <= self.R, r**self.l, self.exterior_amplitude * r**self.exterior_exponent)

    def with_epsilon(self, epsilon: float) -> "SphericalPlasmonProblem":
        return SphericalPlasmonProblem(self.n, self.l, self.R, epsilon)


def sphere_flux_residual(problem: SphericalPlasmonProblem) -> float:
    """``-epsilon d_r psi|_(R-) + d_r psi|_(R+)`` as the coefficient of ``Y^l``.

    Inside, ``d_r r^l = l R^(l-1)``.  Outside, ``c R^-(l+n-1)`` equals
    ``R^(l-1)`` by the choice of ``c``, which is used symbolically.
    """
    l, n, eps = problem.l, problem.n, problem.epsilon
    return float(problem.R ** (l - 1) * (-eps * l - (l + n - 2)))


@dataclass(frozen=True)
class RootReport:
    """Root of the flux residual in ``epsilon`` next to the alternative ``-l/(l+1)``."""

    root: float
    closed_form: float
    reciprocal_value: float
    residual_at_reciprocal: float


def residual_root(n: int, l: int, R: float = 1.0, xtol: float = 1e-14) -> RootReport:
    """Locate ``epsilon`` with zero flux residual by bisection.

    The residual is linear in ``epsilon`` with root ``-(l+n-2)/l``, which
    lies in ``[-(n-1), 0)``.
    """
    base = SphericalPlasmonProblem(n, l, R)
    f = lambda e: sphere_flux_residual(base.with_epsilon(e))  # noqa: E731
    root = bisect(f, -float(n), 0.0, xtol=xtol, maxiter=200)
    recip = -l / (l + 1)
    return RootReport(root, -(l + n - 2) / l, recip, f(recip))


def halfspace_plasmon_check(n: int, xi_perp, xi_n: float | None = None, epsilon: float = -1.0) -> tuple[float, float]:
    """Harmonicity defect and interface flux residual of the planar plasmon.

    ``psi = exp(-|xi_n| |x_n|) exp(i xi_perp . x_perp)``, coefficient
    ``epsilon`` for ``x_n < 0`` and 1 above.  ``Lap psi / psi = xi_n^2 -
    |xi_perp|^2``; the flux residual is ``-epsilon d_n psi|(0-) + d_n psi|(0+)``
    per unit amplitude.  Without ``xi_n`` the dispersion relation
    ``xi_n^2 = |xi_perp|^2`` is imposed exactly.
    """
    if n < 2:
        raise ValueError("dimension must be at least 2")
    xp = np.atleast_1d(np.asarray(xi_perp, float))
    if xp.shape != (n - 1,):
        raise ValueError(f"xi_perp must have n - 1 = {n - 1} components")
    perp_sq = float(xp @ xp)
    if xi_n is None:
        xi_n_sq = perp_sq
        decay = float(np.sqrt(perp_sq))
    else:
        xi_n_sq = float(xi_n) ** 2
        decay = abs(float(xi_n))
    harmonicity = xi_n_sq - perp_sq
    # d_n psi = +decay below the plane and -decay above
    flux = -epsilon * decay - decay
    return harmonicity, flux
