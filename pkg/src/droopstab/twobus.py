"""Two-bus equivalent: characteristic quintic, critical threshold and its map.

A single inverter against an infinite bus is governed by a degree-5
characteristic polynomial parametrized by the coupling strength ``mu``, the
line R/X ratio ``rho``, the droop ratio ``k`` and the constants ``tau`` and
``omega0``.  The threshold ``mu_cr(rho, k)`` is the smallest mu at which the
polynomial acquires a root in the right half plane; its minimum over the
practical (rho, k) ranges is the universal certification threshold.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import numpy.polynomial.polynomial as npoly

from ._util import ordered_map
from .netmodel import DEFAULT_OMEGA0, DEFAULT_TAU

CERTIFICATION_RHO_RANGE = (0.4, 2.5)
CERTIFICATION_K_RANGE = (0.3, 5.0)
DISPLAY_RHO_RANGE = (0.4, 5.0)

REFERENCE_MU_CR_MIN = 0.826  # at (rho, k) = (1.3, 0.3) for the default tau, omega0


@dataclass(frozen=True)
class QuinticCoeffs:
    """Ascending coefficients c0..c5 in omega0-scaled time (s_bar = s/omega0)."""

    coeffs: np.ndarray
    mu: float
    rho: float
    k: float
    tau: float
    omega0: float


@dataclass(frozen=True)
class WorstCase:
    rho: float
    k: float
    mu_cr: float


@dataclass(frozen=True)
class MuCrSurface:
    rho_grid: np.ndarray
    k_grid: np.ndarray
    values: np.ndarray  # shape (len(rho_grid), len(k_grid))
    worst: WorstCase


def quintic(mu: float, rho: float, k: float,
            tau: float = DEFAULT_TAU, omega0: float = DEFAULT_OMEGA0) -> QuinticCoeffs:
    """Characteristic polynomial of the two-bus equivalent at coupling mu.

    With g(s) = 1 + tau*s the polynomial, written in physical time, is

        k * s/omega0 * g(s)^2 * ((rho + s/omega0)^2 + 1)
          + g(s) * (k + s/omega0) * mu + mu^2 = 0.

    Coefficients are built in omega0-scaled time to keep their spread within
    double precision; roots are scaled back by omega0 on extraction.
    """
    if k <= 0:
        raise ValueError(f"droop ratio k must be positive, got {k}")
    if mu < 0:
        raise ValueError(f"coupling mu must be non-negative, got {mu}")
    if rho < 0:
        raise ValueError(f"R/X ratio must be non-negative, got {rho}")
    T = omega0 * tau
    g = np.array([1.0, T])
    s = np.array([0.0, 1.0])
    resonant = np.array([rho * rho + 1.0, 2.0 * rho, 1.0])  # (rho + s)^2 + 1
    poly = k * npoly.polymul(npoly.polymul(s, npoly.polymul(g, g)), resonant)
    poly = npoly.polyadd(poly, mu * npoly.polymul(g, np.array([k, 1.0])))
    poly = npoly.polyadd(poly, np.array([mu * mu]))
    full = np.zeros(6)
    full[: poly.size] = poly
    return QuinticCoeffs(full, mu, rho, k, tau, omega0)


def roots(c: QuinticCoeffs) -> np.ndarray:
    """The five roots in rad/s (balanced companion-matrix eigensolve)."""
    if c.coeffs[-1] == 0:
        raise ValueError("leading coefficient is zero; polynomial is not degree 5")
    return np.roots(c.coeffs[::-1]) * c.omega0


def two_bus_stable(mu: float, rho: float, k: float,
                   tau: float = DEFAULT_TAU, omega0: float = DEFAULT_OMEGA0,
                   margin: float = 1e-8) -> bool:
    """True when every root lies strictly left of -margin."""
    if mu <= 0:
        raise ValueError("mu must be positive for a stability call")
    r = roots(quintic(mu, rho, k, tau, omega0))
    return bool(np.max(r.real) < -margin)


def mu_cr(rho: float, k: float,
          tau: float = DEFAULT_TAU, omega0: float = DEFAULT_OMEGA0,
          tol_mu: float = 1e-4, margin: float = 1e-8,
          mu_limit: float = 1e3) -> float:
    """Critical coupling: bracket by doubling from 1e-3, then bisect to tol_mu."""
    lo = 1e-3
    if not two_bus_stable(lo, rho, k, tau, omega0, margin):
        # already unstable at the scan floor; bisect down toward zero
        hi, lo = lo, 1e-12
    else:
        mu = lo
        hi = None
        while mu < mu_limit:
            mu *= 2.0
            if not two_bus_stable(mu, rho, k, tau, omega0, margin):
                hi = mu
                break
            lo = mu
        if hi is None:
            raise ValueError(
                f"no finite threshold: two-bus system stays stable up to mu = {mu_limit:g} "
                f"at rho={rho}, k={k}"
            )
    while hi - lo > tol_mu:
        mid = 0.5 * (lo + hi)
        if two_bus_stable(mid, rho, k, tau, omega0, margin):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _grid(rng: tuple[float, float], steps: int) -> np.ndarray:
    lo, hi = float(rng[0]), float(rng[1])
    if lo <= 0 or hi < lo:
        raise ValueError(f"range must be positive and ordered, got {rng}")
    if hi == lo:
        return np.array([lo])
    if steps < 2:
        raise ValueError("a proper range needs at least 2 grid points")
    return np.linspace(lo, hi, steps)


def mu_cr_surface(rho_range: tuple[float, float] = DISPLAY_RHO_RANGE,
                  k_range: tuple[float, float] = CERTIFICATION_K_RANGE,
                  steps: int | tuple[int, int] = (48, 48),
                  tau: float = DEFAULT_TAU, omega0: float = DEFAULT_OMEGA0,
                  tol_mu: float = 1e-4, refine: bool = True) -> MuCrSurface:
    """Gridded map (rho, k) -> mu_cr plus its refined minimum.

    The minimum cell is refined by repeatedly halving a local 3x3 pattern
    (clipped to the ranges) until the threshold improves by less than 1e-3.
    """
    if isinstance(steps, int):
        steps = (steps, steps)
    rho_grid = _grid(rho_range, steps[0])
    k_grid = _grid(k_range, steps[1])

    def row(rho: float) -> list[float]:
        return [mu_cr(rho, kk, tau, omega0, tol_mu) for kk in k_grid]

    values = np.array(ordered_map(row, list(rho_grid)))
    i, j = np.unravel_index(int(np.argmin(values)), values.shape)
    best = WorstCase(float(rho_grid[i]), float(k_grid[j]), float(values[i, j]))
    if refine:
        drho = float(rho_grid[1] - rho_grid[0]) if rho_grid.size > 1 else 0.0
        dk = float(k_grid[1] - k_grid[0]) if k_grid.size > 1 else 0.0
        best = _refine_minimum(best, drho, dk, rho_range, k_range, tau, omega0, tol_mu)
    return MuCrSurface(rho_grid, k_grid, values, best)


def _refine_minimum(best: WorstCase, drho: float, dk: float,
                    rho_range, k_range, tau, omega0, tol_mu,
                    improvement_tol: float = 1e-3) -> WorstCase:
    while drho > 1e-4 or dk > 1e-4:
        drho *= 0.5
        dk *= 0.5
        previous = best.mu_cr
        for rr in np.clip([best.rho - drho, best.rho, best.rho + drho], *rho_range):
            for kk in np.clip([best.k - dk, best.k, best.k + dk], *k_range):
                val = mu_cr(float(rr), float(kk), tau, omega0, tol_mu)
                if val < best.mu_cr:
                    best = WorstCase(float(rr), float(kk), float(val))
        if previous - best.mu_cr < improvement_tol:
            break
    return best


def worst_case(tau: float = DEFAULT_TAU, omega0: float = DEFAULT_OMEGA0,
               rho_range: tuple[float, float] = CERTIFICATION_RHO_RANGE,
               k_range: tuple[float, float] = CERTIFICATION_K_RANGE,
               steps: int | tuple[int, int] = (22, 20)) -> WorstCase:
    """Minimum of mu_cr over the certification ranges, with local refinement."""
    return _worst_case_cached(float(tau), float(omega0),
                              (float(rho_range[0]), float(rho_range[1])),
                              (float(k_range[0]), float(k_range[1])),
                              steps if isinstance(steps, tuple) else (steps, steps))


@lru_cache(maxsize=32)
def _worst_case_cached(tau, omega0, rho_range, k_range, steps) -> WorstCase:
    return mu_cr_surface(rho_range, k_range, steps, tau, omega0).worst


def write_surface_csv(surface: MuCrSurface, path) -> None:
    """Columns (rho, k, mu_cr), row-major over the grid."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rho", "k", "mu_cr"])
        for i, rho in enumerate(surface.rho_grid):
            for j, kk in enumerate(surface.k_grid):
                w.writerow([repr(float(rho)), repr(float(kk)), repr(float(surface.values[i, j]))])
