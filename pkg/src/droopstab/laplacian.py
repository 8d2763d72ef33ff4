"""Droop-weighted network Laplacian and its real nonnegative spectrum.

The coupling matrix C = diag(m) @ scaled is similar to the symmetric
sqrt(M) @ scaled @ sqrt(M), so its eigenvalues are real and nonnegative;
they index the two-bus equivalent subsystems.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .netmodel import ReducedNetwork
from .statespace import DroopConfig


@dataclass(frozen=True)
class MuSpectrum:
    """Ascending eigenvalues of the droop-weighted Laplacian."""

    mu: np.ndarray

    @property
    def largest(self) -> float:
        return float(self.mu[-1])


def generalized_laplacian(droops: DroopConfig, rn: ReducedNetwork) -> np.ndarray:
    if droops.v != rn.v:
        raise ValueError(f"droop config has {droops.v} entries for {rn.v} inverters")
    return droops.m[:, None] * rn.scaled


def mu_spectrum(droops: DroopConfig, rn: ReducedNetwork) -> MuSpectrum:
    """Spectrum of diag(m) @ scaled via the symmetric similarity transform."""
    if droops.v != rn.v:
        raise ValueError(f"droop config has {droops.v} entries for {rn.v} inverters")
    sq = np.sqrt(droops.m)
    sym = (sq[:, None] * rn.scaled) * sq[None, :]
    mu = np.linalg.eigvalsh(0.5 * (sym + sym.T))
    if mu[0] < -1e-9 * max(1.0, abs(mu[-1])):
        raise ValueError(f"coupling matrix is not positive semidefinite (min eig {mu[0]:.3e})")
    return MuSpectrum(np.clip(mu, 0.0, None))


def gershgorin(droops: DroopConfig, rn: ReducedNetwork) -> np.ndarray:
    """Per-inverter upper bounds 2 * m_i * scaled_ii; every mu lies below max."""
    if droops.v != rn.v:
        raise ValueError(f"droop config has {droops.v} entries for {rn.v} inverters")
    return 2.0 * droops.m * np.diag(rn.scaled)


def add_line(rn: ReducedNetwork, i: int, j: int, x_new: float) -> ReducedNetwork:
    """Reduced network with an extra line of reactance x_new between inverters i, j."""
    if i == j:
        raise ValueError("line endpoints must differ")
    if x_new <= 0:
        raise ValueError(f"reactance must be positive, got {x_new}")
    v = rn.v
    if not (0 <= i < v and 0 <= j < v):
        raise ValueError(f"indices out of range for {v} inverters")
    scaled = rn.scaled.copy()
    w = 1.0 / x_new
    scaled[i, i] += w
    scaled[j, j] += w
    scaled[i, j] -= w
    scaled[j, i] -= w
    return replace(rn, scaled=scaled)


def scale_droop(droops: DroopConfig, index: int, d: float) -> DroopConfig:
    """Droop config with the frequency droop at ``index`` multiplied by d >= 1."""
    if d < 1.0:
        raise ValueError(f"scale factor must be >= 1, got {d}")
    m = droops.m.copy()
    m[index] *= d
    return DroopConfig(m, droops.n.copy())


def write_mu_csv(droops: DroopConfig, rn: ReducedNetwork, path) -> None:
    """Ascending mu values alongside the sorted per-inverter upper bounds."""
    mu = mu_spectrum(droops, rn).mu
    bounds = np.sort(gershgorin(droops, rn))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mu", "gershgorin_upper"])
        for m_val, g_val in zip(mu, bounds):
            w.writerow([repr(float(m_val)), repr(float(g_val))])
