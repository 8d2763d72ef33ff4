"""Certified stability regions in droop-gain space.

Three closed forms, all anchored to the worst-case threshold mu_cr_min:

* equal       -- one shared bound m <= mu_min / lambda_max(scaled),
* relative    -- per-inverter bounds inversely proportional to scaled_ii,
* conservative-- per-inverter bounds mu_min / (2 * scaled_ii).

Membership per inverter is the triangle 0 < m <= m_max, m/k_max <= n <= m/k_min.
Certification itself is the strict test max mu < mu_min; failing it does not
imply instability, only that the closed-form guarantee does not apply.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from . import twobus
from .laplacian import mu_spectrum
from .netmodel import DEFAULT_OMEGA0, DEFAULT_TAU, ReducedNetwork
from .statespace import DroopConfig

K_MIN = 0.3
K_MAX = 5.0


@dataclass(frozen=True)
class CertifiedRegion:
    variant: str  # "equal" | "relative" | "conservative"
    inverter_ids: tuple[str, ...]
    m_max: np.ndarray  # fractions
    mu_threshold: float
    k_min: float = K_MIN
    k_max: float = K_MAX


@dataclass(frozen=True)
class CertifyResult:
    certified: bool
    mu_max: float
    mu_threshold: float

    def __str__(self) -> str:
        if self.certified:
            return f"Certified (max mu {self.mu_max:.4f} < {self.mu_threshold:.4f})"
        return f"NotCertified (max mu {self.mu_max:.4f} >= {self.mu_threshold:.4f})"


def default_mu_min(tau: float = DEFAULT_TAU, omega0: float = DEFAULT_OMEGA0) -> float:
    """Worst-case threshold recomputed for the given constants.

    For the stock constants the value is cross-checked against the known
    0.826 reference; a disagreement indicates a broken threshold search.
    """
    wc = twobus.worst_case(tau, omega0)
    if math.isclose(tau, DEFAULT_TAU, rel_tol=1e-9) and math.isclose(omega0, DEFAULT_OMEGA0, rel_tol=1e-9):
        if abs(wc.mu_cr - twobus.REFERENCE_MU_CR_MIN) >= 0.005:
            raise RuntimeError(
                f"worst-case threshold {wc.mu_cr:.4f} drifted from the "
                f"{twobus.REFERENCE_MU_CR_MIN} reference"
            )
    return wc.mu_cr


def _resolve_mu_min(rn: ReducedNetwork, mu_min: float | None) -> float:
    if mu_min is None:
        return default_mu_min(rn.tau, rn.omega0)
    if mu_min <= 0:
        raise ValueError(f"mu threshold must be positive, got {mu_min}")
    return float(mu_min)


def region_equal(rn: ReducedNetwork, mu_min: float | None = None) -> CertifiedRegion:
    """Shared maximum frequency droop from the largest coupling eigenvalue."""
    mu_min = _resolve_mu_min(rn, mu_min)
    lam_max = float(np.max(np.linalg.eigvalsh(rn.scaled)))
    if lam_max <= 0:
        raise ValueError("unbounded region: largest coupling eigenvalue is zero "
                         "(single isolated inverter)")
    m = mu_min / lam_max
    return CertifiedRegion("equal", rn.inverter_ids, np.full(rn.v, m), mu_min)


def region_relative(rn: ReducedNetwork, mu_min: float | None = None) -> CertifiedRegion:
    """Per-inverter bounds from the diagonally rescaled coupling matrix.

    With droops proportional to 1/scaled_ii all per-inverter eigenvalue
    ranges coincide, so the largest eigenvalue of the rescaled matrix fixes
    the common scale.
    """
    mu_min = _resolve_mu_min(rn, mu_min)
    d = np.diag(rn.scaled).copy()
    if np.any(d <= 0):
        raise ValueError("zero diagonal in the reduced coupling matrix")
    inv_sqrt = 1.0 / np.sqrt(d)
    c_sym = (inv_sqrt[:, None] * rn.scaled) * inv_sqrt[None, :]
    lam_max = float(np.max(np.linalg.eigvalsh(0.5 * (c_sym + c_sym.T))))
    return CertifiedRegion("relative", rn.inverter_ids, mu_min / (lam_max * d), mu_min)


def region_conservative(rn: ReducedNetwork, mu_min: float | None = None) -> CertifiedRegion:
    """Simpler per-inverter bounds mu_min / (2 * scaled_ii)."""
    mu_min = _resolve_mu_min(rn, mu_min)
    d = np.diag(rn.scaled).copy()
    if np.any(d <= 0):
        raise ValueError("zero diagonal in the reduced coupling matrix")
    return CertifiedRegion("conservative", rn.inverter_ids, mu_min / (2.0 * d), mu_min)


def in_region(droops: DroopConfig, region: CertifiedRegion) -> bool:
    """Inclusive membership of every inverter's (m, n) in its triangle."""
    if droops.v != region.m_max.size:
        raise ValueError(f"droop config has {droops.v} entries for {region.m_max.size} inverters")
    m, n = droops.m, droops.n
    ok_m = np.all((m > 0) & (m <= region.m_max))
    ok_n = np.all((m / region.k_max <= n) & (n <= m / region.k_min))
    return bool(ok_m and ok_n)


def certify(rn: ReducedNetwork, droops: DroopConfig,
            mu_min: float | None = None) -> CertifyResult:
    """Strict spectral test: certified iff every coupling eigenvalue < mu_min."""
    mu_min = _resolve_mu_min(rn, mu_min)
    mu_max = mu_spectrum(droops, rn).largest
    return CertifyResult(mu_max < mu_min, mu_max, mu_min)


def equal_droops_at_mu(rn: ReducedNetwork, mu_target: float, k: float) -> DroopConfig:
    """Equal droops placing the largest coupling eigenvalue at mu_target."""
    lam_max = float(np.max(np.linalg.eigvalsh(rn.scaled)))
    if lam_max <= 0:
        raise ValueError("network has no coupling; cannot target a mu value")
    return DroopConfig.uniform(rn.v, mu_target / lam_max, k)


def region_to_document(region: CertifiedRegion) -> dict:
    return {
        "variant": region.variant,
        "unit": "percent",
        "mu_threshold": region.mu_threshold,
        "k_min": region.k_min,
        "k_max": region.k_max,
        "inverters": [
            {"id": bid, "m_max": 100.0 * float(m)}
            for bid, m in zip(region.inverter_ids, region.m_max)
        ],
    }


def write_region_json(region: CertifiedRegion, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(region_to_document(region), fh, indent=2)
        fh.write("\n")


def write_region_bar_csv(regions: list[CertifiedRegion], path) -> None:
    """Per-inverter m_max (percent) per variant, for bar-chart plotting."""
    if not regions:
        raise ValueError("no regions to write")
    ids = regions[0].inverter_ids
    for reg in regions:
        if reg.inverter_ids != ids:
            raise ValueError("regions describe different inverter sets")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["inverter"] + [f"m_max_{r.variant}_percent" for r in regions])
        for i, bid in enumerate(ids):
            w.writerow([bid] + [repr(100.0 * float(r.m_max[i])) for r in regions])
