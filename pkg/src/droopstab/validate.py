"""Validation experiments: Monte Carlo sweeps, boundary search, stationarity
finite differences, and the complexity/benchmark comparisons.

Every randomized routine takes an explicit 64-bit seed and draws from a
single PCG64 stream in a fixed order (per sample: load factors in load-id
order, then per-line ratios in line order, then per-inverter ratios), so
reports are reproducible bit for bit.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass

import numpy as np

from . import regions as regions_mod
from ._util import ordered_map
from .netmodel import (NetworkSpec, eliminate_loads, with_line_rhos,
                       with_scaled_loads, with_uniform_rho)
from .networks import synthetic_network
from .statespace import (DroopConfig, Verdict, assemble_full, spectrum,
                         verdict)
from .twobus import REFERENCE_MU_CR_MIN


@dataclass(frozen=True)
class SamplerSpec:
    """Which parameters each draw perturbs; None leaves a group untouched."""

    load_scale: tuple[float, float] | None = (0.5, 2.0)
    line_rho: tuple[float, float] | None = (0.4, 2.5)
    inverter_k: tuple[float, float] | None = (0.3, 5.0)


@dataclass(frozen=True)
class Sample:
    index: int
    dominant: complex
    verdict: Verdict
    load_factors: np.ndarray
    line_rhos: np.ndarray
    k_ratios: np.ndarray


@dataclass(frozen=True)
class SampleReport:
    samples: list[Sample]
    seed: int
    margin: float

    @property
    def violated(self) -> int:
        return sum(1 for s in self.samples if s.verdict is Verdict.UNSTABLE)


@dataclass(frozen=True)
class BoundaryPoint:
    k: float
    m_boundary: float


@dataclass(frozen=True)
class StationarityReport:
    rho: float
    h: float
    per_line: np.ndarray  # dRe(dominant)/drho_j, central differences
    uniform_first: float  # same, along the uniform direction
    uniform_second: float  # second difference along the uniform direction
    below_noise_floor: bool


@dataclass(frozen=True)
class ComplexityEstimate:
    v: int
    epsilon: float  # mesh step, percent
    area: float  # per-inverter search area A_i
    log10_points: float
    points: float  # (area)^v / epsilon^(2v); inf when past float range

    @classmethod
    def compute(cls, v: int, epsilon: float, area: float) -> "ComplexityEstimate":
        if v < 1 or epsilon <= 0 or area <= 0:
            raise ValueError("v, epsilon and area must be positive")
        log10_points = v * math.log10(area) - 2 * v * math.log10(epsilon)
        points = 10.0 ** log10_points if log10_points < 308 else math.inf
        return cls(v, epsilon, area, log10_points, points)


@dataclass(frozen=True)
class BenchRow:
    v: int
    op: str
    median_ms: float


def _dominant_and_verdict(net: NetworkSpec, droops: DroopConfig, margin: float):
    s = spectrum(assemble_full(net, droops))
    return s.dominant, verdict(s, margin)


def monte_carlo(net: NetworkSpec, droops: DroopConfig, sampler: SamplerSpec,
                count: int, seed: int, margin: float = 1e-8) -> SampleReport:
    """Full-model verdicts over randomized load/ratio draws.

    The frequency droops m stay fixed; when ``inverter_k`` is sampled the
    voltage droops are re-derived as n_i = m_i / k_i.
    """
    if count < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    load_ids = net.load_ids
    n_lines = len(net.lines)
    v = len(net.inverter_ids)
    draws = []
    for i in range(count):
        lf = (rng.uniform(*sampler.load_scale, size=len(load_ids))
              if sampler.load_scale else np.ones(len(load_ids)))
        lr = (rng.uniform(*sampler.line_rho, size=n_lines)
              if sampler.line_rho else np.array([ln.rho for ln in net.lines]))
        kr = (rng.uniform(*sampler.inverter_k, size=v)
              if sampler.inverter_k else droops.m / droops.n)
        draws.append((i, lf, lr, kr))

    def run(draw) -> Sample:
        i, lf, lr, kr = draw
        sampled = with_line_rhos(net, lr)
        if load_ids:
            sampled = with_scaled_loads(sampled, dict(zip(load_ids, lf)))
        d = DroopConfig.proportional(droops.m, kr)
        try:
            dom, ver = _dominant_and_verdict(sampled, d, margin)
        except Exception as exc:
            raise RuntimeError(f"sample {i} failed to assemble/solve: {exc}") from exc
        return Sample(i, dom, ver, lf, lr, kr)

    return SampleReport(ordered_map(run, draws), seed, margin)


def true_boundary(net: NetworkSpec, k_grid, m_bracket: tuple[float, float] = (1e-3, 0.5),
                  tol_m: float = 1e-5, margin: float = 1e-8) -> list[BoundaryPoint]:
    """Equal-droop stability boundary by bisection on the full-model verdict."""
    lo0, hi0 = m_bracket
    v = len(net.inverter_ids)

    def stable(m: float, k: float) -> bool:
        _, ver = _dominant_and_verdict(net, DroopConfig.uniform(v, m, k), margin)
        return ver is Verdict.STABLE

    def solve(k: float) -> BoundaryPoint:
        lo, hi = lo0, hi0
        if not stable(lo, k) or stable(hi, k):
            raise ValueError(
                f"bracket ({lo0}, {hi0}) does not contain the k={k} verdict flip"
            )
        while hi - lo > tol_m:
            mid = 0.5 * (lo + hi)
            if stable(mid, k):
                lo = mid
            else:
                hi = mid
        return BoundaryPoint(float(k), 0.5 * (lo + hi))

    return ordered_map(solve, [float(k) for k in k_grid])


def _dominant_re_at_rho(net: NetworkSpec, droops: DroopConfig, rho: float) -> float:
    s = spectrum(assemble_full(with_uniform_rho(net, rho), droops))
    return float(s.dominant.real)


def find_stationary_rho(net: NetworkSpec, droops: DroopConfig,
                        bracket: tuple[float, float] = (0.4, 2.5),
                        tol: float = 1e-4) -> float:
    """Uniform ratio at which the dominant mode's real part is stationary.

    Coarse scan of the bracket followed by golden-section refinement of the
    interior maximum of Re(dominant) as a function of the uniform ratio.
    """
    lo, hi = bracket
    grid = np.linspace(lo, hi, 13)
    vals = [_dominant_re_at_rho(net, droops, float(r)) for r in grid]
    i = int(np.argmax(vals))
    a = grid[max(0, i - 1)]
    b = grid[min(len(grid) - 1, i + 1)]
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc = _dominant_re_at_rho(net, droops, c)
    fd = _dominant_re_at_rho(net, droops, d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = _dominant_re_at_rho(net, droops, c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = _dominant_re_at_rho(net, droops, d)
    return 0.5 * (a + b)


def stationarity_check(net: NetworkSpec, droops: DroopConfig, rho_ext: float,
                       h: float = 1e-4) -> StationarityReport:
    """Central-difference sensitivities of the dominant mode to per-line ratios.

    The network is first forced to the uniform ratio rho_ext; each line's
    ratio is then perturbed by +-h in turn.  Works best on unloaded networks,
    where the dominant mode is the droop mode at every reference ratio.
    """
    base = with_uniform_rho(net, rho_ext)
    n_lines = len(base.lines)

    def dom_re(rhos) -> float:
        s = spectrum(assemble_full(with_line_rhos(base, rhos), droops))
        return float(s.dominant.real)

    uniform = np.full(n_lines, rho_ext)
    per_line = np.zeros(n_lines)
    for j in range(n_lines):
        up = uniform.copy()
        dn = uniform.copy()
        up[j] += h
        dn[j] -= h
        per_line[j] = (dom_re(up) - dom_re(dn)) / (2.0 * h)
    f0 = dom_re(uniform)
    fp = dom_re(uniform + h)
    fm = dom_re(uniform - h)
    uniform_first = (fp - fm) / (2.0 * h)
    uniform_second = (fp - 2.0 * f0 + fm) / (h * h)
    noise = bool(np.max(np.abs([fp - f0, f0 - fm])) < 1e-10)
    return StationarityReport(rho_ext, h, per_line, uniform_first, uniform_second, noise)


def complexity(v: int, epsilon_percent: float, area: float) -> ComplexityEstimate:
    """Grid-point count for a direct per-point boundary search."""
    return ComplexityEstimate.compute(v, epsilon_percent, area)


def benchmark(sizes, repetitions: int = 5, seed: int = 0,
              mu_min: float | None = None) -> list[BenchRow]:
    """Median times: closed-form region computation vs one full eigensolve.

    Synthetic connected inverter-only networks (random tree plus 20% extra
    edges) are generated per size; model assembly is excluded from both
    timings so the numbers isolate the eigen-computations.
    """
    if repetitions < 1:
        raise ValueError("need at least one repetition")
    if mu_min is None:
        mu_min = REFERENCE_MU_CR_MIN
    rows: list[BenchRow] = []
    for v in sizes:
        net = synthetic_network(int(v), seed=seed)
        rn = eliminate_loads(net)
        droops = regions_mod.equal_droops_at_mu(rn, 0.5 * mu_min, k=1.0)
        sm = assemble_full(net, droops)
        region_times = []
        eig_times = []
        for _ in range(repetitions):
            t0 = time.perf_counter()
            regions_mod.region_relative(rn, mu_min)
            region_times.append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            np.linalg.eigvals(sm.A)
            eig_times.append(time.perf_counter() - t0)
        rows.append(BenchRow(int(v), "region_relative", 1e3 * float(np.median(region_times))))
        rows.append(BenchRow(int(v), "full_eigensolve", 1e3 * float(np.median(eig_times))))
    return rows


def write_scatter_csv(report: SampleReport, path) -> None:
    """Dominant eigenvalue per sample, spectrum-export column layout."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re", "im", "is_zero_mode"])
        for s in report.samples:
            w.writerow([repr(float(s.dominant.real)), repr(float(s.dominant.imag)), 0])


def write_boundary_csv(points: list[BoundaryPoint], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "m_boundary_percent"])
        for p in points:
            w.writerow([repr(float(p.k)), repr(100.0 * float(p.m_boundary))])


def write_bench_csv(rows: list[BenchRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["v", "op", "median_ms"])
        for r in rows:
            w.writerow([r.v, r.op, repr(float(r.median_ms))])
