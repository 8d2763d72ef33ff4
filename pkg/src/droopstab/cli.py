"""Command-line front end.

Droop gains print and parse in percent by default; files record their unit
explicitly.  CSV files use '.' decimals and LF line endings so identical
inputs and seeds give byte-identical outputs.  The environment variable
DROOPSTAB_THREADS caps internal sweep parallelism.
"""
from __future__ import annotations

import dataclasses
import json
import sys
from dataclasses import dataclass

import click
import numpy as np

from . import laplacian as lap
from . import netmodel, regions, statespace, twobus, validate
from .netmodel import NetworkError, NetworkSpec, SchemaError
from .statespace import DroopConfig

EXIT_DOMAIN = 1
EXIT_INPUT = 2


@dataclass(frozen=True)
class RunConfig:
    """Validated per-invocation overrides shared by the command helpers."""

    tau: float | None = None
    omega0: float | None = None
    unit: str = "percent"

    def __post_init__(self):
        if self.tau is not None and self.tau <= 0:
            raise SchemaError("tau override must be positive")
        if self.omega0 is not None and self.omega0 <= 0:
            raise SchemaError("omega0 override must be positive")
        if self.unit not in ("percent", "fraction"):
            raise SchemaError(f"unknown unit '{self.unit}'")


def _fail(code: int, msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _load_net(path: str, cfg: RunConfig) -> NetworkSpec:
    try:
        net = netmodel.load_network(path)
    except (OSError, NetworkError) as exc:
        _fail(EXIT_INPUT, str(exc))
    overrides = {}
    if cfg.tau is not None:
        overrides["tau"] = cfg.tau
    if cfg.omega0 is not None:
        overrides["omega0"] = cfg.omega0
    return dataclasses.replace(net, **overrides) if overrides else net


def _full_ready(net: NetworkSpec) -> NetworkSpec:
    """Eliminate virtual buses when present so the full model can be built."""
    if not net.virtual_ids:
        return net
    try:
        return netmodel.eliminate_virtual(net)
    except NetworkError as exc:
        _fail(EXIT_INPUT, f"cannot eliminate virtual buses: {exc}")


def _parse_range(text: str, name: str) -> tuple[float, float, int]:
    """lo:hi:step -> (lo, hi_snapped, n_points)."""
    parts = text.split(":")
    if len(parts) != 3:
        _fail(EXIT_INPUT, f"{name}: expected lo:hi:step, got '{text}'")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        _fail(EXIT_INPUT, f"{name}: non-numeric range '{text}'")
    if lo <= 0 or hi < lo or step <= 0:
        _fail(EXIT_INPUT, f"{name}: range must be positive and ordered: '{text}'")
    n = int(round((hi - lo) / step)) + 1 if hi > lo else 1
    return lo, lo + (n - 1) * step, n


def _to_fraction(value: float, unit: str) -> float:
    return value / 100.0 if unit == "percent" else value


def _droops_from_file(path: str, rn_ids: tuple[str, ...], default_unit: str) -> DroopConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(EXIT_INPUT, f"droops file: {exc}")
    unit = str(doc.get("unit", default_unit))
    if unit not in ("percent", "fraction"):
        _fail(EXIT_INPUT, f"droops file: unknown unit '{unit}'")
    entries = doc.get("inverters")
    if not isinstance(entries, list):
        _fail(EXIT_INPUT, "droops file: missing 'inverters' list")
    by_id = {}
    for e in entries:
        if "m" in e and "n" in e:
            m, n = float(e["m"]), float(e["n"])
        elif "m_max" in e:
            # a regions export doubles as a droop assignment at the vertex
            m = float(e["m_max"])
            n = m / float(doc.get("k_min", regions.K_MIN))
        else:
            _fail(EXIT_INPUT, f"droops file: entry {e} has neither (m, n) nor m_max")
        by_id[str(e["id"])] = (_to_fraction(m, unit), _to_fraction(n, unit))
    missing = [b for b in rn_ids if b not in by_id]
    if missing:
        _fail(EXIT_INPUT, f"droops file: no entry for inverters {', '.join(missing)}")
    m = np.array([by_id[b][0] for b in rn_ids])
    n = np.array([by_id[b][1] for b in rn_ids])
    try:
        return DroopConfig(m, n)
    except ValueError as exc:
        _fail(EXIT_INPUT, f"droops file: {exc}")


def _echo_json(obj) -> None:
    click.echo(json.dumps(obj, indent=2))


@click.group()
@click.version_option(package_name="droopstab")
def main():
    """Stability certification for droop-controlled inverter networks."""


_tau_opt = click.option("--tau", type=float, default=None,
                        help="Power-filter time constant override [s].")
_omega0_opt = click.option("--omega0", type=float, default=None,
                           help="Base angular frequency override [rad/s].")


@main.command("mu-map")
@click.option("--rho", "rho_rng", default="0.4:5:0.05", show_default=True,
              help="rho grid as lo:hi:step.")
@click.option("--k", "k_rng", default="0.3:5:0.05", show_default=True,
              help="k grid as lo:hi:step.")
@click.option("--tol-mu", type=float, default=1e-4, show_default=True)
@_tau_opt
@_omega0_opt
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False),
              help="Surface CSV destination (rho, k, mu_cr).")
def mu_map(rho_rng, k_rng, tol_mu, tau, omega0, output):
    """Map the critical threshold over a (rho, k) grid."""
    cfg = RunConfig(tau, omega0)
    rlo, rhi, rn = _parse_range(rho_rng, "--rho")
    klo, khi, kn = _parse_range(k_rng, "--k")
    surface = twobus.mu_cr_surface(
        (rlo, rhi), (klo, khi), (rn, kn),
        tau=cfg.tau or netmodel.DEFAULT_TAU,
        omega0=cfg.omega0 or netmodel.DEFAULT_OMEGA0,
        tol_mu=tol_mu,
    )
    twobus.write_surface_csv(surface, output)
    _echo_json({"rho": surface.worst.rho, "k": surface.worst.k,
                "mu_cr_min": surface.worst.mu_cr})


@main.command("worst-case")
@click.option("--rho", "rho_rng", default="0.4:2.5:0.1", show_default=True)
@click.option("--k", "k_rng", default="0.3:5:0.25", show_default=True)
@_tau_opt
@_omega0_opt
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="Optional JSON destination.")
def worst_case_cmd(rho_rng, k_rng, tau, omega0, output):
    """Smallest critical threshold over the certification ranges."""
    cfg = RunConfig(tau, omega0)
    rlo, rhi, rn = _parse_range(rho_rng, "--rho")
    klo, khi, kn = _parse_range(k_rng, "--k")
    wc = twobus.worst_case(cfg.tau or netmodel.DEFAULT_TAU,
                           cfg.omega0 or netmodel.DEFAULT_OMEGA0,
                           (rlo, rhi), (klo, khi), (rn, kn))
    doc = {"rho": wc.rho, "k": wc.k, "mu_cr_min": wc.mu_cr}
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    _echo_json(doc)


@main.command("regions")
@click.argument("network", type=click.Path(exists=True, dir_okay=False))
@click.option("--variant", type=click.Choice(["equal", "relative", "conservative"]),
              default="relative", show_default=True)
@click.option("--mu-min", type=float, default=None,
              help="Threshold override; recomputed from tau/omega0 when omitted.")
@_tau_opt
@_omega0_opt
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False),
              help="Region JSON destination.")
@click.option("--bar-csv", type=click.Path(dir_okay=False), default=None,
              help="Also write all three variants as bar-chart CSV.")
def regions_cmd(network, variant, mu_min, tau, omega0, output, bar_csv):
    """Per-inverter certified droop bounds."""
    cfg = RunConfig(tau, omega0)
    net = _load_net(network, cfg)
    try:
        rn = netmodel.eliminate_loads(net, require_uniform=False)
        builder = {"equal": regions.region_equal,
                   "relative": regions.region_relative,
                   "conservative": regions.region_conservative}[variant]
        region = builder(rn, mu_min)
        regions.write_region_json(region, output)
        if bar_csv:
            all_regions = [regions.region_equal(rn, mu_min),
                           regions.region_relative(rn, mu_min),
                           regions.region_conservative(rn, mu_min)]
            regions.write_region_bar_csv(all_regions, bar_csv)
    except (NetworkError, ValueError) as exc:
        _fail(EXIT_INPUT, str(exc))
    click.echo(f"{variant} region over {rn.v} inverters "
               f"(mu threshold {region.mu_threshold:.4f}) -> {output}")


@main.command("certify")
@click.argument("network", type=click.Path(exists=True, dir_okay=False))
@click.option("--droops", "droops_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--mu-min", type=float, default=None)
@click.option("--unit", type=click.Choice(["percent", "fraction"]),
              default="percent", show_default=True,
              help="Unit assumed when the droops file does not state one.")
@click.option("--strict", is_flag=True, help="Exit 1 when not certified.")
@_tau_opt
@_omega0_opt
def certify_cmd(network, droops_path, mu_min, unit, strict, tau, omega0):
    """Certify a droop assignment against the worst-case threshold."""
    cfg = RunConfig(tau, omega0, unit)
    net = _load_net(network, cfg)
    try:
        rn = netmodel.eliminate_loads(net, require_uniform=False)
    except NetworkError as exc:
        _fail(EXIT_INPUT, str(exc))
    droops = _droops_from_file(droops_path, rn.inverter_ids, cfg.unit)
    result = regions.certify(rn, droops, mu_min)
    click.echo(str(result))
    if strict and not result.certified:
        sys.exit(EXIT_DOMAIN)


@main.command("spectrum")
@click.argument("network", type=click.Path(exists=True, dir_okay=False))
@click.option("--droops", "droops_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--model", type=click.Choice(["full", "homogeneous", "mu"]),
              default="full", show_default=True)
@click.option("--unit", type=click.Choice(["percent", "fraction"]), default="percent",
              show_default=True)
@click.option("--margin", type=float, default=1e-8, show_default=True)
@_tau_opt
@_omega0_opt
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
def spectrum_cmd(network, droops_path, model, unit, margin, tau, omega0, output):
    """Eigenvalues of the chosen model, with a stability verdict."""
    cfg = RunConfig(tau, omega0, unit)
    net = _load_net(network, cfg)
    try:
        if model == "full":
            ready = _full_ready(net)
            droops = _droops_from_file(droops_path, ready.inverter_ids, cfg.unit)
            s = statespace.spectrum(statespace.assemble_full(ready, droops))
            statespace.write_spectrum_csv(s, output)
        elif model == "homogeneous":
            rn = netmodel.eliminate_loads(net)
            droops = _droops_from_file(droops_path, rn.inverter_ids, cfg.unit)
            s = statespace.spectrum(statespace.assemble_homogeneous(rn, droops))
            statespace.write_spectrum_csv(s, output)
        else:
            rn = netmodel.eliminate_loads(net, require_uniform=False)
            droops = _droops_from_file(droops_path, rn.inverter_ids, cfg.unit)
            lap.write_mu_csv(droops, rn, output)
            click.echo(f"mu spectrum of {rn.v} inverters -> {output}")
            return
    except (NetworkError, statespace.ModelAssemblyError) as exc:
        _fail(EXIT_INPUT, str(exc))
    click.echo(f"{model} model: {s.eigenvalues.size} eigenvalues, "
               f"{s.zero_modes} zero modes, verdict {statespace.verdict(s, margin)}")


@main.command("boundary")
@click.argument("network", type=click.Path(exists=True, dir_okay=False))
@click.option("--k", "k_rng", default="0.3:5:0.25", show_default=True)
@click.option("--m-lo", type=float, default=0.1, show_default=True,
              help="Bracket low end, percent.")
@click.option("--m-hi", type=float, default=50.0, show_default=True,
              help="Bracket high end, percent.")
@click.option("--tol", type=float, default=1e-3, show_default=True,
              help="Bisection tolerance, percent.")
@click.option("--margin", type=float, default=1e-8, show_default=True)
@_tau_opt
@_omega0_opt
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
def boundary_cmd(network, k_rng, m_lo, m_hi, tol, margin, tau, omega0, output):
    """Equal-droop stability boundary by full-model binary search."""
    cfg = RunConfig(tau, omega0)
    net = _full_ready(_load_net(network, cfg))
    klo, khi, kn = _parse_range(k_rng, "--k")
    k_grid = np.linspace(klo, khi, kn)
    try:
        points = validate.true_boundary(net, k_grid, (m_lo / 100.0, m_hi / 100.0),
                                        tol / 100.0, margin)
    except ValueError as exc:
        _fail(EXIT_INPUT, str(exc))
    validate.write_boundary_csv(points, output)
    click.echo(f"boundary over {kn} k points -> {output}")


@main.command("montecarlo")
@click.argument("network", type=click.Path(exists=True, dir_okay=False))
@click.option("--droops", "droops_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--samples", type=int, default=500, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--vary-loads", default="0.5:2", show_default=True,
              help="Load impedance scale range lo:hi, or 'off'.")
@click.option("--vary-rho", default="0.4:2.5", show_default=True,
              help="Per-line R/X range lo:hi, or 'off'.")
@click.option("--vary-k", default="0.3:5", show_default=True,
              help="Per-inverter droop-ratio range lo:hi, or 'off'.")
@click.option("--margin", type=float, default=1e-8, show_default=True)
@click.option("--unit", type=click.Choice(["percent", "fraction"]), default="percent",
              show_default=True)
@_tau_opt
@_omega0_opt
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
def montecarlo_cmd(network, droops_path, samples, seed, vary_loads, vary_rho,
                   vary_k, margin, unit, tau, omega0, output):
    """Randomized full-model verdicts; writes the dominant-mode scatter."""
    cfg = RunConfig(tau, omega0, unit)
    net = _full_ready(_load_net(network, cfg))
    droops = _droops_from_file(droops_path, net.inverter_ids, cfg.unit)

    def pair(text, name):
        if text.strip().lower() == "off":
            return None
        parts = text.split(":")
        if len(parts) != 2:
            _fail(EXIT_INPUT, f"{name}: expected lo:hi or 'off', got '{text}'")
        return float(parts[0]), float(parts[1])

    sampler = validate.SamplerSpec(
        load_scale=pair(vary_loads, "--vary-loads"),
        line_rho=pair(vary_rho, "--vary-rho"),
        inverter_k=pair(vary_k, "--vary-k"),
    )
    report = validate.monte_carlo(net, droops, sampler, samples, seed, margin)
    validate.write_scatter_csv(report, output)
    _echo_json({"samples": samples, "seed": seed, "violated": report.violated})


@main.command("stationarity")
@click.argument("network", type=click.Path(exists=True, dir_okay=False))
@click.option("--rho-ext", type=float, default=None,
              help="Reference uniform ratio; located automatically when omitted.")
@click.option("--k", type=float, default=0.3, show_default=True,
              help="Droop ratio for the auto-tuned near-marginal droops.")
@click.option("--mu-fraction", type=float, default=0.98, show_default=True,
              help="Fraction of the critical threshold targeted by the droops.")
@click.option("--h", type=float, default=1e-4, show_default=True)
@_tau_opt
@_omega0_opt
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="Optional per-line derivative CSV.")
def stationarity_cmd(network, rho_ext, k, mu_fraction, h, tau, omega0, output):
    """Sensitivity of the dominant mode to individual line R/X ratios.

    Droops are tuned near-marginal for the located (or given) reference
    ratio.  Best run on unloaded networks, where the droop mode stays
    dominant at every reference ratio.
    """
    cfg = RunConfig(tau, omega0)
    net = _full_ready(_load_net(network, cfg))
    if rho_ext is None:
        wc = twobus.worst_case(net.tau, net.omega0)
        rho_probe, k = wc.rho, wc.k
    else:
        rho_probe = rho_ext
    mu_target = mu_fraction * twobus.mu_cr(rho_probe, k, net.tau, net.omega0)
    rn = netmodel.eliminate_loads(netmodel.with_uniform_rho(net, rho_probe))
    droops = regions.equal_droops_at_mu(rn, mu_target, k)
    if rho_ext is None:
        rho_probe = validate.find_stationary_rho(net, droops)
    report = validate.stationarity_check(net, droops, rho_probe, h)
    if output:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("line,dre_drho\n")
            for j, d in enumerate(report.per_line):
                ln = net.lines[j]
                fh.write(f"{ln.from_bus}-{ln.to_bus},{d!r}\n")
    _echo_json({
        "rho": report.rho,
        "h": report.h,
        "max_per_line_derivative": float(np.max(np.abs(report.per_line))),
        "uniform_first_difference": report.uniform_first,
        "uniform_second_difference": report.uniform_second,
        "below_noise_floor": report.below_noise_floor,
    })


@main.command("bench")
@click.option("--sizes", default="4,8,16,32,50", show_default=True)
@click.option("--reps", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
def bench_cmd(sizes, reps, seed, output):
    """Region computation vs a single full-model eigensolve, per size."""
    try:
        size_list = [int(s) for s in sizes.split(",") if s.strip()]
    except ValueError:
        _fail(EXIT_INPUT, f"--sizes: expected comma-separated integers, got '{sizes}'")
    rows = validate.benchmark(size_list, reps, seed)
    validate.write_bench_csv(rows, output)
    for r in rows:
        click.echo(f"v={r.v:4d}  {r.op:16s} {r.median_ms:10.3f} ms")


@main.command("complexity")
@click.option("--v", "n_inv", type=int, required=True, help="Inverter count.")
@click.option("--epsilon", type=float, default=0.5, show_default=True,
              help="Mesh step, percent.")
@click.option("--area", type=float, default=100.0, show_default=True,
              help="Per-inverter search area.")
def complexity_cmd(n_inv, epsilon, area):
    """Point count for a direct grid search of the droop-gain space."""
    try:
        est = validate.complexity(n_inv, epsilon, area)
    except ValueError as exc:
        _fail(EXIT_INPUT, str(exc))
    _echo_json({"v": est.v, "epsilon_percent": est.epsilon, "area": est.area,
                "log10_points": est.log10_points,
                "points": None if est.points == float("inf") else est.points})


if __name__ == "__main__":
    main()
