"""Sample and synthetic networks.

``two_area`` is a four-inverter system in two tightly coupled pairs joined by
a long tie, the classic benchmark shape for inter-area oscillation studies.
``feeder123`` is a distribution-feeder style surrogate: ten inverters spread
over a loaded trunk with laterals, mixing the four common R/X classes
(0.4, 0.6, 1.0, 2.0).  Both carry loads at least ten times stiffer than the
stiffest line, so the reduced inverter-only model stays representative.
"""
from __future__ import annotations

import numpy as np

from .netmodel import Bus, Line, LoadImpedance, NetworkSpec


def two_area(rho: float = 1.0, include_loads: bool = True) -> NetworkSpec:
    """Two pairs of inverters joined by a long tie, loads at the hub buses.

    With ``include_loads=False`` the hub buses become virtual; eliminate them
    before assembling a full model.
    """
    hub_kind = "load" if include_loads else "virtual"
    buses = (
        Bus("inv1", "inverter"), Bus("inv2", "inverter"),
        Bus("inv3", "inverter"), Bus("inv4", "inverter"),
        Bus("hub-a", hub_kind), Bus("hub-b", hub_kind),
    )
    xs = {("inv1", "hub-a"): 0.10, ("inv2", "hub-a"): 0.10,
          ("inv3", "hub-b"): 0.10, ("inv4", "hub-b"): 0.10,
          ("hub-a", "hub-b"): 0.60}
    lines = tuple(Line(a, b, rho * x, x) for (a, b), x in xs.items())
    loads = {}
    if include_loads:
        loads = {"hub-a": LoadImpedance(12.0, 9.0), "hub-b": LoadImpedance(12.0, 9.0)}
    return NetworkSpec(buses, lines, loads)


# feeder123 branch table: (from, to, x, rho_class)
_FEEDER_BRANCHES = (
    # trunk of loaded buses
    ("n10", "n11", 0.08, 0.4), ("n11", "n12", 0.08, 0.4), ("n12", "n13", 0.10, 0.4),
    ("n13", "n14", 0.10, 0.6), ("n14", "n15", 0.12, 0.6), ("n15", "n16", 0.12, 0.6),
    # inverter laterals
    ("inv1", "n10", 0.15, 1.0), ("inv2", "n11", 0.25, 1.0), ("inv3", "n12", 0.40, 1.0),
    ("inv4", "n13", 0.60, 2.0), ("inv5", "n14", 0.80, 2.0),
    ("inv6", "n17", 0.30, 1.0), ("n17", "n15", 0.20, 0.6),
    ("inv7", "n18", 0.50, 2.0), ("n18", "n16", 0.25, 0.6),
    ("inv8", "n19", 0.90, 2.0), ("n19", "n16", 0.30, 1.0),
    # tightly coupled pair at the trunk head
    ("inv9", "n20", 0.05, 0.4), ("inv10", "n20", 0.05, 0.4), ("n20", "n10", 0.10, 0.4),
    ("inv9", "inv10", 0.06, 0.4),
    # loop closures
    ("n21", "n13", 0.30, 1.0), ("n21", "n16", 0.35, 1.0),
    # remaining loaded buses off the trunk
    ("n22", "n11", 0.20, 0.6), ("n23", "n12", 0.22, 0.6), ("n24", "n14", 0.25, 1.0),
    ("n25", "n15", 0.20, 0.6), ("n26", "n17", 0.30, 1.0), ("n27", "n18", 0.28, 1.0),
    ("n28", "n19", 0.26, 0.6), ("n29", "n20", 0.18, 0.4),
)


def feeder123(uniform_rho: float | None = None) -> NetworkSpec:
    """Ten-inverter feeder surrogate with mixed R/X classes.

    Pass ``uniform_rho`` to override every line's ratio with one value (for
    the model flavours that need a homogeneous network).
    """
    inverter_ids = [f"inv{i}" for i in range(1, 11)]
    load_ids = sorted({b for br in _FEEDER_BRANCHES for b in br[:2] if b.startswith("n")})
    buses = tuple(Bus(b, "inverter") for b in inverter_ids) + tuple(Bus(b, "load") for b in load_ids)
    lines = tuple(
        Line(a, b, (uniform_rho if uniform_rho is not None else rho) * x, x)
        for a, b, x, rho in _FEEDER_BRANCHES
    )
    loads = {b: LoadImpedance(16.0, 12.0) for b in load_ids}
    return NetworkSpec(buses, lines, loads)


def synthetic_network(v: int, seed: int, extra_edge_ratio: float = 0.2,
                      rho: float = 1.0, n_load: int = 0, n_virtual: int = 0) -> NetworkSpec:
    """Random connected network: a spanning tree plus extra edges.

    Buses 0..v-1 are inverters; optional load and virtual buses hang off
    random attachment points.  Reactances are drawn from [0.05, 1.0] and all
    lines share the given R/X ratio.  Deterministic for a fixed seed.
    """
    if v < 1:
        raise ValueError("need at least one inverter")
    rng = np.random.default_rng(seed)
    ids = [f"i{j}" for j in range(v)]
    buses = [Bus(b, "inverter") for b in ids]
    edges: set[tuple[int, int]] = set()
    for node in range(1, v):
        edges.add((int(rng.integers(0, node)), node))
    n_extra = int(round(extra_edge_ratio * max(0, v - 1)))
    attempts = 0
    while n_extra > 0 and attempts < 50 * n_extra:
        a, b = (int(x) for x in rng.integers(0, v, size=2))
        attempts += 1
        if a == b:
            continue
        e = (min(a, b), max(a, b))
        if e not in edges:
            edges.add(e)
            n_extra -= 1
    lines = []
    for a, b in sorted(edges):
        x = float(rng.uniform(0.05, 1.0))
        lines.append(Line(ids[a], ids[b], rho * x, x))
    loads = {}
    for j in range(n_load):
        bid = f"l{j}"
        buses.append(Bus(bid, "load"))
        x = float(rng.uniform(0.05, 0.5))
        lines.append(Line(ids[int(rng.integers(0, v))], bid, rho * x, x))
        loads[bid] = LoadImpedance(16.0, 12.0)
    for j in range(n_virtual):
        bid = f"w{j}"
        buses.append(Bus(bid, "virtual"))
        # a virtual junction must pass current through: tie it to two buses
        a, b = int(rng.integers(0, v)), int(rng.integers(0, v))
        x1 = float(rng.uniform(0.05, 0.5))
        x2 = float(rng.uniform(0.05, 0.5))
        lines.append(Line(ids[a], bid, rho * x1, x1))
        lines.append(Line(bid, ids[b if b != a else (a + 1) % v], rho * x2, x2))
    return NetworkSpec(tuple(buses), tuple(lines), loads)
