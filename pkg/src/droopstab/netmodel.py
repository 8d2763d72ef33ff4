"""Network data model: parsing, incidence/susceptance assembly and Kron reduction.

All electrical quantities are per-unit.  Droop gains are dimensionless
fractions everywhere inside the library; percent conversion happens only at
the CLI boundary.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_OMEGA0 = 100.0 * math.pi  # rad/s
DEFAULT_TAU = 1.0 / (10.0 * math.pi)  # s, power-measurement filter constant

BUS_KINDS = ("inverter", "load", "virtual")


class NetworkError(ValueError):
    """Invalid network description."""


class SchemaError(NetworkError):
    """Document does not conform to the network file schema."""


class NonUniformRhoError(NetworkError):
    """Per-line R/X ratios spread beyond the allowed tolerance."""


class IsolatedNodesError(NetworkError):
    """Eliminated nodes form a subgraph with no path to any kept node."""

    def __init__(self, nodes: Sequence[str]):
        self.nodes = tuple(nodes)
        super().__init__(f"isolated nodes with no path to a kept node: {', '.join(self.nodes)}")


@dataclass(frozen=True)
class Bus:
    id: str
    kind: str


@dataclass(frozen=True)
class Line:
    from_bus: str
    to_bus: str
    r: float
    x: float

    @property
    def rho(self) -> float:
        return self.r / self.x


@dataclass(frozen=True)
class LoadImpedance:
    r: float
    x: float


@dataclass(frozen=True)
class NetworkSpec:
    """Validated grid description: buses, series lines and shunt RL loads."""

    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    loads: Mapping[str, LoadImpedance] = field(default_factory=dict)
    omega0: float = DEFAULT_OMEGA0
    tau: float = DEFAULT_TAU

    def bus_ids(self) -> tuple[str, ...]:
        return tuple(b.id for b in self.buses)

    def ids_of_kind(self, kind: str) -> tuple[str, ...]:
        return tuple(b.id for b in self.buses if b.kind == kind)

    @property
    def inverter_ids(self) -> tuple[str, ...]:
        return self.ids_of_kind("inverter")

    @property
    def load_ids(self) -> tuple[str, ...]:
        return self.ids_of_kind("load")

    @property
    def virtual_ids(self) -> tuple[str, ...]:
        return self.ids_of_kind("virtual")

    def bus_index(self) -> dict[str, int]:
        return {b.id: i for i, b in enumerate(self.buses)}


@dataclass(frozen=True)
class IncidenceMatrix:
    """Signed bus-by-line incidence: -1 at the from-bus, +1 at the to-bus."""

    entries: np.ndarray
    bus_ids: tuple[str, ...]


@dataclass(frozen=True)
class RhoCheck:
    uniform: bool
    rho: float | None
    per_line: np.ndarray


@dataclass(frozen=True)
class ReducedNetwork:
    """Inverter-only equivalent network after load and virtual-bus elimination.

    ``scaled`` is the reduced Laplacian of line weights 1/X; it is the matrix
    that couples the inverter dynamics.  For a network with uniform R/X ratio
    ``rho`` the plain susceptance matrix is ``B = scaled / (1 + rho^2)``.
    ``rho`` is None when the source network mixes R/X classes; certification
    quantities depend only on ``scaled`` and remain well defined.
    """

    inverter_ids: tuple[str, ...]
    scaled: np.ndarray
    rho: float | None
    omega0: float = DEFAULT_OMEGA0
    tau: float = DEFAULT_TAU

    @property
    def v(self) -> int:
        return len(self.inverter_ids)

    @property
    def B(self) -> np.ndarray:
        if self.rho is None:
            raise NonUniformRhoError(
                "susceptance matrix B is defined only for a uniform R/X ratio; "
                "this reduced network mixes per-line ratios"
            )
        return self.scaled / (1.0 + self.rho ** 2)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SchemaError(msg)


def parse_network(document: str | bytes | Mapping) -> NetworkSpec:
    """Parse and validate a network description.

    Accepts a JSON string or an already-decoded mapping with keys ``buses``,
    ``lines``, optional ``loads``, ``omega0`` and ``tau``.
    """
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from exc
    else:
        doc = document
    _require(isinstance(doc, Mapping), "top-level document must be a JSON object")
    _require("buses" in doc, "missing required key 'buses'")
    _require("lines" in doc, "missing required key 'lines'")

    omega0 = float(doc.get("omega0", DEFAULT_OMEGA0))
    tau = float(doc.get("tau", DEFAULT_TAU))
    _require(omega0 > 0 and tau > 0, "omega0 and tau must be positive")

    buses: list[Bus] = []
    seen: set[str] = set()
    for i, b in enumerate(doc["buses"]):
        _require(isinstance(b, Mapping) and "id" in b and "kind" in b,
                 f"bus #{i}: expected object with 'id' and 'kind'")
        bid = str(b["id"])
        kind = str(b["kind"])
        _require(kind in BUS_KINDS, f"bus '{bid}': unknown kind '{kind}'")
        if bid in seen:
            raise SchemaError(f"duplicate bus id '{bid}'")
        seen.add(bid)
        buses.append(Bus(bid, kind))

    lines: list[Line] = []
    for i, ln in enumerate(doc["lines"]):
        _require(isinstance(ln, Mapping) and {"from", "to", "r", "x"} <= set(ln),
                 f"line #{i}: expected object with 'from', 'to', 'r', 'x'")
        a, b = str(ln["from"]), str(ln["to"])
        for end in (a, b):
            if end not in seen:
                raise SchemaError(f"line #{i}: dangling endpoint '{end}'")
        _require(a != b, f"line #{i}: endpoints coincide ('{a}')")
        r, x = float(ln["r"]), float(ln["x"])
        _require(x > 0, f"line #{i} ({a}-{b}): reactance must be positive, got {x}")
        _require(r >= 0, f"line #{i} ({a}-{b}): resistance must be non-negative, got {r}")
        lines.append(Line(a, b, r, x))

    loads: dict[str, LoadImpedance] = {}
    for bid, z in dict(doc.get("loads", {})).items():
        bid = str(bid)
        _require(bid in seen, f"load at unknown bus '{bid}'")
        _require(isinstance(z, Mapping) and {"r", "x"} <= set(z),
                 f"load at '{bid}': expected object with 'r' and 'x'")
        loads[bid] = LoadImpedance(float(z["r"]), float(z["x"]))

    kind_of = {b.id: b.kind for b in buses}
    for bid in loads:
        _require(kind_of[bid] == "load",
                 f"load impedance given for bus '{bid}' of kind '{kind_of[bid]}'")
    for b in buses:
        if b.kind == "load" and b.id not in loads:
            raise SchemaError(f"load bus '{b.id}' has no entry in the loads map")

    net = NetworkSpec(tuple(buses), tuple(lines), loads, omega0, tau)
    _check_connected(net)
    return net


def load_network(path) -> NetworkSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_network(fh.read())


def network_to_document(net: NetworkSpec) -> dict:
    """Inverse of parse_network: a JSON-serialisable description."""
    return {
        "omega0": net.omega0,
        "tau": net.tau,
        "buses": [{"id": b.id, "kind": b.kind} for b in net.buses],
        "lines": [{"from": ln.from_bus, "to": ln.to_bus, "r": ln.r, "x": ln.x}
                  for ln in net.lines],
        "loads": {bid: {"r": z.r, "x": z.x} for bid, z in net.loads.items()},
    }


def save_network(net: NetworkSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(network_to_document(net), fh, indent=2)
        fh.write("\n")


def _check_connected(net: NetworkSpec) -> None:
    n = len(net.buses)
    if n == 0:
        raise SchemaError("network has no buses")
    idx = net.bus_index()
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for ln in net.lines:
        a, b = find(idx[ln.from_bus]), find(idx[ln.to_bus])
        if a != b:
            parent[a] = b
    roots = {find(i) for i in range(n)}
    if len(roots) > 1:
        orphans = [net.buses[i].id for i in range(n) if find(i) != find(0)]
        raise SchemaError(f"network graph is disconnected; unreachable buses: {', '.join(orphans)}")


def incidence(net: NetworkSpec) -> IncidenceMatrix:
    """Signed incidence matrix with one column per line."""
    idx = net.bus_index()
    m = np.zeros((len(net.buses), len(net.lines)))
    for j, ln in enumerate(net.lines):
        m[idx[ln.from_bus], j] = -1.0
        m[idx[ln.to_bus], j] = 1.0
    return IncidenceMatrix(m, net.bus_ids())


def susceptance(net: NetworkSpec) -> np.ndarray:
    """Weighted graph Laplacian of line weights 1/X over all buses.

    Parallel lines between the same pair accumulate into one equivalent
    weight.
    """
    idx = net.bus_index()
    n = len(net.buses)
    B = np.zeros((n, n))
    for ln in net.lines:
        w = 1.0 / ln.x
        a, b = idx[ln.from_bus], idx[ln.to_bus]
        B[a, a] += w
        B[b, b] += w
        B[a, b] -= w
        B[b, a] -= w
    return B


def check_homogeneous_rho(net: NetworkSpec, tol: float = 0.01) -> RhoCheck:
    """Decide whether all lines share one R/X ratio within relative spread tol."""
    ratios = np.array([ln.rho for ln in net.lines])
    if ratios.size == 0:
        return RhoCheck(True, None, ratios)
    mean = float(np.mean(ratios))
    if ratios.size == 1:
        return RhoCheck(True, float(ratios[0]), ratios)
    spread = float((ratios.max() - ratios.min()) / max(abs(mean), 1e-300))
    if spread <= tol:
        return RhoCheck(True, mean, ratios)
    return RhoCheck(False, None, ratios)


def kron_reduce(B: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Schur complement of a Laplacian onto the kept index set.

    Raises IsolatedNodesError when some eliminated nodes have no path to any
    kept node (the eliminated block is then singular).
    """
    n = B.shape[0]
    keep = list(keep)
    elim = [i for i in range(n) if i not in set(keep)]
    if not elim:
        return B.copy()
    _check_eliminable(B, keep, elim)
    Bkk = B[np.ix_(keep, keep)]
    Bke = B[np.ix_(keep, elim)]
    Bee = B[np.ix_(elim, elim)]
    red = Bkk - Bke @ np.linalg.solve(Bee, Bke.T)
    return 0.5 * (red + red.T)


def _check_eliminable(B: np.ndarray, keep: Sequence[int], elim: Sequence[int]) -> None:
    # connected components of the eliminated-induced subgraph; each must have
    # an edge to at least one kept node
    tol = 1e-14 * max(1.0, float(np.max(np.abs(B))))
    elim = list(elim)
    pos = {node: i for i, node in enumerate(elim)}
    visited = [False] * len(elim)
    for start in range(len(elim)):
        if visited[start]:
            continue
        comp = [start]
        visited[start] = True
        stack = [start]
        while stack:
            i = stack.pop()
            for j in range(len(elim)):
                if not visited[j] and abs(B[elim[i], elim[j]]) > tol:
                    visited[j] = True
                    comp.append(j)
                    stack.append(j)
        touches_kept = any(abs(B[elim[i], k]) > tol for i in comp for k in keep)
        if not touches_kept:
            raise IsolatedNodesError([str(elim[i]) for i in comp])


def eliminate_loads(net: NetworkSpec, rho_tol: float = 0.01,
                    require_uniform: bool = True) -> ReducedNetwork:
    """Reduce a network to its inverter-only equivalent.

    Load and virtual buses are eliminated by Kron reduction of the 1/X
    Laplacian; the result does not depend on the load impedance values.  With
    ``require_uniform`` the per-line R/X ratios must agree within ``rho_tol``;
    pass False to reduce a mixed-ratio network (``rho`` is then None and only
    the scaled matrix is meaningful).
    """
    inv_ids = net.inverter_ids
    if not inv_ids:
        raise NetworkError("network has no inverter buses")
    check = check_homogeneous_rho(net, rho_tol)
    if not check.uniform and require_uniform:
        lo, hi = float(check.per_line.min()), float(check.per_line.max())
        raise NonUniformRhoError(
            f"per-line R/X ratios span [{lo:.4g}, {hi:.4g}], beyond {rho_tol:.2%} spread; "
            "pass require_uniform=False to reduce anyway"
        )
    idx = net.bus_index()
    keep = [idx[b] for b in inv_ids]
    try:
        red = kron_reduce(susceptance(net), keep)
    except IsolatedNodesError as exc:
        ids = net.bus_ids()
        raise IsolatedNodesError([ids[int(i)] for i in exc.nodes]) from None
    return ReducedNetwork(inv_ids, red, check.rho, net.omega0, net.tau)


def eliminate_virtual(net: NetworkSpec, rho_tol: float = 0.01) -> NetworkSpec:
    """Rewrite a network without virtual buses, keeping loads in place.

    Virtual (zero-injection) buses are Kron-eliminated from the 1/X Laplacian
    and equivalent lines are rebuilt from the reduced off-diagonals.  Exact
    only under a uniform R/X ratio, which is required.
    """
    if not net.virtual_ids:
        return net
    check = check_homogeneous_rho(net, rho_tol)
    if not check.uniform:
        raise NonUniformRhoError(
            "virtual-bus elimination rebuilds equivalent lines and needs a uniform R/X ratio"
        )
    rho = check.rho if check.rho is not None else 0.0
    idx = net.bus_index()
    kept = [b for b in net.buses if b.kind != "virtual"]
    keep_idx = [idx[b.id] for b in kept]
    try:
        red = kron_reduce(susceptance(net), keep_idx)
    except IsolatedNodesError as exc:
        ids = net.bus_ids()
        raise IsolatedNodesError([ids[int(i)] for i in exc.nodes]) from None
    lines: list[Line] = []
    w_tol = 1e-12 * max(1.0, float(np.max(np.abs(red))))
    for a in range(len(kept)):
        for b in range(a + 1, len(kept)):
            w = -red[a, b]
            if w > w_tol:
                x = 1.0 / w
                lines.append(Line(kept[a].id, kept[b].id, rho * x, x))
    return NetworkSpec(tuple(kept), tuple(lines), dict(net.loads), net.omega0, net.tau)


def with_uniform_rho(net: NetworkSpec, rho: float) -> NetworkSpec:
    """Copy of the network with every line resistance set to rho * X."""
    if rho < 0:
        raise NetworkError(f"R/X ratio must be non-negative, got {rho}")
    lines = tuple(replace(ln, r=rho * ln.x) for ln in net.lines)
    return replace(net, lines=lines)


def with_line_rhos(net: NetworkSpec, rhos: Iterable[float]) -> NetworkSpec:
    """Copy of the network with per-line R/X ratios as given (line order)."""
    rhos = list(rhos)
    if len(rhos) != len(net.lines):
        raise NetworkError(f"expected {len(net.lines)} ratios, got {len(rhos)}")
    lines = tuple(replace(ln, r=rv * ln.x) for ln, rv in zip(net.lines, rhos))
    return replace(net, lines=lines)


def with_scaled_loads(net: NetworkSpec, factors: Mapping[str, float] | float) -> NetworkSpec:
    """Copy of the network with load impedances scaled by the given factors."""
    if isinstance(factors, (int, float)):
        factors = {bid: float(factors) for bid in net.loads}
    loads = {}
    for bid, z in net.loads.items():
        f = float(factors.get(bid, 1.0))
        if f <= 0:
            raise NetworkError(f"load scale factor at '{bid}' must be positive")
        loads[bid] = LoadImpedance(z.r * f, z.x * f)
    return replace(net, loads=loads)
