"""Linearized state matrices for droop-controlled inverter networks.

Two model flavours are assembled:

* the full electromagnetic model with one current pair per line and per load
  (states theta, omega, V per inverter; Id, Iq per line; Ild, Ilq per load),
* the inverter-only model built on a reduced network, with five v-vector
  blocks (theta, omega, V, Id, Iq).

Both store the dimensional matrix, so eigenvalues come out in rad/s.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .netmodel import NetworkSpec, ReducedNetwork, incidence


class ModelAssemblyError(ValueError):
    """Model preconditions violated (virtual buses, dimension mismatch...)."""


@dataclass(frozen=True)
class DroopConfig:
    """Per-inverter frequency droops m and voltage droops n, as fractions."""

    m: np.ndarray
    n: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        n = np.asarray(self.n, dtype=float)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)
        if m.shape != n.shape or m.ndim != 1:
            raise ValueError("m and n must be 1-d arrays of equal length")
        if not (np.all(m > 0) and np.all(n > 0)):
            raise ValueError("all droop gains must be strictly positive")

    @property
    def v(self) -> int:
        return self.m.size

    @classmethod
    def uniform(cls, v: int, m: float, k: float) -> "DroopConfig":
        """Equal droops on every inverter with frequency/voltage ratio k."""
        return cls(np.full(v, float(m)), np.full(v, float(m) / float(k)))

    @classmethod
    def proportional(cls, m, k) -> "DroopConfig":
        """Droops with n_i = m_i / k_i; k may be a scalar or per-inverter."""
        m = np.asarray(m, dtype=float)
        k = np.asarray(k, dtype=float)
        return cls(m, m / k)

    def ratio(self, tol: float = 1e-9) -> float:
        """The uniform m/n ratio; raises if the ratio is not uniform."""
        k = self.m / self.n
        k0 = float(k[0])
        if np.max(np.abs(k - k0)) > tol * abs(k0):
            raise ValueError("droop ratio m/n is not uniform across inverters")
        return k0


@dataclass(frozen=True)
class StateMatrix:
    A: np.ndarray
    labels: tuple[str, ...]
    kind: str  # "full" | "homogeneous"
    omega0: float


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in rad/s with the reference/constraint modes identified."""

    eigenvalues: np.ndarray
    dominant: complex | None
    zero_modes: int
    zero_tol: float

    def is_zero_mode(self) -> np.ndarray:
        return np.abs(self.eigenvalues) < self.zero_tol


class Verdict(enum.Enum):
    STABLE = "Stable"
    MARGINAL = "Marginal"
    UNSTABLE = "Unstable"

    def __str__(self) -> str:
        return self.value


def assemble_full(net: NetworkSpec, droops: DroopConfig) -> StateMatrix:
    """Full electromagnetic model of an inverter/load network.

    Network node voltages at load buses are not states; they are resolved
    from the instantaneous current balance at each load bus, which keeps the
    model an ODE.  The balance itself is conserved, so the matrix carries two
    structural zero eigenvalues per load bus in addition to the angle
    reference mode; all are filtered by the zero-mode tolerance downstream.
    """
    if net.virtual_ids:
        raise ModelAssemblyError(
            f"network contains virtual buses ({', '.join(net.virtual_ids)}); "
            "eliminate them first (kron reduction / eliminate_virtual)"
        )
    inv_ids = net.inverter_ids
    v = len(inv_ids)
    if droops.v != v:
        raise ModelAssemblyError(f"droop config has {droops.v} entries for {v} inverters")
    load_ids = net.load_ids
    nL = len(load_ids)
    nE = len(net.lines)
    omega0, tau = net.omega0, net.tau

    idx = net.bus_index()
    nb = len(net.buses)
    # oriented line rows: (D x)_e = x_from - x_to
    D = -incidence(net).entries.T
    X = np.array([ln.x for ln in net.lines])
    R = np.array([ln.r for ln in net.lines])
    Bx = (D.T * (1.0 / X)) @ D if nE else np.zeros((nb, nb))

    O = [idx[b] for b in inv_ids]
    L = [idx[b] for b in load_ids]
    RL = np.array([net.loads[b].r for b in load_ids])
    XL = np.array([net.loads[b].x for b in load_ids])
    if nL and np.any(XL <= 0):
        raise ModelAssemblyError("load reactances must be positive")

    dim = 3 * v + 2 * nE + 2 * nL
    i_th = np.arange(0, v)
    i_om = np.arange(v, 2 * v)
    i_V = np.arange(2 * v, 3 * v)
    i_Id = np.arange(3 * v, 3 * v + nE)
    i_Iq = np.arange(3 * v + nE, 3 * v + 2 * nE)
    i_Jd = np.arange(3 * v + 2 * nE, 3 * v + 2 * nE + nL)
    i_Jq = np.arange(3 * v + 2 * nE + nL, dim)

    # node voltage / angle pickups: Vall = PV @ x, THall = PT @ x
    PV = np.zeros((nb, dim))
    PT = np.zeros((nb, dim))
    for j, nd in enumerate(O):
        PV[nd, i_V[j]] = 1.0
        PT[nd, i_th[j]] = 1.0
    if nL:
        S = Bx[np.ix_(L, L)] + np.diag(1.0 / XL)
        B_LO = Bx[np.ix_(L, O)]
        DL = D[:, L]
        rows_V = np.zeros((nL, dim))
        rows_V[:, i_V] = -B_LO
        rows_V[:, i_Jd] = np.diag(RL / XL)
        rows_V[:, i_Jq] = -np.eye(nL)
        if nE:
            rows_V[:, i_Id] = DL.T * (R / X)
            rows_V[:, i_Iq] = -DL.T
        rows_T = np.zeros((nL, dim))
        rows_T[:, i_th] = -B_LO
        rows_T[:, i_Jq] = np.diag(RL / XL)
        rows_T[:, i_Jd] = np.eye(nL)
        if nE:
            rows_T[:, i_Iq] = DL.T * (R / X)
            rows_T[:, i_Id] = DL.T
        PV[L, :] = np.linalg.solve(S, rows_V)
        PT[L, :] = np.linalg.solve(S, rows_T)

    A = np.zeros((dim, dim))
    A[np.ix_(i_th, i_om)] = np.eye(v)
    # real power out of inverter i is the net outbound line current (d axis)
    A[np.ix_(i_om, i_om)] = -np.eye(v) / tau
    if nE:
        A[np.ix_(i_om, i_Id)] = -(omega0 / tau) * (droops.m[:, None] * D[:, O].T)
        A[np.ix_(i_V, i_Iq)] = (1.0 / tau) * (droops.n[:, None] * D[:, O].T)
    A[np.ix_(i_V, i_V)] = -np.eye(v) / tau
    if nE:
        A[i_Id, :] = ((omega0 / X)[:, None]) * (D @ PV)
        A[np.ix_(i_Id, i_Id)] += -omega0 * np.diag(R / X)
        A[np.ix_(i_Id, i_Iq)] += omega0 * np.eye(nE)
        A[i_Iq, :] = ((omega0 / X)[:, None]) * (D @ PT)
        A[np.ix_(i_Iq, i_Iq)] += -omega0 * np.diag(R / X)
        A[np.ix_(i_Iq, i_Id)] += -omega0 * np.eye(nE)
    if nL:
        A[i_Jd, :] = ((omega0 / XL)[:, None]) * PV[L, :]
        A[np.ix_(i_Jd, i_Jd)] += -omega0 * np.diag(RL / XL)
        A[np.ix_(i_Jd, i_Jq)] += omega0 * np.eye(nL)
        A[i_Jq, :] = ((omega0 / XL)[:, None]) * PT[L, :]
        A[np.ix_(i_Jq, i_Jq)] += -omega0 * np.diag(RL / XL)
        A[np.ix_(i_Jq, i_Jd)] += -omega0 * np.eye(nL)

    labels = (
        [f"theta:{b}" for b in inv_ids]
        + [f"omega:{b}" for b in inv_ids]
        + [f"v:{b}" for b in inv_ids]
        + [f"id:{ln.from_bus}-{ln.to_bus}" for ln in net.lines]
        + [f"iq:{ln.from_bus}-{ln.to_bus}" for ln in net.lines]
        + [f"ild:{b}" for b in load_ids]
        + [f"ilq:{b}" for b in load_ids]
    )
    return StateMatrix(A, tuple(labels), "full", omega0)


def assemble_homogeneous(rn: ReducedNetwork, droops: DroopConfig) -> StateMatrix:
    """Inverter-only model with five v-by-v blocks on the reduced network."""
    if rn.rho is None:
        raise ModelAssemblyError("homogeneous model needs a uniform R/X ratio")
    v = rn.v
    if droops.v != v:
        raise ModelAssemblyError(f"droop config has {droops.v} entries for {v} inverters")
    tau, omega0, rho = rn.tau, rn.omega0, rn.rho
    Bs = rn.scaled
    M = np.diag(droops.m)
    N = np.diag(droops.n)
    I = np.eye(v)
    Z = np.zeros((v, v))
    A = np.block([
        [Z, I, Z, Z, Z],
        [Z, -I / tau, Z, -omega0 * M / tau, Z],
        [Z, Z, -I / tau, Z, N / tau],
        [Z, Z, omega0 * Bs, -rho * omega0 * I, omega0 * I],
        [omega0 * Bs, Z, Z, -omega0 * I, -rho * omega0 * I],
    ])
    labels = tuple(
        f"{tag}:{b}" for tag in ("theta", "omega", "v", "id", "iq") for b in rn.inverter_ids
    )
    return StateMatrix(A, labels, "homogeneous", omega0)


def spectrum(sm: StateMatrix, zero_tol: float | None = None) -> Spectrum:
    """All eigenvalues plus the dominant one after zero-mode exclusion."""
    A = sm.A
    if not np.all(np.isfinite(A)):
        raise ValueError("state matrix contains non-finite entries")
    if zero_tol is None:
        zero_tol = 1e-6 * sm.omega0
    try:
        eigs = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        cond = float(np.linalg.cond(A + np.eye(A.shape[0])))
        raise np.linalg.LinAlgError(
            f"eigensolver failed to converge (shifted condition estimate {cond:.3g})"
        ) from exc
    order = np.lexsort((eigs.imag, -eigs.real))
    eigs = eigs[order]
    nz = eigs[np.abs(eigs) >= zero_tol]
    dominant = complex(nz[np.argmax(nz.real)]) if nz.size else None
    zero_modes = int(eigs.size - nz.size)
    return Spectrum(eigs, dominant, zero_modes, zero_tol)


def verdict(s: Spectrum, margin: float = 1e-8) -> Verdict:
    """Stability call from the dominant mode with an absolute rad/s margin."""
    if margin < 0:
        raise ValueError("margin must be non-negative")
    if s.dominant is None:
        return Verdict.STABLE
    re = s.dominant.real
    if re > margin:
        return Verdict.UNSTABLE
    if abs(re) <= margin:
        return Verdict.MARGINAL
    return Verdict.STABLE


def write_spectrum_csv(s: Spectrum, path) -> None:
    """Columns (re, im, is_zero_mode), one row per eigenvalue."""
    flags = s.is_zero_mode()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re", "im", "is_zero_mode"])
        for lam, z in zip(s.eigenvalues, flags):
            w.writerow([repr(float(lam.real)), repr(float(lam.imag)), int(z)])
