"""Capacitance and stiffness matrices, band transform and harmonic modes.

Coordinates are the junction fluxes (one per junction-terminated port)
followed by the fluxes of the stage inductors.  The Hamiltonian is

    H = 1/2 Q^T C0^{-1} Q + 1/2 Phi^T M0 Phi - sum_J (Phi0/2pi)^2 / L_J cos(phi_J)

with no external flux bias, so the flux coupling term vanishes identically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.constants as const
import scipy.linalg as sla

from .brune_multiport import MultiportBruneCircuit
from .brune_oneport import OnePortBruneCircuit
from .errors import (
    CoordinateFallbackWarning,
    DimensionMismatch,
    NotPD,
    SingularCapacitance,
    SingularCapacitanceWarning,
    UnitTurnsRatio,
    ValidationError,
)
from .loop_matrices import EffectiveLoopMatrices, PortTermination, effective_loops

__all__ = [
    "PHI0_OVER_2PI",
    "DEFAULT_CJ",
    "QuantizedModel",
    "BandTransform",
    "NormalModes",
    "build_capacitance",
    "build_stiffness",
    "oneport_band_transform",
    "assemble_hamiltonian",
    "normal_modes",
    "zero_point_energy",
    "quantize",
]

PHI0_OVER_2PI = const.hbar / (2 * const.e)
DEFAULT_CJ = 1e-15


@dataclass(frozen=True)
class BandTransform:
    T: np.ndarray
    C_banded: np.ndarray
    M_banded: np.ndarray


@dataclass(frozen=True)
class NormalModes:
    """Harmonic modes; columns of ``modes`` are ``C0``-orthonormal."""

    frequencies: np.ndarray
    modes: np.ndarray


@dataclass(frozen=True)
class QuantizedModel:
    """Hamiltonian data of a circuit.

    ``junction_indices[k]`` is the coordinate of the junction with inductance
    ``L_J[k]``.  When ``transform`` is set, the coordinates are the banded ones
    and old coordinates are recovered as ``Phi_old = transform @ Phi``.
    """

    C0: np.ndarray
    M0: np.ndarray
    L_J: np.ndarray
    junction_indices: tuple[int, ...]
    labels: tuple[str, ...]
    transform: np.ndarray | None = None
    junction_phase_scale: float = PHI0_OVER_2PI
    cj_limit: bool = False
    loops: EffectiveLoopMatrices | None = field(default=None, compare=False, repr=False)
    voltage_couplings: Mapping = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        C0 = np.array(self.C0, float, ndmin=2)
        M0 = np.array(self.M0, float, ndmin=2)
        n = C0.shape[0]
        if C0.shape != (n, n) or M0.shape != (n, n):
            raise DimensionMismatch("C0 and M0 must be square of equal size")
        LJ = np.array(self.L_J, float).ravel()
        if len(LJ) != len(self.junction_indices):
            raise DimensionMismatch("one inductance per junction coordinate is required")
        for a in (C0, M0, LJ):
            a.setflags(write=False)
        object.__setattr__(self, "C0", C0)
        object.__setattr__(self, "M0", M0)
        object.__setattr__(self, "L_J", LJ)
        object.__setattr__(self, "junction_indices", tuple(int(i) for i in self.junction_indices))
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n_coords(self) -> int:
        return self.C0.shape[0]

    @property
    def flux_coupling(self) -> np.ndarray:
        """External flux coupling ``N``; identically zero without flux bias."""
        return np.zeros((self.n_coords, 0))

    @property
    def M_total(self) -> np.ndarray:
        """``M0`` plus the linearized junction inductances."""
        M = self.M0.copy()
        for i, L in zip(self.junction_indices, self.L_J):
            if math.isfinite(L):
                M[i, i] += 1.0 / L
        return M

    @property
    def C_inv(self) -> np.ndarray:
        if self.cj_limit:
            return np.linalg.pinv(self.C0, hermitian=True)
        try:
            return sla.cho_solve(sla.cho_factor(self.C0), np.eye(self.n_coords))
        except np.linalg.LinAlgError as exc:
            raise SingularCapacitance("C0 is not positive definite") from exc

    def potential(self, phi: np.ndarray) -> float:
        """``U(Phi)`` with the full junction cosine."""
        phi = np.asarray(phi, float)
        u = 0.5 * phi @ self.M0 @ phi
        for i, L in zip(self.junction_indices, self.L_J):
            if math.isfinite(L):
                u -= self.junction_phase_scale ** 2 / L * math.cos(phi[i] / self.junction_phase_scale)
        return float(u)

    def energy(self, Q: np.ndarray, phi: np.ndarray) -> float:
        Q = np.asarray(Q, float)
        return float(0.5 * Q @ self.C_inv @ Q) + self.potential(phi)


# ----------------------------------------------------------------- matrices

def _is_oneport(circuit) -> bool:
    return isinstance(circuit, OnePortBruneCircuit)


def _stage_capacitances(circuit) -> np.ndarray:
    return np.array([s.C for s in circuit.stages], float)


def _junction_cj(loops: EffectiveLoopMatrices, C_J) -> np.ndarray:
    nj = len(loops.junction_ports)
    if C_J is None:
        terms = loops.terminations
        vals = [terms[p].C_J if terms else DEFAULT_CJ for p in loops.junction_ports]
        return np.array(vals, float)
    cj = np.broadcast_to(np.asarray(C_J, float), (nj,)).copy() if np.ndim(C_J) == 0 \
        else np.asarray(C_J, float).ravel()
    if cj.shape != (nj,):
        raise DimensionMismatch(f"expected {nj} junction capacitances, got {cj.size}")
    if np.any(cj < 0):
        raise ValidationError("junction capacitances must be >= 0")
    return cj


def build_capacitance(circuit, loops: EffectiveLoopMatrices, C_J: float | Sequence[float] | None = None,
                      c_terminal: float | Sequence[float] | None = None) -> np.ndarray:
    """``diag(C_J, 0) + F_C C F_C^T`` over the stage capacitor columns.

    ``C_J`` defaults to the values stored with the junction terminations.
    ``c_terminal`` adds formal capacitors in the terminal-resistor columns,
    which the one-port picture uses for the last capacitor ``C_{M+1}``.
    """
    Cs = _stage_capacitances(circuit)
    M = loops.n_stages
    if len(Cs) != M:
        raise DimensionMismatch("loop matrices do not match the circuit")
    cj = _junction_cj(loops, C_J)
    F = loops.F_C
    cvec = np.zeros(loops.n_columns)
    cvec[:M] = Cs
    if c_terminal is not None:
        ct = np.broadcast_to(np.asarray(c_terminal, float), (loops.n_ports,))
        if np.any(ct < 0):
            raise ValidationError("terminal capacitances must be >= 0")
        cvec[M:] = ct
    C0 = (F * cvec) @ F.T
    C0[np.diag_indices(len(cj))] += cj
    C0 = 0.5 * (C0 + C0.T)
    if C0.size and np.linalg.matrix_rank(C0, tol=1e-12 * np.abs(C0).max()) < C0.shape[0]:
        warnings.warn("capacitance matrix is singular; a non-zero C_J is needed on every junction",
                      SingularCapacitanceWarning, stacklevel=2)
    return C0


def build_stiffness(circuit, loops: EffectiveLoopMatrices | None = None) -> np.ndarray:
    """``diag(0_J, 1/L_1, ..., 1/L_M)`` over the regular stages."""
    if loops is None:
        nj = 1 if _is_oneport(circuit) else circuit.n_ports
        inv_l = [1.0 / s.L for s in circuit.stages if not s.degenerate]
    else:
        nj = len(loops.junction_ports)
        inv_l = [1.0 / circuit.stages[j].L for j in loops.regular_stages]
    return np.diag(np.concatenate([np.zeros(nj), inv_l]))


def oneport_band_transform(circuit: OnePortBruneCircuit, C0: np.ndarray, M0: np.ndarray,
                           unit_tol: float = 1e-9) -> BandTransform:
    """Local coordinates in which ``C`` and ``M`` become tridiagonal.

    Old fluxes are ``Phi_old = T Phi``: the junction flux is kept and the flux of
    the ``r``-th inductor becomes ``(-1)^r (Phi_{r-1} + Phi_r) / (1 - n)``.
    """
    if not _is_oneport(circuit):
        raise ValidationError("the band transform is defined for one-port circuits")
    regular = [s for s in circuit.stages if not s.degenerate]
    size = len(regular) + 1
    if C0.shape != (size, size) or M0.shape != (size, size):
        raise DimensionMismatch(f"expected {size}x{size} matrices")
    T = np.zeros((size, size))
    T[0, 0] = 1.0
    for r, s in enumerate(regular, start=1):
        d = 1.0 - s.n
        if abs(d) <= unit_tol:
            raise UnitTurnsRatio(f"stage with n = {s.n!r} has no band transform")
        T[r, r - 1] = T[r, r] = (-1) ** r / d
    return BandTransform(T, T.T @ C0 @ T, T.T @ M0 @ T)


# ---------------------------------------------------------------- assembly

def assemble_hamiltonian(C0: np.ndarray, M0: np.ndarray,
                         junctions: Sequence[tuple[int, float]] = (),
                         labels: Sequence[str] | None = None,
                         transform: np.ndarray | None = None,
                         cj_limit: bool = False,
                         loops: EffectiveLoopMatrices | None = None) -> QuantizedModel:
    """Bundle the Hamiltonian matrices; ``junctions`` lists ``(coordinate, L_J)``.

    With ``cj_limit`` a singular ``C0`` is accepted and treated by restricting
    the kinetic term to its range (pseudo-inverse), otherwise a singular or
    indefinite ``C0`` raises :class:`SingularCapacitance`.
    """
    C0 = np.asarray(C0, float)
    n = C0.shape[0]
    if n:
        try:
            sla.cho_factor(C0)
        except np.linalg.LinAlgError as exc:
            if not cj_limit:
                raise SingularCapacitance("C0 is singular or indefinite") from exc
            warnings.warn("C_J -> 0 limit: using the pseudo-inverse of C0 on its range",
                          SingularCapacitanceWarning, stacklevel=2)
    idx = tuple(j for j, _ in junctions)
    if any(not 0 <= j < n for j in idx):
        raise DimensionMismatch("junction coordinate out of range")
    if labels is None:
        labels = tuple(f"x{k}" for k in range(n))
    return QuantizedModel(C0, M0, [L for _, L in junctions], idx, tuple(labels),
                          transform=transform, cj_limit=cj_limit, loops=loops)


def _range_reduction(qm: QuantizedModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eliminate the null space of ``C0`` (coordinates without kinetic energy)."""
    lam, U = np.linalg.eigh(qm.C0)
    tol = 1e-10 * max(lam.max(initial=0.0), 1e-300)
    if lam.min(initial=1.0) < -tol:
        raise NotPD("C0 has a negative eigenvalue")
    Rb, Nb = U[:, lam > tol], U[:, lam <= tol]
    K = qm.M_total
    if Nb.shape[1] == 0:
        return qm.C0, K, np.eye(qm.n_coords)
    KNN = Nb.T @ K @ Nb
    lift = Rb - Nb @ np.linalg.pinv(KNN, hermitian=True) @ (Nb.T @ K @ Rb)
    return Rb.T @ qm.C0 @ Rb, lift.T @ K @ lift, lift


def normal_modes(qm: QuantizedModel) -> NormalModes:
    """Solve ``M_total v = w^2 C0 v`` with ascending ``w`` and ``v^T C0 v = 1``."""
    if qm.n_coords == 0:
        return NormalModes(np.zeros(0), np.zeros((0, 0)))
    if qm.cj_limit:
        C, K, lift = _range_reduction(qm)
    else:
        C, K, lift = qm.C0, qm.M_total, None
    try:
        w2, V = sla.eigh(0.5 * (K + K.T), 0.5 * (C + C.T))
    except np.linalg.LinAlgError as exc:
        raise NotPD("C0 is not positive definite") from exc
    if lift is not None:
        V = lift @ V
    scale = max(np.abs(w2).max(), 1e-300)
    if w2.min() < -1e-9 * scale:
        raise NotPD("stiffness matrix is not positive semidefinite")
    return NormalModes(np.sqrt(np.clip(w2, 0.0, None)), V)


def zero_point_energy(qm: QuantizedModel) -> float:
    """Harmonic ground-state energy ``sum_k hbar w_k / 2`` (joules)."""
    return 0.5 * const.hbar * float(normal_modes(qm).frequencies.sum())


# ---------------------------------------------------------------- pipeline

def quantize(circuit: OnePortBruneCircuit | MultiportBruneCircuit,
             terminations: Sequence[PortTermination] | None = None,
             C_J: float | Sequence[float] | None = None,
             c_terminal: float | Sequence[float] | None = None,
             band: bool = True, cj_limit: bool = False) -> QuantizedModel:
    """Loop matrices, ``C0``, ``M0`` and (for one-ports) the band transform.

    Junction inductances come from the :class:`JosephsonJunction`
    terminations; voltage-source couplings are attached when sources exist.
    """
    loops = effective_loops(circuit, terminations)
    C0 = build_capacitance(circuit, loops, C_J, c_terminal)
    M0 = build_stiffness(circuit, loops)
    terms = loops.terminations
    junctions = [(k, terms[p].L_J) for k, p in enumerate(loops.junction_ports)]
    labels = [f"J{p + 1}" for p in loops.junction_ports] + [f"L{j + 1}" for j in loops.regular_stages]
    T = None
    if band and _is_oneport(circuit):
        try:
            bt = oneport_band_transform(circuit, C0, M0)
        except UnitTurnsRatio as exc:
            warnings.warn(f"{exc}; working in untransformed coordinates",
                          CoordinateFallbackWarning, stacklevel=2)
        else:
            T, C0, M0 = bt.T, bt.C_banded, bt.M_banded
            labels = [f"Phi{k + 1}" for k in range(len(labels))]
    qm = assemble_hamiltonian(C0, M0, junctions, labels, T, cj_limit, loops)
    if loops.source_ports:
        from .dissipation import voltage_coupling
        couplings = {p + 1: voltage_coupling(circuit, loops, qm, p + 1) for p in loops.source_ports}
        object.__setattr__(qm, "voltage_couplings", couplings)
    return qm

