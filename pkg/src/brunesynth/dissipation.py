"""Bath couplings, spectral densities and relaxation rates.

Each resistor is treated on its own: the other series resistors are shorted
and the other shunts opened.  Series-type baths (stage resistors, port shunts,
source resistances) couple through a vector with units of capacitance and have

    J(w) = w^3 R / (1 + w^2 R^2 c^2),   c = F_r C0 F_r^T,

while terminal shunts couple through a dimensionless vector with
``J(w) = w / R``.  Stage and port indices in this module are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
import scipy.constants as const

from .brune_multiport import MultiportBruneCircuit
from .brune_oneport import OnePortBruneCircuit
from .errors import IndexOutOfRange, ValidationError, WrongTermination, ZeroFrequency
from .loop_matrices import EffectiveLoopMatrices, Resistor, VoltageSource
from .quantize import QuantizedModel, normal_modes

__all__ = [
    "DEFAULT_TEMPERATURE",
    "BathSpec",
    "VoltageCoupling",
    "series_bath",
    "shunt_bath",
    "port_shunt_bath",
    "source_series_bath",
    "all_baths",
    "voltage_coupling",
    "coth",
    "t1_rate",
    "t1_contributions",
]

DEFAULT_TEMPERATURE = 0.020
SERIES_KINDS = ("series", "port_shunt", "source_series")


@dataclass(frozen=True)
class BathSpec:
    """One resistor seen as a bath.

    ``kind`` is ``"series"``, ``"terminal_shunt"``, ``"port_shunt"`` or
    ``"source_series"``; ``index`` is the 1-based stage or port number.
    """

    kind: str
    index: int
    m_bar: np.ndarray
    R: float
    c_eff: float | None = None

    def __post_init__(self):
        if self.kind not in SERIES_KINDS + ("terminal_shunt",):
            raise ValidationError(f"unknown bath kind {self.kind!r}")
        m = np.array(self.m_bar, float).ravel()
        m.setflags(write=False)
        object.__setattr__(self, "m_bar", m)

    @property
    def series_type(self) -> bool:
        return self.kind in SERIES_KINDS

    @property
    def label(self) -> str:
        return {"series": "r", "terminal_shunt": "R", "port_shunt": "Rx",
                "source_series": "Rs"}[self.kind] + str(self.index)

    def kernel(self, omega) -> np.ndarray:
        """Dissipation kernel ``K(w)``; ``J = Im K``."""
        w = np.asarray(omega, float)
        R = self.R
        if self.series_type:
            if R == 0:
                return np.zeros_like(w, dtype=complex)
            return 1j * w ** 3 * R / (1 + 1j * w * R * self.c_eff)
        if math.isinf(R):
            return np.zeros_like(w, dtype=complex)
        return 1j * w / R + 0 * w

    def J(self, omega) -> np.ndarray:
        """Spectral density, non-negative for ``w >= 0``."""
        w = np.asarray(omega, float)
        R = self.R
        if self.series_type:
            if R == 0 or math.isinf(R):
                return np.zeros_like(w)
            return w ** 3 * R / (1 + (w * R * self.c_eff) ** 2)
        if math.isinf(R) or R == 0:
            return np.zeros_like(w)
        return w / R


@dataclass(frozen=True)
class VoltageCoupling:
    """Static coupling ``C_V0`` and the frequency-dependent ``C_VR(w)`` of a source."""

    port: int
    C_V0: np.ndarray
    C_VR: Callable[[float], np.ndarray]
    m_R: Callable[[float], np.ndarray]


# ----------------------------------------------------------------- helpers

def _caps(circuit) -> np.ndarray:
    return np.array([s.C for s in circuit.stages], float)


def _terminal_R(circuit) -> np.ndarray:
    if isinstance(circuit, OnePortBruneCircuit):
        return np.array([circuit.terminal_resistance], float)
    if isinstance(circuit, MultiportBruneCircuit):
        return np.asarray(circuit.terminal_resistors, float)
    raise ValidationError(f"unsupported circuit type {type(circuit).__name__}")


def _series_R(circuit) -> np.ndarray:
    if isinstance(circuit, OnePortBruneCircuit):
        return np.array([s.R for s in circuit.stages], float)
    return np.array([s.r for s in circuit.stages], float)


def _to_coords(qm: QuantizedModel, m: np.ndarray) -> np.ndarray:
    return m if qm.transform is None else qm.transform.T @ m


def _series_type(loops: EffectiveLoopMatrices, qm: QuantizedModel, Cs: np.ndarray,
                 row: np.ndarray) -> tuple[np.ndarray, float]:
    M = loops.n_stages
    r0 = row[:M]
    m = loops.F_C0 @ (Cs * r0)
    return _to_coords(qm, m), float(r0 @ (Cs * r0))


def _check_index(k: int, n: int, what: str) -> None:
    if not 1 <= k <= n:
        raise IndexOutOfRange(f"{what} index {k} outside 1..{n}")


# ------------------------------------------------------------------- baths

def series_bath(circuit, loops: EffectiveLoopMatrices, qm: QuantizedModel, j: int) -> BathSpec:
    """Bath of the series resistor of stage ``j``."""
    _check_index(j, loops.n_stages, "stage")
    m, c = _series_type(loops, qm, _caps(circuit), loops.F_ZC[j - 1])
    return BathSpec("series", j, m, float(_series_R(circuit)[j - 1]), c)


def shunt_bath(circuit, loops: EffectiveLoopMatrices, qm: QuantizedModel, j: int) -> BathSpec:
    """Bath of the ``j``-th terminal resistor (the column ``C_Rj``)."""
    _check_index(j, loops.n_ports, "terminal resistor")
    m = loops.F_CR[:, j - 1]
    return BathSpec("terminal_shunt", j, _to_coords(qm, m), float(_terminal_R(circuit)[j - 1]))


def port_shunt_bath(circuit, loops: EffectiveLoopMatrices, qm: QuantizedModel, port: int) -> BathSpec:
    """Bath of a resistor closing ``port``."""
    _check_index(port, loops.n_ports, "port")
    term = loops.terminations[port - 1] if loops.terminations else None
    if not isinstance(term, Resistor):
        raise WrongTermination(f"port {port} is not closed by a resistor")
    m, c = _series_type(loops, qm, _caps(circuit), loops.port_shunt_row(port - 1))
    return BathSpec("port_shunt", port, m, term.R, c)


def source_series_bath(circuit, loops: EffectiveLoopMatrices, qm: QuantizedModel, port: int) -> BathSpec:
    """Bath of the series resistance of the source driving ``port``."""
    _check_index(port, loops.n_ports, "port")
    term = loops.terminations[port - 1] if loops.terminations else None
    if not isinstance(term, VoltageSource):
        raise WrongTermination(f"port {port} is not driven by a voltage source")
    m, c = _series_type(loops, qm, _caps(circuit), loops.source_resistor_row(port - 1))
    return BathSpec("source_series", port, m, term.R_s, c)


def all_baths(circuit, loops: EffectiveLoopMatrices, qm: QuantizedModel) -> list[BathSpec]:
    """Every resistor of the circuit and its terminations as a bath."""
    out = [series_bath(circuit, loops, qm, j) for j in range(1, loops.n_stages + 1)]
    out += [shunt_bath(circuit, loops, qm, j) for j in range(1, loops.n_ports + 1)]
    out += [port_shunt_bath(circuit, loops, qm, p + 1) for p in loops.resistor_ports]
    out += [source_series_bath(circuit, loops, qm, p + 1) for p in loops.source_ports]
    return out


# --------------------------------------------------------- voltage sources

def voltage_coupling(circuit, loops: EffectiveLoopMatrices, qm: QuantizedModel,
                     port: int) -> VoltageCoupling:
    """Coupling of the source at ``port`` to the circuit charges.

    ``C_VR(w)`` combines the direct path through the terminal resistors with
    the path through the resistive tree branches.  ``m_R(w)`` is the
    frequency-dependent correction to the series couplings, kept only as a
    diagnostic.
    """
    _check_index(port, loops.n_ports, "port")
    if not isinstance(loops.terminations[port - 1] if loops.terminations else None, VoltageSource):
        raise WrongTermination(f"port {port} is not driven by a voltage source")
    k = loops.source_ports.index(port - 1)
    M = loops.n_stages
    Cs = _caps(circuit)
    Rt = _terminal_R(circuit)
    if np.any(Rt == 0):
        raise ValidationError("a shorted terminal resistor has no finite source coupling")
    Rinv = np.diag([0.0 if math.isinf(R) else 1.0 / R for R in Rt])
    terms = loops.terminations
    Z = np.diag(np.concatenate([_series_R(circuit),
                                [terms[p].R for p in loops.resistor_ports],
                                [terms[p].R_s for p in loops.source_ports]]))
    F_C0, F_CR = loops.F_C0, loops.F_CR
    F_ZC0, F_ZCR = loops.F_ZC[:, :M], loops.F_ZC[:, M:]
    F_VC0, F_VCR = loops.F_VC[:, :M], loops.F_VC[:, M:]
    C0 = np.diag(Cs)
    T = qm.transform
    lift = (lambda a: a) if T is None else (lambda a: T.T @ a)

    C_V0 = lift(F_C0 @ C0 @ F_VC0.T)[:, k]
    m0 = F_C0 @ C0 @ F_ZC0.T
    mV0 = F_VC0 @ C0 @ F_ZC0.T
    cz = F_ZC0 @ C0 @ F_ZC0.T
    nz = Z.shape[0]
    ZR = Z @ np.linalg.inv(np.eye(nz) + F_ZCR @ Rinv @ F_ZCR.T @ Z) if nz else Z

    def m_R(omega: float) -> np.ndarray:
        return lift(F_CR @ Rinv @ F_ZCR.T / (1j * omega))

    def C_VR(omega: float) -> np.ndarray:
        if omega == 0:
            raise ZeroFrequency("C_VR is evaluated at w > 0")
        s = 1j * omega
        direct = F_CR @ Rinv @ F_VCR.T / s
        if nz:
            CZR = -s * ZR @ np.linalg.inv(np.eye(nz) + s * cz @ ZR)
            mR = F_CR @ Rinv @ F_ZCR.T / s
            mVR = F_VCR @ Rinv @ F_ZCR.T / s
            direct = direct + (m0 + mR) @ CZR @ (mV0 + mVR).T
        return lift(direct)[:, k]

    return VoltageCoupling(port, C_V0, C_VR, m_R)


# ------------------------------------------------------------------- rates

def coth(x) -> np.ndarray:
    """``coth`` for ``x > 0`` without overflow at large arguments."""
    x = np.asarray(x, float)
    with np.errstate(divide="ignore"):
        return -(1.0 + np.exp(-2 * x)) / np.expm1(-2 * x)


def t1_rate(qm: QuantizedModel, bath: BathSpec, omega01: float | None = None,
            temperature: float = DEFAULT_TEMPERATURE, mode: int = 0,
            modes=None) -> float:
    """Relaxation rate (1/s) of ``mode`` caused by ``bath``.

    The matrix element uses the harmonic approximation,
    ``|<0|m.Phi|1>|^2 = hbar / (2 w_k) (m^T v_k)^2``.  ``omega01`` defaults to
    the mode frequency.
    """
    nm = modes if modes is not None else normal_modes(qm)
    if not 0 <= mode < len(nm.frequencies):
        raise IndexOutOfRange(f"mode {mode} outside 0..{len(nm.frequencies) - 1}")
    wk = float(nm.frequencies[mode])
    w01 = wk if omega01 is None else float(omega01)
    if not (wk > 0 and w01 > 0):
        raise ZeroFrequency("transition frequency must be positive")
    if temperature < 0:
        raise ValidationError("temperature must be >= 0")
    elem = const.hbar / (2 * wk) * float(bath.m_bar @ nm.modes[:, mode]) ** 2
    th = 1.0 if temperature == 0 else float(coth(const.hbar * w01 / (2 * const.k * temperature)))
    return 4.0 / const.hbar * elem * float(bath.J(w01)) * th


def t1_contributions(qm: QuantizedModel, baths: Iterable[BathSpec], mode: int = 0,
                     temperature: float = DEFAULT_TEMPERATURE,
                     omega01: float | None = None) -> dict[str, float]:
    """Per-bath rates keyed by bath label; the total rate is their sum."""
    nm = normal_modes(qm)
    return {b.label: t1_rate(qm, b, omega01, temperature, mode, nm) for b in baths}

