"""Effective fundamental loop matrices of synthesized Brune circuits.

A circuit is described by a tree (port branches, stage inductors, series
resistors) and a set of chords (stage capacitors ``C_1..C_M`` followed by the
terminal resistors, which are formally treated as capacitors ``C_R``).  Ideal
transformers are eliminated, so the matrices returned here directly relate
chord currents to tree currents, ``I_tree = -F I_chord``, and tree voltages to
chord voltages, ``V_chord = F^T V_tree``.

Column ordering is ``(C_1, ..., C_M, C_R1, ..., C_RN)`` throughout.  Rows of
``F_LC`` exist only for regular stages; degenerate stages keep their
capacitor column.

The multiport computation runs the current law backwards from the terminal
transformer.  A second, independent pass runs the voltage law forwards from
the ports and returns the transposed blocks, which is useful as a check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .brune_multiport import MultiportBruneCircuit
from .brune_oneport import OnePortBruneCircuit
from .errors import DimensionMismatch, GyratorPresent, ValidationError

__all__ = [
    "JosephsonJunction",
    "Resistor",
    "VoltageSource",
    "PortTermination",
    "EffectiveLoopMatrices",
    "VoltageLawBlocks",
    "oneport_effective_loops",
    "multiport_effective_loops",
    "effective_loops_via_voltage_law",
    "effective_loops",
]


# ------------------------------------------------------------ terminations

@dataclass(frozen=True)
class JosephsonJunction:
    """Junction closing a port; ``C_J`` is its (small) parallel capacitance.

    ``L_J = inf`` leaves the junction's linear inductance out of the harmonic
    problem, which is what the loop analysis alone needs.
    """

    L_J: float = math.inf
    C_J: float = 1e-15

    def __post_init__(self):
        if not self.L_J > 0:
            raise ValidationError(f"junction inductance must be positive, got {self.L_J}")
        if not self.C_J >= 0:
            raise ValidationError(f"junction capacitance must be >= 0, got {self.C_J}")


@dataclass(frozen=True)
class Resistor:
    """Resistive shunt closing a port."""

    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValidationError(f"port resistor must be positive, got {self.R}")


@dataclass(frozen=True)
class VoltageSource:
    """Ideal source with series resistance ``R_s`` driving a port."""

    R_s: float

    def __post_init__(self):
        if not self.R_s > 0:
            raise ValidationError(f"source resistance must be positive, got {self.R_s}")


PortTermination = Union[JosephsonJunction, Resistor, VoltageSource]


def _check_terminations(terms: Sequence[PortTermination] | None, n_ports: int) -> tuple:
    if terms is None:
        return tuple(JosephsonJunction() for _ in range(n_ports))
    terms = tuple(terms)
    if len(terms) != n_ports:
        raise DimensionMismatch(f"need exactly one termination per port ({n_ports}), got {len(terms)}")
    for t in terms:
        if not isinstance(t, (JosephsonJunction, Resistor, VoltageSource)):
            raise ValidationError(f"unknown port termination {t!r}")
    return terms


# ------------------------------------------------------------------ result

@dataclass(frozen=True)
class EffectiveLoopMatrices:
    """Loop matrices after eliminating the ideal transformers.

    ``F_ZC`` holds one row per stage series resistor, followed by one row per
    port closed by a :class:`Resistor` and one per :class:`VoltageSource`
    (its series resistance).  ``F_VC`` has one row per voltage source.
    """

    F_JC: np.ndarray
    F_LC: np.ndarray
    F_ZC: np.ndarray
    F_VC: np.ndarray
    n_stages: int
    n_ports: int
    junction_ports: tuple[int, ...]
    resistor_ports: tuple[int, ...] = ()
    source_ports: tuple[int, ...] = ()
    regular_stages: tuple[int, ...] = ()
    terminations: tuple = field(default=(), compare=False)

    def __post_init__(self):
        for name in ("F_JC", "F_LC", "F_ZC", "F_VC"):
            a = np.array(getattr(self, name), dtype=float, ndmin=2)
            if a.size == 0:
                a = a.reshape(0, self.n_columns)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n_columns(self) -> int:
        return self.n_stages + self.n_ports

    @property
    def n_series(self) -> int:
        """Number of stage series resistors (leading rows of ``F_ZC``)."""
        return self.n_stages

    @property
    def F_C(self) -> np.ndarray:
        """Rows of the flux coordinates: junction rows then inductor rows."""
        return np.vstack([self.F_JC, self.F_LC])

    @property
    def F_C0(self) -> np.ndarray:
        """``F_C`` restricted to the stage capacitor columns."""
        return self.F_C[:, : self.n_stages]

    @property
    def F_CR(self) -> np.ndarray:
        """``F_C`` restricted to the terminal resistor columns."""
        return self.F_C[:, self.n_stages:]

    def port_shunt_row(self, port: int) -> np.ndarray:
        """Row of ``F_ZC`` belonging to the resistor closing ``port``."""
        k = self.resistor_ports.index(port)
        return self.F_ZC[self.n_stages + k]

    def source_row(self, port: int) -> np.ndarray:
        """Row of ``F_VC`` belonging to the source driving ``port``."""
        return self.F_VC[self.source_ports.index(port)]

    def source_resistor_row(self, port: int) -> np.ndarray:
        k = len(self.resistor_ports) + self.source_ports.index(port)
        return self.F_ZC[self.n_stages + k]


@dataclass(frozen=True)
class VoltageLawBlocks:
    """Transposed loop blocks obtained from the voltage law (``V_C = F^T V``)."""

    FT_JC: np.ndarray
    FT_LC: np.ndarray
    FT_ZC: np.ndarray
    FT_VC: np.ndarray

    def transpose(self, like: EffectiveLoopMatrices) -> EffectiveLoopMatrices:
        return EffectiveLoopMatrices(
            self.FT_JC.T, self.FT_LC.T, self.FT_ZC.T, self.FT_VC.T,
            like.n_stages, like.n_ports, like.junction_ports, like.resistor_ports,
            like.source_ports, like.regular_stages, like.terminations)


# ------------------------------------------------------------- chain model

@dataclass(frozen=True)
class _ChainStage:
    T: np.ndarray          # Belevitch matrix, I_left = T I_right
    A: np.ndarray          # right-side current map of the stage
    ups: np.ndarray | None  # inductor coupling row, None for degenerate stages


def _chain(circuit) -> tuple[list[_ChainStage], np.ndarray, int]:
    if isinstance(circuit, OnePortBruneCircuit):
        one = np.ones((1, 1))
        st = [_ChainStage(one, one, None if s.degenerate else np.array([1.0 - s.n]))
              for s in circuit.stages]
        return st, one, 1
    if isinstance(circuit, MultiportBruneCircuit):
        if circuit.has_gyrator:
            raise GyratorPresent("loop analysis does not support gyrator stages")
        N = circuit.n_ports
        out = []
        for s in circuit.stages:
            if s.degenerate:
                out.append(_ChainStage(s.T.T, np.eye(N), None))
                continue
            nu = np.asarray(s.nu, float)
            A = np.eye(N)
            A[0, 1:] = -nu
            ups = np.concatenate([[1.0 - s.n], -nu])
            out.append(_ChainStage(s.T.T, A, ups))
        return out, circuit.terminal_transformer.T, N
    raise ValidationError(f"unsupported circuit type {type(circuit).__name__}")


def _split_ports(terms: tuple) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    kinds = {JosephsonJunction: [], Resistor: [], VoltageSource: []}
    for i, t in enumerate(terms):
        kinds[type(t)].append(i)
    return tuple(kinds[JosephsonJunction]), tuple(kinds[Resistor]), tuple(kinds[VoltageSource])


# ------------------------------------------------------------- current law

def multiport_effective_loops(circuit: MultiportBruneCircuit | OnePortBruneCircuit,
                              terminations: Sequence[PortTermination] | None = None
                              ) -> EffectiveLoopMatrices:
    """Effective loop matrices from the backward current-law iteration.

    ``terminations`` defaults to a junction on every port.  Ports closed by
    resistors or sources contribute rows to ``F_ZC`` (and ``F_VC``) instead of
    ``F_JC``.
    """
    stages, T_end, N = _chain(circuit)
    terms = _check_terminations(terminations, N)
    M = len(stages)
    ncol = M + N
    # I_{T_{j+1}}^{(L)} = -X I_C
    X = np.zeros((N, ncol))
    X[:, M:] = T_end
    lrows: list[np.ndarray] = []
    zrows: list[np.ndarray] = [np.empty(0)] * M
    regular = []
    for j in range(M - 1, -1, -1):
        st = stages[j]
        if st.ups is not None:
            row = st.ups @ X
            row[j] += 1.0
            lrows.append(row)
            regular.append(j)
        Y = st.A @ X
        Y[0, j] += 1.0
        zrows[j] = Y[0].copy()
        X = st.T @ Y
    lrows.reverse()
    regular.reverse()
    jp, rp, sp = _split_ports(terms)
    F_ZC = np.vstack(zrows + [X[p] for p in rp] + [X[p] for p in sp]) if (M or rp or sp) \
        else np.zeros((0, ncol))
    return EffectiveLoopMatrices(
        F_JC=X[list(jp)] if jp else np.zeros((0, ncol)),
        F_LC=np.vstack(lrows) if lrows else np.zeros((0, ncol)),
        F_ZC=F_ZC,
        F_VC=X[list(sp)] if sp else np.zeros((0, ncol)),
        n_stages=M, n_ports=N, junction_ports=jp, resistor_ports=rp,
        source_ports=sp, regular_stages=tuple(regular), terminations=terms)


def oneport_effective_loops(circuit: OnePortBruneCircuit) -> EffectiveLoopMatrices:
    """Closed-form loop matrices of a one-port Brune chain closed by a junction.

    ``F_JC`` is a row of ones, ``F_ZC`` is upper triangular ones and the
    inductor row of stage ``j`` is ``1`` at column ``j`` and ``1 - n_j``
    at every later column.
    """
    M = len(circuit.stages)
    F_ZC = np.triu(np.ones((M, M + 1)))
    lrows, regular = [], []
    for j, s in enumerate(circuit.stages):
        if s.degenerate:
            continue
        row = np.zeros(M + 1)
        row[j] = 1.0
        row[j + 1:] = 1.0 - s.n
        lrows.append(row)
        regular.append(j)
    return EffectiveLoopMatrices(
        F_JC=np.ones((1, M + 1)),
        F_LC=np.vstack(lrows) if lrows else np.zeros((0, M + 1)),
        F_ZC=F_ZC, F_VC=np.zeros((0, M + 1)),
        n_stages=M, n_ports=1, junction_ports=(0,), regular_stages=tuple(regular),
        terminations=(JosephsonJunction(),))


def effective_loops(circuit, terminations: Sequence[PortTermination] | None = None
                    ) -> EffectiveLoopMatrices:
    """Dispatch on the circuit type."""
    if isinstance(circuit, OnePortBruneCircuit) and terminations is None:
        return oneport_effective_loops(circuit)
    return multiport_effective_loops(circuit, terminations)


# ------------------------------------------------------------- voltage law

def effective_loops_via_voltage_law(circuit: MultiportBruneCircuit | OnePortBruneCircuit,
                                    terminations: Sequence[PortTermination] | None = None
                                    ) -> VoltageLawBlocks:
    """Transposed loop blocks from the forward voltage-law iteration.

    Chord voltages are expressed as linear combinations of the tree voltages
    ``(V_port[N], V_L[regular stages], V_r[M])``.
    """
    stages, T_end, N = _chain(circuit)
    terms = _check_terminations(terminations, N)
    M = len(stages)
    regular = [j for j, s in enumerate(stages) if s.ups is not None]
    lidx = {j: N + k for k, j in enumerate(regular)}
    ntree = N + len(regular) + M
    ridx = lambda j: N + len(regular) + j  # noqa: E731
    G = np.zeros((N, ntree))   # V_{T_j}^{(L)} in tree coordinates
    G[:, :N] = np.eye(N)
    rows = np.zeros((M + N, ntree))
    for j, st in enumerate(stages):
        VR = st.T.T @ G
        rows[j] = VR[0]
        rows[j, ridx(j)] += 1.0
        G = st.A.T @ VR
        G[:, ridx(j)] += st.A[0]
        if st.ups is not None:
            rows[j, lidx[j]] += 1.0
            G[:, lidx[j]] += st.ups
    rows[M:] = T_end.T @ G
    jp, rp, sp = _split_ports(terms)
    ports = rows[:, :N]
    FT_Z = [rows[:, ridx(j)] for j in range(M)] + [ports[:, p] for p in rp] + [ports[:, p] for p in sp]
    return VoltageLawBlocks(
        FT_JC=ports[:, list(jp)] if jp else np.zeros((M + N, 0)),
        FT_LC=rows[:, [lidx[j] for j in regular]] if regular else np.zeros((M + N, 0)),
        FT_ZC=np.column_stack(FT_Z) if FT_Z else np.zeros((M + N, 0)),
        FT_VC=ports[:, list(sp)] if sp else np.zeros((M + N, 0)))


