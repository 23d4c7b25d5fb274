"""One-port Brune synthesis carried out on state-space realizations.

Each extraction step removes the minimum of ``Re z(jw)`` as a series
resistor, brings the reduced realization into a canonical block form by a
similarity transform, and then reads the stage elements and the remainder
realization directly off the blocks.

State ordering of a regular stage is ``[x_remainder; x_C; x_L]``.  A
capacitive degenerate stage appends a single capacitor state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BruneError,
    DegenerateK22,
    InductiveDegenerateUnsupported,
    NonPositiveElement,
    NotPR,
    ResonantEigenvalue,
    StageError,
    StructureMismatch,
    ValidationError,
)
from .model_core import (
    StateSpaceModel,
    check_positive_real,
    eval_impedance_grid,
    minimize_hermitian_eig,
    similarity_transform,
)

__all__ = [
    "OnePortBruneStage",
    "OnePortBruneCircuit",
    "ResistanceExtraction",
    "SynthesisConfig",
    "extract_resistance",
    "fundamental_transform",
    "degenerate_transform",
    "peel_stage",
    "peel_degenerate_capacitive",
    "synthesize_oneport",
    "recompose_oneport",
    "stage_forward",
    "degenerate_forward",
]


@dataclass(frozen=True)
class OnePortBruneStage:
    """Series resistor ``R`` followed by a regular or capacitive degenerate section."""

    R: float
    C: float
    n: float | None = None
    L: float | None = None
    omega0: float = math.inf

    def __post_init__(self):
        if not self.C > 0:
            raise NonPositiveElement(f"capacitance must be positive, got {self.C}")
        if self.R < 0:
            raise NonPositiveElement(f"series resistance must be non-negative, got {self.R}")
        if (self.n is None) != (self.L is None):
            raise ValidationError("regular stages need both n and L")
        if self.L is not None:
            if not self.L > 0:
                raise NonPositiveElement(f"inductance must be positive, got {self.L}")
            if self.n == 0:
                raise ValidationError("turns ratio must be non-zero")

    @property
    def degenerate(self) -> bool:
        return self.L is None

    @property
    def n_states(self) -> int:
        return 1 if self.degenerate else 2


@dataclass(frozen=True)
class OnePortBruneCircuit:
    stages: tuple[OnePortBruneStage, ...]
    terminal_resistance: float

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.terminal_resistance >= 0:
            raise ValidationError("terminal resistance must be >= 0 or inf")

    @property
    def n_states(self) -> int:
        return sum(s.n_states for s in self.stages)


@dataclass(frozen=True)
class ResistanceExtraction:
    R1: float
    omega0: float
    reduced: StateSpaceModel

    @property
    def kind(self) -> str:
        if math.isinf(self.omega0):
            return "infinite"
        return "zero" if self.omega0 == 0.0 else "finite"


@dataclass(frozen=True)
class SynthesisConfig:
    """Knobs for the extraction loop."""

    grid_points: int = 4000
    grid_pad: float = 100.0
    clamp_tol: float = 1e-12
    structure_tol: float = 1e-6
    check_remainders: bool = True
    pr_points: int = 2000


# ------------------------------------------------------------ forward maps

def stage_forward(rem: StateSpaceModel, n: float, L: float, C: float) -> StateSpaceModel:
    """Impedance seen through a regular Brune section loaded by ``rem`` (no series R)."""
    A2, B2, C2 = rem.A, rem.B[:, 0], rem.C[0]
    D2 = float(rem.D[0, 0])
    k = rem.n_states
    sL, sC = math.sqrt(L), math.sqrt(C)
    w = 1.0 / (n * sL * sC)
    A = np.zeros((k + 2, k + 2))
    A[:k, :k] = A2
    A[:k, -1] = -B2 / (n * sL)
    A[-2, -1] = w
    A[-1, :k] = C2 / (n * sL)
    A[-1, -2] = -w
    A[-1, -1] = -D2 / (n * n * L)
    B = np.concatenate([B2 / n, [(1 - 1 / n) / sC, D2 / (n * n * sL)]])
    Cr = np.concatenate([C2 / n, [(1 - 1 / n) / sC, -D2 / (n * n * sL)]])
    return StateSpaceModel(A, B[:, None], Cr[None, :], [[D2 / n ** 2]])


def degenerate_forward(rem: StateSpaceModel | None, C: float) -> StateSpaceModel:
    """Shunt capacitor across ``rem``; ``rem=None`` means an open circuit."""
    sC = math.sqrt(C)
    if rem is None:
        return StateSpaceModel([[0.0]], [[1 / sC]], [[1 / sC]], [[0.0]])
    D2 = float(rem.D[0, 0])
    if not D2 > 0:
        raise NonPositiveElement("a capacitive degenerate stage needs a remainder with D > 0")
    k = rem.n_states
    A2, B2, C2 = rem.A, rem.B[:, 0], rem.C[0]
    A = np.zeros((k + 1, k + 1))
    A[:k, :k] = A2 - np.outer(B2, C2) / D2
    A[:k, -1] = B2 / (D2 * sC)
    A[-1, :k] = C2 / (D2 * sC)
    A[-1, -1] = -1 / (D2 * C)
    B = np.zeros((k + 1, 1))
    B[-1, 0] = 1 / sC
    return StateSpaceModel(A, B, B.T.copy(), [[0.0]])


def recompose_oneport(circuit: OnePortBruneCircuit) -> StateSpaceModel:
    """Realization of the circuit impedance, built innermost stage first."""
    R = circuit.terminal_resistance
    model = None if math.isinf(R) else StateSpaceModel(np.zeros((0, 0)), np.zeros((0, 1)),
                                                       np.zeros((1, 0)), [[R]])
    for st in reversed(circuit.stages):
        if st.degenerate:
            model = degenerate_forward(model, st.C)
        else:
            if model is None:
                raise ValidationError("a regular stage cannot terminate in an open circuit")
            model = stage_forward(model, st.n, st.L, st.C)
        model = model.replace(D=model.D + st.R)
    if model is None:
        raise ValidationError("circuit without stages cannot have an open terminal")
    return model


# ------------------------------------------------------- resistance search

def extract_resistance(model: StateSpaceModel, config: SynthesisConfig | None = None) -> ResistanceExtraction:
    """Remove ``min_w Re z(jw)`` as a series resistance."""
    cfg = config or SynthesisConfig()
    if model.n_ports != 1:
        raise ValidationError("extract_resistance expects a one-port model")
    D = float(model.D[0, 0])
    if model.n_states == 0:
        return _clamped(D, math.inf, model, abs(D), cfg)
    hm = minimize_hermitian_eig(model, cfg.grid_points, cfg.grid_pad)
    scale = max(abs(hm.value_at_inf), abs(hm.value), 1e-300)
    return _clamped(hm.value, hm.omega, model, scale, cfg)


def _clamped(r: float, w0: float, model: StateSpaceModel, scale: float,
             cfg: SynthesisConfig) -> ResistanceExtraction:
    if r < 0:
        if r < -cfg.clamp_tol * max(scale, 1e-300):
            raise NotPR(f"Re z reaches {r:.3e} < 0 at w={w0:.6e}")
        r = 0.0
    D = model.D - r
    if math.isinf(w0):
        D = np.zeros_like(D)
    return ResistanceExtraction(r, w0, model.replace(D=D))


# --------------------------------------------------------- canonical forms

def _complement(V: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of ``span(V)``, closest to leading unit vectors."""
    n, k = V.shape
    Q, _ = np.linalg.qr(V)
    P = np.eye(n) - Q @ Q.T
    Qc, Rc = np.linalg.qr(P[:, : n - k])
    if n - k:
        sign = np.sign(np.diag(Rc))
        sign[sign == 0] = 1.0
        Qc = Qc * sign
        if np.abs(np.diag(Rc)).min() < 1e-8:
            Qc = np.linalg.svd(P)[0][:, : n - k]
    return Qc


def fundamental_transform(model: StateSpaceModel, omega0: float, port: int = 0) -> np.ndarray:
    """Similarity that brings a reduced model into the canonical stage form.

    ``port`` selects which input/output column drives the construction; for a
    one-port model it is 0.
    """
    A = model.A
    N = model.n_states
    if N < 2:
        raise StructureMismatch("a regular stage needs at least two states")
    b = model.B[:, port:port + 1]
    c = model.C[port:port + 1, :]
    M = omega0 ** 2 * np.eye(N) + A @ A
    if np.linalg.cond(M) > 1e14:
        raise ResonantEigenvalue(f"j*{omega0} is (numerically) an eigenvalue of A")
    v = np.linalg.solve(M, b)
    w = -A @ v
    # unit columns keep T_a well conditioned; T_c restores the lemma's scaling
    sv, sw = np.linalg.norm(v), np.linalg.norm(w)
    v, w = v / sv, w / sw
    Ta_inv = np.hstack([_complement(np.hstack([v, w])), v, w])
    Ta = np.linalg.inv(Ta_inv)
    Ab = Ta @ A @ Ta_inv
    cb = c @ Ta_inv
    r1 = np.linalg.solve((omega0 ** 2 * np.eye(N) + Ab @ Ab).T, cb.T).T
    K = np.vstack([r1, r1 @ Ab])
    K12, K22 = K[:, : N - 2], K[:, N - 2:]
    a2, b2 = K22[0, 0], K22[1, 1]
    if not (a2 > 0 and b2 > 0):
        raise DegenerateK22(f"K22 diagonal not positive: {a2:.3e}, {b2:.3e}")
    # off-diagonal terms are proportional to d/dw Re z and vanish at the minimum
    if abs(K22[0, 1] * K22[1, 0]) > 0.5 * a2 * b2:
        raise DegenerateK22("K22 block is singular")
    Tb = np.eye(N)
    Tb[N - 2:, : N - 2] = np.linalg.solve(K22, K12)
    Tc = np.eye(N)
    Tc[N - 2, N - 2] = a2 / math.sqrt(a2 * sv)
    Tc[N - 1, N - 1] = b2 / math.sqrt(b2 * sw)
    return Tc @ Tb @ Ta


def degenerate_transform(model: StateSpaceModel, port: int = 0) -> np.ndarray:
    """Similarity for a capacitive degenerate stage: ``B -> C^T -> alpha e_N``."""
    N = model.n_states
    b = model.B[:, port:port + 1]
    c = model.C[port:port + 1, :]
    sb = np.linalg.norm(b)
    b = b / sb
    Ta_inv = np.hstack([_complement(b), b])
    Ta = np.linalg.inv(Ta_inv)
    cb = c @ Ta_inv
    K12, K22 = cb[:, : N - 1], float(cb[0, N - 1])
    if not K22 > 0:
        raise DegenerateK22(f"C B = {K22:.3e} must be positive for a capacitive stage")
    Tb = np.eye(N)
    Tb[N - 1, : N - 1] = K12[0] / K22
    Tc = np.eye(N)
    Tc[N - 1, N - 1] = K22 / math.sqrt(K22 * sb)
    return Tc @ Tb @ Ta


def _check(name: str, got: np.ndarray, want: np.ndarray, scale: float, tol: float) -> None:
    err = float(np.max(np.abs(np.asarray(got) - np.asarray(want)), initial=0.0))
    if err > tol * max(scale, 1e-300):
        raise StructureMismatch(f"{name}: mismatch {err:.3e} (scale {scale:.3e})")


# ------------------------------------------------------------------ peels

def peel_stage(model: StateSpaceModel, omega0: float, R: float = 0.0,
               tol: float = 1e-6) -> tuple[OnePortBruneStage, StateSpaceModel]:
    """Split a reduced model (zero real part at ``omega0``) into a regular stage and remainder."""
    T = fundamental_transform(model, omega0)
    can = similarity_transform(model, T)
    n_, L, C, rem = _read_regular(can, tol)
    return OnePortBruneStage(R=R, C=C, n=n_, L=L, omega0=omega0), rem


def _read_regular(can: StateSpaceModel, tol: float):
    A, B, Cm, D1 = can.A, can.B[:, 0], can.C[0], float(can.D[0, 0])
    N = can.n_states
    c, l = N - 2, N - 1
    scale = max(np.abs(A).max(), np.abs(B).max(), np.abs(Cm).max())
    if not D1 > 0:
        raise NonPositiveElement(f"regular stage needs D > 0, got {D1:.3e}")
    if not A[l, l] < 0:
        raise NonPositiveElement("recovered inductance is not positive")
    L = -D1 / A[l, l]
    sL = math.sqrt(L)
    a, b = A[c, l], B[c]
    n_ = 1.0 + b / (a * sL)
    if n_ == 0:
        raise NonPositiveElement("recovered turns ratio is zero")
    C = 1.0 / (n_ * a * sL) ** 2
    _check("A[c,:]", A[c, :l], np.zeros(l), scale, tol)
    _check("A[:,c]", A[:c, c], np.zeros(c), scale, tol)
    _check("A[l,c]", A[l, c], -a, scale, tol)
    _check("A[:c,l]", A[:c, l], -B[:c] / sL, scale, tol)
    _check("A[l,:c]", A[l, :c], Cm[:c] / sL, scale, tol)
    _check("C[c]", Cm[c], b, scale, tol)
    _check("B[l]", B[l], D1 / sL, scale, tol)
    _check("C[l]", Cm[l], -D1 / sL, scale, tol)
    rem = StateSpaceModel(A[:c, :c], (n_ * B[:c])[:, None], (n_ * Cm[:c])[None, :],
                          [[n_ * n_ * D1]])
    return n_, L, C, rem


def peel_degenerate_capacitive(model: StateSpaceModel, R: float = 0.0,
                               tol: float = 1e-6) -> tuple[OnePortBruneStage, StateSpaceModel | None]:
    """Split off a shunt capacitor; returns ``None`` as remainder for an open circuit."""
    if model.n_states < 1:
        raise StructureMismatch("a degenerate stage needs at least one state")
    D = float(model.D[0, 0])
    scale_d = max(np.abs(model.C).max() * np.abs(model.B).max(), 1e-300)
    if abs(D) > 1e-9 * scale_d and abs(D) > 1e-12:
        raise StructureMismatch(f"degenerate stage needs D = 0, got {D:.3e}")
    can = similarity_transform(model, degenerate_transform(model))
    return _read_degenerate(can, R, tol)


def _read_degenerate(can: StateSpaceModel, R: float, tol: float):
    A, B, Cm = can.A, can.B[:, 0], can.C[0]
    N = can.n_states
    l = N - 1
    scale = max(np.abs(A).max(), np.abs(B).max())
    _check("B[:l]", B[:l], np.zeros(l), scale, tol)
    _check("C[:l]", Cm[:l], np.zeros(l), scale, tol)
    _check("C[l]", Cm[l], B[l], scale, tol)
    sC = 1.0 / B[l]
    C = sC * sC
    if abs(A[l, l]) <= 1e-12 * max(np.abs(A).max(), 1e-300):
        if N == 1:
            return OnePortBruneStage(R=R, C=C), None
        raise StructureMismatch("capacitive stage over an open remainder with dynamics")
    if not A[l, l] < 0:
        raise NonPositiveElement("remainder resistance at DC of the capacitor is negative")
    D2 = -1.0 / (C * A[l, l])
    B2 = A[:l, l] * D2 * sC
    C2 = A[l, :l] * D2 * sC
    A2 = A[:l, :l] + np.outer(B2, C2) / D2
    rem = StateSpaceModel(A2, B2[:, None], C2[None, :], [[D2]])
    return OnePortBruneStage(R=R, C=C), rem


# -------------------------------------------------------------- recursion

def synthesize_oneport(model: StateSpaceModel, config: SynthesisConfig | None = None) -> OnePortBruneCircuit:
    """Full one-port Brune extraction."""
    cfg = config or SynthesisConfig()
    if model.n_ports != 1:
        raise ValidationError("synthesize_oneport expects a one-port model")
    if model.E is not None and np.any(model.E != 0):
        raise ValidationError("a series inductive term E*s is not supported by the synthesis")
    model = model.replace(E=None)
    if model.n_states and not model.is_stable():
        raise NotPR("model is not stable")
    stages: list[OnePortBruneStage] = []
    cur: StateSpaceModel | None = model
    terminal = None
    while cur is not None and cur.n_states > 0:
        idx = len(stages) + 1
        try:
            ext = extract_resistance(cur, cfg)
            red = ext.reduced
            if ext.kind == "zero":
                raise InductiveDegenerateUnsupported(
                    "minimum of Re z at w = 0 requires an inductive degenerate stage")
            d_small = abs(float(red.D[0, 0])) <= 1e-12 * max(abs(float(cur.D[0, 0])), 1e-300)
            if ext.kind == "infinite" or d_small:
                stage, cur = peel_degenerate_capacitive(red.replace(D=np.zeros((1, 1))),
                                                        ext.R1, cfg.structure_tol)
                stage = OnePortBruneStage(R=ext.R1, C=stage.C, omega0=math.inf)
            else:
                stage, cur = peel_stage(red, ext.omega0, ext.R1, cfg.structure_tol)
            if cfg.check_remainders and cur is not None and cur.n_states:
                rep = check_positive_real(cur, points=cfg.pr_points)
                if not rep.ok:
                    raise NotPR(f"remainder failed the PR check (min eig {rep.min_hermitian_eig:.3e})")
        except InductiveDegenerateUnsupported:
            raise
        except BruneError as exc:
            raise StageError(idx, exc) from exc
        stages.append(stage)
    if cur is None:
        terminal = math.inf
    else:
        terminal = float(cur.D[0, 0])
        if terminal < 0:
            if terminal < -cfg.clamp_tol * max(abs(float(model.D[0, 0])), 1.0):
                raise NotPR(f"negative terminal resistance {terminal:.3e}")
            terminal = 0.0
    return OnePortBruneCircuit(tuple(stages), terminal)


def impedance_error(a: StateSpaceModel, b: StateSpaceModel, omega: np.ndarray) -> float:
    """Max over the grid of ``|Z_a - Z_b| / |Z_a|`` (Frobenius)."""
    Za = eval_impedance_grid(a, 1j * omega)
    Zb = eval_impedance_grid(b, 1j * omega)
    num = np.linalg.norm(Za - Zb, axis=(1, 2))
    den = np.maximum(np.linalg.norm(Za, axis=(1, 2)), 1e-300)
    return float((num / den).max())
