"""Multiport Brune synthesis.

Each stage consists of a Belevitch transformer ``T``, a series resistor at
its internal port 1, and a one-port style section on port 1 whose capacitor
is coupled in series to ports ``2..N`` through the turns ratios ``nu``.

Belevitch convention: ``I_L = T I_R`` and ``V_R = T^T V_L`` with the external
ports on the left, so the impedance seen from the left is
``T^-T Z_R T^-1`` (``T Z_R T^T`` when ``T`` is orthogonal).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .brune_oneport import (
    SynthesisConfig,
    _check,
    _read_degenerate,
    _read_regular,
    degenerate_transform,
    fundamental_transform,
)
from .errors import (
    BruneError,
    ClampWarning,
    EigenOrderingAmbiguity,
    InductiveDegenerateUnsupported,
    NonCanonicalAntisymmetry,
    NonPositiveElement,
    NotPR,
    NotPSD,
    SingularMinor,
    StageError,
    StructureMismatch,
    ValidationError,
)
from .model_core import (
    StateSpaceModel,
    check_positive_real,
    default_grid,
    hermitian_part_grid,
    minimize_hermitian_eig,
    similarity_transform,
)

__all__ = [
    "BelevitchTransformer",
    "MultiportBruneStage",
    "MultiportBruneCircuit",
    "Extraction",
    "extract_resistance_and_transformer",
    "extract_resistance_gauss",
    "peel_stage_multiport",
    "peel_degenerate_capacitive_multiport",
    "detect_gyrator",
    "factor_terminal_stage",
    "synthesize_multiport",
    "recompose_multiport",
    "multiport_stage_forward",
    "multiport_degenerate_forward",
    "apply_belevitch",
    "sign_normalize",
]


def sign_normalize(U: np.ndarray) -> np.ndarray:
    """Flip columns so each column's largest-magnitude entry is positive."""
    U = np.array(U, float)
    if U.size == 0:
        return U
    idx = np.argmax(np.abs(U) - 1e-12 * np.arange(U.shape[0])[:, None], axis=0)
    s = np.sign(U[idx, np.arange(U.shape[1])])
    s[s == 0] = 1.0
    return U * s


@dataclass(frozen=True, eq=False)
class BelevitchTransformer:
    """Turns-ratio matrix with ``I_L = T I_R`` and ``V_R = T^T V_L``."""

    T: np.ndarray
    orthogonal: bool = True

    def __post_init__(self):
        T = np.array(self.T, float)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ValidationError(f"Belevitch matrix must be square, got {T.shape}")
        if not np.all(np.isfinite(T)) or abs(np.linalg.det(T)) < 1e-300:
            raise ValidationError("Belevitch matrix must be finite and nonsingular")
        T.setflags(write=False)
        object.__setattr__(self, "T", T)

    @property
    def size(self) -> int:
        return self.T.shape[0]

    def orthogonality_error(self) -> float:
        return float(np.linalg.norm(self.T.T @ self.T - np.eye(self.size)))

    def __eq__(self, other):
        return isinstance(other, BelevitchTransformer) and np.array_equal(self.T, other.T)


@dataclass(frozen=True, eq=False)
class MultiportBruneStage:
    T: BelevitchTransformer
    r: float
    C: float
    n: float | None = None
    L: float | None = None
    nu: np.ndarray | None = None
    gamma: np.ndarray | None = None
    omega1: float = math.inf

    def __post_init__(self):
        if not isinstance(self.T, BelevitchTransformer):
            object.__setattr__(self, "T", BelevitchTransformer(self.T))
        N = self.T.size
        if not self.C > 0:
            raise NonPositiveElement(f"capacitance must be positive, got {self.C}")
        if self.r < 0:
            raise NonPositiveElement(f"series resistance must be non-negative, got {self.r}")
        if (self.n is None) != (self.L is None):
            raise ValidationError("regular stages need both n and L")
        nu = np.zeros(N - 1) if self.nu is None else np.array(self.nu, float).ravel()
        if nu.shape != (N - 1,):
            raise ValidationError(f"nu must have length {N - 1}")
        if self.L is None:
            if np.any(nu != 0):
                raise ValidationError("capacitive degenerate stages carry no nu transformer")
            if self.gamma is not None:
                raise ValidationError("gyrators are only supported on regular stages")
        else:
            if not self.L > 0:
                raise NonPositiveElement(f"inductance must be positive, got {self.L}")
            if self.n == 0:
                raise ValidationError("turns ratio must be non-zero")
        nu.setflags(write=False)
        object.__setattr__(self, "nu", nu)
        if self.gamma is not None:
            g = np.array(self.gamma, float).ravel()
            if g.shape != (N - 1,):
                raise ValidationError(f"gamma must have length {N - 1}")
            g.setflags(write=False)
            object.__setattr__(self, "gamma", g)

    @property
    def degenerate(self) -> bool:
        return self.L is None

    @property
    def n_ports(self) -> int:
        return self.T.size

    @property
    def n_states(self) -> int:
        return 1 if self.degenerate else 2

    def __eq__(self, other):
        if not isinstance(other, MultiportBruneStage):
            return NotImplemented
        g1 = None if self.gamma is None else tuple(self.gamma)
        g2 = None if other.gamma is None else tuple(other.gamma)
        return (self.T == other.T and self.r == other.r and self.C == other.C
                and self.n == other.n and self.L == other.L
                and np.array_equal(self.nu, other.nu) and g1 == g2
                and (self.omega1 == other.omega1))


@dataclass(frozen=True, eq=False)
class MultiportBruneCircuit:
    n_ports: int
    stages: tuple[MultiportBruneStage, ...]
    terminal_transformer: BelevitchTransformer
    terminal_resistors: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not isinstance(self.terminal_transformer, BelevitchTransformer):
            object.__setattr__(self, "terminal_transformer",
                               BelevitchTransformer(self.terminal_transformer))
        R = np.array(self.terminal_resistors, float).ravel()
        N = self.n_ports
        if R.shape != (N,) or np.any(~(R >= 0)):
            raise ValidationError("terminal resistors must be N values >= 0")
        R.setflags(write=False)
        object.__setattr__(self, "terminal_resistors", R)
        if self.terminal_transformer.size != N:
            raise ValidationError("terminal transformer size does not match the port count")
        for j, st in enumerate(self.stages):
            if st.n_ports != N:
                raise ValidationError(f"stage {j + 1} has {st.n_ports} ports, expected {N}")

    @property
    def n_states(self) -> int:
        return sum(s.n_states for s in self.stages)

    @property
    def has_gyrator(self) -> bool:
        return any(s.gamma is not None for s in self.stages)

    def __eq__(self, other):
        if not isinstance(other, MultiportBruneCircuit):
            return NotImplemented
        return (self.n_ports == other.n_ports and self.stages == other.stages
                and self.terminal_transformer == other.terminal_transformer
                and np.array_equal(self.terminal_resistors, other.terminal_resistors))


@dataclass(frozen=True)
class Extraction:
    r1: float
    omega1: float
    T1: BelevitchTransformer
    reduced: StateSpaceModel

    @property
    def kind(self) -> str:
        if math.isinf(self.omega1):
            return "infinite"
        return "zero" if self.omega1 == 0.0 else "finite"


# ------------------------------------------------------------ forward maps

def apply_belevitch(model: StateSpaceModel, T: np.ndarray) -> StateSpaceModel:
    """Impedance seen through a Belevitch transformer: ``T^-T Z T^-1``."""
    Ti = np.linalg.inv(T)
    return model.replace(B=model.B @ Ti, C=Ti.T @ model.C, D=Ti.T @ model.D @ Ti)


def multiport_stage_forward(rem: StateSpaceModel, n: float, L: float, C: float,
                            nu: np.ndarray, gamma: np.ndarray | None = None) -> StateSpaceModel:
    """Regular multiport section loaded by ``rem`` (no series resistor, no Belevitch)."""
    N, k = rem.n_ports, rem.n_states
    nu = np.asarray(nu, float).ravel()
    sL, sC = math.sqrt(L), math.sqrt(C)
    w = 1.0 / (n * sL * sC)
    A2, B2, C2, D2 = rem.A, rem.B, rem.C, rem.D
    B2A, B2B = B2[:, 0], B2[:, 1:]
    C2A, C2B = C2[0, :], C2[1:, :]
    dAA, dAB, dBA, dBB = D2[0, 0], D2[0, 1:], D2[1:, 0], D2[1:, 1:]
    A = np.zeros((k + 2, k + 2))
    A[:k, :k] = A2
    A[:k, -1] = -B2A / (n * sL)
    A[-2, -1] = w
    A[-1, :k] = C2A / (n * sL)
    A[-1, -2] = -w
    A[-1, -1] = -dAA / (n * n * L)
    B = np.zeros((k + 2, N))
    B[:k, 0] = B2A / n
    B[:k, 1:] = B2B
    B[-2, 0] = (1 - 1 / n) / sC
    B[-2, 1:] = nu / sC
    B[-1, 0] = dAA / (n * n * sL)
    B[-1, 1:] = dAB / (n * sL)
    Cm = np.zeros((N, k + 2))
    Cm[0, :k] = C2A / n
    Cm[1:, :k] = C2B
    Cm[0, -2] = (1 - 1 / n) / sC
    Cm[1:, -2] = nu / sC
    Cm[0, -1] = -dAA / (n * n * sL)
    Cm[1:, -1] = -dBA / (n * sL)
    D = np.zeros((N, N))
    D[0, 0] = dAA / n ** 2
    D[0, 1:] = dAB / n
    D[1:, 0] = dBA / n
    D[1:, 1:] = dBB
    if gamma is not None:
        g = np.asarray(gamma, float).ravel()
        D[0, 1:] -= g
        D[1:, 0] += g
    return StateSpaceModel(A, B, Cm, D)


def multiport_degenerate_forward(rem: StateSpaceModel, C: float) -> StateSpaceModel:
    """Capacitor shunting port 1 of ``rem``."""
    N, k = rem.n_ports, rem.n_states
    sC = math.sqrt(C)
    A2, B2, C2, D2 = rem.A, rem.B, rem.C, rem.D
    dAA = D2[0, 0]
    if not dAA > 0:
        raise NonPositiveElement("capacitive stage needs a remainder with D_AA > 0")
    B2A, B2B = B2[:, 0], B2[:, 1:]
    C2A, C2B = C2[0, :], C2[1:, :]
    dAB, dBA, dBB = D2[0, 1:], D2[1:, 0], D2[1:, 1:]
    A = np.zeros((k + 1, k + 1))
    A[:k, :k] = A2 - np.outer(B2A, C2A) / dAA
    A[:k, -1] = B2A / (dAA * sC)
    A[-1, :k] = C2A / (dAA * sC)
    A[-1, -1] = -1.0 / (dAA * C)
    B = np.zeros((k + 1, N))
    B[:k, 1:] = B2B - np.outer(B2A, dAB) / dAA
    B[-1, 0] = 1 / sC
    B[-1, 1:] = dAB / (dAA * sC)
    Cm = np.zeros((N, k + 1))
    Cm[0, -1] = 1 / sC
    Cm[1:, :k] = C2B - np.outer(dBA, C2A) / dAA
    Cm[1:, -1] = dBA / (dAA * sC)
    D = np.zeros((N, N))
    D[1:, 1:] = dBB - np.outer(dBA, dAB) / dAA
    return StateSpaceModel(A, B, Cm, D)


def _terminal_model(circuit: MultiportBruneCircuit) -> StateSpaceModel:
    N = circuit.n_ports
    Ti = np.linalg.inv(circuit.terminal_transformer.T)
    D = Ti.T @ np.diag(circuit.terminal_resistors) @ Ti
    return StateSpaceModel(np.zeros((0, 0)), np.zeros((0, N)), np.zeros((N, 0)), D)


def recompose_multiport(circuit: MultiportBruneCircuit) -> StateSpaceModel:
    """Realization of the circuit impedance, innermost stage first."""
    model = _terminal_model(circuit)
    e1 = np.zeros((circuit.n_ports, circuit.n_ports))
    e1[0, 0] = 1.0
    for st in reversed(circuit.stages):
        if st.degenerate:
            model = multiport_degenerate_forward(model, st.C)
        else:
            model = multiport_stage_forward(model, st.n, st.L, st.C, st.nu, st.gamma)
        model = model.replace(D=model.D + st.r * e1)
        model = apply_belevitch(model, st.T.T)
    return model


# -------------------------------------------------------------- extraction

def _ascending_eigvecs(H: np.ndarray, scale: float) -> np.ndarray:
    lam, U = np.linalg.eigh(H)
    if len(lam) > 1 and lam[1] - lam[0] <= 1e-8 * max(scale, 1e-300):
        warnings.warn(f"smallest Hermitian eigenvalue is repeated (gap {lam[1] - lam[0]:.3e}); "
                      "basis chosen by the column sign rule", EigenOrderingAmbiguity)
    return sign_normalize(U)


def extract_resistance_and_transformer(model: StateSpaceModel,
                                       config: SynthesisConfig | None = None) -> Extraction:
    """Eigenvalue path: ``r1 = min_w lambda_min(Z_H(jw))`` and ``T1 = U(w1)``."""
    cfg = config or SynthesisConfig()
    hm = minimize_hermitian_eig(model, cfg.grid_points, cfg.grid_pad)
    scale = max(abs(hm.value_at_inf), abs(hm.value), 1e-300)
    r1, w1 = hm.value, hm.omega
    if r1 < 0:
        if r1 < -cfg.clamp_tol * scale:
            raise NotPR(f"Hermitian part reaches {r1:.3e} < 0 at w={w1:.6e}")
        r1 = 0.0
    if math.isinf(w1):
        H = 0.5 * (model.D + model.D.T)
    else:
        H = hermitian_part_grid(model, np.array([w1]))[0]
    U = _ascending_eigvecs(H, scale)
    D = U.T @ model.D @ U
    D[0, 0] -= r1
    if math.isinf(w1):
        D[0, 0] = 0.0
        sym = 0.5 * (D + D.T)
        asym = 0.5 * (D - D.T)
        sym[0, :] = 0.0
        sym[:, 0] = 0.0
        D = sym + asym
    reduced = model.replace(B=model.B @ U, C=U.T @ model.C, D=D)
    return Extraction(r1, w1, BelevitchTransformer(U, orthogonal=True), reduced)


def _schur_first(H: np.ndarray) -> float:
    if H.shape[0] == 1:
        return float(H[0, 0])
    Q = H[1:, 1:]
    b = H[1:, 0]
    return float(H[0, 0] - b @ np.linalg.solve(Q, b))


def extract_resistance_gauss(model: StateSpaceModel, config: SynthesisConfig | None = None) -> Extraction:
    """Gauss path: ``r1 = min_w Delta(w) / Delta_11(w)`` with a unit-triangular ``T1``."""
    from scipy.optimize import minimize_scalar

    cfg = config or SynthesisConfig()
    N = model.n_ports
    Dh = 0.5 * (model.D + model.D.T)

    def schur(w_arr):
        H = hermitian_part_grid(model, w_arr)
        if N == 1:
            return H[:, 0, 0], H
        Q = H[:, 1:, 1:]
        if np.any(np.abs(np.linalg.det(Q)) <= 1e-300):
            raise SingularMinor("Delta_11 vanishes on the grid")
        b = H[:, 1:, 0]
        return H[:, 0, 0] - np.einsum("ki,ki->k", b, np.linalg.solve(Q, b[..., None])[..., 0]), H

    f_inf = _schur_first(Dh) if N == 1 or abs(np.linalg.det(Dh[1:, 1:])) > 0 else math.inf
    if model.n_states:
        w = default_grid(model, cfg.grid_points, cfg.grid_pad)
        f, _ = schur(w)
        k = int(np.argmin(f))
        best_v, best_w = float(f[k]), float(w[k])
        if 0 < k < len(w) - 1:
            res = minimize_scalar(lambda x: schur(np.array([math.exp(x)]))[0][0],
                                  bounds=(math.log(w[k - 1]), math.log(w[k + 1])),
                                  method="bounded", options={"xatol": 1e-13})
            if res.fun < best_v:
                best_v, best_w = float(res.fun), math.exp(res.x)
        scale = max(np.abs(f).max(), abs(f_inf) if np.isfinite(f_inf) else 0.0, 1e-300)
        if best_v >= f_inf - 1e-9 * scale:
            best_v, best_w = f_inf, math.inf
    else:
        best_v, best_w, scale = f_inf, math.inf, max(abs(f_inf), 1e-300)
    r1 = best_v
    if r1 < 0:
        if r1 < -cfg.clamp_tol * scale:
            raise NotPR(f"Schur complement reaches {r1:.3e} < 0")
        r1 = 0.0
    H = Dh if math.isinf(best_w) else hermitian_part_grid(model, np.array([best_w]))[0]
    T1 = np.eye(N)
    if N > 1:
        T1[0, 1:] = np.linalg.solve(H[1:, 1:], H[1:, 0])
    Tb = np.linalg.inv(T1).T  # Belevitch matrix: Z = Tb^-T (Z1 + r e1 e1^T) Tb^-1
    Ti = np.linalg.inv(T1)
    D = Ti @ model.D @ Ti.T
    D[0, 0] -= r1
    if math.isinf(best_w):
        D[0, :] = 0.0
        D[:, 0] = 0.0
    reduced = model.replace(B=model.B @ Ti.T, C=Ti @ model.C, D=D)
    return Extraction(r1, best_w, BelevitchTransformer(Tb, orthogonal=False), reduced)


# ------------------------------------------------------------------- peels

def detect_gyrator(D1: np.ndarray, tol: float = 1e-8) -> np.ndarray | None:
    """Gyration vector from the antisymmetric part of ``D1``, or ``None``."""
    D1 = np.asarray(D1, float)
    K = 0.5 * (D1 - D1.T)
    scale = max(np.abs(D1).max(), 1e-300)
    if np.abs(K).max() <= tol * scale:
        return None
    if D1.shape[0] > 2 and np.abs(K[1:, 1:]).max() > tol * scale:
        raise NonCanonicalAntisymmetry("antisymmetric part has support outside row/column 1")
    return K[1:, 0].copy()


def peel_stage_multiport(model: StateSpaceModel, omega1: float, T1: BelevitchTransformer | None = None,
                         r1: float = 0.0, tol: float = 1e-6,
                         gyrator_tol: float = 1e-8) -> tuple[MultiportBruneStage, StateSpaceModel]:
    """Regular multiport stage from a reduced model with ``Re Z_11(j w1) = 0``."""
    N = model.n_ports
    T1 = T1 or BelevitchTransformer(np.eye(N))
    can = similarity_transform(model, fundamental_transform(model, omega1, port=0))
    D1 = np.array(can.D)
    gamma = detect_gyrator(D1, gyrator_tol) if N > 1 else None
    if gamma is not None:
        D1[0, 1:] += gamma
        D1[1:, 0] -= gamma
    # port-1 quantities follow the one-port algebra
    port1 = StateSpaceModel(can.A, can.B[:, :1], can.C[:1, :], D1[:1, :1])
    n_, L, C, rem1 = _read_regular(port1, tol)
    Ns = can.n_states
    c, l = Ns - 2, Ns - 1
    sL, sC = math.sqrt(L), math.sqrt(C)
    B, Cm = can.B, can.C
    nu = sC * B[c, 1:]
    scale = max(np.abs(B).max(), np.abs(Cm).max(), np.abs(can.A).max())
    _check("C[1:,c]", Cm[1:, c], nu / sC, scale, tol)
    _check("B[l,1:]", B[l, 1:], D1[0, 1:] / sL, scale, tol)
    _check("C[1:,l]", Cm[1:, l], -D1[1:, 0] / sL, scale, tol)
    Bn = np.zeros((c, N))
    Bn[:, 0] = rem1.B[:, 0]
    Bn[:, 1:] = B[:c, 1:]
    Cn = np.zeros((N, c))
    Cn[0, :] = rem1.C[0]
    Cn[1:, :] = Cm[1:, :c]
    Dn = np.zeros((N, N))
    Dn[0, 0] = rem1.D[0, 0]
    Dn[0, 1:] = n_ * D1[0, 1:]
    Dn[1:, 0] = n_ * D1[1:, 0]
    Dn[1:, 1:] = D1[1:, 1:]
    rem = StateSpaceModel(rem1.A, Bn, Cn, Dn)
    stage = MultiportBruneStage(T=T1, r=r1, C=C, n=n_, L=L, nu=nu, gamma=gamma, omega1=omega1)
    return stage, rem


def peel_degenerate_capacitive_multiport(model: StateSpaceModel, T1: BelevitchTransformer | None = None,
                                         r1: float = 0.0, tol: float = 1e-6
                                         ) -> tuple[MultiportBruneStage, StateSpaceModel]:
    """Capacitor across port 1 (extraction at infinite frequency)."""
    N = model.n_ports
    T1 = T1 or BelevitchTransformer(np.eye(N))
    D1 = model.D
    dscale = max(np.abs(D1).max(), float(np.abs(model.C[0] @ model.B[:, 0])), 1e-300)
    if np.abs(D1[0, :]).max() > 1e-9 * dscale or np.abs(D1[:, 0]).max() > 1e-9 * dscale:
        raise StructureMismatch("degenerate stage needs a zero first row and column in D")
    can = similarity_transform(model, degenerate_transform(model, port=0))
    port1 = StateSpaceModel(can.A, can.B[:, :1], can.C[:1, :], [[0.0]])
    stage1, rem1 = _read_degenerate(port1, r1, tol)
    if rem1 is None:
        raise StructureMismatch("capacitive stage over an open port is not representable")
    Ns = can.n_states
    l = Ns - 1
    C = stage1.C
    sC = math.sqrt(C)
    dAA = float(rem1.D[0, 0])
    B, Cm = can.B, can.C
    dAB = B[l, 1:] * dAA * sC
    dBA = Cm[1:, l] * dAA * sC
    B2A, C2A = rem1.B[:, 0], rem1.C[0]
    Bn = np.zeros((l, N))
    Bn[:, 0] = B2A
    Bn[:, 1:] = B[:l, 1:] + np.outer(B2A, dAB) / dAA
    Cn = np.zeros((N, l))
    Cn[0, :] = C2A
    Cn[1:, :] = Cm[1:, :l] + np.outer(dBA, C2A) / dAA
    Dn = np.zeros((N, N))
    Dn[0, 0] = dAA
    Dn[0, 1:] = dAB
    Dn[1:, 0] = dBA
    Dn[1:, 1:] = D1[1:, 1:] + np.outer(dBA, dAB) / dAA
    rem = StateSpaceModel(rem1.A, Bn, Cn, Dn)
    return MultiportBruneStage(T=T1, r=r1, C=C, omega1=math.inf), rem


def factor_terminal_stage(D_rem: np.ndarray, tol: float = 1e-12
                          ) -> tuple[BelevitchTransformer, np.ndarray]:
    """``D_rem = T diag(R) T^T`` with orthogonal ``T`` and ``R >= 0`` ascending."""
    D = np.asarray(D_rem, float)
    scale = max(np.abs(D).max(), 1e-300)
    if np.abs(D - D.T).max() > 1e-8 * scale:
        raise NotPSD("terminal block is not symmetric")
    lam, U = np.linalg.eigh(0.5 * (D + D.T))
    small = np.abs(lam) <= tol * scale
    if np.any(lam < 0) and np.any(lam[~small] < 0):
        raise NotPSD(f"terminal block has negative eigenvalue {lam.min():.3e}")
    if np.any(small & (lam != 0)):
        warnings.warn("terminal resistances within tolerance of zero clamped to 0", ClampWarning)
    lam = np.where(small, 0.0, lam)
    return BelevitchTransformer(sign_normalize(U)), lam


# ---------------------------------------------------------------- recursion

def synthesize_multiport(model: StateSpaceModel, config: SynthesisConfig | None = None,
                         method: str = "eigen") -> MultiportBruneCircuit:
    """Full multiport Brune extraction (eigen or Gauss resistance extraction)."""
    cfg = config or SynthesisConfig()
    if method not in ("eigen", "gauss"):
        raise ValidationError(f"unknown extraction method {method!r}")
    if model.E is not None and np.any(model.E != 0):
        raise ValidationError("a series inductive term E*s is not supported by the synthesis")
    model = model.replace(E=None)
    if model.n_states and not model.is_stable():
        raise NotPR("model is not stable")
    extract = extract_resistance_and_transformer if method == "eigen" else extract_resistance_gauss
    N = model.n_ports
    stages: list[MultiportBruneStage] = []
    cur = model
    while cur.n_states > 0:
        idx = len(stages) + 1
        try:
            ext = extract(cur, cfg)
            if ext.kind == "zero":
                raise InductiveDegenerateUnsupported(
                    "minimum of the Hermitian part at w = 0 requires an inductive degenerate stage")
            red = ext.reduced
            d_small = abs(red.D[0, 0]) <= 1e-12 * max(np.abs(cur.D).max(), 1e-300)
            if ext.kind == "infinite" or d_small:
                D = np.array(red.D)
                D[0, :] = 0.0
                D[:, 0] = 0.0
                stage, cur = peel_degenerate_capacitive_multiport(red.replace(D=D), ext.T1,
                                                                  ext.r1, cfg.structure_tol)
            else:
                stage, cur = peel_stage_multiport(red, ext.omega1, ext.T1, ext.r1, cfg.structure_tol)
            if cfg.check_remainders and cur.n_states:
                rep = check_positive_real(cur, points=cfg.pr_points)
                if not rep.ok:
                    raise NotPR(f"remainder failed the PR check (min eig {rep.min_hermitian_eig:.3e})")
        except InductiveDegenerateUnsupported:
            raise
        except BruneError as exc:
            raise StageError(idx, exc) from exc
        stages.append(stage)
    Tt, R = factor_terminal_stage(cur.D)
    meta = {"method": method}
    if method == "gauss":
        meta["non_orthogonal_T"] = True
    return MultiportBruneCircuit(N, tuple(stages), Tt, R, meta)
