"""State-space and pole-residue model algebra.

The impedance of a linear lumped network is represented as

    Z(s) = D + C (sI - A)^-1 B + E s

with real matrices.  Pole-residue models are the output of rational fitting and
are turned into real minimal realizations here.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    DegreeError,
    DimensionMismatch,
    SingularResolvent,
    SingularTransform,
    UnstablePole,
)

__all__ = [
    "StateSpaceModel",
    "PoleResidueModel",
    "FrequencySamples",
    "PrVerdict",
    "PrReport",
    "eval_impedance",
    "eval_impedance_grid",
    "eval_pole_residue_grid",
    "similarity_transform",
    "companion_realization",
    "pole_residue_to_statespace",
    "hermitian_part",
    "hermitian_part_grid",
    "default_grid",
    "check_positive_real",
    "is_reciprocal",
    "HermitianMinimum",
    "level_crossings",
    "minimize_hermitian_eig",
]

_COND_LIMIT = 1e14
_CHUNK = 512


def _frozen(a, dtype=float, ndim=2) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    if arr.ndim == 0 and ndim == 2:
        arr = arr.reshape(1, 1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Real realization ``Z(s) = D + C (sI - A)^-1 B + E s``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray | None = None

    def __post_init__(self):
        D = _frozen(self.D)
        m = D.shape[0]
        if D.ndim != 2 or D.shape != (m, m):
            raise DimensionMismatch(f"D must be square, got {D.shape}")
        A = np.array(self.A, dtype=float)
        n = A.shape[0] if A.size else 0
        A = _frozen(A.reshape(n, n))
        B = _frozen(np.array(self.B, dtype=float).reshape(n, m))
        C = _frozen(np.array(self.C, dtype=float).reshape(m, n))
        for name, val in (("A", A), ("B", B), ("C", C), ("D", D)):
            if not np.all(np.isfinite(val)):
                raise DimensionMismatch(f"{name} has non-finite entries")
            object.__setattr__(self, name, val)
        if self.E is not None:
            E = _frozen(self.E)
            if E.shape != (m, m):
                raise DimensionMismatch(f"E must be {m}x{m}, got {E.shape}")
            object.__setattr__(self, "E", E)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_ports(self) -> int:
        return self.D.shape[0]

    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.A) if self.n_states else np.zeros(0, complex)

    def is_stable(self) -> bool:
        return bool(np.all(self.poles().real < 0))

    def replace(self, **kw) -> "StateSpaceModel":
        d = dict(A=self.A, B=self.B, C=self.C, D=self.D, E=self.E)
        d.update(kw)
        return StateSpaceModel(**d)

    def to_dict(self) -> dict:
        out = {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "D": self.D.tolist(),
        }
        if self.E is not None:
            out["E"] = self.E.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "StateSpaceModel":
        m = len(d["D"])
        n = len(d["A"])
        return cls(
            A=np.array(d["A"], float).reshape(n, n),
            B=np.array(d["B"], float).reshape(n, m),
            C=np.array(d["C"], float).reshape(m, n),
            D=np.array(d["D"], float),
            E=None if d.get("E") is None else np.array(d["E"], float),
        )


@dataclass(frozen=True, eq=False)
class PoleResidueModel:
    """``Z(s) = D + E s + sum_k R_k / (s - p_k)`` with conjugate-closed poles."""

    poles: np.ndarray
    residues: np.ndarray
    D: np.ndarray
    E: np.ndarray | None = None

    def __post_init__(self):
        D = _frozen(self.D)
        m = D.shape[0]
        p = _frozen(np.atleast_1d(np.asarray(self.poles, complex)), complex, 1)
        R = _frozen(np.asarray(self.residues, complex).reshape(len(p), m, m), complex, 3)
        object.__setattr__(self, "poles", p)
        object.__setattr__(self, "residues", R)
        object.__setattr__(self, "D", D)
        if self.E is not None:
            object.__setattr__(self, "E", _frozen(self.E))

    @property
    def n_ports(self) -> int:
        return self.D.shape[0]

    @property
    def n_poles(self) -> int:
        return len(self.poles)

    def to_dict(self) -> dict:
        return {
            "poles_re": self.poles.real.tolist(),
            "poles_im": self.poles.imag.tolist(),
            "residues_re": self.residues.real.tolist(),
            "residues_im": self.residues.imag.tolist(),
            "D": self.D.tolist(),
            "E": None if self.E is None else self.E.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PoleResidueModel":
        m = len(d["D"])
        p = np.array(d["poles_re"], float) + 1j * np.array(d["poles_im"], float)
        R = np.array(d["residues_re"], float) + 1j * np.array(d["residues_im"], float)
        return cls(p, R.reshape(len(p), m, m), np.array(d["D"], float),
                   None if d.get("E") is None else np.array(d["E"], float))


@dataclass(frozen=True, eq=False)
class FrequencySamples:
    """Sampled impedance matrices at angular frequencies ``omega`` (rad/s)."""

    omega: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, float).ravel()
        v = np.asarray(self.values, complex)
        if v.ndim == 1:
            v = v.reshape(-1, 1, 1)
        if len(w) == 0:
            from .errors import EmptyInput
            raise EmptyInput("no frequency samples")
        if v.ndim != 3 or v.shape[0] != len(w) or v.shape[1] != v.shape[2]:
            raise DimensionMismatch(f"values shape {v.shape} incompatible with {len(w)} frequencies")
        if np.any(np.diff(w) <= 0) or w[0] < 0:
            raise DimensionMismatch("frequencies must be non-negative and strictly increasing")
        object.__setattr__(self, "omega", _frozen(w, float, 1))
        object.__setattr__(self, "values", _frozen(v, complex, 3))

    @property
    def n_ports(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return len(self.omega)


class PrVerdict(str, Enum):
    PR = "PR"
    NOT_PR = "NotPR"
    MARGINAL = "Marginal"


@dataclass(frozen=True)
class PrReport:
    is_stable: bool
    min_hermitian_eig: float
    omega_at_min: float
    d_plus_dt_min_eig: float
    verdict: PrVerdict
    tolerance: float
    e_psd: bool = True
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.verdict == PrVerdict.PR


# ---------------------------------------------------------------- evaluation

def eval_impedance(model: StateSpaceModel, s: complex) -> np.ndarray:
    """Impedance matrix at a single complex frequency."""
    s = complex(s)
    m = model.n_ports
    out = model.D.astype(complex)
    if model.n_states:
        M = s * np.eye(model.n_states) - model.A
        if np.linalg.cond(M) > _COND_LIMIT:
            raise SingularResolvent(f"sI - A is singular at s={s}")
        out = out + model.C @ np.linalg.solve(M, model.B)
    if model.E is not None:
        out = out + s * model.E
    if s.imag == 0.0:
        out = out.real.astype(complex)
    return out.reshape(m, m)


def eval_impedance_grid(model: StateSpaceModel, s: np.ndarray) -> np.ndarray:
    """Impedance at many complex frequencies, shape ``(K, m, m)``."""
    s = np.asarray(s, complex).ravel()
    m, n = model.n_ports, model.n_states
    out = np.broadcast_to(model.D, (len(s), m, m)).astype(complex)
    if n:
        eye = np.eye(n)
        for lo in range(0, len(s), _CHUNK):
            sk = s[lo:lo + _CHUNK]
            M = sk[:, None, None] * eye - model.A
            try:
                X = np.linalg.solve(M, np.broadcast_to(model.B, (len(sk), n, m)))
            except np.linalg.LinAlgError as exc:
                raise SingularResolvent(str(exc)) from exc
            out[lo:lo + _CHUNK] += model.C @ X
    if model.E is not None:
        out += s[:, None, None] * model.E
    return out


def eval_pole_residue_grid(pr: PoleResidueModel, s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, complex).ravel()
    m = pr.n_ports
    out = np.broadcast_to(pr.D, (len(s), m, m)).astype(complex)
    if pr.n_poles:
        out = out + np.einsum("kp,pij->kij", 1.0 / (s[:, None] - pr.poles[None, :]), pr.residues)
    if pr.E is not None:
        out = out + s[:, None, None] * pr.E
    return out


def similarity_transform(model: StateSpaceModel, T: np.ndarray) -> StateSpaceModel:
    """Change of state coordinates ``x -> T x``; impedance is unchanged."""
    T = np.asarray(T, float)
    n = model.n_states
    if T.shape != (n, n):
        raise DimensionMismatch(f"T must be {n}x{n}")
    if n == 0:
        return model
    if np.linalg.cond(T) > _COND_LIMIT:
        raise SingularTransform("transform is numerically singular")
    Ti = np.linalg.inv(T)
    return model.replace(A=T @ model.A @ Ti, B=T @ model.B, C=model.C @ Ti)


def companion_realization(numerator, denominator) -> StateSpaceModel:
    """Realize ``b(s) / (s^n + a_n s^(n-1) + ... + a_1)``.

    Coefficients are given lowest power first: ``b = [b_1, ..., b_n]`` means
    ``b_1 + b_2 s + ... + b_n s^(n-1)``, likewise ``a = [a_1, ..., a_n]``.
    """
    b = np.atleast_1d(np.asarray(numerator, float))
    a = np.atleast_1d(np.asarray(denominator, float))
    n = len(a)
    if n == 0:
        raise DegreeError("denominator must have degree >= 1")
    nz = np.flatnonzero(b)
    if len(b) > n and nz.size and nz[-1] >= n:
        raise DegreeError("numerator degree must be below denominator degree")
    b = np.concatenate([b, np.zeros(max(0, n - len(b)))])[:n]
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -a
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    if np.any(b):
        roots = np.roots(np.concatenate([[1.0], a[::-1]]))
        scale = np.abs(b).max() * np.maximum(1.0, np.abs(roots)) ** (n - 1)
        if np.any(np.abs(np.polyval(b[::-1], roots)) < 1e-10 * scale):
            warnings.warn("numerator and denominator share a common factor", RuntimeWarning)
    return StateSpaceModel(A=A, B=B, C=b.reshape(1, n), D=np.zeros((1, 1)))


def pole_residue_to_statespace(pr: PoleResidueModel, rank_tolerance: float = 1e-8) -> StateSpaceModel:
    """Real realization with residue compaction.

    Each residue is factored by SVD, keeping singular values above
    ``rank_tolerance * sigma_max``.  A real pole contributes one state per
    retained rank, a complex pair contributes a 2x2 block per retained rank.
    """
    m = pr.n_ports
    poles, res = pr.poles, pr.residues
    if np.any(poles.real >= 0):
        raise UnstablePole("pole-residue model has poles in the closed right half-plane")
    scale = max(1.0, np.abs(poles).max()) if len(poles) else 1.0
    used = np.zeros(len(poles), bool)
    blocks_A, blocks_B, blocks_C = [], [], []
    for k, p in enumerate(poles):
        if used[k]:
            continue
        used[k] = True
        R = res[k]
        if abs(p.imag) <= 1e-12 * scale:
            Rr = R.real
            U, sv, Vt = np.linalg.svd(Rr)
            keep = sv > rank_tolerance * sv[0] if sv[0] > 0 else np.zeros(0, bool)
            for i in np.flatnonzero(keep):
                blocks_A.append(np.array([[p.real]]))
                blocks_B.append(np.sqrt(sv[i]) * Vt[i:i + 1, :])
                blocks_C.append(np.sqrt(sv[i]) * U[:, i:i + 1])
            continue
        cand = np.flatnonzero(~used & (np.abs(poles - np.conj(p)) <= 1e-9 * scale))
        if cand.size == 0:
            raise UnstablePole(f"complex pole {p} has no conjugate partner")
        used[cand[0]] = True
        if p.imag < 0:
            p, R = np.conj(p), res[cand[0]]
        U, sv, Vh = np.linalg.svd(R)
        keep = sv > rank_tolerance * sv[0] if sv[0] > 0 else np.zeros(0, bool)
        sig, om = p.real, p.imag
        for i in np.flatnonzero(keep):
            u = np.sqrt(sv[i]) * U[:, i]
            v = np.sqrt(sv[i]) * Vh[i, :]
            blocks_A.append(np.array([[sig, om], [-om, sig]]))
            blocks_B.append(np.vstack([2 * v.real, -2 * v.imag]))
            blocks_C.append(np.column_stack([u.real, u.imag]))
    if blocks_A:
        from scipy.linalg import block_diag
        A = block_diag(*blocks_A)
        B = np.vstack(blocks_B)
        C = np.hstack(blocks_C)
    else:
        A, B, C = np.zeros((0, 0)), np.zeros((0, m)), np.zeros((m, 0))
    return StateSpaceModel(A=A, B=B, C=C, D=pr.D.copy(), E=None if pr.E is None else pr.E.copy())


# ---------------------------------------------------------------- PR check

def hermitian_part_grid(model: StateSpaceModel, omega: np.ndarray) -> np.ndarray:
    """Real symmetric part of ``Z(j w)`` on a grid via ``D - C A (w^2 I + A^2)^-1 B``."""
    w = np.asarray(omega, float).ravel()
    m, n = model.n_ports, model.n_states
    out = np.broadcast_to(model.D, (len(w), m, m)).copy()
    if n:
        eye = np.eye(n)
        A2 = model.A @ model.A
        CA = model.C @ model.A
        for lo in range(0, len(w), _CHUNK):
            wk = w[lo:lo + _CHUNK]
            M = (wk ** 2)[:, None, None] * eye + A2
            try:
                X = np.linalg.solve(M, np.broadcast_to(model.B, (len(wk), n, m)))
            except np.linalg.LinAlgError as exc:
                raise SingularResolvent(str(exc)) from exc
            out[lo:lo + _CHUNK] -= CA @ X
    return 0.5 * (out + out.transpose(0, 2, 1))


def hermitian_part(model: StateSpaceModel, omega: float) -> np.ndarray:
    """``Re Z_H(j w)`` as a real symmetric matrix."""
    if model.n_states:
        M = omega ** 2 * np.eye(model.n_states) + model.A @ model.A
        if np.linalg.cond(M) > _COND_LIMIT:
            raise SingularResolvent(f"w^2 I + A^2 singular at w={omega}")
    return hermitian_part_grid(model, np.array([omega]))[0]


def default_grid(model: StateSpaceModel, points: int = 2000, pad: float = 100.0) -> np.ndarray:
    """Log grid spanning the pole magnitudes of ``A`` widened by ``pad`` each side."""
    if model.n_states == 0:
        return np.logspace(-3, 3, max(points, 2))
    mag = np.abs(model.poles())
    hi = mag.max() * pad
    pos = mag[mag > 1e-14 * max(hi, 1.0)]
    lo = pos.min() / pad if pos.size else hi * 1e-8
    return np.logspace(np.log10(lo), np.log10(hi), points)


def is_reciprocal(model: StateSpaceModel, grid: np.ndarray | None = None, tol: float = 1e-8) -> bool:
    if model.n_ports == 1:
        return True
    g = default_grid(model, 200) if grid is None else grid
    Z = eval_impedance_grid(model, 1j * g)
    Z = np.concatenate([Z, model.D[None].astype(complex)])
    asym = np.linalg.norm(Z - Z.transpose(0, 2, 1), axis=(1, 2)).max()
    return bool(asym <= tol * max(np.linalg.norm(Z, axis=(1, 2)).max(), 1e-300))


def check_positive_real(model: StateSpaceModel, grid: np.ndarray | None = None,
                        tolerance: float | None = None, points: int = 2000) -> PrReport:
    """Grid surrogate for the positive-real property.

    Stability is decided from the eigenvalues of ``A``; passivity from the
    smallest eigenvalue of the Hermitian part ``(Z + Z^H)/2`` over ``grid``
    and of ``D + D^T``.  ``tolerance`` defaults to ``1e-9`` times the largest
    Hermitian-part norm seen on the grid.
    """
    w = default_grid(model, points) if grid is None else np.asarray(grid, float).ravel()
    if w.size == 0:
        raise DimensionMismatch("empty frequency grid")
    stable = model.is_stable()
    dd = float(np.linalg.eigvalsh(model.D + model.D.T).min())
    e_psd = True
    if model.E is not None:
        Es = 0.5 * (model.E + model.E.T)
        e_psd = bool(np.linalg.eigvalsh(Es).min() >= -1e-12 * max(np.abs(Es).max(), 1e-300))
    if not stable:
        return PrReport(False, float("nan"), float("nan"), dd, PrVerdict.NOT_PR,
                        float("nan"), e_psd, {"reason": "unstable"})
    Z = eval_impedance_grid(model, 1j * w)
    ZH = 0.5 * (Z + np.conj(Z.transpose(0, 2, 1)))
    eig = np.linalg.eigvalsh(ZH)
    mins = eig[:, 0]
    k = int(np.argmin(mins))
    zh_scale = max(np.abs(eig).max(), 0.5 * np.abs(dd))
    z_scale = np.linalg.norm(Z, ord=2, axis=(1, 2)).max()
    if tolerance is None:
        tolerance = 1e-9 * zh_scale + 1e-12 * z_scale
    mn = float(mins[k])
    ok = mn >= -tolerance and dd >= -2 * tolerance and e_psd
    if ok:
        verdict = PrVerdict.PR
    elif e_psd and mn >= -100 * tolerance and dd >= -200 * tolerance:
        verdict = PrVerdict.MARGINAL
    else:
        verdict = PrVerdict.NOT_PR
    return PrReport(True, mn, float(w[k]), dd, verdict, float(tolerance), e_psd)


# ------------------------------------------------- Hermitian-part minimum

@dataclass(frozen=True)
class HermitianMinimum:
    """Global minimum of ``lambda_min(Z_H(jw))`` over ``w`` in ``[0, inf]``."""

    value: float
    omega: float
    value_at_inf: float
    value_at_zero: float

    @property
    def kind(self) -> str:
        if np.isinf(self.omega):
            return "infinite"
        return "zero" if self.omega == 0.0 else "finite"


def level_crossings(model: StateSpaceModel, rho: float, rel_axis_tol: float = 1e-6) -> np.ndarray:
    """Frequencies ``w > 0`` where ``Z_H(jw) - rho I`` is singular.

    They are the imaginary-axis zeros of ``Z(s) + Z^T(-s) - 2 rho I``, found as
    eigenvalues of the associated Hamiltonian matrix.
    """
    n, m = model.n_states, model.n_ports
    if n == 0:
        return np.zeros(0)
    Dg = model.D + model.D.T - 2.0 * rho * np.eye(m)
    if np.linalg.cond(Dg) > 1e13:
        return np.zeros(0)
    Ag = np.zeros((2 * n, 2 * n))
    Ag[:n, :n] = model.A
    Ag[n:, n:] = -model.A.T
    Bg = np.vstack([model.B, model.C.T])
    Cg = np.hstack([model.C, -model.B.T])
    H = Ag - Bg @ np.linalg.solve(Dg, Cg)
    ev = np.linalg.eigvals(H)
    on_axis = (np.abs(ev.real) <= rel_axis_tol * np.abs(ev)) & (ev.imag > 0)
    return np.unique(ev.imag[on_axis])


def _lmin(model: StateSpaceModel, w: np.ndarray) -> np.ndarray:
    H = hermitian_part_grid(model, w)
    return H[:, 0, 0] if model.n_ports == 1 else np.linalg.eigvalsh(H)[:, 0]


def _lmin_slope(model: StateSpaceModel, w: float) -> float:
    """Sign-carrying derivative of ``lambda_min`` at ``w`` (positive factor 2w dropped)."""
    n = model.n_states
    M = w * w * np.eye(n) + model.A @ model.A
    G = model.C @ model.A @ np.linalg.solve(M, np.linalg.solve(M, model.B))
    G = 0.5 * (G + G.T)
    if model.n_ports == 1:
        return float(G[0, 0])
    _, U = np.linalg.eigh(hermitian_part_grid(model, np.array([w]))[0])
    u = U[:, 0]
    return float(u @ G @ u)


def _slope_root(model: StateSpaceModel, w: float) -> float | None:
    from scipy.optimize import brentq

    for f in (1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3):
        a, b = w * (1 - f), w * (1 + f)
        try:
            if _lmin_slope(model, a) < 0 < _lmin_slope(model, b):
                return float(brentq(lambda x: _lmin_slope(model, x), a, b, xtol=1e-300, rtol=1e-15))
        except (ValueError, np.linalg.LinAlgError):
            return None
    return None


def _richardson_midpoint(model: StateSpaceModel, w: float, v: float, h: float,
                         levels: int) -> tuple[float, float] | None:
    try:
        eps0 = float(_lmin(model, np.array([w * (1 - h), w * (1 + h)])).min()) - v
    except (SingularResolvent, np.linalg.LinAlgError):
        return None
    if not eps0 > 0:
        return None
    mids = []
    for i in range(levels):
        x = level_crossings(model, v + eps0 / 4**i)
        lo, hi = x[x < w], x[x > w]
        if not lo.size or not hi.size:
            break
        mids.append(0.5 * (lo.max() + hi.min()))
    if len(mids) < 3:
        return None
    R = np.array(mids)
    k = 1
    while R.size > 2:
        R = (4**k * R[1:] - R[:-1]) / (4**k - 1)
        k += 1
    r = (4**k * R[1] - R[0]) / (4**k - 1)
    return float(r), float(abs(r - R[1]))


def _refine_by_crossings(model: StateSpaceModel, w: float, v: float,
                         levels: int = 4) -> float | None:
    """Sharpen the minimizer of a dip.

    For a level ``v + eps`` the two crossings around the dip have a midpoint
    ``w1 + O(eps)``; Richardson extrapolation over ``eps, eps/4, ...`` removes
    the leading terms.  The crossings come from a backward-stable eigenvalue
    problem, so this is not limited by cancellation in ``lambda_min`` itself.
    Several starting offsets are tried and the one with the smallest
    extrapolation error estimate wins.
    """
    if not np.isfinite(w) or w <= 0:
        return None
    best: tuple[float, float] | None = None
    for h in (3e-3, 1e-3, 3e-4, 1e-4, 3e-5):
        out = _richardson_midpoint(model, w, v, h, levels)
        if out is not None and abs(out[0] - w) <= h * w and (best is None or out[1] < best[1]):
            best = out
    return None if best is None else best[0]


def minimize_hermitian_eig(model: StateSpaceModel, points: int = 4000, pad: float = 100.0,
                           max_iter: int = 60) -> HermitianMinimum:
    """Global minimum of the smallest eigenvalue of the Hermitian part.

    A log grid provides a starting level; level-set iteration on the
    Hamiltonian crossings then finds dips narrower than the grid spacing.  The
    minimizer is polished by a root of the derivative, or by crossing-midpoint
    extrapolation when no sign change brackets the root.  Values within the
    evaluation noise of the incumbent are accepted.
    """
    from scipy.optimize import minimize_scalar

    Dh = 0.5 * (model.D + model.D.T)
    v_inf = float(np.linalg.eigvalsh(Dh)[0])
    if model.n_states == 0:
        return HermitianMinimum(v_inf, np.inf, v_inf, v_inf)
    try:
        v_zero = float(_lmin(model, np.array([0.0]))[0])
        if not np.isfinite(v_zero):
            raise SingularResolvent("A is singular")
    except (SingularResolvent, np.linalg.LinAlgError):
        v_zero = np.inf
    w = default_grid(model, points, pad)
    h = _lmin(model, w)
    scale = max(np.abs(h).max(), abs(v_inf), 1e-300)
    k = int(np.argmin(h))
    best_v, best_w = float(h[k]), float(w[k])
    for _ in range(max_iter):
        level = min(best_v, v_inf - 1e-9 * scale)
        seeds = level_crossings(model, level)
        if seeds.size == 0:
            break
        seeds = np.sort(seeds)
        cand = np.concatenate([seeds, np.sqrt(seeds[1:] * seeds[:-1])])
        vals = _lmin(model, cand)
        j = int(np.argmin(vals))
        if vals[j] < best_v - 1e-15 * scale:
            best_v, best_w = float(vals[j]), float(cand[j])
        else:
            break
    # local polish around the incumbent
    lo, hi = best_w * (1 - 1e-3), best_w * (1 + 1e-3)
    if k in (0, len(w) - 1) and best_w == w[k]:
        lo, hi = (w[max(k - 1, 0)], w[min(k + 1, len(w) - 1)])
    res = minimize_scalar(lambda x: _lmin(model, np.array([np.exp(x)]))[0],
                          bounds=(np.log(lo), np.log(hi)), method="bounded",
                          options={"xatol": 1e-12})
    if res.fun < best_v:
        best_v, best_w = float(res.fun), float(np.exp(res.x))
    refined = _slope_root(model, best_w) if np.isfinite(best_w) and best_w > 0 else None
    if refined is None:
        refined = _refine_by_crossings(model, best_w, best_v)
    if refined is not None:
        vr = float(_lmin(model, np.array([refined]))[0])
        if vr <= best_v + 1e-8 * scale:
            best_v, best_w = vr, refined
    gap = 1e-9 * scale
    if best_v >= v_inf - gap or (best_w >= w[-1] and best_v >= v_inf - 1e-6 * scale):
        best_v, best_w = v_inf, np.inf
    if v_zero < best_v - gap:
        best_v, best_w = v_zero, 0.0
    return HermitianMinimum(best_v, best_w, v_inf, v_zero)
