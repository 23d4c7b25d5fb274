"""Rational fitting of sampled impedance matrices and passivity enforcement.

``vector_fit`` is relaxed vector fitting with a real-valued basis: a common
set of poles is relocated iteratively from the zeros of a weighting
function, then residues, ``D`` and optionally ``E`` are solved for all matrix
entries at once.  ``enforce_passivity`` perturbs residues and ``D`` (never the
poles) by the smallest weighted amount that lifts the Hermitian part to a
non-negative spectrum on a check grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    EmptyInput,
    EnforcementFailure,
    IllConditioned,
    UnstablePole,
    ValidationError,
)
from .model_core import (
    FrequencySamples,
    PoleResidueModel,
    StateSpaceModel,
    eval_impedance_grid,
    eval_pole_residue_grid,
)

__all__ = [
    "VectorFitConfig",
    "FitError",
    "PassivityResult",
    "initial_poles",
    "vector_fit",
    "enforce_passivity",
    "fit_error",
]

_COND_LIMIT = 1e15


@dataclass(frozen=True)
class VectorFitConfig:
    n_iterations: int = 30
    fit_e: bool = False
    symmetric: bool | None = None    # None: decide from the data
    relax: bool = True
    tol: float = 1e-13               # stop when the relative pole change is below this
    quality: float = 100.0


@dataclass(frozen=True)
class FitError:
    rms: float
    max_rel: float
    per_frequency: np.ndarray


@dataclass(frozen=True)
class PassivityResult:
    model: PoleResidueModel
    perturbation_norm: float
    iterations: int
    min_eig_before: float
    min_eig_after: float

    @property
    def changed(self) -> bool:
        return self.perturbation_norm > 0


# -------------------------------------------------------------- utilities

def initial_poles(omega: np.ndarray, n_poles: int, quality: float = 100.0) -> np.ndarray:
    """Log-spaced lightly damped pairs over the band, plus one real pole if odd."""
    w = np.asarray(omega, float)
    pos = w[w > 0]
    lo, hi = (pos.min(), pos.max()) if pos.size else (1.0, 10.0)
    if hi <= lo:
        hi = lo * 10
    n_pairs = n_poles // 2
    beta = np.logspace(np.log10(lo), np.log10(hi), n_pairs) if n_pairs else np.zeros(0)
    p = []
    for b in beta:
        p += [complex(-b / quality, b), complex(-b / quality, -b)]
    if n_poles % 2:
        p.append(complex(-np.sqrt(lo * hi), 0.0))
    return np.array(p, complex)


def _sort_poles(p: np.ndarray) -> np.ndarray:
    """Real poles first, then pairs ordered (+imag, -imag)."""
    scale = max(1.0, np.abs(p).max(initial=0.0))
    real = np.sort(p[np.abs(p.imag) <= 1e-12 * scale].real).astype(complex)
    upper = p[p.imag > 1e-12 * scale]
    upper = upper[np.argsort(np.abs(upper))]
    out = list(real)
    for q in upper:
        out += [q, np.conj(q)]
    return np.array(out, complex)


def _basis(s: np.ndarray, poles: np.ndarray) -> tuple[np.ndarray, list]:
    """Real-valued partial-fraction basis, shape ``(K, n)``, and a pole map."""
    scale = max(1.0, np.abs(poles).max(initial=0.0))
    cols, kinds = [], []
    k = 0
    while k < len(poles):
        p = poles[k]
        if abs(p.imag) <= 1e-12 * scale:
            cols.append(1.0 / (s - p.real))
            kinds.append(("r", k))
            k += 1
        else:
            a, b = 1.0 / (s - p), 1.0 / (s - np.conj(p))
            cols += [a + b, 1j * a - 1j * b]
            kinds += [("c1", k), ("c2", k)]
            k += 2
    Phi = np.column_stack(cols) if cols else np.zeros((len(s), 0), complex)
    return Phi, kinds


def _realify(M: np.ndarray) -> np.ndarray:
    return np.concatenate([M.real, M.imag], axis=0)


def _zeros_of_sigma(poles: np.ndarray, kinds: list, ct: np.ndarray, dt: float) -> np.ndarray:
    n = len(poles)
    A = np.zeros((n, n))
    b = np.zeros(n)
    for i, (kind, k) in enumerate(kinds):
        p = poles[k]
        if kind == "r":
            A[i, i] = p.real
            b[i] = 1.0
        elif kind == "c1":
            A[i:i + 2, i:i + 2] = [[p.real, p.imag], [-p.imag, p.real]]
            b[i] = 2.0
    return np.linalg.eigvals(A - np.outer(b, ct) / dt)


def _entries(symmetric: bool, m: int) -> list[tuple[int, int]]:
    if symmetric:
        return [(i, j) for i in range(m) for j in range(i, m)]
    return [(i, j) for i in range(m) for j in range(m)]


def _detect_symmetric(values: np.ndarray) -> bool:
    if values.shape[1] == 1:
        return True
    asym = np.abs(values - values.transpose(0, 2, 1)).max()
    return bool(asym <= 1e-8 * max(np.abs(values).max(), 1e-300))


def _lstsq(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Column-scaled least squares; returns solution and the condition number."""
    nrm = np.linalg.norm(A, axis=0)
    nrm[nrm == 0] = 1.0
    As = A / nrm
    x, _, _, sv = np.linalg.lstsq(As, b, rcond=None)
    cond = sv[0] / sv[-1] if sv.size and sv[-1] > 0 else np.inf
    return (x.T / nrm).T, float(cond)


# ---------------------------------------------------------- vector fitting

def _relocate(s, H, weights, poles, cfg: VectorFitConfig) -> tuple[np.ndarray, float]:
    """One pole-relocation step over all entries; returns new poles and residual."""
    Phi, kinds = _basis(s, poles)
    n = Phi.shape[1]
    K, ne = H.shape
    ones = np.ones((K, 1))
    blocks = [Phi, ones] + ([s[:, None]] if cfg.fit_e else [])
    Pd = np.hstack(blocks)
    nd = Pd.shape[1]
    rows_A, rows_b = [], []
    # eliminate each entry's own unknowns by QR and keep the sigma part
    n_sig = n + 1 if cfg.relax else n
    for e in range(ne):
        w = weights[:, e][:, None]
        h = H[:, e][:, None]
        left = w * Pd
        right = -w * h * (np.hstack([Phi, ones]) if cfg.relax else Phi)
        Ab = _realify(np.hstack([left, right]))
        bb = _realify((w * h).ravel() if not cfg.relax else np.zeros(K, complex))
        Q, R = np.linalg.qr(np.column_stack([Ab, bb]), mode="reduced")
        rows_A.append(R[nd:nd + n_sig, nd:nd + n_sig])
        rows_b.append(R[nd:nd + n_sig, -1])
    A = np.vstack(rows_A)
    b = np.concatenate(rows_b)
    if cfg.relax:
        # normalization: Re sum_k sigma(s_k) = K, scaled to the data
        row = np.concatenate([np.sum(Phi, axis=0).real, [K]])
        scale = np.linalg.norm(weights * H) / K
        A = np.vstack([A, scale * row])
        b = np.concatenate([b, [scale * K]])
    x, cond = _lstsq(A, b)
    if cond > _COND_LIMIT:
        raise IllConditioned(f"pole identification system has condition {cond:.2e}")
    if cfg.relax:
        ct, dt = x[:n], float(x[n])
        if abs(dt) < 1e-8:
            return _relocate(s, H, weights, poles, VectorFitConfig(**{**cfg.__dict__, "relax": False}))
    else:
        ct, dt = x, 1.0
    resid = float(np.linalg.norm(A @ x - b))
    z = _zeros_of_sigma(poles, kinds, ct, dt)
    z = np.where(z.real > 0, -z.real + 1j * z.imag, z)
    # exact zeros on the imaginary axis cannot be represented; nudge them
    z = np.where(z.real == 0, -1e-12 * max(np.abs(z).max(), 1.0) + 1j * z.imag, z)
    return _sort_poles(z), resid


def _residues(s, H, weights, poles, cfg: VectorFitConfig):
    Phi, kinds = _basis(s, poles)
    n = Phi.shape[1]
    K, ne = H.shape
    cols = [Phi, np.ones((K, 1))] + ([s[:, None]] if cfg.fit_e else [])
    P = np.hstack(cols)
    X = np.zeros((P.shape[1], ne))
    for e in range(ne):
        w = weights[:, e][:, None]
        x, cond = _lstsq(_realify(w * P), _realify((w[:, 0] * H[:, e])))
        if cond > _COND_LIMIT:
            raise IllConditioned(f"residue identification system has condition {cond:.2e}")
        X[:, e] = x
    res = np.zeros((len(poles), ne), complex)
    for i, (kind, k) in enumerate(kinds):
        if kind == "r":
            res[k] = X[i]
        elif kind == "c1":
            res[k] = X[i] + 1j * X[i + 1]
            res[k + 1] = X[i] - 1j * X[i + 1]
    d = X[n]
    e_ = X[n + 1] if cfg.fit_e else None
    return res, d, e_


def _assemble(poles, res, d, e_, entries, m) -> PoleResidueModel:
    R = np.zeros((len(poles), m, m), complex)
    D = np.zeros((m, m))
    E = np.zeros((m, m)) if e_ is not None else None
    mirror = len(entries) < m * m
    for idx, (i, j) in enumerate(entries):
        pairs = ((i, j), (j, i)) if mirror else ((i, j),)
        for a, b in pairs:
            R[:, a, b] = res[:, idx]
            D[a, b] = d[idx]
            if E is not None:
                E[a, b] = e_[idx]
    return PoleResidueModel(poles, R, D, E)


def vector_fit(samples: FrequencySamples, n_poles: int, n_iterations: int | None = None,
               initial: np.ndarray | None = None,
               config: VectorFitConfig | None = None) -> PoleResidueModel:
    """Fit ``samples`` with ``n_poles`` common stable poles.

    The fit is symmetric (upper triangle fitted, then mirrored) when the data
    are symmetric to ``1e-8`` relative.  Poles that land in the right
    half-plane are reflected after every relocation.
    """
    cfg = config or VectorFitConfig()
    if n_iterations is not None:
        cfg = VectorFitConfig(**{**cfg.__dict__, "n_iterations": n_iterations})
    if not isinstance(samples, FrequencySamples):
        raise ValidationError("samples must be FrequencySamples")
    if n_poles < 0:
        raise ValidationError("n_poles must be >= 0")
    K = len(samples)
    if K < 2:
        raise EmptyInput("at least two frequencies are needed")
    if n_poles > 2 * K:
        raise ValidationError(f"n_poles={n_poles} exceeds twice the sample count {K}")
    m = samples.n_ports
    sym = _detect_symmetric(samples.values) if cfg.symmetric is None else cfg.symmetric
    entries = _entries(sym, m)
    s = 1j * samples.omega
    H = np.column_stack([samples.values[:, i, j] for i, j in entries])
    weights = 1.0 / np.maximum(np.linalg.norm(samples.values, axis=(1, 2)), 1e-300)[:, None] \
        * np.ones((1, H.shape[1]))

    if n_poles == 0:
        res, d, e_ = _residues(s, H, weights, np.zeros(0, complex), cfg)
        return _assemble(np.zeros(0, complex), res, d, e_, entries, m)

    poles = initial_poles(samples.omega, n_poles, cfg.quality) if initial is None \
        else np.asarray(initial, complex)
    if len(poles) != n_poles:
        raise ValidationError("initial poles do not match n_poles")
    poles = _sort_poles(np.where(poles.real > 0, -np.conj(poles), poles))
    history: list[float] = []
    growth = 0
    for _ in range(cfg.n_iterations):
        new, resid = _relocate(s, H, weights, poles, cfg)
        if history and resid > 1.1 * history[-1] and resid > 1e-8 * np.linalg.norm(weights * H):
            growth += 1
            if growth >= 3:
                raise ConvergenceFailure("pole relocation residual grew in three consecutive iterations")
        else:
            growth = 0
        history.append(resid)
        change = np.abs(new - poles).max() / max(np.abs(poles).max(), 1e-300)
        poles = new
        if change < cfg.tol:
            break
    if np.any(poles.real >= 0):
        raise UnstablePole("relocation produced an unstable pole")
    res, d, e_ = _residues(s, H, weights, poles, cfg)
    return _assemble(poles, res, d, e_, entries, m)


# ------------------------------------------------------------ error metric

def _eval(model, omega: np.ndarray) -> np.ndarray:
    if isinstance(model, PoleResidueModel):
        return eval_pole_residue_grid(model, 1j * omega)
    if isinstance(model, StateSpaceModel):
        return eval_impedance_grid(model, 1j * omega)
    raise ValidationError(f"cannot evaluate {type(model).__name__}")


def fit_error(samples: FrequencySamples, model: PoleResidueModel | StateSpaceModel) -> FitError:
    """RMS of the Frobenius error and the largest relative Frobenius error."""
    if model.n_ports != samples.n_ports:
        raise DimensionMismatch(f"model has {model.n_ports} ports, samples have {samples.n_ports}")
    Z = _eval(model, samples.omega)
    err = np.linalg.norm(Z - samples.values, axis=(1, 2))
    ref = np.linalg.norm(samples.values, axis=(1, 2))
    rel = err / np.maximum(ref, 1e-300)
    return FitError(float(np.sqrt(np.mean(err ** 2))), float(rel.max()), rel)


# ---------------------------------------------------- passivity enforcement

def _sym_units(m: int) -> list[np.ndarray]:
    out = []
    for i in range(m):
        for j in range(i, m):
            E = np.zeros((m, m))
            E[i, j] = E[j, i] = 1.0
            out.append(E)
    return out


def _param_functions(poles: np.ndarray, omega: np.ndarray) -> tuple[np.ndarray, list]:
    """Scalar frequency functions of the perturbation basis (``D`` first)."""
    finite = np.isfinite(omega)
    s = 1j * np.where(finite, omega, 0.0)
    cols, kinds = [np.ones(len(omega), complex)], [("d", -1)]
    Phi, pk = _basis(s, poles)
    Phi[~finite] = 0.0
    for c in range(Phi.shape[1]):
        cols.append(Phi[:, c])
        kinds.append(pk[c])
    return np.column_stack(cols), kinds


def _hermitian_eigs(pr: PoleResidueModel, omega: np.ndarray):
    finite = np.isfinite(omega)
    Z = np.empty((len(omega), pr.n_ports, pr.n_ports), complex)
    Z[finite] = eval_pole_residue_grid(pr, 1j * omega[finite])
    Z[~finite] = pr.D
    ZH = 0.5 * (Z + np.conj(Z.transpose(0, 2, 1)))
    return np.linalg.eigh(ZH)


def _violation_points(lam: np.ndarray, tol: float) -> np.ndarray:
    """Local minima of ``lambda_min`` inside each violating band."""
    bad = lam[:, 0] < -tol
    out = []
    k = 0
    while k < len(bad):
        if bad[k]:
            j = k
            while j + 1 < len(bad) and bad[j + 1]:
                j += 1
            seg = lam[k:j + 1, 0]
            out.append(k + int(np.argmin(seg)))
            out += [k, j]
            k = j + 1
        else:
            k += 1
    return np.unique(np.array(out, int))


def _least_distance(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Shortest ``y`` with ``A y >= b`` (Lawson-Hanson LDP through NNLS)."""
    nrm = np.maximum(np.linalg.norm(A, axis=1), 1e-300)
    A, b = A / nrm[:, None], b / nrm
    n = A.shape[1]
    E = np.vstack([A.T, b[None, :]])
    f = np.zeros(n + 1)
    f[-1] = 1.0
    u = nnls(E, f, maxiter=50 * E.shape[1])[0]
    r = E @ u - f
    if abs(r[-1]) < 1e-12:
        raise EnforcementFailure("linearized passivity constraints are incompatible")
    return -r[:n] / r[-1]


def enforce_passivity(pr: PoleResidueModel, grid: np.ndarray | None = None,
                      max_iterations: int = 50, margin: float = 1e-9) -> PassivityResult:
    """Lift ``lambda_min(Z_H(jw))`` to ``>= 0`` on ``grid`` (plus ``w = inf``).

    The worst point of every violating band joins a growing set of constraint
    frequencies.  Each pass linearizes the small eigenvalues at all of them and
    takes the symmetric perturbation of ``D`` and the residues with the least
    weighted norm (basis functions weighted by their size on the grid) that
    keeps those eigenvalues at or above ``margin`` times the model scale.  A
    model without violations is returned unchanged.
    """
    if pr.n_poles and np.any(pr.poles.real >= 0):
        raise UnstablePole("passivity enforcement needs a stable model")
    m = pr.n_ports
    if grid is None:
        mag = np.abs(pr.poles) if pr.n_poles else np.array([1.0])
        grid = np.logspace(np.log10(mag.min() / 100), np.log10(mag.max() * 100), 4000)
    w = np.concatenate([[0.0], np.asarray(grid, float).ravel(), [np.inf]])
    w = np.unique(w)
    lam, U = _hermitian_eigs(pr, w)
    scale = max(np.abs(lam).max(), 1e-300)
    tol = 1e-13 * scale
    floor = margin * scale
    min_before = float(lam[:, 0].min())
    F, kinds = _param_functions(pr.poles, w)
    wts = np.sqrt(np.mean(np.abs(F[np.isfinite(w)]) ** 2, axis=0))
    wts[wts == 0] = 1.0
    units = _sym_units(m)
    W = np.repeat(wts, len(units))
    total = np.zeros(F.shape[1] * len(units))
    cur = pr
    active: set[int] = set()
    it = 0
    for it in range(1, max_iterations + 1):
        pts = _violation_points(lam, tol)
        if pts.size == 0:
            it -= 1
            break
        active.update(int(k) for k in pts)
        rows, rhs = [], []
        for k in sorted(active):
            for q in range(m):
                if lam[k, q] > 2 * floor + tol:
                    break
                u = U[k, :, q]
                rows.append([F[k, c].real * float(np.real(np.conj(u) @ E @ u))
                             for c in range(F.shape[1]) for E in units])
                rhs.append(floor - lam[k, q])
        G = np.array(rows)
        # increment d = total' - total must satisfy G d >= rhs; solve for y = W total'
        total = _least_distance(G / W, np.array(rhs) + G @ total) / W
        cur = _apply(pr, total, kinds, units)
        lam, U = _hermitian_eigs(cur, w)
    else:
        if _violation_points(lam, tol).size:
            raise EnforcementFailure(
                f"violations remain after {max_iterations} iterations (min eig {lam[:, 0].min():.3e})")
    norm = float(np.linalg.norm(total * W))
    return PassivityResult(cur if norm > 0 else pr, norm, it, min_before, float(lam[:, 0].min()))


def _apply(pr: PoleResidueModel, x: np.ndarray, kinds: list, units: list) -> PoleResidueModel:
    nu = len(units)
    D = pr.D.copy()
    R = pr.residues.copy()
    for c, (kind, k) in enumerate(kinds):
        dM = sum(x[c * nu + i] * units[i] for i in range(nu))
        if kind == "d":
            D = D + dM
        elif kind == "r":
            R[k] = R[k] + dM
        elif kind == "c1":
            R[k] = R[k] + dM
            R[k + 1] = R[k + 1] + dM
        else:
            R[k] = R[k] + 1j * dM
            R[k + 1] = R[k + 1] - 1j * dM
    return PoleResidueModel(pr.poles, R, D, pr.E)
