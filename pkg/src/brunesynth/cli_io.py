"""File formats and the command-line driver.

Inputs are Touchstone version-1 S-parameter files and Z-CSV tables (header
``omega_rad_s,re_11,re_12,...,im_11,...`` with entries in row-major order).
Models are stored as JSON.  Circuits are written as a text netlist whose
ideal transformers appear as ``K`` records, and the report is a JSON document
whose stage rows follow the usual Brune parameter table.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .brune_multiport import (
    BelevitchTransformer,
    MultiportBruneCircuit,
    MultiportBruneStage,
    recompose_multiport,
    synthesize_multiport,
)
from .brune_oneport import (
    OnePortBruneCircuit,
    OnePortBruneStage,
    SynthesisConfig,
    impedance_error,
    recompose_oneport,
    synthesize_oneport,
)
from .errors import (
    BruneError,
    DimensionMismatch,
    NotPR,
    NumericalError,
    ParseError,
    SingularConversion,
    UnsupportedFormat,
    ValidationError,
    ZeroFrequency,
)
from .fitting import enforce_passivity, fit_error, vector_fit
from .loop_matrices import JosephsonJunction, PortTermination, Resistor, VoltageSource
from .model_core import (
    FrequencySamples,
    PoleResidueModel,
    PrVerdict,
    StateSpaceModel,
    check_positive_real,
    default_grid,
    hermitian_part_grid,
    pole_residue_to_statespace,
)

__all__ = [
    "TouchstoneData",
    "parse_touchstone",
    "write_touchstone",
    "s_to_z",
    "parse_zcsv",
    "write_zcsv",
    "save_model",
    "load_model",
    "export_netlist",
    "parse_netlist",
    "build_report",
    "export_report",
    "parse_terminations",
    "cli",
    "main",
]

REPORT_SCHEMA = "brunesynth-report/1"
T1_LABEL = "harmonic-approximation"


# --------------------------------------------------------------- touchstone

@dataclass(frozen=True)
class TouchstoneData:
    omega: np.ndarray
    S: np.ndarray
    z0: float
    parameter: str = "S"


_FREQ_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}


def _ports_from_name(path: Path) -> int | None:
    m = re.search(r"\.s(\d+)p$", path.name, re.IGNORECASE)
    return int(m.group(1)) if m else None


def parse_touchstone(path: str | Path, n_ports: int | None = None) -> TouchstoneData:
    """Read a version-1 Touchstone file; frequencies are returned in rad/s.

    Two-port records are ordered ``S11 S21 S12 S22``; all other port counts
    are row-major and may wrap over several lines.
    """
    path = Path(path)
    N = n_ports or _ports_from_name(path)
    if N is None:
        raise ValidationError(f"cannot infer the port count of {path.name}; pass n_ports")
    text = path.read_text()
    unit, param, fmt, z0 = "GHZ", "S", "MA", 50.0
    seen_option = False
    tokens: list[tuple[float, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            raise UnsupportedFormat(f"line {lineno}: Touchstone version 2 keywords are not supported")
        if line.startswith("#"):
            if seen_option:
                continue
            seen_option = True
            words = line[1:].upper().split()
            i = 0
            while i < len(words):
                w = words[i]
                if w in _FREQ_UNITS:
                    unit = w
                elif w in ("S", "Y", "Z", "H", "G"):
                    param = w
                elif w in ("RI", "MA", "DB"):
                    fmt = w
                elif w == "R":
                    if i + 1 >= len(words):
                        raise ParseError("R without a value", lineno)
                    try:
                        z0 = float(words[i + 1])
                    except ValueError:
                        raise ParseError(f"bad reference impedance {words[i + 1]!r}", lineno) from None
                    i += 1
                else:
                    raise ParseError(f"unknown option {w!r}", lineno)
                i += 1
            continue
        for tok in line.split():
            try:
                tokens.append((float(tok), lineno))
            except ValueError:
                raise ParseError(f"not a number: {tok!r}", lineno) from None
    if param not in ("S", "Z"):
        raise UnsupportedFormat(f"parameter type {param} is not supported")
    per = 1 + 2 * N * N
    if not tokens:
        raise ParseError("no data records", len(text.splitlines()) or 1)
    if len(tokens) % per:
        raise ParseError(f"incomplete record: {len(tokens)} values is not a multiple of {per}",
                         tokens[-1][1])
    vals = np.array([t for t, _ in tokens]).reshape(-1, per)
    freq = vals[:, 0] * _FREQ_UNITS[unit]
    a, b = vals[:, 1::2], vals[:, 2::2]
    if fmt == "RI":
        z = a + 1j * b
    elif fmt == "MA":
        z = a * np.exp(1j * np.deg2rad(b))
    else:
        z = 10 ** (a / 20) * np.exp(1j * np.deg2rad(b))
    M = z.reshape(-1, N, N)
    if N == 2:
        M = M.transpose(0, 2, 1)
    if np.any(np.diff(freq) <= 0):
        bad = int(np.flatnonzero(np.diff(freq) <= 0)[0]) + 1
        raise ParseError("frequencies must increase strictly", tokens[bad * per][1])
    return TouchstoneData(2 * np.pi * freq, M, z0, param)


def write_touchstone(path: str | Path, omega: np.ndarray, S: np.ndarray, z0: float = 50.0) -> None:
    """Write RI data in Hz; used for fixtures and sample files."""
    S = np.asarray(S, complex)
    N = S.shape[1]
    lines = [f"! {N}-port scattering data", f"# HZ S RI R {z0!r}"]
    for w, M in zip(np.asarray(omega, float), S):
        M = M.T if N == 2 else M
        vals = [repr(float(w) / (2 * np.pi))]
        for k, x in enumerate(M.ravel()):
            vals += [repr(float(x.real)), repr(float(x.imag))]
        if N <= 2:
            lines.append(" ".join(vals))
        else:
            lines.append(" ".join(vals[:1 + 2 * N]))
            for r in range(1, N):
                lines.append(" ".join(vals[1 + 2 * N * r:1 + 2 * N * (r + 1)]))
    Path(path).write_text("\n".join(lines) + "\n")


def s_to_z(S: np.ndarray, z0: float = 50.0) -> np.ndarray:
    """``Z = sqrt(z0) (I + S)(I - S)^-1 sqrt(z0)`` for one matrix or a stack."""
    S = np.asarray(S, complex)
    single = S.ndim == 2
    St = S[None] if single else S
    N = St.shape[1]
    eye = np.eye(N)
    Z = np.empty_like(St)
    for k, M in enumerate(St):
        A = eye - M
        if np.linalg.cond(A) > 1e12:
            raise SingularConversion("I - S is singular (total reflection)")
        Z[k] = z0 * np.linalg.solve(A.T, (eye + M).T).T
    return Z[0] if single else Z


# -------------------------------------------------------------------- zcsv

def _zcsv_header(N: int) -> list[str]:
    idx = [f"{i + 1}{j + 1}" for i in range(N) for j in range(N)]
    return ["omega_rad_s"] + [f"re_{s}" for s in idx] + [f"im_{s}" for s in idx]


def write_zcsv(path: str | Path, omega: np.ndarray, Z: np.ndarray) -> None:
    Z = np.asarray(Z, complex)
    N = Z.shape[1]
    rows = [",".join(_zcsv_header(N))]
    for w, M in zip(np.asarray(omega, float), Z):
        flat = M.ravel()
        rows.append(",".join([repr(float(w))] + [repr(float(x)) for x in flat.real]
                             + [repr(float(x)) for x in flat.imag]))
    Path(path).write_text("\n".join(rows) + "\n")


def parse_zcsv(path: str | Path) -> FrequencySamples:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ParseError("empty file", 1)
    head = [h.strip() for h in lines[0].split(",")]
    n2 = (len(head) - 1) // 2
    N = int(round(math.sqrt(n2)))
    if N * N != n2 or head != _zcsv_header(N):
        raise ParseError("header must be omega_rad_s,re_ij...,im_ij... in row-major order", 1)
    data = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(head):
            raise ParseError(f"expected {len(head)} fields, got {len(parts)}", lineno)
        try:
            data.append([float(p) for p in parts])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    if not data:
        raise ParseError("no data rows", len(lines))
    arr = np.array(data)
    Z = (arr[:, 1:1 + n2] + 1j * arr[:, 1 + n2:]).reshape(-1, N, N)
    return FrequencySamples(arr[:, 0], Z)


def load_samples(path: str | Path, fmt: str | None = None, n_ports: int | None = None) -> FrequencySamples:
    """Impedance samples from Touchstone (converted from S) or Z-CSV."""
    path = Path(path)
    if fmt is None:
        fmt = "touchstone" if _ports_from_name(path) else "zcsv"
    if fmt == "zcsv":
        s = parse_zcsv(path)
        if n_ports is not None and s.n_ports != n_ports:
            raise DimensionMismatch(f"file has {s.n_ports} ports, expected {n_ports}")
        return s
    ts = parse_touchstone(path, n_ports)
    Z = ts.S if ts.parameter == "Z" else s_to_z(ts.S, ts.z0)
    return FrequencySamples(ts.omega, Z)


# ------------------------------------------------------------------ models

def save_model(path: str | Path, model: StateSpaceModel,
               pole_residue: PoleResidueModel | None = None, extra: dict | None = None) -> None:
    doc = {"kind": "state_space", "model": model.to_dict()}
    if pole_residue is not None:
        doc["pole_residue"] = pole_residue.to_dict()
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1))


def load_model(path: str | Path) -> StateSpaceModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None
    if "model" in doc:
        doc = doc["model"]
    elif "pole_residue" in doc:
        return pole_residue_to_statespace(PoleResidueModel.from_dict(doc["pole_residue"]))
    try:
        return StateSpaceModel.from_dict(doc)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"not a model file: {exc}") from None


# ----------------------------------------------------------------- netlist

def _f(x: float) -> str:
    return repr(float(x))


def _k_record(name: str, left: Sequence[str], right: Sequence[str], T: np.ndarray) -> str:
    rows = " ; ".join(" ".join(_f(v) for v in row) for row in np.atleast_2d(T))
    return f"K{name} {' '.join(left)} : {' '.join(right)} : {rows}"


def export_netlist(circuit: OnePortBruneCircuit | MultiportBruneCircuit, path: str | Path | None = None) -> str:
    """Deterministic text netlist of a Brune circuit.

    Stage ``j`` of an ``N``-port circuit spans nodes ``a{j}_k`` (left) to
    ``a{j+1}_k`` (right), ground is ``0``.  ``KT{j}`` is the Belevitch
    transformer, ``R{j}`` the series resistor in port 1, ``C{j}``/``L{j}`` the
    shunt branch and ``KN{j}`` couples the shunt branch to the ports with
    ratio row ``(n_j, nu_j2, ..., nu_jN)``.
    """
    one = isinstance(circuit, OnePortBruneCircuit)
    N = 1 if one else circuit.n_ports
    kind = "oneport" if one else "multiport"
    out = ["* brunesynth netlist", f".circuit {kind} ports={N} stages={len(circuit.stages)}"]
    for j, st in enumerate(circuit.stages, start=1):
        left = [f"a{j}_{k}" for k in range(1, N + 1)]
        nxt = [f"a{j + 1}_{k}" for k in range(1, N + 1)]
        mid = [f"b{j}_{k}" for k in range(1, N + 1)]
        r = st.R if one else st.r
        omega = st.omega0 if one else st.omega1
        out.append(f".stage {j} {'degenerate' if st.degenerate else 'regular'} omega={_f(omega)}")
        if not one:
            out.append(_k_record(f"T{j}", left, mid, st.T.T))
            src = mid
        else:
            src = left
        out.append(f"R{j} {src[0]} c{j} {_f(r)}")
        if st.degenerate:
            out.append(f"C{j} c{j} 0 {_f(st.C)}")
            out.append(f"W{j} c{j} {nxt[0]}" + "".join(f" {s} {d}" for s, d in zip(src[1:], nxt[1:])))
        else:
            out.append(f"C{j} x{j} y{j} {_f(st.C)}")
            out.append(f"L{j} y{j} 0 {_f(st.L)}")
            nu = [] if one else list(st.nu)
            out.append(_k_record(f"N{j}", [f"x{j}"], [f"c{j}"] + src[1:], np.array([[st.n] + nu])))
            out.append(f"W{j} c{j} {nxt[0]}" + "".join(f" {s} {d}" for s, d in zip(src[1:], nxt[1:])))
            if not one and st.gamma is not None:
                out.append(f"G{j} " + " ".join(_f(g) for g in st.gamma))
    M = len(circuit.stages) + 1
    ends = [f"a{M}_{k}" for k in range(1, N + 1)]
    if one:
        out.append(f"RT1 {ends[0]} 0 {_f(circuit.terminal_resistance)}")
    else:
        term = [f"t_{k}" for k in range(1, N + 1)]
        out.append(_k_record(f"T{M}", ends, term, circuit.terminal_transformer.T))
        for k, R in enumerate(circuit.terminal_resistors, start=1):
            out.append(f"RT{k} t_{k} 0 {_f(R)}")
    out.append(".end")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _parse_matrix(spec: str, lineno: int) -> np.ndarray:
    try:
        return np.array([[float(v) for v in row.split()] for row in spec.split(";")], float)
    except ValueError as exc:
        raise ParseError(f"bad ratio matrix: {exc}", lineno) from None


def parse_netlist(text: str) -> OnePortBruneCircuit | MultiportBruneCircuit:
    """Inverse of :func:`export_netlist`."""
    kind, N = None, None
    stages: list[dict] = []
    terminal_T, term_R = None, {}
    cur: dict | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("*"):
            continue
        w = line.split()
        try:
            if w[0] == ".circuit":
                kind = w[1]
                N = int(w[2].split("=")[1])
            elif w[0] == ".stage":
                cur = {"degenerate": w[2] == "degenerate", "omega": float(w[3].split("=")[1])}
                stages.append(cur)
            elif w[0] == ".end":
                break
            elif w[0].startswith("KT"):
                T = _parse_matrix(line.split(":", 2)[2], lineno)
                if cur is not None and "T" not in cur and int(w[0][2:]) == len(stages):
                    cur["T"] = T
                else:
                    terminal_T = T
            elif w[0].startswith("KN"):
                row = _parse_matrix(line.split(":", 2)[2], lineno)[0]
                cur["n"], cur["nu"] = row[0], row[1:]
            elif w[0].startswith("RT"):
                term_R[int(w[0][2:])] = float(w[3])
            elif w[0][0] == "R":
                cur["r"] = float(w[3])
            elif w[0][0] == "C":
                cur["C"] = float(w[3])
            elif w[0][0] == "L":
                cur["L"] = float(w[3])
            elif w[0][0] == "G":
                cur["gamma"] = np.array([float(v) for v in w[1:]])
            elif w[0][0] == "W":
                pass
            else:
                raise ParseError(f"unknown record {w[0]!r}", lineno)
        except (IndexError, ValueError, TypeError, KeyError) as exc:
            raise ParseError(f"malformed record: {exc}", lineno) from None
    if kind not in ("oneport", "multiport") or N is None:
        raise ParseError("missing .circuit header", 1)
    try:
        if kind == "oneport":
            st = [OnePortBruneStage(s["r"], s["C"], None if s["degenerate"] else s["n"],
                                    None if s["degenerate"] else s["L"], s["omega"]) for s in stages]
            return OnePortBruneCircuit(st, term_R[1])
        mst = []
        for s in stages:
            if s["degenerate"]:
                mst.append(MultiportBruneStage(BelevitchTransformer(s["T"]), s["r"], s["C"],
                                               omega1=s["omega"]))
            else:
                mst.append(MultiportBruneStage(BelevitchTransformer(s["T"]), s["r"], s["C"], s["n"],
                                               s["L"], s["nu"], s.get("gamma"), s["omega"]))
        R = [term_R[k] for k in range(1, N + 1)]
        return MultiportBruneCircuit(N, mst, BelevitchTransformer(terminal_T), R)
    except KeyError as exc:
        raise ParseError(f"missing record {exc}") from None


# ------------------------------------------------------------------ report

def _stage_rows(circuit) -> tuple[list[str], list[dict]]:
    one = isinstance(circuit, OnePortBruneCircuit)
    N = 1 if one else circuit.n_ports
    cols = ["j", "r_j", "L_j", "C_j", "t_j"] + [f"nu_j{k}" for k in range(2, N + 1)]
    rows = []
    for j, st in enumerate(circuit.stages, start=1):
        row = {"j": f"{j}*" if st.degenerate else str(j), "degenerate": st.degenerate,
               "r_j": float(st.R if one else st.r), "C_j": st.C * 1e9}
        if st.degenerate:
            row.update(L_j=0.0, t_j=0.0, n_j=0.0)
            nu = [0.0] * (N - 1)
        else:
            row.update(L_j=st.L * 1e9, t_j=1.0 / st.n, n_j=float(st.n))
            nu = [] if one else [float(v) for v in st.nu]
        for k, v in enumerate(nu, start=2):
            row[f"nu_j{k}"] = v
        rows.append(row)
    return cols, rows


def build_report(circuit, qm=None, baths=None, *, temperature: float | None = None,
                 mode: int | None = None, modes=None, extra: dict | None = None) -> dict:
    """Structured report of a synthesized (and optionally quantized) circuit."""
    one = isinstance(circuit, OnePortBruneCircuit)
    cols, rows = _stage_rows(circuit)
    doc: dict = {
        "schema": REPORT_SCHEMA,
        "ports": 1 if one else circuit.n_ports,
        "stage_columns": cols,
        "units": {"r_j": "ohm", "L_j": "nH", "C_j": "nF", "t_j": "1/n_j"},
        "degenerate_marker": "*",
        "stages": rows,
    }
    if one:
        doc["terminal_resistors"] = [float(circuit.terminal_resistance)]
        doc["belevitch"] = []
    else:
        doc["terminal_resistors"] = [float(r) for r in circuit.terminal_resistors]
        doc["belevitch"] = [{"stage": j, "T": st.T.T.tolist()} for j, st in enumerate(circuit.stages, 1)]
        doc["belevitch"].append({"stage": len(circuit.stages) + 1, "T": circuit.terminal_transformer.T.tolist()})
    if qm is not None:
        from .quantize import normal_modes
        nm = modes if modes is not None else normal_modes(qm)
        doc["coordinates"] = list(qm.labels)
        doc["C0"] = qm.C0.tolist()
        doc["M0"] = qm.M0.tolist()
        doc["mode_frequencies_rad_s"] = nm.frequencies.tolist()
        if baths:
            from .dissipation import DEFAULT_TEMPERATURE, t1_rate
            T = DEFAULT_TEMPERATURE if temperature is None else temperature
            k = _first_positive_mode(nm) if mode is None else mode
            contrib = {}
            for b in baths if k is not None else ():
                try:
                    contrib[b.label] = t1_rate(qm, b, None, T, k, nm)
                except ZeroFrequency:
                    contrib[b.label] = None
            finite = [v for v in contrib.values() if v is not None]
            doc["t1"] = {"approximation": T1_LABEL, "temperature_K": T, "mode": k,
                         "omega01_rad_s": float(nm.frequencies[k]) if k is not None else None,
                         "rates_per_s": contrib, "total_rate_per_s": float(sum(finite)),
                         "T1_s": (1.0 / sum(finite)) if finite and sum(finite) > 0 else None}
    if extra:
        doc.update(extra)
    return doc


def _first_positive_mode(nm) -> int | None:
    f = nm.frequencies
    pos = np.flatnonzero(f > 1e-7 * max(f.max(initial=0.0), 1e-300))
    return int(pos[0]) if pos.size else None


def export_report(circuit, qm=None, baths=None, path: str | Path | None = None, **kw) -> dict:
    doc = build_report(circuit, qm, baths, **kw)
    if path is not None:
        Path(path).write_text(json.dumps(doc, indent=1, default=_json_default))
    return doc


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o).__name__)


# --------------------------------------------------------------------- CLI

def parse_terminations(spec: str | None, n_ports: int, C_J: float | None,
                       L_J: Sequence[float] | None) -> list[PortTermination]:
    """``"J,R:50,V:50"`` style termination list; ``J`` uses ``--cj``/``--lj``."""
    items = ["J"] * n_ports if not spec else [s.strip() for s in spec.split(",")]
    if len(items) != n_ports:
        raise ValidationError(f"need {n_ports} terminations, got {len(items)}")
    lj = list(L_J) if L_J else []
    out: list[PortTermination] = []
    for it in items:
        kind, _, val = it.partition(":")
        kind = kind.upper()
        if kind == "J":
            L = lj.pop(0) if lj else math.inf
            out.append(JosephsonJunction(L, 1e-15 if C_J is None else C_J))
        elif kind == "R":
            out.append(Resistor(float(val)))
        elif kind == "V":
            out.append(VoltageSource(float(val)))
        else:
            raise ValidationError(f"unknown termination {it!r}")
    return out


def _synthesize(model: StateSpaceModel, cfg: SynthesisConfig):
    if model.n_ports == 1:
        return synthesize_oneport(model, cfg)
    return synthesize_multiport(model, cfg)


def _recompose(circuit) -> StateSpaceModel:
    return recompose_oneport(circuit) if isinstance(circuit, OnePortBruneCircuit) else recompose_multiport(circuit)


def _fit_samples(samples: FrequencySamples, n_poles: int):
    pr = vector_fit(samples, n_poles)
    pres = enforce_passivity(pr)
    ss = pole_residue_to_statespace(pres.model)
    return pres.model, ss, pres


def _load_circuit(path: Path):
    return parse_netlist(path.read_text())


def _is_data(path: Path, fmt: str | None) -> bool:
    return fmt is not None or _ports_from_name(path) is not None or path.suffix.lower() == ".csv" \
        or path.suffix.lower() == ".zcsv"


def _write_plot(dirpath: Path, name: str, x: np.ndarray, y: np.ndarray) -> None:
    dirpath.mkdir(parents=True, exist_ok=True)
    np.savetxt(dirpath / name, np.column_stack([x, y]), fmt="%.17g")


def _outdir(args) -> Path | None:
    if args.out is None:
        return None
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _cmd_fit(args) -> int:
    samples = load_samples(args.input, args.format, args.ports)
    if args.npoles is None:
        raise ValidationError("--npoles is required for fitting")
    pr, ss, pres = _fit_samples(samples, args.npoles)
    err = fit_error(samples, pr)
    print(f"fitted {samples.n_ports}-port model: {pr.n_poles} poles, {ss.n_states} states")
    print(f"fit error: rms {err.rms:.3e}, max relative {err.max_rel:.3e}")
    print(f"passivity perturbation norm {pres.perturbation_norm:.3e}")
    out = _outdir(args)
    if out is not None:
        save_model(out / "model.json", ss, pr, {"fit_error": {"rms": err.rms, "max_rel": err.max_rel}})
    if args.plot:
        _write_plot(Path(args.plot), "fit_error.dat", samples.omega, err.per_frequency)
    return 0


def _cmd_check_pr(args) -> int:
    model = load_model(args.input)
    grid = (default_grid(model, args.grid) if args.grid else default_grid(model)) if model.n_states else None
    rep = check_positive_real(model, grid, args.tol)
    print(f"verdict: {rep.verdict.value}")
    print(f"stable: {rep.is_stable}; min Hermitian eigenvalue {rep.min_hermitian_eig:.6e} "
          f"at w = {rep.omega_at_min:.6e} rad/s; min eig(D + D^T) {rep.d_plus_dt_min_eig:.6e}")
    if args.plot and model.n_states:
        lam = np.linalg.eigvalsh(hermitian_part_grid(model, grid))[:, 0]
        _write_plot(Path(args.plot), "min_hermitian_eig.dat", grid, lam)
    if rep.verdict == PrVerdict.NOT_PR:
        raise NotPR("model is not positive real")
    return 0


def _synth_config(args) -> SynthesisConfig:
    cfg = SynthesisConfig()
    if args.grid:
        cfg = SynthesisConfig(grid_points=max(args.grid, 100), grid_pad=cfg.grid_pad,
                              clamp_tol=cfg.clamp_tol, structure_tol=cfg.structure_tol,
                              check_remainders=cfg.check_remainders, pr_points=cfg.pr_points)
    return cfg


def _cmd_synth(args) -> int:
    model = load_model(args.input)
    circuit = _synthesize(model, _synth_config(args))
    err = impedance_error(model, _recompose(circuit), default_grid(model, 500))
    print(f"synthesized {len(circuit.stages)} stages "
          f"({sum(s.degenerate for s in circuit.stages)} degenerate); recomposition error {err:.3e}")
    out = _outdir(args)
    if out is not None:
        export_netlist(circuit, out / "circuit.net")
        export_report(circuit, path=out / "report.json", extra={"recomposition_error": err})
    return 0


def _quantized(args):
    from .dissipation import all_baths
    from .quantize import quantize
    circuit = _load_circuit(Path(args.input))
    N = 1 if isinstance(circuit, OnePortBruneCircuit) else circuit.n_ports
    terms = parse_terminations(args.term, N, args.cj, args.lj)
    qm = quantize(circuit, terms)
    return circuit, qm, all_baths(circuit, qm.loops, qm)


def _cmd_quantize(args) -> int:
    from .quantize import normal_modes
    circuit, qm, _ = _quantized(args)
    nm = normal_modes(qm)
    print(f"{qm.n_coords} coordinates: {', '.join(qm.labels)}")
    print("mode frequencies (GHz): " + ", ".join(f"{f / 2 / np.pi / 1e9:.6g}" for f in nm.frequencies))
    out = _outdir(args)
    if out is not None:
        export_report(circuit, qm, None, path=out / "quantized.json", modes=nm)
    return 0


def _cmd_t1(args) -> int:
    from .quantize import normal_modes
    circuit, qm, baths = _quantized(args)
    nm = normal_modes(qm)
    T = args.temp_mk * 1e-3
    doc = build_report(circuit, qm, baths, temperature=T, mode=args.mode, modes=nm)
    t1 = doc.get("t1", {})
    if t1.get("mode") is None:
        raise ZeroFrequency("no mode with positive frequency; give junction inductances with --lj")
    print(f"mode {t1['mode']}: w01 = {t1['omega01_rad_s']:.6e} rad/s, T = {T * 1e3:g} mK ({T1_LABEL})")
    for label, rate in t1["rates_per_s"].items():
        print(f"  {label:>6}: {'n/a' if rate is None else f'{rate:.6e}'} 1/s")
    print(f"  total : {t1['total_rate_per_s']:.6e} 1/s")
    if args.plot:
        w = np.logspace(np.log10(t1["omega01_rad_s"]) - 2, np.log10(t1["omega01_rad_s"]) + 2, 400)
        for b in baths:
            _write_plot(Path(args.plot), f"J_{b.label}.dat", w, b.J(w))
    out = _outdir(args)
    if out is not None:
        Path(out / "t1.json").write_text(json.dumps(doc, indent=1, default=_json_default))
    return 0


def _cmd_roundtrip(args) -> int:
    t0 = time.perf_counter()
    path = Path(args.input)
    extra: dict = {}
    if _is_data(path, args.format):
        samples = load_samples(path, args.format, args.ports)
        if args.npoles is None:
            raise ValidationError("--npoles is required for data input")
        pr, model, pres = _fit_samples(samples, args.npoles)
        ferr = fit_error(samples, pr)
        extra["fit_error"] = {"rms": ferr.rms, "max_rel": ferr.max_rel}
        print(f"fit: {pr.n_poles} poles, {model.n_states} states, max relative error {ferr.max_rel:.3e}")
        if args.plot:
            _write_plot(Path(args.plot), "fit_error.dat", samples.omega, ferr.per_frequency)
    else:
        model = load_model(path)
    rep = check_positive_real(model)
    print(f"positive-real check: {rep.verdict.value}")
    if rep.verdict == PrVerdict.NOT_PR:
        raise NotPR("model is not positive real")
    circuit = _synthesize(model, _synth_config(args))
    rec = _recompose(circuit)
    grid = default_grid(model, args.grid or 500)
    err = impedance_error(model, rec, grid)
    extra["roundtrip_max_grid_error"] = err
    print(f"synthesized {len(circuit.stages)} stages "
          f"({sum(s.degenerate for s in circuit.stages)} degenerate)")
    print(f"max grid relative error: {err:.3e}")
    from .dissipation import all_baths
    from .quantize import normal_modes, quantize
    N = 1 if isinstance(circuit, OnePortBruneCircuit) else circuit.n_ports
    qm = quantize(circuit, parse_terminations(args.term, N, args.cj, args.lj))
    nm = normal_modes(qm)
    baths = all_baths(circuit, qm.loops, qm)
    doc = build_report(circuit, qm, baths, modes=nm, extra=extra)
    t1 = doc.get("t1", {})
    if t1.get("mode") is not None:
        print(f"mode {t1['mode']}: w01 = {t1['omega01_rad_s']:.6e} rad/s, "
              f"total rate {t1['total_rate_per_s']:.6e} 1/s ({T1_LABEL})")
    out = _outdir(args)
    if out is not None:
        export_netlist(circuit, out / "circuit.net")
        (out / "report.json").write_text(json.dumps(doc, indent=1, default=_json_default))
    print(f"elapsed {time.perf_counter() - t0:.2f} s")
    if args.tol is not None and err > args.tol:
        raise ValidationError(f"round-trip error {err:.3e} exceeds --tol {args.tol:.3e}")
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="brunesynth",
                                description="Brune synthesis and quantization of impedance data")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=False):
        sp.add_argument("input", help="input file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--plot", help="directory for two-column plot data")
        sp.add_argument("--grid", type=int, default=None, help="frequency grid points")
        sp.add_argument("--tol", type=float, default=None, help="tolerance")
        if data:
            sp.add_argument("--ports", type=int, default=None, help="number of ports (checked against the file)")
            sp.add_argument("--npoles", type=int, default=None, help="model order (required for fitting)")
            sp.add_argument("--format", choices=("touchstone", "zcsv"), default=None, help="input format, default from the suffix")

    def quant(sp):
        sp.add_argument("--cj", type=float, default=None, help="junction capacitance (F), default 1 fF")
        sp.add_argument("--lj", type=lambda s: [float(v) for v in s.split(",")], default=None,
                        help="junction inductances (H), comma separated")
        sp.add_argument("--term", default=None, help="port terminations, e.g. J,R:50,V:50")

    common(sub.add_parser("fit", help="fit samples to a pole-residue and state-space model"), True)
    common(sub.add_parser("check-pr", help="positive-real check of a model file"))
    common(sub.add_parser("synth", help="synthesize a Brune circuit from a model file"))
    q = sub.add_parser("quantize", help="capacitance/stiffness matrices and modes of a netlist")
    common(q)
    quant(q)
    t = sub.add_parser("t1", help="per-bath relaxation rates of a netlist")
    common(t)
    quant(t)
    t.add_argument("--temp-mk", type=float, default=20.0, help="bath temperature (mK)")
    t.add_argument("--mode", type=int, default=None, help="mode index, default the lowest nonzero mode")
    rt = sub.add_parser("roundtrip", help="fit, check, synthesize, recompose, quantize and report")
    common(rt, True)
    quant(rt)
    return p


_COMMANDS = {"fit": _cmd_fit, "check-pr": _cmd_check_pr, "synth": _cmd_synth,
             "quantize": _cmd_quantize, "t1": _cmd_t1, "roundtrip": _cmd_roundtrip}


def cli(argv: Sequence[str] | None = None) -> int:
    """Run a subcommand; 0 on success, 1 on invalid input, 2 on numerical failure."""
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 1
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2
    except BruneError as exc:  # pragma: no cover
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli())
