"""Generate the synthetic 3-port sample shipped in ``data/``.

A random 3-port Brune circuit with transmon-like element scales is
recomposed into a state-space model and sampled on a log grid.  The script
writes the impedance table (Z-CSV), the same data as a Touchstone S-parameter
file, and the reference netlist.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
from scipy.stats import ortho_group

from brunesynth import BelevitchTransformer, MultiportBruneCircuit, MultiportBruneStage, recompose_multiport
from brunesynth.cli_io import export_netlist, write_touchstone, write_zcsv
from brunesynth.model_core import eval_impedance_grid


def sample_circuit(seed: int = 7) -> MultiportBruneCircuit:
    rng = np.random.default_rng(seed)
    N = 3
    stages = [MultiportBruneStage(BelevitchTransformer(ortho_group.rvs(N, random_state=rng)),
                                  rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.2) * 1e-12)]
    for _ in range(3):
        stages.append(MultiportBruneStage(
            BelevitchTransformer(ortho_group.rvs(N, random_state=rng)),
            r=rng.uniform(0.1, 5.0), C=rng.uniform(0.1, 1.0) * 1e-12,
            n=1.0 / rng.uniform(0.3, 0.95), L=rng.uniform(1.0, 10.0) * 1e-9,
            nu=rng.normal(scale=0.2, size=N - 1)))
    return MultiportBruneCircuit(N, stages, BelevitchTransformer(ortho_group.rvs(N, random_state=rng)),
                                 rng.uniform(1e3, 1e5, N))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data"))
    ap.add_argument("--points", type=int, default=400)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    circuit = sample_circuit()
    model = recompose_multiport(circuit)
    f = np.logspace(np.log10(0.5e9), np.log10(50e9), args.points)
    omega = 2 * np.pi * f
    Z = eval_impedance_grid(model, 1j * omega)
    write_zcsv(out / "sample_3port.zcsv", omega, Z)
    eye = np.eye(3)
    S = np.array([np.linalg.solve((z + 50 * eye).T, (z - 50 * eye).T).T for z in Z])
    write_touchstone(out / "sample_3port.s3p", omega, S, 50.0)
    export_netlist(circuit, out / "sample_3port_reference.net")
    print(f"order {model.n_states}, poles (GHz): "
          + ", ".join(f"{abs(p) / 2 / np.pi / 1e9:.3g}" for p in model.poles() if p.imag >= 0))


if __name__ == "__main__":
    main()
