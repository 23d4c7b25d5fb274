"""Random circuit/model generators and reference data shared by the tests."""

from __future__ import annotations

import numpy as np
from scipy.stats import ortho_group

from brunesynth import (
    BelevitchTransformer,
    MultiportBruneCircuit,
    MultiportBruneStage,
    OnePortBruneCircuit,
    OnePortBruneStage,
    PoleResidueModel,
)


def log_uniform(rng: np.random.Generator, lo: float, hi: float, size=None):
    return 10 ** rng.uniform(np.log10(lo), np.log10(hi), size)


def random_turns(rng: np.random.Generator) -> float:
    # n = 1/t with t in (0.1, 0.95): keeps n away from 1, where the band transform is undefined
    return 1.0 / rng.uniform(0.1, 0.95)


def random_oneport(rng: np.random.Generator, n_stages: int, p_degenerate: float = 0.3,
                   terminal: float | None = None) -> OnePortBruneCircuit:
    stages = []
    for _ in range(n_stages):
        R = log_uniform(rng, 0.1, 100.0)
        C = log_uniform(rng, 1e-14, 1e-12)
        if rng.random() < p_degenerate:
            stages.append(OnePortBruneStage(R=R, C=C))
        else:
            stages.append(OnePortBruneStage(R=R, C=C, n=random_turns(rng), L=log_uniform(rng, 1e-9, 1e-7)))
    Rt = log_uniform(rng, 10.0, 1e4) if terminal is None else terminal
    return OnePortBruneCircuit(tuple(stages), Rt)


def random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.eye(1) if n == 1 else ortho_group.rvs(n, random_state=rng)


def random_multiport(rng: np.random.Generator, n_ports: int, n_stages: int, p_degenerate: float = 0.3,
                     degenerate: tuple[int, ...] | None = None, orthogonal: bool = True,
                     unit_scale: bool = False) -> MultiportBruneCircuit:
    """Random multiport circuit.

    ``unit_scale`` draws O(1) element values (convenient for algebraic identities);
    otherwise values are transmon-like (pF, nH, ohms).
    """
    def mat():
        if orthogonal:
            return random_orthogonal(rng, n_ports)
        return rng.normal(size=(n_ports, n_ports)) + 2 * np.eye(n_ports)

    stages = []
    for j in range(n_stages):
        deg = (j in degenerate) if degenerate is not None else rng.random() < p_degenerate
        if unit_scale:
            r, C, L, n = rng.uniform(0.5, 5), rng.uniform(0.5, 3), rng.uniform(0.5, 3), rng.uniform(0.2, 3)
        else:
            r, C = log_uniform(rng, 0.1, 30.0), log_uniform(rng, 1e-14, 1e-12)
            L, n = log_uniform(rng, 1e-9, 1e-7), random_turns(rng)
        T = BelevitchTransformer(mat(), orthogonal=orthogonal)
        if deg:
            stages.append(MultiportBruneStage(T, r, C))
        else:
            stages.append(MultiportBruneStage(T, r, C, n=n, L=L, nu=rng.uniform(-0.5, 0.5, n_ports - 1)))
    Rt = rng.uniform(1, 10, n_ports) if unit_scale else log_uniform(rng, 1e3, 1e5, n_ports)
    return MultiportBruneCircuit(n_ports, tuple(stages), BelevitchTransformer(mat(), orthogonal=orthogonal), Rt)


def random_pole_residue(rng: np.random.Generator, n_poles: int, n_ports: int,
                        symmetric: bool = True) -> PoleResidueModel:
    """Stable pole-residue model with poles spread over 1..100 rad/s."""
    poles: list[complex] = []
    while len(poles) < n_poles:
        if n_poles - len(poles) >= 2 and rng.random() < 0.7:
            b = log_uniform(rng, 1.0, 100.0)
            p = complex(-b * rng.uniform(0.02, 0.5), b)
            poles += [p, p.conjugate()]
        else:
            poles.append(complex(-log_uniform(rng, 1.0, 100.0), 0.0))
    p = np.array(poles)

    def sym(X):
        return X + X.T if symmetric else X

    R = np.zeros((n_poles, n_ports, n_ports), complex)
    k = 0
    while k < n_poles:
        X = sym(rng.normal(size=(n_ports, n_ports)))
        if p[k].imag == 0:
            R[k] = X
            k += 1
        else:
            Y = sym(rng.normal(size=(n_ports, n_ports)))
            R[k], R[k + 1] = X + 1j * Y, X - 1j * Y
            k += 2
    return PoleResidueModel(p, R, sym(rng.normal(size=(n_ports, n_ports))))


# --------------------------------------------------------------- Table 1
# 3-port transmon circuit: r (ohm), L (nH), C (nF), t = 1/n, nu_2, nu_3; "*" rows are degenerate.
TABLE1_ROWS = [
    ("1*", 0.0923, 0.0, 1.1953e-4, 0.0, 0.0, 0.0),
    ("2", 0.0471, 7.1890e2, 2.4523e-7, 0.9478, -0.0008, -0.0259),
    ("3", 0.0973, 2.7674, 7.7198e-4, 0.0986, -0.0002, 0.2050),
    ("4", 0.1063, 2.7113, 7.8675e-4, 0.0971, 0.0003, -0.0020),
    ("5", 0.2136, 3.0283e3, 1.7701e-7, 0.9915, 0.0037, 0.0018),
    ("6", 20.7896, 2.7344e2, 1.0464e-6, 0.7657, 0.0002, 0.3708),
    ("7", 21.4619, 2.7500e2, 1.0416e-6, 0.7508, 0.0, -0.0222),
    ("8", 26.6330, 2.4557e4, 6.2335e-9, 0.9959, 9.65e-5, -2.311e-4),
    ("9", 4.7957, 4.9851e2, 2.0961e-7, 0.8408, 0.0002, 0.0122),
    ("10", 30.5600, 4.6115e2, 2.2697e-7, 0.8409, 0.0007, -0.0623),
    ("11*", 84.5207, 0.0, 2.4178e-7, 0.0, 0.0, 0.0),
    ("12*", 88.4419, 0.0, 2.2673e-7, 0.0, 0.0, 0.0),
]

TABLE1_TERMINAL_R = (1.0837e7, 1.1306e7, 7.7537e7)

TABLE1_T = [
    [[-1.0000, -0.0001, -0.0010], [0.0008, -0.7148, -0.6993], [0.0007, 0.6993, -0.7148]],
    [[0.8933, -0.0132, -0.4493], [-0.0132, -0.9999, 0.0032], [-0.4493, 0.0030, -0.8934]],
    [[0.4315, 0.0060, -0.9021], [0.0127, 0.9998, 0.0127], [0.9020, -0.0169, 0.4314]],
    [[0.0000, -1.0000, 0.0030], [1.0000, 0.0000, 0.0000], [0.0000, 0.0030, 1.0000]],
    [[0.0000, 0.4254, -0.9050], [0.0403, -0.9043, -0.4250], [-0.9992, -0.0365, -0.0171]],
    [[-0.0416, 0.0024, -0.9991], [0.9299, 0.3659, -0.0378], [0.3655, -0.9306, -0.0174]],
    [[-0.0006, -0.9994, -0.0342], [1.0000, -0.0006, -0.0000], [0.0000, -0.0342, 0.9994]],
    [[0.9975, 0.0341, -0.0615], [-0.0308, 0.9981, 0.0538], [0.0632, -0.0517, 0.9967]],
    [[-0.9976, 0.0011, -0.0685], [0.0032, 0.9995, -0.0299], [0.0685, -0.0301, -0.9972]],
    [[-0.0011, -0.9999, -0.0109], [1.0000, -0.0011, 0.0003], [-0.0003, -0.0109, 0.9999]],
    [[-0.9775, -0.1067, -0.1820], [-0.1088, 0.9941, 0.0015], [0.1808, 0.0212, -0.9833]],
    [[-0.0081, 0.9876, -0.1566], [-1.0000, -0.0080, 0.0013], [0, 0.1566, 0.9877]],
    [[-0.0978, 0.9951, -0.0116], [0.9952, 0.0978, -0.0001], [0.0011, -0.0116, -0.9999]],
]


def table1_circuit() -> MultiportBruneCircuit:
    """Circuit assembled from the printed 3-port table (nH, nF, n = 1/t)."""
    stages = []
    for (label, r, L_nH, C_nF, t, nu2, nu3), T in zip(TABLE1_ROWS, TABLE1_T):
        bt = BelevitchTransformer(np.array(T), orthogonal=True)
        if label.endswith("*"):
            stages.append(MultiportBruneStage(bt, r, C_nF * 1e-9))
        else:
            stages.append(MultiportBruneStage(bt, r, C_nF * 1e-9, n=1.0 / t, L=L_nH * 1e-9, nu=[nu2, nu3]))
    return MultiportBruneCircuit(3, tuple(stages), BelevitchTransformer(np.array(TABLE1_T[12])),
                                 np.array(TABLE1_TERMINAL_R))
