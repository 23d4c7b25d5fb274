import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brunesynth.brune_multiport import MultiportBruneCircuit, MultiportBruneStage, recompose_multiport
from brunesynth.brune_oneport import OnePortBruneCircuit, OnePortBruneStage, recompose_oneport
from brunesynth.errors import DimensionMismatch, GyratorPresent
from brunesynth.loop_matrices import (
    JosephsonJunction,
    Resistor,
    VoltageSource,
    effective_loops,
    effective_loops_via_voltage_law,
    multiport_effective_loops,
    oneport_effective_loops,
)
from brunesynth.model_core import eval_impedance

from helpers import random_multiport, random_oneport, random_orthogonal

BLOCKS = ("F_JC", "F_LC", "F_ZC", "F_VC")


def max_block_diff(F, G) -> float:
    return max((np.abs(getattr(F, k) - getattr(G, k)).max(initial=0.0) for k in BLOCKS), default=0.0)


def port_admittance(circuit, F, s: complex) -> np.ndarray:
    """Admittance seen by the junction ports from a loop analysis with capacitor chords.

    Tree branches: junction ports, inductors, series resistors.  Chords: stage
    capacitors and the terminal resistors (admittance ``1/R``).
    """
    M = F.n_stages
    if isinstance(circuit, OnePortBruneCircuit):
        R_t = [circuit.terminal_resistance]
        r = [st.R for st in circuit.stages]
    else:
        R_t = list(circuit.terminal_resistors)
        r = [st.r for st in circuit.stages]
    C = [st.C for st in circuit.stages]
    L = [circuit.stages[j].L for j in F.regular_stages]
    Y_C = np.diag(np.concatenate([s * np.array(C), 1 / np.array(R_t)]))
    W = s * F.F_LC.T @ np.diag(L) @ F.F_LC + F.F_ZC.T @ np.diag(r) @ F.F_ZC
    return F.F_JC @ np.linalg.solve(np.eye(M + len(R_t)) + Y_C @ W, Y_C @ F.F_JC.T)


def section41(rng):
    t = rng.normal(size=(2, 2))
    u = rng.normal(size=(2, 2))
    n1, nu = rng.uniform(0.2, 3.0), rng.normal()
    C1, L1, r1 = rng.uniform(0.5, 2.0, 3)
    R = rng.uniform(1.0, 5.0, 2)
    st1 = MultiportBruneStage(t, r1, C1, n=n1, L=L1, nu=[nu])
    c = MultiportBruneCircuit(2, [st1], u, R)
    return c, t, u, n1, nu


class TestOnePort:
    def test_single_stage(self):
        c = OnePortBruneCircuit([OnePortBruneStage(1.0, 1.0, n=2.0, L=1.0)], 5.0)
        F = oneport_effective_loops(c)
        np.testing.assert_array_equal(F.F_LC, [[1.0, -1.0]])
        np.testing.assert_array_equal(F.F_JC, [[1.0, 1.0]])
        np.testing.assert_array_equal(F.F_ZC, [[1.0, 1.0]])

    def test_unit_ratios_have_no_fill(self):
        c = OnePortBruneCircuit([OnePortBruneStage(1.0, 1.0, n=1.0, L=1.0) for _ in range(3)], 5.0)
        np.testing.assert_array_equal(oneport_effective_loops(c).F_LC, np.eye(3, 4))

    def test_two_stage_display(self, rng):
        for _ in range(5):
            n1, n2 = rng.uniform(0.2, 3.0, 2)
            c = OnePortBruneCircuit([OnePortBruneStage(1.0, 1.0, n=n1, L=1.0),
                                     OnePortBruneStage(1.0, 1.0, n=n2, L=1.0)], 5.0)
            want = np.array([[1.0, 1 - n1, 1 - n1], [0.0, 1.0, 1 - n2]])
            np.testing.assert_allclose(oneport_effective_loops(c).F_LC, want, rtol=0, atol=1e-15)

    def test_degenerate_drops_row(self):
        c = OnePortBruneCircuit([OnePortBruneStage(1.0, 1.0, n=2.0, L=1.0), OnePortBruneStage(1.0, 2.0),
                                 OnePortBruneStage(1.0, 1.0, n=3.0, L=1.0)], 5.0)
        F = oneport_effective_loops(c)
        np.testing.assert_array_equal(F.F_LC, [[1, -1, -1, -1], [0, 0, 1, -2]])
        assert F.regular_stages == (0, 2)

    def test_binary_structure(self, rng):
        F = oneport_effective_loops(random_oneport(rng, 5))
        assert set(np.unique(F.F_JC)) <= {0.0, 1.0} and set(np.unique(F.F_ZC)) <= {0.0, 1.0}

    def test_closed_form_equals_iteration(self, rng):
        for _ in range(20):
            c = random_oneport(rng, int(rng.integers(0, 7)))
            assert max_block_diff(oneport_effective_loops(c), multiport_effective_loops(c)) == 0.0

    def test_dispatch(self, rng):
        c = random_oneport(rng, 2)
        assert max_block_diff(effective_loops(c), oneport_effective_loops(c)) == 0.0


class TestSection41:
    def test_formulas(self, rng):
        for _ in range(20):
            c, t, u, n1, nu = section41(rng)
            F = multiport_effective_loops(c)
            FJ = np.array([[t[0, 0], t[0, 0] * u[0, 0] + u[1, 0] * (t[0, 1] - t[0, 0] * nu),
                            t[0, 0] * u[0, 1] + u[1, 1] * (t[0, 1] - t[0, 0] * nu)],
                           [t[1, 0], t[1, 0] * u[0, 0] + u[1, 0] * (t[1, 1] - t[1, 0] * nu),
                            t[1, 0] * u[0, 1] + u[1, 1] * (t[1, 1] - t[1, 0] * nu)]])
            FL = np.array([[1.0, (1 - n1) * u[0, 0] - u[1, 0] * nu, (1 - n1) * u[0, 1] - u[1, 1] * nu]])
            FZ = np.array([[1.0, u[0, 0] - u[1, 0] * nu, u[0, 1] - u[1, 1] * nu]])
            assert np.abs(F.F_JC - FJ).max() < 1e-12
            assert np.abs(F.F_LC - FL).max() < 1e-12
            assert np.abs(F.F_ZC - FZ).max() < 1e-12

    def test_identity_transformers(self):
        st1 = MultiportBruneStage(np.eye(2), 1.0, 1.0, n=1.0, L=1.0, nu=[0.0])
        F = multiport_effective_loops(MultiportBruneCircuit(2, [st1], np.eye(2), [1.0, 1.0]))
        np.testing.assert_array_equal(F.F_JC, [[1, 1, 0], [0, 0, 1]])
        np.testing.assert_array_equal(F.F_LC, [[1, 0, 0]])

    def test_degenerate_stage_uses_identity_map(self, rng):
        # a degenerate stage between identity transformers passes the currents straight through
        st1 = MultiportBruneStage(np.eye(2), 1.0, 2.0)
        F = multiport_effective_loops(MultiportBruneCircuit(2, [st1], np.eye(2), [1.0, 1.0]))
        np.testing.assert_array_equal(F.F_JC, [[1, 1, 0], [0, 0, 1]])
        assert F.F_LC.shape == (0, 3)


class TestTerminations:
    def test_resistor_port_moves_row(self):
        nu = 0.4
        st1 = MultiportBruneStage(np.eye(2), 1.0, 1.0, n=2.0, L=1.0, nu=[nu])
        c = MultiportBruneCircuit(2, [st1], np.eye(2), [1.0, 1.0])
        F = multiport_effective_loops(c, [JosephsonJunction(), Resistor(50.0)])
        np.testing.assert_allclose(F.F_JC, [[1.0, 1.0, -nu]])
        np.testing.assert_allclose(F.port_shunt_row(1), [0.0, 0.0, 1.0])
        assert F.F_ZC.shape == (2, 3)

    def test_source_rows_equal_resistor_rows(self, rng):
        c = random_multiport(rng, 3, 3)
        FR = multiport_effective_loops(c, [JosephsonJunction(), Resistor(50.0), JosephsonJunction()])
        FV = multiport_effective_loops(c, [JosephsonJunction(), VoltageSource(50.0), JosephsonJunction()])
        np.testing.assert_array_equal(FV.source_row(1), FR.port_shunt_row(1))
        np.testing.assert_array_equal(FV.source_resistor_row(1), FR.port_shunt_row(1))

    def test_wrong_count(self, rng):
        with pytest.raises(DimensionMismatch):
            multiport_effective_loops(random_multiport(rng, 2, 1), [JosephsonJunction()])

    def test_gyrator_rejected(self):
        st1 = MultiportBruneStage(np.eye(2), 1.0, 1.0, n=2.0, L=1.0, nu=[0.1], gamma=[0.5])
        c = MultiportBruneCircuit(2, [st1], np.eye(2), [1.0, 1.0])
        with pytest.raises(GyratorPresent):
            multiport_effective_loops(c)
        with pytest.raises(GyratorPresent):
            effective_loops_via_voltage_law(c)


class TestOracles:
    def test_empty_circuit(self, rng):
        U = random_orthogonal(rng, 2)
        c = MultiportBruneCircuit(2, (), U, [1.0, 2.0])
        F = multiport_effective_loops(c)
        V = effective_loops_via_voltage_law(c).transpose(F)
        np.testing.assert_allclose(F.F_JC, U)
        assert max_block_diff(F, V) == 0.0

    def test_oneport_transpose_exact(self, rng):
        c = random_oneport(rng, 5)
        F = oneport_effective_loops(c)
        V = effective_loops_via_voltage_law(c).transpose(F)
        assert max_block_diff(F, V) == 0.0

    @given(seed=st.integers(0, 2**32 - 1), N=st.integers(1, 3), M=st.integers(0, 6))
    def test_transpose_identity(self, seed, N, M):
        rng = np.random.default_rng(seed)
        c = random_multiport(rng, N, M, unit_scale=True, orthogonal=bool(rng.integers(2)))
        kinds = [JosephsonJunction(), Resistor(10.0), VoltageSource(5.0)]
        terms = [kinds[int(k)] for k in rng.integers(0, 3, N)]
        F = multiport_effective_loops(c, terms)
        V = effective_loops_via_voltage_law(c, terms).transpose(F)
        assert max_block_diff(F, V) < 1e-12

    @pytest.mark.parametrize("N,M", [(1, 3), (2, 2), (3, 4)])
    def test_admittance_inverts_impedance(self, rng, N, M):
        c = random_multiport(rng, N, M, unit_scale=True)
        F = multiport_effective_loops(c)
        m = recompose_multiport(c)
        for w in (0.3, 1.1, 2.7):
            Y = port_admittance(c, F, 1j * w)
            assert np.abs(Y @ eval_impedance(m, 1j * w) - np.eye(N)).max() < 1e-10

    def test_oneport_admittance(self, rng):
        c = OnePortBruneCircuit([OnePortBruneStage(2.0, 1.5, n=0.5, L=1.2), OnePortBruneStage(1.0, 0.7),
                                 OnePortBruneStage(3.0, 2.0, n=2.5, L=0.4)], 5.0)
        F = oneport_effective_loops(c)
        m = recompose_oneport(c)
        for w in (0.3, 1.3, 4.0):
            assert abs(port_admittance(c, F, 1j * w)[0, 0] * eval_impedance(m, 1j * w)[0, 0] - 1) < 1e-12

    def test_lc_upper_triangular_unit_diagonal(self, rng):
        c = random_multiport(rng, 3, 5, p_degenerate=0.0, unit_scale=True)
        F = multiport_effective_loops(c)
        np.testing.assert_allclose(F.F_LC[:, :5], np.triu(F.F_LC[:, :5]), atol=0)
        np.testing.assert_allclose(np.diag(F.F_LC[:, :5]), 1.0, atol=1e-15)
