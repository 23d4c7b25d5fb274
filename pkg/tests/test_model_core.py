import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brunesynth.errors import DegreeError, SingularResolvent, SingularTransform, UnstablePole
from brunesynth.model_core import (
    PoleResidueModel,
    PrVerdict,
    StateSpaceModel,
    check_positive_real,
    companion_realization,
    eval_impedance,
    eval_impedance_grid,
    eval_pole_residue_grid,
    hermitian_part,
    hermitian_part_grid,
    minimize_hermitian_eig,
    pole_residue_to_statespace,
    similarity_transform,
)

from helpers import random_pole_residue


def first_order():
    return StateSpaceModel([[-1.0]], [[1.0]], [[1.0]], [[0.0]])


def constant(d):
    m = np.atleast_2d(d).shape[0]
    return StateSpaceModel(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((m, 0)), np.atleast_2d(d))


def random_stable(rng, n, m):
    pr = random_pole_residue(rng, n, m)
    return pole_residue_to_statespace(pr)


class TestEvalImpedance:
    def test_dc_value(self):
        assert eval_impedance(first_order(), 0.0) == pytest.approx(np.array([[1.0]]))

    def test_on_axis(self):
        z = eval_impedance(first_order(), 1j)[0, 0]
        assert z == pytest.approx(0.5 - 0.5j, abs=1e-15)

    def test_constant_network(self):
        for s in (0, 1j, 3 + 4j):
            assert eval_impedance(constant([[5.0]]), s) == pytest.approx(np.array([[5.0]]))

    def test_slope_term(self):
        m = constant([[0.0]]).replace(E=np.array([[2.0]]))
        assert eval_impedance(m, 3j)[0, 0] == pytest.approx(6j)

    def test_singular_resolvent(self):
        with pytest.raises(SingularResolvent):
            eval_impedance(first_order(), -1.0)

    def test_real_s_gives_real(self, rng):
        m = random_stable(rng, 5, 2)
        Z = eval_impedance(m, 0.7)
        assert np.abs(Z.imag).max() <= 1e-14 * np.abs(Z).max()

    def test_conjugate_symmetry(self, rng):
        m = random_stable(rng, 6, 3)
        for s in (0.3 + 2j, 1 + 40j, 5j):
            np.testing.assert_allclose(eval_impedance(m, np.conj(s)), np.conj(eval_impedance(m, s)),
                                       rtol=1e-12, atol=0)

    def test_grid_matches_pointwise(self, rng):
        m = random_stable(rng, 4, 2)
        s = 1j * np.logspace(-1, 3, 17)
        G = eval_impedance_grid(m, s)
        for k in range(len(s)):
            np.testing.assert_allclose(G[k], eval_impedance(m, s[k]), rtol=1e-12)


class TestSimilarity:
    def test_identity(self, rng):
        m = random_stable(rng, 4, 2)
        m2 = similarity_transform(m, np.eye(m.n_states))
        np.testing.assert_array_equal(m2.A, m.A)
        np.testing.assert_array_equal(m2.B, m.B)

    def test_scalar_case(self):
        m = similarity_transform(first_order(), np.array([[2.0]]))
        assert m.A[0, 0] == -1 and m.B[0, 0] == 2 and m.C[0, 0] == 0.5
        assert eval_impedance(m, 0)[0, 0] == pytest.approx(1.0)

    def test_singular(self):
        with pytest.raises(SingularTransform):
            similarity_transform(first_order(), np.array([[0.0]]))

    @given(seed=st.integers(0, 2**32 - 1))
    def test_invariance(self, seed):
        rng = np.random.default_rng(seed)
        m = random_stable(rng, 4, int(rng.integers(1, 4)))
        T = rng.normal(size=(m.n_states, m.n_states)) + 3 * np.eye(m.n_states)
        mt = similarity_transform(m, T)
        s = 1j * np.logspace(-1, 3, 50)
        Z, Zt = eval_impedance_grid(m, s), eval_impedance_grid(mt, s)
        err = np.linalg.norm(Zt - Z, axis=(1, 2)) / np.linalg.norm(Z, axis=(1, 2))
        assert err.max() < 1e-9
        np.testing.assert_array_equal(mt.D, m.D)


class TestCompanion:
    def test_first_order(self):
        m = companion_realization([1.0], [1.0])
        assert m.A.tolist() == [[-1.0]] and m.B.tolist() == [[1.0]] and m.C.tolist() == [[1.0]]

    def test_second_order_layout(self):
        m = companion_realization([3.0, 4.0], [2.0, 5.0])
        np.testing.assert_array_equal(m.A, [[0, 1], [-2, -5]])
        np.testing.assert_array_equal(m.B, [[0], [1]])
        np.testing.assert_array_equal(m.C, [[3, 4]])

    def test_zero_numerator(self):
        m = companion_realization([0.0], [1.0])
        assert m.C.tolist() == [[0.0]]
        assert eval_impedance(m, 2j)[0, 0] == 0

    def test_degree_error(self):
        with pytest.raises(DegreeError):
            companion_realization([1.0, 2.0, 3.0], [1.0, 1.0])

    def test_common_factor_warning(self):
        # (s+1)/((s+1)(s+2))
        with pytest.warns(RuntimeWarning):
            companion_realization([1.0, 1.0], [2.0, 3.0])

    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
    def test_matches_polynomial_ratio(self, seed, n):
        rng = np.random.default_rng(seed)
        roots = -rng.uniform(0.5, 5.0, n)
        a = np.poly(roots)[::-1][:-1]  # lowest power first, monic term dropped
        b = rng.normal(size=n)
        m = companion_realization(b, a)
        s = 1j * np.logspace(-1, 2, 50)
        direct = np.polyval(b[::-1], s) / np.polyval(np.concatenate([[1.0], a[::-1]]), s)
        Z = eval_impedance_grid(m, s)[:, 0, 0]
        assert (np.abs(Z - direct) / np.abs(direct)).max() < 1e-10


class TestPoleResidue:
    def test_single_real_pole(self):
        m = pole_residue_to_statespace(PoleResidueModel([-1.0], [[[1.0]]], [[0.0]]))
        assert m.n_states == 1
        assert eval_impedance(m, 2j)[0, 0] == pytest.approx(1 / (1 + 2j))

    def test_rank_one_residue_compacts(self):
        w = np.array([1.0, -2.0, 0.5])
        pr = PoleResidueModel([-3.0], [np.outer(w, w)], np.zeros((3, 3)))
        assert pole_residue_to_statespace(pr).n_states == 1
        assert pole_residue_to_statespace(pr, rank_tolerance=0.0).n_states >= 1

    def test_d_only(self):
        pr = PoleResidueModel(np.zeros(0), np.zeros((0, 2, 2)), [[1.0, 0.2], [0.2, 3.0]])
        m = pole_residue_to_statespace(pr)
        assert m.n_states == 0
        np.testing.assert_array_equal(m.D, pr.D)

    def test_unstable(self):
        with pytest.raises(UnstablePole):
            pole_residue_to_statespace(PoleResidueModel([0.5], [[[1.0]]], [[0.0]]))

    @given(seed=st.integers(0, 2**32 - 1))
    def test_realization_matches(self, seed):
        rng = np.random.default_rng(seed)
        pr = random_pole_residue(rng, int(rng.integers(1, 9)), int(rng.integers(1, 4)))
        m = pole_residue_to_statespace(pr, rank_tolerance=0.0)
        s = 1j * np.logspace(-1, 3, 60)
        Z, Zr = eval_impedance_grid(m, s), eval_pole_residue_grid(pr, s)
        err = np.linalg.norm(Z - Zr, axis=(1, 2)) / np.linalg.norm(Zr, axis=(1, 2))
        assert err.max() < 1e-8
        assert np.all(np.isrealobj(m.A))


class TestHermitianPart:
    def test_first_order_limits(self):
        assert hermitian_part(first_order(), 0.0)[0, 0] == pytest.approx(1.0)
        assert abs(hermitian_part(first_order(), 1e9)[0, 0]) < 1e-17

    def test_lossless_is_zero(self):
        # z = s / (s^2 + 4): parallel LC tank
        m = companion_realization([0.0, 1.0], [4.0, 0.0])
        w = np.array([0.1, 1.0, 3.0, 10.0])
        assert np.abs(hermitian_part_grid(m, w)).max() < 1e-14

    def test_matches_complex_evaluation(self, rng):
        m = random_stable(rng, 6, 3)
        for w in (0.0, 0.5, 7.0, 80.0):
            Z = eval_impedance(m, 1j * w)
            ref = 0.5 * (Z + Z.conj().T)
            assert np.abs(hermitian_part(m, w) - ref.real).max() < 1e-11


class TestPositiveReal:
    def test_inductor(self):
        m = constant([[0.0]]).replace(E=np.array([[1.0]]))
        assert check_positive_real(m, grid=np.logspace(-2, 2, 50)).verdict == PrVerdict.PR

    def test_unstable(self):
        m = StateSpaceModel([[1.0]], [[1.0]], [[1.0]], [[0.0]])
        rep = check_positive_real(m)
        assert rep.verdict == PrVerdict.NOT_PR and not rep.is_stable

    def test_min_at_top_of_grid(self):
        m = first_order().replace(D=np.array([[2.0]]))
        grid = np.logspace(-2, 3, 400)
        rep = check_positive_real(m, grid)
        assert rep.verdict == PrVerdict.PR
        assert rep.omega_at_min == grid[-1]
        assert rep.min_hermitian_eig == pytest.approx(2.0 + 1 / (1 + grid[-1] ** 2))

    def test_negative_d(self):
        m = first_order().replace(D=np.array([[-0.01]]))
        assert check_positive_real(m).verdict == PrVerdict.NOT_PR

    def test_synthesized_models_pass(self, rng):
        from brunesynth import recompose_multiport
        from helpers import random_multiport
        for _ in range(5):
            c = random_multiport(rng, 2, 3)
            assert check_positive_real(recompose_multiport(c)).ok


def test_minimum_finds_narrow_dip():
    # R + series RLC branch: Re z dips to R + ... only near resonance; min at infinity is 1.0
    m = companion_realization([0.0, 1e-3], [1.0, 1e-3]).replace(D=np.array([[1.0]]))
    hm = minimize_hermitian_eig(m)
    w = np.logspace(-3, 3, 20001)
    brute = hermitian_part_grid(m, w)[:, 0, 0].min()
    assert hm.value <= brute + 1e-12
