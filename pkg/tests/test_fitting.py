import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brunesynth.brune_multiport import recompose_multiport
from brunesynth.errors import DimensionMismatch, EmptyInput, UnstablePole, ValidationError
from brunesynth.fitting import VectorFitConfig, enforce_passivity, fit_error, initial_poles, vector_fit
from brunesynth.model_core import (
    FrequencySamples,
    PoleResidueModel,
    eval_impedance_grid,
    eval_pole_residue_grid,
    hermitian_part_grid,
    pole_residue_to_statespace,
)

from helpers import random_multiport, random_pole_residue

OMEGA = np.logspace(-1, 3, 300)


def sample(pr: PoleResidueModel, omega=OMEGA) -> FrequencySamples:
    return FrequencySamples(omega, eval_pole_residue_grid(pr, 1j * omega))


def min_hermitian_eig(pr: PoleResidueModel, omega) -> float:
    return float(np.linalg.eigvalsh(hermitian_part_grid(pole_residue_to_statespace(pr, rank_tolerance=0.0),
                                                        omega)).min())


class TestVectorFit:
    def test_first_order(self):
        samples = sample(PoleResidueModel([-1.0], [[[1.0]]], [[0.0]]))
        fit = vector_fit(samples, 1)
        assert fit.poles[0] == pytest.approx(-1.0, rel=1e-9)
        assert fit.residues[0, 0, 0] == pytest.approx(1.0, rel=1e-9)
        assert fit_error(samples, fit).max_rel < 1e-10

    def test_constant(self):
        samples = FrequencySamples(OMEGA, np.full(len(OMEGA), 3.0 + 0j))
        fit = vector_fit(samples, 0)
        assert fit.n_poles == 0 and fit.D[0, 0] == pytest.approx(3.0)

    def test_brune_two_port(self, rng):
        c = random_multiport(rng, 2, 2, p_degenerate=0.0, unit_scale=True)
        m = recompose_multiport(c)
        w = np.logspace(-2, 2, 400)
        samples = FrequencySamples(w, eval_impedance_grid(m, 1j * w))
        fit = vector_fit(samples, m.n_states)
        assert fit_error(samples, fit).max_rel < 1e-7
        assert np.all(fit.poles.real < 0)

    @settings(max_examples=15)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_recovers_random_models(self, seed):
        rng = np.random.default_rng(seed)
        pr = random_pole_residue(rng, int(rng.integers(1, 9)), int(rng.integers(1, 4)))
        samples = sample(pr)
        fit = vector_fit(samples, pr.n_poles)
        assert fit_error(samples, fit).max_rel < 1e-7
        assert np.all(fit.poles.real < 0)

    def test_symmetry_preserved(self, rng):
        fit = vector_fit(sample(random_pole_residue(rng, 4, 3)), 4)
        np.testing.assert_array_equal(fit.D, fit.D.T)
        np.testing.assert_array_equal(fit.residues, np.transpose(fit.residues, (0, 2, 1)))

    def test_nonsymmetric_data(self, rng):
        pr = random_pole_residue(rng, 4, 2, symmetric=False)
        samples = sample(pr)
        fit = vector_fit(samples, 4)
        assert fit_error(samples, fit).max_rel < 1e-7

    def test_conjugate_closed_poles(self, rng):
        fit = vector_fit(sample(random_pole_residue(rng, 6, 1)), 6)
        np.testing.assert_allclose(np.sort_complex(fit.poles), np.sort_complex(fit.poles.conj()), rtol=1e-12)

    def test_slope_term(self):
        w = np.logspace(-1, 2, 200)
        s = 1j * w
        samples = FrequencySamples(w, 2e-2 * s + 1 / (s + 3))
        fit = vector_fit(samples, 1, config=VectorFitConfig(fit_e=True))
        assert fit.E[0, 0] == pytest.approx(2e-2, rel=1e-8)

    def test_input_checks(self):
        samples = sample(PoleResidueModel([-1.0], [[[1.0]]], [[0.0]]))
        with pytest.raises(ValidationError):
            vector_fit(samples, -1)
        with pytest.raises(EmptyInput):
            vector_fit(FrequencySamples([1.0], [1.0 + 0j]), 1)
        with pytest.raises(ValidationError):
            vector_fit(samples, 2, initial=[-1.0])

    def test_initial_poles_stable(self):
        p = initial_poles(OMEGA, 7)
        assert len(p) == 7 and np.all(p.real < 0)


class TestFitError:
    def test_zero_for_exact(self, rng):
        pr = random_pole_residue(rng, 4, 2)
        assert fit_error(sample(pr), pr).max_rel < 1e-14

    def test_relative_scale(self):
        # data D = 1, model D = 2: relative error exactly 1 everywhere
        samples = FrequencySamples(OMEGA, np.ones(len(OMEGA), complex))
        err = fit_error(samples, PoleResidueModel(np.zeros(0), np.zeros((0, 1, 1)), [[2.0]]))
        assert err.max_rel == pytest.approx(1.0) and err.rms == pytest.approx(1.0)

    def test_port_mismatch(self, rng):
        with pytest.raises(DimensionMismatch):
            fit_error(sample(random_pole_residue(rng, 2, 2)), random_pole_residue(rng, 2, 1))

    def test_empty_samples(self):
        with pytest.raises(EmptyInput):
            FrequencySamples(np.zeros(0), np.zeros(0, complex))


class TestPassivity:
    def test_passive_model_unchanged(self):
        pr = PoleResidueModel([-1.0], [[[1.0]]], [[0.5]])
        res = enforce_passivity(pr)
        assert res.perturbation_norm == 0.0 and res.model is pr and not res.changed

    def test_negative_constant(self):
        pr = PoleResidueModel([-1.0], [[[1.0]]], [[-0.01]])
        w = np.logspace(-2, 4, 2000)
        assert min_hermitian_eig(pr, w) < 0
        res = enforce_passivity(pr)
        assert res.changed and res.min_eig_before < 0
        assert min_hermitian_eig(res.model, w) >= -1e-12
        assert res.model.D[0, 0] >= 0

    def test_rank_one_two_port(self):
        v = np.array([1.0, -1.0]) / np.sqrt(2)
        D = np.eye(2) * 0.5 - 0.6 * np.outer(v, v)
        R = np.array([[[2.0, 0.3], [0.3, 1.0]]])
        pr = PoleResidueModel([-5.0], R, D)
        w = np.logspace(-2, 4, 2000)
        assert min_hermitian_eig(pr, w) < 0
        res = enforce_passivity(pr)
        assert min_hermitian_eig(res.model, w) >= -1e-12
        np.testing.assert_allclose(res.model.D, res.model.D.T)

    def test_idempotent(self):
        pr = PoleResidueModel([-1.0], [[[1.0]]], [[-0.01]])
        first = enforce_passivity(pr).model
        second = enforce_passivity(first)
        assert second.perturbation_norm == 0.0
        assert fit_error(sample(first), second.model).max_rel < 1e-12

    def test_unstable(self):
        with pytest.raises(UnstablePole):
            enforce_passivity(PoleResidueModel([1.0], [[[1.0]]], [[1.0]]))
