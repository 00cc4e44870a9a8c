import numpy as np
import pytest
import scipy.linalg

from qds.errors import ConvergenceError, StructuralError
from qds.models import Tolerances, lindblad_model
from qds.picard import picard_iterate, picard_limit
from qds.rand import random_hermitian, random_lindblad_model
from qds.spectral import evolve_heisenberg

from conftest import dag

SX = np.array([[0, 1], [1, 0]], dtype=complex)


class TestPicardIterate:
    def test_zeroth_iterate_is_conjugation(self, amplitude_damping_lindblad):
        model = amplitude_damping_lindblad
        trace = picard_iterate(model, np.eye(2), 1.0, 0, steps=16)
        e = scipy.linalg.expm(model.drift)
        assert np.allclose(trace.iterates[0], dag(e) @ e, atol=1e-12)
        # strictly below the identity when dissipation is present
        assert np.linalg.eigvalsh(trace.iterates[0])[0] < 1.0

    def test_zero_generator_is_static(self):
        model = lindblad_model(np.zeros((2, 2)), [])
        rng = np.random.default_rng(3)
        x = random_hermitian(rng, 2)
        trace = picard_iterate(model, x, 2.0, 4, steps=16)
        for it in trace.iterates:
            assert np.allclose(it, x, atol=1e-12)

    def test_damping_approaches_closed_form(self, amplitude_damping_lindblad):
        x = np.diag([1.0, 0.0]).astype(complex)
        trace = picard_iterate(amplitude_damping_lindblad, x, 1.0, 8,
                               steps=128)
        target = np.diag([1.0, 1.0 - np.exp(-1.0)])
        assert np.linalg.norm(trace.iterates[-1] - target, 2) <= 1e-6

    def test_monotone_and_bounded_for_psd(self):
        rng = np.random.default_rng(5)
        model = random_lindblad_model(rng, 3, 2, jump_scale=0.7)
        g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        x = g @ dag(g)
        trace = picard_iterate(model, x, 0.8, 10, steps=32)
        norm_x = np.linalg.norm(x, 2)
        for a, b in zip(trace.iterates, trace.iterates[1:]):
            assert np.linalg.eigvalsh(b - a)[0] >= -1e-8
        for it in trace.iterates:
            assert np.linalg.norm(it, 2) <= norm_x + 1e-8

    def test_discrete_models_rejected(self, amplitude_damping):
        with pytest.raises(StructuralError, match="continuous"):
            picard_iterate(amplitude_damping, np.eye(2), 1.0, 3)

    def test_preconditions(self, amplitude_damping_lindblad):
        model = amplitude_damping_lindblad
        with pytest.raises(StructuralError):
            picard_iterate(model, np.eye(2), -1.0, 3)
        with pytest.raises(StructuralError):
            picard_iterate(model, np.eye(2), 1.0, 3, steps=4)
        with pytest.raises(StructuralError):
            picard_iterate(model, np.array([[0, 1], [0, 0]]), 1.0, 3)


class TestPicardLimit:
    def test_identity_is_conserved(self, amplitude_damping_lindblad):
        res = picard_limit(amplitude_damping_lindblad, np.eye(2), 1.0,
                           steps=64)
        assert np.linalg.norm(res.value - np.eye(2), 2) <= 1e-9

    def test_damping_closed_form(self, amplitude_damping_lindblad):
        x = np.diag([1.0, 0.0]).astype(complex)
        res = picard_limit(amplitude_damping_lindblad, x, 1.0, steps=256)
        target = np.diag([1.0, 1.0 - np.exp(-1.0)])
        assert np.linalg.norm(res.value - target, 2) <= 1e-6
        assert res.exp_mismatch <= 1e-6
        assert res.integral_residual <= 1e-9

    def test_dephasing_matches_exponential(self, dephasing):
        res = picard_limit(dephasing, SX, 1.0, steps=256)
        direct = evolve_heisenberg(dephasing, SX, t=1.0)
        assert np.linalg.norm(res.value - direct, 2) <= 1e-6

    def test_quadrature_is_fourth_order(self, amplitude_damping_lindblad):
        x = np.diag([1.0, 0.0]).astype(complex)
        exact = np.diag([1.0, 1.0 - np.exp(-1.0)])
        errs = {}
        for steps in (64, 128):
            res = picard_limit(amplitude_damping_lindblad, x, 1.0,
                               steps=steps)
            errs[steps] = np.linalg.norm(res.value - exact, 2)
        assert 8.0 <= errs[64] / errs[128] <= 32.0

    def test_nonconvergence_raises(self, amplitude_damping_lindblad):
        x = np.diag([1.0, 0.0]).astype(complex)
        with pytest.raises(ConvergenceError, match="converge"):
            picard_limit(amplitude_damping_lindblad, x, 1.0, max_n=1,
                         tol=Tolerances(conv_tol=1e-14), steps=16)

    def test_integral_equation_residual(self):
        rng = np.random.default_rng(9)
        model = random_lindblad_model(rng, 2, 1, jump_scale=0.8)
        x = random_hermitian(rng, 2)
        res = picard_limit(model, x, 0.7, steps=64)
        assert res.integral_residual <= 10 * Tolerances().conv_tol
