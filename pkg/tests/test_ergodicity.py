import numpy as np
import pytest

from qds.ergodicity import (
    DensityMatrix, ergodicity_reduction_equivalence, invariant_states,
    is_positive_recurrent, strong_ergodicity_check, support_projection,
)
from qds.errors import StructuralError
from qds.models import predual_superoperator, apply_map
from qds.projections import is_subharmonic
from qds.rand import random_kraus_model
from qds.spectral import evolve_predual

from conftest import SQ5, trace_distance_oracle


class TestInvariantStates:
    def test_damping_unique_ground_state(self, amplitude_damping):
        inv = invariant_states(amplitude_damping)
        assert len(inv.basis) == 1
        assert len(inv.states) == 1
        assert np.allclose(inv.states[0].matrix, np.diag([1.0, 0.0]), atol=1e-9)

    def test_identity_channel_everything_invariant(self, identity_channel):
        inv = invariant_states(identity_channel)
        assert len(inv.basis) == 4
        assert len(inv.states) == 2
        # seed-deterministic orthogonal pure states
        s1, s2 = inv.states
        assert np.trace(s1.matrix @ s2.matrix).real == pytest.approx(0.0, abs=1e-9)

    def test_absorbing_chain_point_masses(self, absorbing_chain):
        inv = invariant_states(absorbing_chain)
        supports = {tuple(np.round(np.diag(s.matrix).real, 6))
                    for s in inv.states}
        assert supports == {(1.0, 0.0, 0.0), (0.0, 0.0, 1.0)}

    def test_states_are_fixed_points(self, amplitude_damping, absorbing_chain):
        for model in (amplitude_damping, absorbing_chain):
            inv = invariant_states(model)
            sp = predual_superoperator(model)
            for state in inv.states:
                assert np.linalg.norm(
                    apply_map(sp, state.matrix) - state.matrix, 2) <= 1e-9

    def test_supports_are_subharmonic(self, absorbing_chain):
        inv = invariant_states(absorbing_chain)
        for state in inv.states:
            support = support_projection(state)
            assert is_subharmonic(absorbing_chain, support).verdict


class TestSupportProjection:
    def test_pure_state(self):
        rho = DensityMatrix.from_matrix(np.diag([1.0, 0.0]))
        assert np.allclose(support_projection(rho).matrix, np.diag([1.0, 0.0]))

    def test_full_support(self):
        rho = DensityMatrix.from_matrix(np.diag([0.5, 0.5]))
        assert support_projection(rho).rank == 2

    def test_eigenvalue_cutoff(self):
        rho = DensityMatrix.from_matrix(np.diag([0.5, 0.5, 0.0]))
        assert np.allclose(support_projection(rho).matrix,
                           np.diag([1.0, 1.0, 0.0]))

    def test_bad_density_matrix_rejected(self):
        with pytest.raises(StructuralError):
            DensityMatrix.from_matrix(np.diag([2.0, 0.0]))
        with pytest.raises(StructuralError):
            DensityMatrix.from_matrix(np.diag([1.5, -0.5]))


class TestPositiveRecurrence:
    def test_damping_ground_corner(self, amplitude_damping):
        assert is_positive_recurrent(amplitude_damping, np.diag([1.0, 0.0]))

    def test_absorbing_state(self, absorbing_chain):
        assert is_positive_recurrent(absorbing_chain,
                                     np.diag([0.0, 0.0, 1.0]))

    def test_identity_channel_pure_states(self, identity_channel):
        rng = np.random.default_rng(4)
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        v /= np.linalg.norm(v)
        assert is_positive_recurrent(identity_channel, np.outer(v, v.conj()))

    def test_non_minimal_rejected(self, amplitude_damping):
        with pytest.raises(StructuralError, match="minimal"):
            is_positive_recurrent(amplitude_damping, np.eye(2))

    def test_resolve_output_is_positive_recurrent(self, absorbing_chain):
        from qds.resolution import resolve

        res = resolve(absorbing_chain, seed=3)
        for p in res.recurrent_projections:
            assert is_positive_recurrent(absorbing_chain, p)


class TestStrongErgodicity:
    def test_damping_holds(self, amplitude_damping):
        report = strong_ergodicity_check(amplitude_damping)
        assert report.holds
        assert report.gap == pytest.approx(1.0 - SQ5, abs=1e-9)
        assert np.allclose(report.phi0.matrix, np.diag([1.0, 0.0]), atol=1e-8)

    def test_identity_channel_fails(self, identity_channel):
        report = strong_ergodicity_check(identity_channel)
        assert not report.holds
        assert report.phi0 is None

    def test_dephasing_fails(self, dephasing):
        assert not strong_ergodicity_check(dephasing).holds

    def test_decay_rate_matches_gap(self, amplitude_damping):
        # fitted trace-norm decay rate vs the spectral prediction
        report = strong_ergodicity_check(amplitude_damping)
        r = 1.0 - report.gap  # largest sub-peripheral modulus
        rng = np.random.default_rng(8)
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        v /= np.linalg.norm(v)
        rho = np.outer(v, v.conj())
        steps = np.arange(10, 40, 4)
        dists = []
        for n in steps:
            rho_n = evolve_predual(amplitude_damping, rho, n=int(n))
            dists.append(trace_distance_oracle(rho_n, report.phi0.matrix))
        slope = np.polyfit(steps, np.log(dists), 1)[0]
        assert abs(-slope - (-np.log(r))) <= 0.2 * abs(np.log(r))


class TestReductionEquivalence:
    def test_damping(self, amplitude_damping):
        eq = ergodicity_reduction_equivalence(amplitude_damping,
                                              np.diag([1.0, 0.0]))
        assert eq.full and eq.reduced and eq.y_is_one and eq.consistent

    def test_dephasing_vacuous(self, dephasing):
        eq = ergodicity_reduction_equivalence(dephasing, np.diag([1.0, 0.0]))
        assert not eq.y_is_one
        assert eq.consistent

    def test_absorbing_chain_vacuous(self, absorbing_chain):
        eq = ergodicity_reduction_equivalence(absorbing_chain,
                                              np.diag([1.0, 0.0, 0.0]))
        assert not eq.y_is_one
        assert not eq.full and eq.reduced
        assert eq.consistent

    def test_rejects_non_support(self, amplitude_damping):
        # the full space is sub-harmonic but no invariant state has full
        # support for the damping channel
        with pytest.raises(StructuralError, match="support"):
            ergodicity_reduction_equivalence(amplitude_damping, np.eye(2))

    def test_random_models_consistent(self):
        rng = np.random.default_rng(14)
        for i in range(5):
            model = random_kraus_model(rng, 3, 2)
            inv = invariant_states(model, seed=50 + i)
            for state in inv.states:
                support = support_projection(state)
                eq = ergodicity_reduction_equivalence(model, support,
                                                      seed=50 + i)
                assert eq.consistent
