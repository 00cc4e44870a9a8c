import numpy as np
import pytest

from qds.errors import StructuralError
from qds.models import lindblad_model
from qds.projections import Projection
from qds.rand import (
    random_block_diagonal_kraus, random_block_diagonal_lindblad,
    random_hermitian, random_kraus_model, random_kraus_with_invariant_subspace,
    random_lindblad_model, random_lindblad_with_invariant_subspace,
)
from qds.resolution import (
    classify_projection, commutant_dimension, find_harmonic_projection,
    is_irreducible, is_transient_complement, minimal_subharmonic,
    reachability_closure, resolve,
)
from qds.spectral import evolve_heisenberg

from conftest import dag


class TestReachability:
    def test_damping_reaches_everything(self, amplitude_damping):
        assert reachability_closure(amplitude_damping,
                                    np.diag([1.0, 0.0])).dim == 2

    def test_identity_channel_adds_nothing(self, identity_channel):
        assert reachability_closure(identity_channel,
                                    np.diag([1.0, 0.0])).dim == 1

    def test_absorbing_chain_unreachable_state(self, absorbing_chain):
        closure = reachability_closure(absorbing_chain,
                                       np.diag([1.0, 0.0, 0.0]))
        assert closure.dim == 2
        # state 2 never feeds states 0 or 1
        for col in closure.basis.T:
            assert abs(col[2]) <= 1e-9


class TestTransience:
    def test_damping_complement_transient(self, amplitude_damping):
        res = is_transient_complement(amplitude_damping, np.diag([1.0, 0.0]))
        assert res.transient and res.metastable
        assert res.min_eig_y == pytest.approx(1.0, abs=1e-9)

    def test_harmonic_corner_not_metastable(self, dephasing):
        res = is_transient_complement(dephasing, np.diag([1.0, 0.0]))
        assert not res.metastable and not res.transient
        assert res.min_eig_y == pytest.approx(0.0, abs=1e-10)

    def test_absorbing_chain_kernel(self, absorbing_chain):
        res = is_transient_complement(absorbing_chain,
                                      np.diag([1.0, 0.0, 0.0]))
        assert not res.metastable
        assert res.closure_dim == 2

    def test_requires_subharmonic(self, amplitude_damping):
        with pytest.raises(StructuralError):
            is_transient_complement(amplitude_damping, np.diag([0.0, 1.0]))


class TestMinimalSubharmonic:
    def test_damping_unique_minimal(self, amplitude_damping):
        for seed in (0, 1, 2, 3):
            p = minimal_subharmonic(amplitude_damping,
                                    Projection.identity(2), seed=seed)
            assert np.allclose(p.matrix, np.diag([1.0, 0.0]), atol=1e-9)

    def test_identity_channel_seed_dependent(self, identity_channel):
        p1 = minimal_subharmonic(identity_channel, Projection.identity(2),
                                 seed=1)
        p2 = minimal_subharmonic(identity_channel, Projection.identity(2),
                                 seed=2)
        assert p1.rank == p2.rank == 1
        assert np.linalg.norm(p1.matrix - p2.matrix, 2) > 1e-6
        # deterministic per seed
        again = minimal_subharmonic(identity_channel, Projection.identity(2),
                                    seed=1)
        assert np.allclose(p1.matrix, again.matrix)

    def test_absorbing_chain_closed_states(self, absorbing_chain):
        seen = set()
        for seed in range(6):
            p = minimal_subharmonic(absorbing_chain, Projection.identity(3),
                                    seed=seed)
            support = tuple(sorted(p.diagonal_support()))
            assert support in ((0,), (2,))
            seen.add(support)
        assert len(seen) == 2  # both closed classes appear across seeds

    def test_zero_within_rejected(self, amplitude_damping):
        with pytest.raises(StructuralError):
            minimal_subharmonic(amplitude_damping, Projection.zero(2))


class TestClassify:
    def test_damping_labels(self, amplitude_damping):
        assert classify_projection(amplitude_damping,
                                   np.diag([1.0, 0.0])).label == "positive_recurrent"
        assert classify_projection(amplitude_damping,
                                   np.eye(2)).label == "subharmonic_nonminimal"
        assert classify_projection(amplitude_damping,
                                   np.diag([0.0, 1.0])).label == "not_subharmonic"

    def test_certificate_contents(self, amplitude_damping):
        cls = classify_projection(amplitude_damping, np.diag([1.0, 0.0]))
        cert = cls.certificate
        assert np.allclose(cert.invariant_state, np.diag([1.0, 0.0]), atol=1e-9)
        assert cert.complement_transient and cert.complement_metastable
        assert cert.closure_dim == 2


class TestResolve:
    def test_absorbing_chain(self, absorbing_chain):
        res = resolve(absorbing_chain, seed=1)
        supports = {tuple(sorted(p.diagonal_support()))
                    for p in res.recurrent_projections}
        assert supports == {(0,), (2,)}
        assert sorted(res.metastable_remainder.diagonal_support()) == [1]
        assert np.allclose(res.y_total, np.eye(3), atol=1e-8)
        assert all(c.label == "positive_recurrent" for c in res.certificates)
        assert res.remainder_certificate.label == "transient"

    def test_damping(self, amplitude_damping):
        res = resolve(amplitude_damping, seed=1)
        assert len(res.recurrent_projections) == 1
        assert np.allclose(res.recurrent_projections[0].matrix,
                           np.diag([1.0, 0.0]), atol=1e-9)
        assert res.metastable_remainder.rank == 1
        assert res.remainder_certificate.label == "transient"

    def test_identity_channel_seeds_differ(self, identity_channel):
        r1 = resolve(identity_channel, seed=1)
        r2 = resolve(identity_channel, seed=2)
        for res in (r1, r2):
            assert len(res.recurrent_projections) == 2
            assert res.metastable_remainder.rank == 0
        gap = sum(np.linalg.norm(a.matrix - b.matrix, 2) for a, b in
                  zip(r1.recurrent_projections, r2.recurrent_projections))
        assert gap > 1e-6

    def test_invariants_on_random_models(self):
        rng = np.random.default_rng(61)
        models = []
        for _ in range(4):
            models.append(random_kraus_model(rng, int(rng.integers(2, 5)), 2))
        for _ in range(3):
            models.append(random_lindblad_model(rng, int(rng.integers(2, 4)), 1))
        for _ in range(3):
            models.append(random_kraus_with_invariant_subspace(
                rng, 4, int(rng.integers(1, 4)))[0])
        for i, model in enumerate(models):
            res = resolve(model, seed=100 + i)
            d = model.dim
            parts = res.recurrent_projections
            for a in range(len(parts)):
                for b in range(a + 1, len(parts)):
                    assert np.linalg.norm(
                        parts[a].matrix @ parts[b].matrix, 2) <= 1e-8
            total = sum(p.matrix for p in parts) + res.metastable_remainder.matrix
            assert np.linalg.norm(total - np.eye(d), 2) <= 1e-8
            assert np.linalg.eigvalsh(res.y_total)[0] > 1e-9

    def test_unique_recurrent_implies_unique_invariant_state(
            self, amplitude_damping):
        from qds.ergodicity import invariant_states

        res = resolve(amplitude_damping, seed=1)
        assert len(res.recurrent_projections) == 1
        inv = invariant_states(amplitude_damping)
        assert len(inv.basis) == 1

    def test_maximal_subharmonic_converges_to_identity(self, amplitude_damping):
        # complement of a maximal sub-harmonic projection is finite
        # dimensional, so the orbit reaches the identity
        p = np.diag([1.0, 0.0]).astype(complex)
        out = evolve_heisenberg(amplitude_damping, p, n=80)
        assert np.linalg.norm(out - np.eye(2), 2) <= 1e-6


class TestCommutant:
    def test_dephasing_diagonals(self, dephasing):
        assert commutant_dimension(dephasing) == 2

    def test_damping_scalars(self, amplitude_damping_lindblad):
        assert commutant_dimension(amplitude_damping_lindblad) == 1

    def test_distinct_spectrum_hamiltonian(self):
        rng = np.random.default_rng(71)
        for d in (2, 3, 4):
            h = np.diag(np.arange(1.0, d + 1.0))
            u = np.linalg.qr(rng.standard_normal((d, d))
                             + 1j * rng.standard_normal((d, d)))[0]
            model = lindblad_model(u @ h @ dag(u), [])
            assert commutant_dimension(model) == d

    def test_kraus_kind_rejected(self, amplitude_damping):
        with pytest.raises(StructuralError):
            commutant_dimension(amplitude_damping)


class TestIrreducibility:
    def test_fixture_verdicts(self, amplitude_damping_lindblad, dephasing,
                              amplitude_damping, identity_channel,
                              absorbing_chain):
        assert is_irreducible(amplitude_damping_lindblad)
        assert not is_irreducible(dephasing)
        assert is_irreducible(amplitude_damping)
        assert not is_irreducible(identity_channel)
        # two closed classes, yet no harmonic projection exists
        assert is_irreducible(absorbing_chain)

    def test_harmonic_witness_for_block_channels(self):
        rng = np.random.default_rng(81)
        model = random_block_diagonal_kraus(rng, (2, 2))
        witness = find_harmonic_projection(model, seed=5)
        assert witness is not None
        from qds.projections import is_harmonic

        assert is_harmonic(model, witness)

    def test_routes_agree_on_lindblad_models(self):
        rng = np.random.default_rng(91)
        for i in range(6):
            if i % 3 == 0:
                model = random_lindblad_model(rng, 3, 2)
            elif i % 3 == 1:
                model = random_block_diagonal_lindblad(rng, (2, 2), 1)
            else:
                model = random_lindblad_with_invariant_subspace(rng, 4, 2)[0]
            commutant_route = commutant_dimension(model) == 1
            search_route = find_harmonic_projection(model, seed=i) is None
            assert commutant_route == search_route
