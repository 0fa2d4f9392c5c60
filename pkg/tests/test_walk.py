import itertools

import numpy as np
import pytest

import _oracles as oracle
from qrwalk import (
    CoinSpec,
    InteractionSpec,
    ProductGraph,
    ResourceLimitError,
    ShiftSpec,
    ValidationError,
    WaveFunction,
    apply_coin,
    apply_interaction,
    apply_shift,
    build_graph,
    cycle_graph,
    step,
    vertex_distribution,
)

INV_SQRT2 = 1.0 / np.sqrt(2.0)


def random_state(graph, rng, walkers=1):
    dim = graph.basis_dim ** walkers
    amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    amps /= np.linalg.norm(amps)
    space = ProductGraph(graph, walkers) if walkers > 1 else graph
    return WaveFunction(space, amps)


def random_graph(rng, n):
    while True:
        edges = [(u, v) for u in range(n) for v in range(u + 1, n)
                 if rng.random() < 0.5]
        touched = set(itertools.chain.from_iterable(edges))
        if edges and len(touched) == n:
            return build_graph(edges)


class TestWaveFunction:
    def test_localized_is_point_mass(self, c4):
        psi = WaveFunction.localized(c4, 0, 0)
        assert psi.amplitudes[c4.basis_index(0, 0)] == 1.0
        assert np.count_nonzero(psi.amplitudes) == 1

    def test_unnormalised_rejected(self, c4):
        with pytest.raises(ValidationError, match="normalised"):
            WaveFunction(c4, np.ones(8))

    def test_wrong_dimension_rejected(self, c4):
        with pytest.raises(ValidationError, match="shape"):
            WaveFunction(c4, np.array([1.0, 0.0]))

    def test_from_components_renormalises_with_warning(self, c4):
        with pytest.warns(UserWarning, match="renormalised"):
            psi = WaveFunction.from_components(c4, [(0, 0, 2.0)])
        assert abs(np.linalg.norm(psi.amplitudes) - 1.0) < 1e-15

    def test_from_components_small_drift_is_silent(self, c4, recwarn):
        WaveFunction.from_components(c4, [(0, 0, 1.0 + 1e-10)])
        assert not recwarn.list

    def test_memory_budget_enforced(self, c4):
        pg = ProductGraph(c4, 2)
        with pytest.raises(ResourceLimitError):
            WaveFunction.localized(pg, (0, 0), (0, 0), memory_budget=100)

    def test_amplitudes_frozen(self, c4):
        psi = WaveFunction.localized(c4, 0, 0)
        with pytest.raises(ValueError):
            psi.amplitudes[0] = 0.0


class TestApplyCoin:
    def test_identity_leaves_state(self, c4, rng):
        psi = random_state(c4, rng)
        out = apply_coin(psi, CoinSpec.identity(c4))
        assert np.allclose(out.amplitudes, psi.amplitudes, atol=0)

    def test_hadamard_on_localized_c4(self, c4):
        psi = WaveFunction.localized(c4, 0, 0)
        out = apply_coin(psi, CoinSpec.hadamard(c4))
        assert abs(out.amplitudes[c4.basis_index(0, 0)] - INV_SQRT2) < 1e-15
        assert abs(out.amplitudes[c4.basis_index(0, 1)] - INV_SQRT2) < 1e-15

    def test_norm_preserved_on_random_states(self, rng):
        g = build_graph([(0, 1), (1, 2), (2, 0), (2, 3)])
        coin = CoinSpec.random_unitary(g, rng)
        for _ in range(5):
            psi = random_state(g, rng)
            out = apply_coin(psi, coin)
            assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-12

    def test_block_dimension_mismatch(self, c4, k5):
        with pytest.raises(ValidationError):
            apply_coin(WaveFunction.localized(k5, 0, 0), CoinSpec.hadamard(c4))


class TestApplyShift:
    def test_moving_shift_on_c4(self, c4):
        psi = WaveFunction.localized(c4, 0, 0)
        out = apply_shift(psi, ShiftSpec.moving(c4))
        assert out.amplitudes[c4.basis_index(1, 0)] == 1.0

    def test_moving_shift_cycles_back_after_n_steps(self):
        # hand-iterating the permutation on C4: (0,0)->(1,0)->(2,0)->(3,0)->(0,0)
        g = cycle_graph(4)
        shift = ShiftSpec.moving(g)
        psi = WaveFunction.localized(g, 0, 0)
        for _ in range(4):
            psi = apply_shift(psi, shift)
        assert psi.amplitudes[g.basis_index(0, 0)] == 1.0

    def test_flip_flop_is_involution(self, torus44, rng):
        shift = ShiftSpec.flip_flop(torus44)
        psi = random_state(torus44, rng)
        out = apply_shift(apply_shift(psi, shift), shift)
        assert np.allclose(out.amplitudes, psi.amplitudes, atol=0)

    def test_norm_preserved(self, torus44, rng):
        psi = random_state(torus44, rng)
        out = apply_shift(psi, ShiftSpec.moving(torus44))
        assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-12

    def test_moving_rejected_on_incompatible_port_order(self, c4_sorted):
        with pytest.raises(ValidationError, match="permutation"):
            ShiftSpec.moving(c4_sorted)

    def test_non_edge_permutation_rejected(self, c4):
        with pytest.raises(ValidationError, match="eta"):
            ShiftSpec.from_permutation(c4, np.arange(8))

    def test_non_bijection_rejected(self, c4):
        with pytest.raises(ValidationError, match="permutation"):
            ShiftSpec.from_permutation(c4, np.zeros(8, dtype=int))


class TestStep:
    def test_c4_hadamard_moving_one_step(self, c4):
        psi = step(WaveFunction.localized(c4, 0, 0),
                   CoinSpec.hadamard(c4), ShiftSpec.moving(c4))
        assert abs(psi.amplitudes[c4.basis_index(1, 0)] - INV_SQRT2) < 1e-15
        assert abs(psi.amplitudes[c4.basis_index(3, 1)] - INV_SQRT2) < 1e-15
        assert np.count_nonzero(psi.amplitudes) == 2

    def test_identity_coin_identity_shift_is_noop(self, c4, rng):
        psi = random_state(c4, rng)
        ident = ShiftSpec.from_permutation(c4, np.arange(8),
                                           enforce_edges=False)
        out = step(psi, CoinSpec.identity(c4), ident)
        assert np.allclose(out.amplitudes, psi.amplitudes, atol=0)

    def test_two_walkers_without_interaction_factorise(self, c4):
        coin, shift = CoinSpec.hadamard(c4), ShiftSpec.moving(c4)
        a = WaveFunction.localized(c4, 0, 0)
        b = WaveFunction.localized(c4, 2, 1)
        pg = ProductGraph(c4, 2)
        joint = WaveFunction(pg, np.kron(a.amplitudes, b.amplitudes))
        for t in range(3):
            joint = step(joint, coin, shift, t=t)
            a = step(a, coin, shift, t=t)
            b = step(b, coin, shift, t=t)
        assert np.max(np.abs(joint.amplitudes
                             - np.kron(a.amplitudes, b.amplitudes))) < 1e-10

    def test_per_walker_specs(self, c4):
        pg = ProductGraph(c4, 2)
        coins = [CoinSpec.hadamard(c4), CoinSpec.grover(c4)]
        shifts = [ShiftSpec.moving(c4), ShiftSpec.flip_flop(c4)]
        a = WaveFunction.localized(c4, 0, 0)
        b = WaveFunction.localized(c4, 1, 1)
        joint = WaveFunction(pg, np.kron(a.amplitudes, b.amplitudes))
        joint = step(joint, coins, shifts)
        a = step(a, coins[0], shifts[0])
        b = step(b, coins[1], shifts[1])
        assert np.max(np.abs(joint.amplitudes
                             - np.kron(a.amplitudes, b.amplitudes))) < 1e-12

    def test_schedule_resolved_per_step(self, c4):
        table = {0: CoinSpec.identity(c4), 1: CoinSpec.hadamard(c4)}
        coin = lambda t: table[t]  # noqa: E731
        shift = ShiftSpec.moving(c4)
        psi = WaveFunction.localized(c4, 0, 0)
        psi = step(psi, coin, shift, t=0)   # identity coin: pure move
        assert psi.amplitudes[c4.basis_index(1, 0)] == 1.0
        psi = step(psi, coin, shift, t=1)   # now the coin mixes
        assert np.count_nonzero(psi.amplitudes) == 2

    def test_interaction_requires_multiple_walkers(self, c4):
        pg = ProductGraph(c4, 2)
        psi = WaveFunction.localized(c4, 0, 0)
        with pytest.raises(ValidationError, match="two walkers"):
            step(psi, CoinSpec.hadamard(c4), ShiftSpec.moving(c4),
                 interaction=InteractionSpec.coincidence_phase(pg, np.pi))


class TestDenseOracle:
    """One engine step must equal explicit dense S.W (and S.W.U) products."""

    @pytest.mark.parametrize("seed", range(6))
    def test_single_walker_step_matches_dense(self, seed):
        rng = np.random.default_rng(1000 + seed)
        g = random_graph(rng, int(rng.integers(3, 9)))
        coin = CoinSpec.random_unitary(g, rng)
        shift = ShiftSpec.flip_flop(g)
        w = oracle.dense_coin(g, coin.blocks)
        s = oracle.dense_flip_flop_shift(g)
        psi = random_state(g, rng)
        expected = s @ w @ psi.amplitudes
        got = step(psi, coin, shift)
        assert np.max(np.abs(got.amplitudes - expected)) < 1e-10

    def test_moving_shift_matches_dense(self, torus44, rng):
        coin = CoinSpec.grover(torus44)
        w = oracle.dense_coin(torus44, coin.blocks)
        s = oracle.dense_moving_shift(torus44)
        psi = random_state(torus44, rng)
        got = step(psi, coin, ShiftSpec.moving(torus44))
        assert np.max(np.abs(got.amplitudes - s @ w @ psi.amplitudes)) < 1e-10

    def test_two_walker_step_with_interaction_matches_dense(self, c4, rng):
        pg = ProductGraph(c4, 2)
        coin = CoinSpec.hadamard(c4)
        shift = ShiftSpec.moving(c4)
        inter = InteractionSpec.coincidence_phase(pg, np.pi / 3)
        w = oracle.kron_power(oracle.dense_coin(c4, coin.blocks), 2)
        s = oracle.kron_power(oracle.dense_moving_shift(c4), 2)
        u = oracle.dense_coincidence_phase(c4, 2, np.pi / 3)
        psi = random_state(c4, rng, walkers=2)
        got = step(psi, coin, shift, interaction=inter)
        assert np.max(np.abs(got.amplitudes
                             - s @ w @ u @ psi.amplitudes)) < 1e-10

    def test_explicit_interaction_blocks_match_dense(self, c4, rng):
        pg = ProductGraph(c4, 2)
        blocks = {
            (0, 0): np.linalg.qr(rng.normal(size=(4, 4))
                                 + 1j * rng.normal(size=(4, 4)))[0],
            (1, 3): np.linalg.qr(rng.normal(size=(4, 4))
                                 + 1j * rng.normal(size=(4, 4)))[0],
        }
        inter = InteractionSpec.from_blocks(pg, blocks)
        dim = c4.basis_dim
        u = np.eye(dim * dim, dtype=np.complex128)
        offs = c4.port_offsets
        for (v1, v2), block in blocks.items():
            idx = [i * dim + j
                   for i in range(int(offs[v1]), int(offs[v1 + 1]))
                   for j in range(int(offs[v2]), int(offs[v2 + 1]))]
            u[np.ix_(idx, idx)] = block
        psi = random_state(c4, rng, walkers=2)
        got = apply_interaction(psi, inter)
        assert np.max(np.abs(got.amplitudes - u @ psi.amplitudes)) < 1e-12


class TestInteractionLocality:
    def test_interaction_never_moves_walkers(self, c4, rng):
        pg = ProductGraph(c4, 2)
        inter = InteractionSpec.from_blocks(pg, {
            (2, 2): np.linalg.qr(rng.normal(size=(4, 4)))[0],
        })
        dim = c4.basis_dim
        for i in range(dim * dim):
            amps = np.zeros(dim * dim, dtype=np.complex128)
            amps[i] = 1.0
            out = apply_interaction(WaveFunction(pg, amps), inter)
            src = (c4.vertex_of_basis[i // dim], c4.vertex_of_basis[i % dim])
            for j in np.flatnonzero(np.abs(out.amplitudes) > 1e-14):
                tgt = (c4.vertex_of_basis[j // dim],
                       c4.vertex_of_basis[j % dim])
                assert tgt == src

    def test_non_unitary_block_rejected(self, c4):
        pg = ProductGraph(c4, 2)
        with pytest.raises(ValidationError):
            InteractionSpec.from_blocks(pg, {(0, 0): np.ones((4, 4))})


class TestVertexDistribution:
    def test_localized(self, c4):
        rho = vertex_distribution(WaveFunction.localized(c4, 0, 0))
        assert np.array_equal(rho, [1, 0, 0, 0])

    def test_c4_after_one_step(self, c4):
        psi = step(WaveFunction.localized(c4, 0, 0),
                   CoinSpec.hadamard(c4), ShiftSpec.moving(c4))
        assert np.allclose(vertex_distribution(psi), [0, 0.5, 0, 0.5],
                           atol=1e-15)

    def test_conservation_over_long_runs(self, rng):
        g = random_graph(rng, 6)
        coin = CoinSpec.random_unitary(g, rng)
        shift = ShiftSpec.flip_flop(g)
        psi = random_state(g, rng)
        for t in range(50):
            psi = step(psi, coin, shift, t=t)
            assert abs(vertex_distribution(psi).sum() - 1.0) < 1e-10

    def test_two_walker_distribution_shape(self, c4):
        pg = ProductGraph(c4, 2)
        psi = WaveFunction.localized(pg, (1, 2), (0, 1))
        rho = vertex_distribution(psi)
        assert rho.shape == (16,)
        assert rho[pg.tuple_index((1, 2))] == 1.0
