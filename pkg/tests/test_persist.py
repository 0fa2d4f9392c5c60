import json

import numpy as np
import pytest

from qrwalk import (
    CoinSpec,
    ConfigError,
    ProductGraph,
    ShiftSpec,
    WaveFunction,
    build_sequence,
    sample_ensemble,
)
from qrwalk.persist import (
    RunManifest,
    Table,
    coin_from_json,
    graph_and_spaces,
    initial_state_from_json,
    interaction_from_json,
    load_sequence,
    manifest_for,
    matrix_table,
    read_table,
    rho_table,
    save_sequence,
    shift_from_json,
    trajectories_table,
    write_table,
)


@pytest.fixture
def c4_seq(c4):
    return build_sequence(c4, CoinSpec.hadamard(c4), ShiftSpec.moving(c4),
                          WaveFunction.localized(c4, 0, 0), 6)


class TestTables:
    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_round_trip(self, tmp_path, fmt):
        table = Table(["a", "b"], [[1, 0.1], [2, 0.2]], {"states": 4})
        path = write_table(tmp_path / "t", table, fmt)
        back = read_table(tmp_path / "t")
        assert back.header == ["a", "b"]
        assert int(back.meta["states"]) == 4
        assert float(back.rows[0][1]) == 0.1
        assert path.suffix == f".{fmt}"

    def test_float_round_trip_is_exact(self, tmp_path):
        value = 1.0 / 3.0 + 1e-16
        write_table(tmp_path / "t", Table(["x"], [[value]]), "csv")
        back = read_table(tmp_path / "t")
        assert float(back.rows[0][0]) == value

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            write_table(tmp_path / "t", Table(["x"], []), "xml")


class TestSequenceRoundTrip:
    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_load_reproduces_rho_and_matrices(self, tmp_path, c4_seq, fmt):
        save_sequence(tmp_path, c4_seq, fmt=fmt)
        loaded = load_sequence(tmp_path)
        assert np.array_equal(loaded.rho, c4_seq.rho)
        for a, b in zip(loaded.matrices, c4_seq.matrices):
            assert np.array_equal(a.toarray(), b.toarray())

    def test_sampling_from_loaded_matches_original(self, tmp_path, c4_seq):
        save_sequence(tmp_path, c4_seq)
        loaded = load_sequence(tmp_path)
        a = sample_ensemble(c4_seq, 40, master_seed=6)
        b = sample_ensemble(loaded, 40, master_seed=6)
        assert np.array_equal(a.paths, b.paths)

    def test_multiwalker_tuple_labels(self, tmp_path, c4):
        pg = ProductGraph(c4, 2)
        seq = build_sequence(pg, CoinSpec.hadamard(c4), ShiftSpec.moving(c4),
                             WaveFunction.localized(pg, (0, 0), (0, 0)), 3)
        save_sequence(tmp_path, seq)
        data_rows = [line for line in
                     (tmp_path / "p_matrix.csv").read_text().splitlines()
                     if not line.startswith("#")][1:]
        assert all("|" in row for row in data_rows)
        loaded = load_sequence(tmp_path)
        assert loaded.num_walkers == 2
        assert np.array_equal(loaded.rho, seq.rho)


class TestManifest:
    def test_sha_stable_and_round_trip(self, tmp_path, c4):
        config = {"graph": {"type": "cycle", "n": 4},
                  "coin": {"type": "hadamard"},
                  "shift": {"type": "moving"}, "horizon": 5, "seed": 1}
        m1 = manifest_for(config, "equivalence", c4)
        m2 = manifest_for(config, "equivalence", c4)
        assert m1.sha256 == m2.sha256
        m1.save(tmp_path)
        back = RunManifest.load(tmp_path)
        assert back.sha256 == m1.sha256
        assert back.rng_algorithm == "numpy-PCG64"

    def test_params_change_the_hash(self, c4):
        config = {"graph": {"type": "cycle", "n": 4}}
        m1 = manifest_for(config, "sample", c4, ensemble_size=10)
        m2 = manifest_for(config, "sample", c4, ensemble_size=20)
        assert m1.sha256 != m2.sha256


class TestSpecParsing:
    def test_named_coins(self, c4):
        assert coin_from_json({"type": "hadamard"}, c4).name == "hadamard"
        assert coin_from_json({"type": "grover"}, c4).name == "grover"

    def test_explicit_coin_blocks(self, c4):
        h = (1 / np.sqrt(2)) * np.array([[1, 1], [1, -1]])
        doc = {"type": "explicit",
               "blocks": [[[float(x), 0.0] for x in row] for row in h]}
        spec = coin_from_json({"type": "explicit",
                               "blocks": [doc["blocks"]] * 4}, c4)
        assert np.allclose(spec.blocks[0], h)

    def test_coin_schedule(self, c4):
        coin = coin_from_json({"schedule": {"2": {"type": "grover"}},
                               "default": {"type": "hadamard"}}, c4)
        assert coin(0).name == "hadamard"
        assert coin(2).name == "grover"

    def test_unknown_coin_type(self, c4):
        with pytest.raises(ConfigError):
            coin_from_json({"type": "fourier"}, c4)

    def test_shifts(self, c4):
        assert shift_from_json({"type": "moving"}, c4).name == "moving"
        assert shift_from_json({"type": "flip-flop"}, c4).name == "flip-flop"
        perm = shift_from_json(
            {"type": "explicit",
             "permutation": ShiftSpec.flip_flop(c4).permutation.tolist()},
            c4)
        assert perm.name == "explicit"

    def test_interaction_parsing(self, c4):
        pg = ProductGraph(c4, 2)
        spec = interaction_from_json({"type": "coincidence-phase",
                                      "phi": 3.14}, pg)
        assert spec.phase == 3.14
        assert interaction_from_json(None, pg) is None

    def test_initial_state_default_is_origin(self, c4):
        psi = initial_state_from_json(None, c4)
        assert psi.amplitudes[0] == 1.0

    def test_initial_state_components(self, c4):
        amp = 1.0 / np.sqrt(2.0)
        doc = [{"vertex": 0, "port": 0, "re": amp},
               {"vertex": 0, "port": 1, "im": amp}]
        psi = initial_state_from_json(doc, c4)
        assert abs(abs(psi.amplitudes[0]) ** 2 - 0.5) < 1e-12

    def test_initial_state_renormalisation_warns(self, c4):
        with pytest.warns(UserWarning, match="renormalised"):
            initial_state_from_json([{"vertex": 0, "port": 0, "re": 2.0}], c4)

    def test_multiwalker_initial_state(self, c4):
        pg = ProductGraph(c4, 2)
        psi = initial_state_from_json(
            [{"vertex": [0, 1], "port": [0, 1], "re": 1.0}], pg)
        assert psi.num_walkers == 2

    def test_graph_and_spaces(self):
        base, space, walkers = graph_and_spaces(
            {"graph": {"type": "cycle", "n": 4}, "walkers": 2})
        assert walkers == 2
        assert isinstance(space, ProductGraph)
        with pytest.raises(ConfigError):
            graph_and_spaces({})
