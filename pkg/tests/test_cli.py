import json

import numpy as np
import pytest

from qds.cli import main
from qds.serialize import (
    decode_matrix, encode_matrix, load_model, model_from_json, model_to_json,
)
from qds.errors import StructuralError

from conftest import FIXTURES


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_matrix(tmp_path, name, m):
    path = tmp_path / name
    path.write_text(json.dumps(encode_matrix(np.asarray(m, dtype=complex))))
    return path


class TestRoundTrip:
    def test_matrix_roundtrip_is_bit_exact(self):
        rng = np.random.default_rng(3)
        m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        back = decode_matrix(encode_matrix(m))
        assert np.array_equal(m, back)

    def test_fixture_models_roundtrip(self):
        for name in ("identity_channel_d2", "amplitude_damping",
                     "amplitude_damping_lindblad", "dephasing",
                     "absorbing_chain_3"):
            model = load_model(FIXTURES / f"{name}.json")
            back = model_from_json(model_to_json(model))
            assert back.kind == model.kind and back.dim == model.dim
            for a, b in zip(model.generator_family(), back.generator_family()):
                assert a[0] == b[0]
                assert np.array_equal(a[1], b[1])

    def test_parse_error_names_path(self):
        with pytest.raises(StructuralError, match=r"\$\.kraus\[0\]\[1\]\[0\]"):
            model_from_json({"dim": 2, "kind": "kraus",
                             "kraus": [[[[1, 0], [0, 0]],
                                        ["bad", [0, 0]]]]})

    def test_unknown_kind_named(self):
        with pytest.raises(StructuralError, match=r"\$\.kind"):
            model_from_json({"dim": 2, "kind": "unitary"})


class TestCommands:
    def test_check_ok(self, capsys):
        code, out, _ = run_cli(capsys, "check",
                               FIXTURES / "amplitude_damping.json")
        assert code == 0
        doc = json.loads(out)
        assert doc["payload"]["ok"] is True
        assert doc["command"] == "check"

    def test_check_strict_fails_invalid(self, capsys, tmp_path):
        bad = {"dim": 2, "kind": "stochastic",
               "stochastic": [[0.5, 0.4], [0.0, 1.0]]}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(bad))
        code, out, _ = run_cli(capsys, "check", path, "--strict")
        assert code == 1
        code, out, _ = run_cli(capsys, "check", path)
        assert code == 0

    def test_resolve_absorbing_chain(self, capsys):
        code, out, _ = run_cli(capsys, "resolve",
                               FIXTURES / "absorbing_chain_3.json",
                               "--seed", 1)
        assert code == 0
        doc = json.loads(out)
        assert len(doc["payload"]["recurrent"]) == 2
        assert doc["payload"]["classical_comparison"]["agree"] is True

    def test_classify(self, capsys, tmp_path):
        proj = write_matrix(tmp_path, "p.json", np.diag([1.0, 0.0]))
        code, out, _ = run_cli(capsys, "classify",
                               FIXTURES / "amplitude_damping.json", proj)
        assert code == 0
        doc = json.loads(out)
        assert doc["payload"]["subharmonic"]["verdict"] is True
        assert doc["payload"]["classification"]["label"] == "positive_recurrent"
        assert doc["payload"]["complement"]["transient"] is True

    def test_classify_strict_verdict(self, capsys, tmp_path):
        proj = write_matrix(tmp_path, "p.json", np.diag([0.0, 1.0]))
        code, _, _ = run_cli(capsys, "classify",
                             FIXTURES / "amplitude_damping.json", proj,
                             "--strict")
        assert code == 1

    def test_evolve_negative_time_is_structural(self, capsys, tmp_path):
        proj = write_matrix(tmp_path, "p.json", np.diag([1.0, 0.0]))
        code, _, err = run_cli(capsys, "evolve", FIXTURES / "dephasing.json",
                               proj, "--t", -1)
        assert code == 2
        assert "negative time" in err

    def test_evolve_heisenberg(self, capsys, tmp_path):
        proj = write_matrix(tmp_path, "p.json", np.diag([1.0, 0.0]))
        code, out, _ = run_cli(capsys, "evolve",
                               FIXTURES / "amplitude_damping.json", proj,
                               "--n", 2)
        assert code == 0
        doc = json.loads(out)
        m = decode_matrix(doc["payload"]["result"])
        assert np.allclose(m, np.diag([1.0, 0.75]))

    def test_evolve_schrodinger(self, capsys, tmp_path):
        rho = write_matrix(tmp_path, "rho.json", np.diag([0.0, 1.0]))
        code, out, _ = run_cli(capsys, "evolve",
                               FIXTURES / "amplitude_damping.json", rho,
                               "--n", 1, "--picture", "schrodinger")
        assert code == 0
        doc = json.loads(out)
        m = decode_matrix(doc["payload"]["result"])
        assert np.allclose(m, np.diag([0.5, 0.5]))

    def test_picard_command(self, capsys, tmp_path):
        x = write_matrix(tmp_path, "x.json", np.diag([1.0, 0.0]))
        code, out, _ = run_cli(capsys, "picard",
                               FIXTURES / "amplitude_damping_lindblad.json",
                               x, "--t", 1, "--steps", 64)
        assert code == 0
        doc = json.loads(out)
        value = decode_matrix(doc["payload"]["value"])
        assert np.allclose(value, np.diag([1.0, 1.0 - np.exp(-1.0)]),
                           atol=1e-8)
        assert doc["payload"]["trace"]
        assert doc["residuals"]["exp_mismatch"] <= 1e-8

    def test_ergodic_command(self, capsys):
        code, out, _ = run_cli(capsys, "ergodic",
                               FIXTURES / "amplitude_damping.json")
        assert code == 0
        doc = json.loads(out)
        se = doc["payload"]["strong_ergodicity"]
        assert se["holds"] is True
        phi0 = decode_matrix(se["phi0"])
        assert np.allclose(phi0, np.diag([1.0, 0.0]), atol=1e-8)
        eq = doc["payload"]["reduction_equivalence"][0]
        assert eq["consistent"] is True

    def test_missing_file_is_structural(self, capsys):
        code, _, err = run_cli(capsys, "check", "/nonexistent/model.json")
        assert code == 2
        assert "error" in err

    def test_text_format(self, capsys):
        code, out, _ = run_cli(capsys, "check",
                               FIXTURES / "amplitude_damping.json",
                               "--format", "text")
        assert code == 0
        assert "kraus_unitality" in out

    def test_output_file(self, capsys, tmp_path):
        target = tmp_path / "report.json"
        code, out, _ = run_cli(capsys, "check",
                               FIXTURES / "amplitude_damping.json",
                               "--output", target)
        assert code == 0
        assert out == ""
        doc = json.loads(target.read_text())
        assert doc["payload"]["ok"] is True


class TestDeterminism:
    def test_identical_runs_identical_reports(self, capsys):
        def run():
            _, out, _ = run_cli(capsys, "resolve",
                                FIXTURES / "identity_channel_d2.json",
                                "--seed", 1)
            doc = json.loads(out)
            doc.pop("timing_ms")
            return json.dumps(doc, sort_keys=True)

        assert run() == run()

    def test_seed_env_variable(self, capsys, monkeypatch):
        monkeypatch.setenv("QDS_SEED", "17")
        code, out, _ = run_cli(capsys, "resolve",
                               FIXTURES / "identity_channel_d2.json")
        assert code == 0
        assert json.loads(out)["seed"] == 17

    def test_different_seeds_different_decompositions(self, capsys):
        outs = []
        for seed in (1, 2):
            _, out, _ = run_cli(capsys, "resolve",
                                FIXTURES / "identity_channel_d2.json",
                                "--seed", seed)
            doc = json.loads(out)
            doc.pop("timing_ms")
            doc.pop("seed")
            outs.append(json.dumps(doc, sort_keys=True))
        assert outs[0] != outs[1]
