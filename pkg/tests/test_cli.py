import csv
import io
import json
import math

import pytest

import qgen.cli as cli
from qgen.cli import config_hash, load_config, main, parse_config
from qgen.errors import ConfigError, RangeExhausted, SolverFailure

MINIMAL = 'kind = "stateClassification"\n'

ENTANGLED = """
kind = "entangledPac"
m = 1
[distribution]
n_bits = 1
probs = [0.35, 0.15, 0.1, 0.4]
[bound]
name = "cor22"
alpha = {alpha}
validate = {validate}
"""

SWEEP = """
kind = "stateClassification"
seed = 2
[hypotheses]
effects = [[[0.4, 0.0], [0.0, 0.4]], [[0.6, 0.0], [0.0, 0.6]]]
[distribution]
pairs = [[[0.0, 0.0, 0.4], [0.0, 0.0, -0.4]]]
[sweep]
axis = "m"
values = [1, 2, 3, 4, 5]
"""


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(argv):
    return main([str(a) for a in argv])


class TestParse:
    def test_minimal_defaults(self, tmp_path):
        cfg = parse_config(write(tmp_path, MINIMAL))
        assert cfg.kind == "stateClassification"
        assert (cfg.d, cfg.m, cfg.m_test, cfg.m_train, cfg.seed) == (2, 1, 1, 1, 0)

    def test_unknown_top_key(self, tmp_path):
        with pytest.raises(ConfigError, match="colour"):
            parse_config(write(tmp_path, MINIMAL + "colour = 1\n"))

    def test_unknown_section_key(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(write(tmp_path, MINIMAL + "[learner]\nbogus = 1\n"))

    def test_cap_named(self, tmp_path):
        text = 'kind = "entangledPac"\nm = 10\n[distribution]\nn_bits = 3\n'
        with pytest.raises(ConfigError, match="enum_cap"):
            parse_config(write(tmp_path, text))

    def test_syntax_error(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(write(tmp_path, "kind = \n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(tmp_path / "absent.toml")

    def test_hash_depends_on_content(self, tmp_path):
        a = load_config(write(tmp_path, MINIMAL, "a.toml"))
        b = load_config(write(tmp_path, MINIMAL + "m = 2\n", "b.toml"))
        assert config_hash(*a) != config_hash(*b)
        assert config_hash(*a) == config_hash(*load_config(write(tmp_path, MINIMAL, "c.toml")))


class TestExitCodes:
    def test_pass(self, tmp_path, capsys):
        cfg = write(tmp_path, ENTANGLED.format(alpha=0.5, validate="true"))
        assert run(["certify", "--config", cfg, "--out", tmp_path / "o"]) == 0
        assert "holds" in capsys.readouterr().out

    def test_understated_alpha_rejected(self, tmp_path, capsys):
        cfg = write(tmp_path, ENTANGLED.format(alpha=0.01, validate="true"))
        assert run(["certify", "--config", cfg, "--out", tmp_path / "o"]) == 1
        assert "invalid MGF bound" in capsys.readouterr().err

    def test_understated_alpha_fails_certificate(self, tmp_path, capsys):
        cfg = write(tmp_path, ENTANGLED.format(alpha=0.01, validate="false"))
        assert run(["certify", "--config", cfg, "--out", tmp_path / "o"]) == 1
        err = capsys.readouterr().err
        assert "failing certificate" in err and '"holds":false' in err
        rep = json.loads((tmp_path / "o" / "certify.json").read_text())
        assert rep["allHold"] is False

    def test_missing_file(self, tmp_path):
        assert run(["certify", "--config", tmp_path / "nope.toml", "--out", tmp_path / "o"]) == 2

    def test_output_not_a_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        cfg = write(tmp_path, MINIMAL)
        assert run(["certify", "--config", cfg, "--out", blocker / "sub"]) == 2

    @pytest.mark.parametrize("exc", [SolverFailure, RangeExhausted])
    def test_numerical_failure(self, tmp_path, monkeypatch, capsys, exc):
        def boom(*a, **k):
            raise exc("simulated")

        monkeypatch.setattr(cli, "run_certify", boom)
        cfg = write(tmp_path, MINIMAL)
        assert run(["certify", "--config", cfg, "--out", tmp_path / "o"]) == 3
        assert "numerical failure" in capsys.readouterr().err

    def test_bound_not_available(self, tmp_path):
        text = 'kind = "pacStateLearning"\nm = 2\n[hypotheses]\ncount = 8\n[distribution]\nn_effects = 4\n'
        cfg = write(tmp_path, text)
        assert run(["certify", "--config", cfg, "--bound", "cor24", "--out", tmp_path / "o"]) == 2


class TestReports:
    def test_sweep_csv_rows(self, tmp_path):
        cfg = write(tmp_path, SWEEP)
        assert run(["sweep", "--config", cfg, "--out", tmp_path / "o", "--quiet"]) == 0
        rows = list(csv.reader(io.StringIO((tmp_path / "o" / "sweep.csv").read_text())))
        assert len(rows) == 6
        assert tuple(rows[0]) == cli.CSV_COLUMNS
        assert [r[0] for r in rows[1:]] == ["1", "2", "3", "4", "5"]
        for r in rows[1:]:
            assert float(r[6]) >= -1e-9  # slack

    def test_json_schema(self, tmp_path):
        cfg = write(tmp_path, SWEEP)
        run(["sweep", "--config", cfg, "--out", tmp_path / "o", "--quiet", "--format", "json"])
        rep = json.loads((tmp_path / "o" / "sweep.json").read_text())
        assert not (tmp_path / "o" / "sweep.csv").exists()
        assert set(rep) == {"toolVersion", "configHash", "seed", "kind", "command", "bound", "axis",
                            "config", "meta", "points", "allHold"}
        assert rep["axis"] == "m" and len(rep["points"]) == 5
        for p in rep["points"]:
            c = p["certificate"]
            assert c["holds"] == (c["slack"] >= -1e-9)
            assert math.isclose(p["risks"]["gen"], p["risks"]["true"] - p["risks"]["empirical"])
        # a second serialization of the parsed report is identical
        again = json.dumps(rep, sort_keys=True, indent=2)
        assert json.loads(again) == rep
        timing = json.loads((tmp_path / "o" / "timing.json").read_text())
        assert timing["configHash"] == rep["configHash"]

    def test_byte_identical(self, tmp_path):
        cfg = write(tmp_path, SWEEP)
        for d in ("a", "b"):
            assert run(["sweep", "--config", cfg, "--out", tmp_path / d, "--quiet", "--values", "1,2,4"]) == 0
            assert run(["certify", "--config", cfg, "--out", tmp_path / d, "--quiet", "--seed", "9"]) == 0
        for name in ("sweep.json", "sweep.csv", "certify.json", "certify.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_parallel_identical(self, tmp_path, monkeypatch):
        cfg = write(tmp_path, SWEEP)
        run(["sweep", "--config", cfg, "--out", tmp_path / "s", "--quiet"])
        monkeypatch.setenv("QGEN_JOBS", "2")
        run(["sweep", "--config", cfg, "--out", tmp_path / "p", "--quiet"])
        assert (tmp_path / "s" / "sweep.json").read_bytes() == (tmp_path / "p" / "sweep.json").read_bytes()

    def test_seed_override_changes_hash(self, tmp_path):
        cfg = write(tmp_path, SWEEP)
        run(["certify", "--config", cfg, "--out", tmp_path / "a", "--quiet"])
        run(["certify", "--config", cfg, "--out", tmp_path / "b", "--quiet", "--seed", "7"])
        a = json.loads((tmp_path / "a" / "certify.json").read_text())
        b = json.loads((tmp_path / "b" / "certify.json").read_text())
        assert (a["seed"], b["seed"]) == (2, 7)
        assert a["configHash"] != b["configHash"]


class TestOtherCommands:
    def test_scenarios_list(self, capsys):
        assert run(["scenarios", "list"]) == 0
        out = capsys.readouterr().out
        for k in ("stateClassification", "pacStateLearning", "entangledPac", "parameterEstimation"):
            assert k in out

    def test_selftest_quick(self, capsys):
        assert run(["selftest", "--seed", "1"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 9 and all(l.startswith("PASS") for l in lines)
