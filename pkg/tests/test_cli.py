import json
import os

import jsonschema
import numpy as np
import pytest

from safebounds import cli
from safebounds.config import validate
from safebounds.errors import DegeneracyError

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SCHEMAS = {
    name: json.load(open(os.path.join(ROOT, "docs", "schemas", f"{name}.schema.json")))
    for name in ("summary", "barrier", "config")
}


def walk_config(**over):
    cfg = {
        "dynamics": {"A": [[1.0]], "B": [], "c": [0.0], "sigma": [0.1]},
        "actions": [[]],
        "safe_set": {"lower": [-1.0], "upper": [1.0]},
        "initial_set": {"lower": [-0.25], "upper": [0.25]},
        "horizon": 10,
        "counts": [20],
        "mode": "imc-verify",
    }
    cfg.update(over)
    return cfg


def run_cli(tmp_path, cfg, *extra, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return cli.main(["--config", str(path), *extra])


def summary(out):
    data = json.loads((out / "summary.json").read_text())
    jsonschema.validate(data, SCHEMAS["summary"])
    return data


class TestValidate:
    def test_walk_config_is_clean(self):
        assert validate(walk_config()) == []

    def test_zero_sigma(self):
        cfg = walk_config(dynamics={"A": [[1.0]], "sigma": [0.0]})
        assert any("sigma must be strictly positive" in d for d in validate(cfg))

    def test_initial_outside_safe(self):
        diags = validate(walk_config(initial_set={"lower": [0.5], "upper": [1.5]}))
        assert any(d.startswith("initial_set") for d in diags)

    def test_reports_every_problem(self):
        cfg = walk_config(horizon=-1, counts=[0], action=3, threads=0)
        fields = {d.split(":")[0] for d in validate(cfg)}
        assert fields == {"horizon", "counts", "action", "threads"}
        assert any(d.startswith("mode") for d in validate(walk_config(mode="bogus")))

    def test_oracle_needs_1d(self):
        cfg = walk_config(mode="oracle", dynamics={"A": np.eye(2).tolist(), "sigma": [0.1, 0.1]},
                           safe_set={"lower": [-1, -1], "upper": [1, 1]},
                           initial_set={"lower": [0, 0], "upper": [0.1, 0.1]})
        assert any("1-D" in d for d in validate(cfg))

    def test_configs_match_schema(self):
        for name in sorted(os.listdir(os.path.join(ROOT, "configs"))):
            cfg = json.load(open(os.path.join(ROOT, "configs", name)))
            jsonschema.validate(cfg, SCHEMAS["config"])
            assert validate(cfg) == [], name


class TestModes:
    def test_imc_verify(self, tmp_path, capsys):
        out = tmp_path / "o"
        assert run_cli(tmp_path, walk_config(), "--out-dir", str(out)) == 0
        line = capsys.readouterr().out.strip()
        assert line.startswith("P_s ∈ [0.756")
        lo = float(line.split("[")[1].split(",")[0])
        assert lo == pytest.approx(0.756, abs=0.02)
        s = summary(out)
        assert s["dx"] == pytest.approx(0.1) and s["H"] == 10
        rows = (out / "bounds.csv").read_text().splitlines()
        assert rows[0].startswith("state_index,cell_lower_0,cell_upper_0,P_s_lower,P_s_upper,action_k0")
        assert len(rows) == 21

    def test_oracle_zero_horizon(self, tmp_path, capsys):
        out = tmp_path / "o"
        cfg = walk_config(mode="oracle", horizon=0, mesh_size=201)
        assert run_cli(tmp_path, cfg, "--out-dir", str(out)) == 0
        assert capsys.readouterr().out.strip() == "P_s ∈ [1, 1]"
        assert (out / "oracle.csv").exists()
        summary(out)

    def test_suggest_partition(self, tmp_path, capsys):
        out = tmp_path / "o"
        cfg = walk_config(mode="suggest-partition", epsilon=0.5, lipschitz=3.98942)
        assert run_cli(tmp_path, cfg, "--out-dir", str(out)) == 0
        assert capsys.readouterr().out.strip() == "161"
        assert summary(out)["n_partitions"] == 161

    def test_imdp_synthesize(self, tmp_path, capsys):
        out = tmp_path / "o"
        cfg = json.load(open(os.path.join(ROOT, "configs", "controlled_synthesis.json")))
        assert run_cli(tmp_path, cfg, "--out-dir", str(out)) == 0
        assert capsys.readouterr().out.startswith("P_s ∈ [")
        pol = (out / "policy.csv").read_text().splitlines()
        assert len(pol) == 41 and pol[0].endswith("action_k9")
        summary(out)

    def test_mc_baseline(self, tmp_path, capsys):
        out = tmp_path / "o"
        assert run_cli(tmp_path, walk_config(), "--mode", "mc-baseline", "--out-dir", str(out)) == 0
        s = summary(out)
        assert s["mode"] == "mc-baseline" and s["P_lo"] == s["P_hi"]

    def test_barrier_certify_then_recertify(self, tmp_path, capsys):
        out = tmp_path / "o"
        assert run_cli(tmp_path, walk_config(mode="barrier-certify"), "--out-dir", str(out)) == 0
        assert capsys.readouterr().out.strip() == "barrier bound = 0"
        cert = json.loads((out / "barrier.json").read_text())
        jsonschema.validate(cert, SCHEMAS["barrier"])
        assert cert["beta"] == pytest.approx(0.5, abs=1e-3)

        # synthesize, then feed the file back through a relative path
        assert run_cli(tmp_path, walk_config(mode="barrier-synthesize"), "--out-dir", str(tmp_path)) == 0
        synth_line = capsys.readouterr().out.strip()
        cfg = walk_config(mode="barrier-certify", barrier_file="barrier.json")
        assert run_cli(tmp_path, cfg, "--out-dir", str(tmp_path / "re")) == 0
        assert capsys.readouterr().out.strip() == synth_line
        jsonschema.validate(json.loads((tmp_path / "barrier.json").read_text()), SCHEMAS["barrier"])


class TestExitCodes:
    def test_missing_config(self, tmp_path, capsys):
        assert cli.main(["--config", str(tmp_path / "nope.json")]) == 2
        assert "config error" in capsys.readouterr().err

    def test_bad_json(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("{ not json")
        assert cli.main(["--config", str(p)]) == 2
        assert "line 1" in capsys.readouterr().err

    def test_invalid_field(self, tmp_path, capsys):
        cfg = walk_config(dynamics={"A": [[1.0]], "sigma": [-1.0]})
        assert run_cli(tmp_path, cfg) == 2
        assert "dynamics.sigma" in capsys.readouterr().err

    def test_missing_barrier_file(self, tmp_path, capsys):
        assert run_cli(tmp_path, walk_config(mode="barrier-certify", barrier_file="none.json")) == 2
        assert "barrier_file" in capsys.readouterr().err

    def test_wrong_barrier_size(self, tmp_path, capsys):
        (tmp_path / "b.json").write_text(json.dumps({"barrier": [0.0, 0.0, 1.0]}))
        assert run_cli(tmp_path, walk_config(mode="barrier-certify", barrier_file="b.json")) == 2
        assert "expected 21 values" in capsys.readouterr().err

    def test_numerical_failure(self, tmp_path, capsys, monkeypatch):
        def boom(cfg):
            raise DegeneracyError("pivot breakdown")

        monkeypatch.setattr(cli, "execute", boom)
        assert run_cli(tmp_path, walk_config(), "--out-dir", str(tmp_path / "o")) == 3
        assert "pivot breakdown" in capsys.readouterr().err


def _files(d):
    out = {}
    for name in sorted(os.listdir(d)):
        text = (d / name).read_text()
        if name == "summary.json":
            data = json.loads(text)
            data.pop("runtime_ms")
            text = json.dumps(data, sort_keys=True)
        out[name] = text
    return out


@pytest.mark.parametrize("mode", ["imc-verify", "imdp-synthesize", "barrier-synthesize"])
def test_deterministic_outputs(tmp_path, mode, capsys):
    cfg = json.load(open(os.path.join(ROOT, "configs", "controlled_synthesis.json")))
    cfg["counts"] = [20]
    for k, threads in enumerate((1, 1, 4)):
        assert run_cli(tmp_path, cfg, "--mode", mode, "--threads", str(threads),
                       "--out-dir", str(tmp_path / str(k))) == 0
    a, b, c = (_files(tmp_path / str(k)) for k in range(3))
    assert a == b
    assert a == c
