"""CLI subcommands, config validation, artifact formats."""

import json
from pathlib import Path

import numpy as np
import pytest

from polymer_lab import cli, io, rw_kernel
from polymer_lab.errors import ConfigError

TINY = """
[run]
dimension = 3
seed = 1
workers = 1

[disorder]
family = rademacher
beta = 0.3

[kernel]
t_max = 8

[identity]
t_max = 3
tau_max = 6
n_seeds = 2
tol = 1e-9

[experiment]
scans = convergence
convergence_ladder = 2, 4, 8
convergence_t_ref = 16
convergence_n = 300
"""


@pytest.fixture
def tiny_cfg(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY + f"\n[run_extra]\nplaceholder = 0\n")
    # out dir separate from config location
    return path, tmp_path / "out"


def run(sub, cfg_path, out_dir, extra=()):
    return cli.main([sub, "--config", str(cfg_path), "--out", str(out_dir),
                     *extra])


class TestConfig:
    def test_digest_stable_under_reordering(self, tmp_path):
        a = tmp_path / "a.ini"
        b = tmp_path / "b.ini"
        a.write_text("[run]\nseed = 3\ndimension = 3\n")
        b.write_text("[run]\ndimension = 3\nseed = 3\n")
        ca = cli.load_config(a)
        cb = cli.load_config(b)
        assert ca.digest == cb.digest

    def test_digest_changes_with_content(self, tmp_path):
        a = tmp_path / "a.ini"
        b = tmp_path / "b.ini"
        a.write_text("[run]\nseed = 3\n")
        b.write_text("[run]\nseed = 4\n")
        assert cli.load_config(a).digest != cli.load_config(b).digest

    def test_scale_violation_named(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[scale]\nkappa1 = 0.79\nkappa2 = 0.78\n")
        with pytest.raises(ConfigError, match="kappa1 < kappa2"):
            cli.load_config(p)

    def test_weak_disorder_violation(self, tmp_path):
        p = tmp_path / "hot.ini"
        # rademacher has lambda < 1 for every beta, so use gaussian
        p.write_text("[disorder]\nfamily = gaussian\nbeta = 2.0\n")
        with pytest.raises(ConfigError, match="weak-disorder"):
            cli.load_config(p)

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            cli.load_config("/definitely/not/here.ini")

    def test_workers_override(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text("[run]\nworkers = 2\n")
        assert cli.load_config(p).workers == 2
        assert cli.load_config(p, workers_override=5).workers == 5
        with pytest.raises(ConfigError):
            cli.load_config(p, workers_override=0)


class TestSubcommands:
    def test_identity_passes(self, tiny_cfg, capsys):
        cfg_path, out = tiny_cfg
        assert run("identity", cfg_path, out) == 0
        js = json.loads(next(out.glob("*_identity.json")).read_text())
        assert js["verdict"] == "pass"
        assert all(c["residual"] <= 1e-9 for c in js["checks"])

    def test_kernel_cache_and_verdict(self, tiny_cfg):
        cfg_path, out = tiny_cfg
        assert run("kernel", cfg_path, out) == 0
        js = json.loads(next(out.glob("*_kernel.json")).read_text())
        assert js["verdict"] == "pass"
        assert js["cache_hit"] is False
        # second run hits the cache and reproduces the verdict
        assert run("kernel", cfg_path, out) == 0
        js2 = json.loads(next(out.glob("*_kernel.json")).read_text())
        assert js2["cache_hit"] is True

    def test_experiment_deterministic_bytes(self, tiny_cfg):
        cfg_path, out = tiny_cfg
        assert run("experiment", cfg_path, out) == 0
        csv_path = next(out.glob("*_experiment.csv"))
        first = csv_path.read_bytes()
        assert run("experiment", cfg_path, out) == 0
        assert csv_path.read_bytes() == first

    def test_report_merges(self, tiny_cfg):
        cfg_path, out = tiny_cfg
        assert run("identity", cfg_path, out) == 0
        assert run("report", cfg_path, out) == 0
        js = json.loads(next(out.glob("*_report.json")).read_text())
        assert any(name.endswith("_identity.csv") for name in js["artifacts"])

    def test_report_empty_dir_is_config_error(self, tiny_cfg):
        cfg_path, out = tiny_cfg
        assert run("report", cfg_path, out / "nothing") == 2

    def test_constraint_violation_exit_2(self, tmp_path, capsys):
        p = tmp_path / "bad.ini"
        p.write_text(TINY + "\n[scale]\nkappa1 = 0.79\nkappa2 = 0.78\n")
        assert run("identity", p, tmp_path / "o") == 2
        err = capsys.readouterr().err
        diag = json.loads(err.strip().splitlines()[-1])
        assert diag["error"] == "config"
        assert "kappa1" in diag["message"]

    def test_usage_error(self):
        assert cli.main(["frobnicate", "--config", "x"]) == 2


class TestArtifacts:
    def test_kernel_table_roundtrip(self, tmp_path, table3):
        path = tmp_path / "table.plkt"
        io.save_kernel_table(table3, path)
        loaded = io.load_kernel_table(path)
        assert loaded.d == table3.d and loaded.t_max == table3.t_max
        for t in range(table3.t_max + 1):
            assert np.array_equal(loaded.slice(t), table3.slice(t))

    def test_kernel_cache_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.plkt"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(ConfigError):
            io.load_kernel_table(path)

    def test_csv_header_and_roundtrip(self, tmp_path):
        path = tmp_path / "rows.csv"
        rows = [{"a": 1, "b": 0.5}, {"a": 2, "b": 0.25}]
        io.write_csv(path, rows, digest="deadbeef")
        meta, back = io.read_csv(path)
        assert meta["digest"] == "deadbeef"
        assert meta["schema"] == str(io.SCHEMA_VERSION)
        assert [r["a"] for r in back] == ["1", "2"]
        assert float(back[1]["b"]) == 0.25

    def test_csv_schema_mismatch_rejected(self, tmp_path):
        path = tmp_path / "old.csv"
        path.write_text("# polymer-lab schema=999 version=0 digest=x\na\n1\n")
        with pytest.raises(ConfigError):
            io.read_csv(path)

    def test_csv_missing_header_rejected(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ConfigError):
            io.read_csv(path)

    def test_json_summary_embeds_provenance(self, tmp_path):
        path = tmp_path / "s.json"
        io.write_json_summary(path, {"x": [1, 2]}, digest="abc")
        js = json.loads(path.read_text())
        assert js["config_digest"] == "abc"
        assert js["schema"] == io.SCHEMA_VERSION
        assert js["x"] == [1, 2]
