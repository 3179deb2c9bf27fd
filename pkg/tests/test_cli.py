import json
import re
import subprocess
import sys
from pathlib import Path

import pytest

from stablesde import conditions
from stablesde.cli import main
from stablesde.experiments import KINDS, ExperimentConfig, cell_seed, validate

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

SAMPLE = """
[experiment]
kind = sample
seed = 3

[law]
alpha = 1.5

[sample]
M = 6000
dt = 1.0
"""


def write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def rules(cfg_text):
    return {d.rule for d in validate(ExperimentConfig.from_string(cfg_text)) if d.severity == "error"}


class TestExitCodes:
    def test_success_writes_manifest(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["gronwall", "--config", str(CONFIGS / "gronwall.ini"), "--out", str(out)]) == 0
        man = json.loads((out / "manifest.json").read_text())
        assert set(man) >= {"config_digest", "tool_version", "wall_clock", "cell_seeds", "outputs"}
        assert "gronwall.csv" in man["outputs"]
        assert "wrote 1 files" in capsys.readouterr().out

    def test_bad_alpha_exit_two(self, tmp_path, capsys):
        code = main(["sample", "--config", str(CONFIGS / "bad_alpha.ini"), "--out", str(tmp_path)])
        assert code == 2
        assert "α ∈ (1,2]" in capsys.readouterr().err

    def test_module_entry_point(self, tmp_path):
        r = subprocess.run([sys.executable, "-m", "stablesde", "run", "--config", str(CONFIGS / "bad_alpha.ini"),
                            "--out", str(tmp_path)], capture_output=True, text=True)
        assert r.returncode == 2 and "α ∈ (1,2]" in r.stderr

    def test_aliasing_failure_exit_three(self, tmp_path, capsys):
        cfg = write(tmp_path, """
[experiment]
kind = kernel-check
[law]
alpha = 1.5
[grid]
half_width = 6
points = 1024
[kernel]
times = 0.5, 1.0
budget = 1e-10
""")
        assert main(["kernel-check", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
        assert "aliasing" in capsys.readouterr().err

    def test_kind_mismatch(self, tmp_path):
        assert main(["sample", "--config", str(CONFIGS / "gronwall.ini"), "--out", str(tmp_path)]) == 2

    def test_unreadable_config(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "missing.ini")]) == 2

    def test_every_kind_has_subcommand(self):
        for kind in KINDS:
            with pytest.raises(SystemExit) as ei:
                main([kind, "--help"])
            assert ei.value.code == 0


class TestValidate:
    def test_lebesgue_admissible(self):
        assert not rules("""
[experiment]
kind = density
[law]
alpha = 2
[drift]
family = fourier
freqs = 1
p = 4
[scheme]
variant = lebesgue
n = 16
""")

    def test_krylov_rockner_message(self):
        diags = validate(ExperimentConfig.from_string("""
[experiment]
kind = density
[law]
alpha = 1.5
[drift]
family = fourier
p = 2
[scheme]
variant = lebesgue
"""))
        kr = [d for d in diags if d.rule == "krylov-rockner"]
        assert kr and kr[0].lhs == pytest.approx(0.5) and kr[0].rhs == pytest.approx(0.5)
        assert "d/p + alpha/theta = 0.5 >= alpha - 1 = 0.5" in kr[0].message

    def test_besov_admissible(self):
        assert not rules("""
[experiment]
kind = density
[law]
alpha = 1.8
[drift]
family = besov
beta = -0.3
[scheme]
variant = besov
n = 16
""")

    def test_besov_brownian_excluded(self):
        diags = validate(ExperimentConfig.from_string("""
[experiment]
kind = density
[law]
alpha = 2
[drift]
family = besov
beta = -0.3
[scheme]
variant = besov
"""))
        assert any(d.rule == "besov-brownian" and "Brownian" in d.message for d in diags)

    def test_short_ladder(self):
        assert "ladder" in rules("""
[experiment]
kind = rate-study
[law]
alpha = 2
[drift]
family = fourier
[scheme]
variant = lebesgue
[study]
ladder = 8, 16
""")

    def test_gronwall_exponents(self):
        assert "gronwall-exponent" in rules("[experiment]\nkind = gronwall\n[gronwall]\na1 = 1.0\n")

    def test_unknown_kind(self):
        assert "kind" in rules("[experiment]\nkind = plot\n")

    def test_cli_validate(self, capsys):
        assert main(["validate", "--config", str(CONFIGS / "gronwall.ini")]) == 0
        assert main(["validate", "--config", str(CONFIGS / "bad_alpha.ini")]) == 2
        assert "alpha-range" in capsys.readouterr().err

    @pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.ini")), ids=lambda p: p.name)
    def test_shipped_configs(self, path):
        errs = rules(path.read_text())
        assert (errs == {"alpha-range"}) if path.name == "bad_alpha.ini" else not errs


class TestConfig:
    def test_env_override(self):
        cfg = ExperimentConfig.from_string(SAMPLE, environ={"STABLESDE_LAW_ALPHA": "1.8",
                                                            "STABLESDE_SAMPLE_M": "10", "OTHER": "x"})
        assert cfg.num("law", "alpha") == 1.8 and cfg.int("sample", "m") == 10

    def test_env_override_from_file(self, tmp_path, monkeypatch):
        monkeypatch.setenv("STABLESDE_EXPERIMENT_SEED", "99")
        assert ExperimentConfig.load(write(tmp_path, SAMPLE)).seed == 99

    def test_numerals(self):
        cfg = ExperimentConfig.from_string("[grid]\nhalf_width = 4pi\n[drift]\ntheta = inf\n")
        assert cfg.num("grid", "half_width") == pytest.approx(12.566370614359172)
        assert cfg.num("drift", "theta") == float("inf")

    def test_digest_canonical(self):
        a = ExperimentConfig.from_string("[law]\nalpha = 1.50\n[experiment]\nkind = sample\n")
        b = ExperimentConfig.from_string("[experiment]\nkind = sample\n[law]\nalpha=1.5\n")
        assert a.digest() == b.digest()
        c = ExperimentConfig.from_string("[experiment]\nkind = sample\n[law]\nalpha=1.6\n")
        assert a.digest() != c.digest()

    def test_cell_seeds_distinct(self):
        assert len({cell_seed(7, i) for i in range(100)}) == 100


class TestReproducibility:
    def _run(self, cfg, out, *extra):
        assert main(["run", "--config", str(cfg), "--out", str(out), *extra]) == 0
        return json.loads((out / "manifest.json").read_text())

    def test_byte_identical_outputs(self, tmp_path):
        cfg = write(tmp_path, SAMPLE)
        m1 = self._run(cfg, tmp_path / "a", "--workers", "1")
        m2 = self._run(cfg, tmp_path / "b", "--workers", "4")
        assert m1["outputs"] == m2["outputs"]
        for name in m1["outputs"]:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        assert m1["config_digest"] == m2["config_digest"]

    def test_seed_flag(self, tmp_path):
        cfg = write(tmp_path, SAMPLE)
        m1 = self._run(cfg, tmp_path / "a")
        m2 = self._run(cfg, tmp_path / "b", "--seed", "4")
        assert m1["outputs"]["increments.csv"] != m2["outputs"]["increments.csv"]
        m3 = self._run(write(tmp_path, SAMPLE.replace("seed = 3", "seed = 4"), "c.ini"), tmp_path / "c")
        assert m2["outputs"]["increments.csv"] == m3["outputs"]["increments.csv"]

    def test_figure_table_format(self, tmp_path):
        self._run(write(tmp_path, SAMPLE), tmp_path / "a")
        rows = [l for l in (tmp_path / "a" / "charfun.dat").read_text().splitlines() if not l.startswith("#")]
        assert rows and all(len(r.split()) == 3 for r in rows)


class TestDocs:
    def test_rule_table_complete(self):
        text = (ROOT / "docs" / "validation.md").read_text()
        for rule in conditions.RULES:
            assert f"`{rule}`" in text, rule

    def test_every_violation_is_a_rule(self):
        src = "".join(p.read_text() for p in (ROOT / "src" / "stablesde").glob("*.py"))
        used = set(re.findall(r'Violation\(\s*"([a-z-]+)"', src))
        assert used and used <= set(conditions.RULES)

    def test_env_prefix_documented(self):
        assert "STABLESDE_" in (ROOT / "README.md").read_text()
