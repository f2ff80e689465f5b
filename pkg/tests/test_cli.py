"""Experiment runner, CLI exit codes, and output determinism."""

import hashlib
import json

import numpy as np
import pytest

from gaplab.cli import main
from gaplab.groups import sanov_pair, generator_set_to_dict
from gaplab.runner import (
    ConfigError,
    ExperimentConfig,
    check_fixtures,
    fixtures_root,
    load_config,
    run_experiment,
)


def write_config(tmp_path, text, name="config.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


SPECTRUM_TOML = """
[experiment]
kind = "spectrum"
group = "SU2"
seed = 7

[generators]
preset = "lps_p5"

[params]
n_max = 6
"""


class TestConfigValidation:
    def test_loads_fixture_config(self):
        cfg = load_config(str(fixtures_root() / "lps_spectrum" / "config.toml"))
        assert cfg.kind == "spectrum"
        assert cfg.group == "SU2"
        assert cfg.seed == 7

    def test_malformed_toml_names_the_line(self, tmp_path):
        path = write_config(tmp_path, "[experiment\nkind =")
        with pytest.raises(ConfigError, match="line"):
            load_config(path)

    def test_missing_experiment_table(self, tmp_path):
        path = write_config(tmp_path, "[params]\nn_max = 3\n")
        with pytest.raises(ConfigError, match="experiment"):
            load_config(path)

    def test_unknown_kind_rejected(self, tmp_path):
        path = write_config(
            tmp_path, '[experiment]\nkind = "sorcery"\ngroup = "SU2"\n')
        with pytest.raises(ConfigError, match="sorcery"):
            load_config(path)

    def test_unknown_group_rejected(self, tmp_path):
        path = write_config(
            tmp_path, '[experiment]\nkind = "spectrum"\ngroup = "E8"\n')
        with pytest.raises(ConfigError, match="E8"):
            load_config(path)

    def test_negative_seed_rejected(self, tmp_path):
        path = write_config(
            tmp_path,
            '[experiment]\nkind = "spectrum"\ngroup = "SU2"\nseed = -4\n')
        with pytest.raises(ConfigError, match="seed"):
            load_config(path)

    def test_caps_must_be_positive(self, tmp_path):
        path = write_config(tmp_path, SPECTRUM_TOML + "atom_cap = 0\n")
        with pytest.raises(ConfigError, match="positive"):
            load_config(path)

    def test_unknown_preset_rejected(self, tmp_path):
        path = write_config(tmp_path, """
[experiment]
kind = "spectrum"
group = "SU2"

[generators]
preset = "mystery"
""")
        with pytest.raises(ConfigError, match="mystery"):
            load_config(path)

    def test_kind_guard_in_dataclass(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(kind="nope", group="SU2", seed=0,
                             generators={}, params={}, escape=None,
                             output_dir=None)


class TestRunCommand:
    def test_spectrum_row_count_contract(self, tmp_path):
        # each level n contributes exactly n+1 eigenvalue rows
        path = write_config(tmp_path, SPECTRUM_TOML)
        assert main(["run", path, "--out", str(tmp_path / "out")]) == 0
        lines = (tmp_path / "out" / "spectrum.csv").read_text().splitlines()
        assert lines[0] == "n,eig_index,eigenvalue"
        assert len(lines) - 1 == sum(n + 1 for n in range(1, 7))

    def test_manifest_records_provenance(self, tmp_path):
        path = write_config(tmp_path, SPECTRUM_TOML)
        cfg = load_config(path)
        manifest = run_experiment(cfg, str(tmp_path / "out"))
        raw = (tmp_path / "config.toml").read_bytes()
        assert manifest["config_sha256"] == hashlib.sha256(raw).hexdigest()
        assert manifest["seed"] == 7
        for lib in ("python", "numpy", "scipy", "gaplab"):
            assert lib in manifest["versions"]
        assert manifest["wall_time_s"] >= 0
        on_disk = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert on_disk["outputs"] == manifest["outputs"]

    def test_output_checksum_matches_file(self, tmp_path):
        path = write_config(tmp_path, SPECTRUM_TOML)
        cfg = load_config(path)
        manifest = run_experiment(cfg, str(tmp_path / "out"))
        entry = manifest["outputs"][0]
        data = (tmp_path / "out" / entry["file"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == entry["sha256"]

    def test_same_seed_byte_identical(self, tmp_path):
        path = write_config(tmp_path, SPECTRUM_TOML)
        main(["run", path, "--out", str(tmp_path / "a")])
        main(["run", path, "--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "spectrum.csv").read_bytes() == \
            (tmp_path / "b" / "spectrum.csv").read_bytes()

    def test_thread_count_does_not_change_bytes(self, tmp_path):
        path = write_config(tmp_path, SPECTRUM_TOML)
        main(["run", path, "--out", str(tmp_path / "a"), "--threads", "1"])
        main(["run", path, "--out", str(tmp_path / "b"), "--threads", "4"])
        assert (tmp_path / "a" / "spectrum.csv").read_bytes() == \
            (tmp_path / "b" / "spectrum.csv").read_bytes()

    def test_seed_override_recorded(self, tmp_path):
        path = write_config(tmp_path, SPECTRUM_TOML)
        main(["run", path, "--out", str(tmp_path / "out"), "--seed", "99"])
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["seed"] == 99

    def test_malformed_config_exits_one(self, tmp_path):
        path = write_config(tmp_path, "[experiment\n")
        assert main(["run", path, "--out", str(tmp_path / "out")]) == 1

    def test_missing_file_exits_one(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.toml")]) == 1

    def test_resource_cap_exits_two(self, tmp_path):
        # a full SU2 net at spacing 0.2 exceeds the dense cell cap
        path = write_config(tmp_path, """
[experiment]
kind = "walk"
group = "SU2"

[generators]
preset = "free_rotation_pair"

[params.net]
spacing = 0.2

[params.net.region]
type = "full"
""")
        assert main(["run", path, "--out", str(tmp_path / "out")]) == 2

    def test_validate_accepts_and_rejects(self, tmp_path, capsys):
        good = write_config(tmp_path, SPECTRUM_TOML, "good.toml")
        assert main(["validate", good]) == 0
        assert "spectrum" in capsys.readouterr().out
        bad = write_config(tmp_path, "kind = {", "bad.toml")
        assert main(["validate", bad]) == 1


class TestExperimentBodies:
    """Smoke coverage for the kinds without frozen fixtures."""

    def test_gap_windows(self, tmp_path):
        path = write_config(tmp_path, """
[experiment]
kind = "gap"
group = "SU2"

[generators]
preset = "rotation_pair"
angle = 0.1

[params]
r = 0.5
id = "smoke"

[[params.windows]]
spacing = 0.04
region = {type = "ball", radius = 0.06}

[[params.windows]]
spacing = 0.05
region = {type = "ball", radius = 0.06}
""")
        assert main(["run", path, "--out", str(tmp_path / "out")]) == 0
        lines = (tmp_path / "out" / "gap.csv").read_text().splitlines()
        assert lines[0] == "experiment,window,delta_net,kappa_hat,dim_v,residual"
        assert len(lines) == 3
        for line in lines[1:]:
            fields = line.split(",")
            assert fields[0] == "smoke"
            assert fields[1] == "ball(0.06)"
            assert np.isfinite(float(fields[3]))
            assert float(fields[5]) < 0.5

    def test_lp_table(self, tmp_path):
        path = write_config(tmp_path, """
[experiment]
kind = "lp"
group = "SU2"

[generators]
preset = "rotation_pair"
angle = 0.02

[params]
i_max = 1

[params.net]
spacing = 0.0078125

[params.net.region]
type = "ball"
radius = 0.04
""")
        assert main(["run", path, "--out", str(tmp_path / "out")]) == 0
        lines = (tmp_path / "out" / "lp.csv").read_text().splitlines()
        assert lines[0] == "i,j,norm,scaled_norm"
        assert len(lines) == 5
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["c0_hat"] > 0

    def test_dyadic_levels(self, tmp_path):
        path = write_config(tmp_path, """
[experiment]
kind = "dyadic"
group = "SU2"

[generators]
preset = "rotation_pair"
angle = 0.02

[params]
delta = 0.02
power = 2

[params.net]
spacing = 0.0078125

[params.net.region]
type = "ball"
radius = 0.04
""")
        assert main(["run", path, "--out", str(tmp_path / "out")]) == 0
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["nonempty_levels"] <= manifest["level_cap"]
        assert manifest["overlap_multiplicity"] == 1
        lines = (tmp_path / "out" / "dyadic.csv").read_text().splitlines()
        assert lines[0] == "level,cell_count"

    def test_mixing_grid(self, tmp_path):
        path = write_config(tmp_path, """
[experiment]
kind = "mixing"
group = "SU2"
seed = 3

[params]
deltas = [0.07, 0.09]

[params.net]
spacing = 0.04

[params.net.region]
type = "ball"
radius = 0.06
""")
        assert main(["run", path, "--out", str(tmp_path / "out")]) == 0
        lines = (tmp_path / "out" / "mixing.csv").read_text().splitlines()
        assert lines[0] == "delta,lhs,p_delta_norm"
        assert len(lines) == 3

    def test_pingpong_certifies_sanov(self, tmp_path):
        gens = tmp_path / "gens.json"
        gens.write_text(json.dumps(generator_set_to_dict(sanov_pair())))
        path = write_config(tmp_path, f"""
[experiment]
kind = "pingpong"
group = "SL2R"

[generators]
file = "{gens}"

[params]
budget = 1000
""")
        assert main(["run", path, "--out", str(tmp_path / "out")]) == 0
        lines = (tmp_path / "out" / "pingpong.csv").read_text().splitlines()
        assert lines[1].startswith("certified,")
        assert (tmp_path / "out" / "certificate.json").exists()
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["certified"] is True

    def test_walk_experiment_reports_gap(self, tmp_path):
        path = write_config(tmp_path, """
[experiment]
kind = "walk"
group = "SU2"

[generators]
preset = "rotation_pair"
angle = 0.05

[params.net]
spacing = 0.04

[params.net.region]
type = "ball"
radius = 0.06
""")
        assert main(["run", path, "--out", str(tmp_path / "out")]) == 0
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["row_sum_defect"] == 0.0
        assert 0.0 <= manifest["gap"] <= 1.0 + 1e-9


class TestFixtures:
    def test_all_fixtures_pass(self):
        results = check_fixtures()
        assert results, "no fixtures found"
        bad = [f"{r.name}: {r.detail}" for r in results if not r.ok]
        assert not bad, bad

    def test_fixture_csvs_have_headers_and_manifests(self):
        for fdir in sorted(fixtures_root().iterdir()):
            if not (fdir / "config.toml").exists():
                continue
            assert (fdir / "manifest.json").exists()
            for csv_path in (fdir / "expected").glob("*.csv"):
                first = csv_path.read_text().splitlines()[0]
                assert first[0].isalpha()

    def test_fixtures_cli_exit_zero(self, tmp_path, capsys):
        assert main(["fixtures", "check", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert out.count(": ok") >= 6
