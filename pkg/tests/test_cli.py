"""Runner surface: config validation, output schemas, determinism, manifests."""

import json

import numpy as np
import pytest

from uhslab.cli import main
from uhslab.config import (
    ConfigError,
    config_sha256,
    parse_string,
    serialize,
)
from uhslab.grid import read_field

WORKED_WEIGHTS = """
[grid]
nx = 17
ny = 81
nt = 193
x_min = 0
x_max = 1
L = 10
T = 12

[weight]
x0 = -1
y0 = 0
beta = 0.05
gamma = 0.1
epsilon = 0.1
L = 10
"""

SMALL_CUTOFF = """
[grid]
nx = 9
ny = 33
nt = 21
x_min = 0
x_max = 0.25
L = 4
T = 2.5

[weight]
x0 = -0.25
y0 = 0
beta = 0.056
gamma = 0.1
epsilon = 0.004
L = 2

[carleman]
s_min = 1
s_max = 4
s_count = 3
gamma_list = 0.1

[inverse]
amplitudes = 1,2
noise = 0
seed = 7
"""

SMALL_RECON = """
[grid]
nx = 17
ny = 37
nt = 33
x_min = 0
x_max = 1
L = 9
T = 1

[weight]
x0 = -1
y0 = 0
beta = 0.5
gamma = 0.1
epsilon = 0.5
L = 4.5

[inverse]
amplitudes = 1,2
noise = 0
seed = 7
"""


def write_cfg(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestConfigParsing:
    def test_round_trip_identity(self):
        cfg = parse_string(SMALL_CUTOFF)
        assert parse_string(serialize(cfg)) == cfg
        assert config_sha256(cfg) == config_sha256(parse_string(serialize(cfg)))

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="frobnicate"):
            parse_string("[grid]\nfrobnicate = 3\n")

    def test_unknown_section_named(self):
        with pytest.raises(ConfigError, match="mystery"):
            parse_string("[mystery]\nx = 1\n")

    def test_bad_value_reported(self):
        with pytest.raises(ConfigError, match="nx"):
            parse_string("[grid]\nnx = banana\n")

    def test_defaults_complete(self):
        cfg = parse_string("")
        assert cfg.grid.nx == 33
        assert cfg.weight.alpha == "auto"
        assert cfg.inverse.seed == 1234


class TestVerifyWeights:
    def test_worked_geometry_feasible(self, tmp_path, capsys):
        cfgp = write_cfg(tmp_path, WORKED_WEIGHTS)
        rc = main(["verify-weights", "--config", str(cfgp), "--out",
                   str(tmp_path / "out")])
        assert rc == 0
        rep = json.loads((tmp_path / "out" / "verify_weights.json").read_text())
        assert rep["feasible"] is True
        assert rep["delta0"] > 0
        for key in ("margin_4_7", "margin_4_8", "margin_4_9", "margin_4_10",
                    "margin_4_11"):
            assert rep[key] > 0
        man = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert set(man) == {"config_sha256", "tool_version", "started_at",
                            "wall_seconds", "subcommand"}

    def test_infeasible_aperture_reported(self, tmp_path):
        text = WORKED_WEIGHTS.replace("L = 10", "L = 3").replace("T = 12", "T = 2")
        cfgp = write_cfg(tmp_path, text)
        rc = main(["verify-weights", "--config", str(cfgp), "--out",
                   str(tmp_path / "out")])
        assert rc == 0
        rep = json.loads((tmp_path / "out" / "verify_weights.json").read_text())
        assert rep["feasible"] is False
        assert "infeasible geometry" in rep["error"]

    def test_alpha_bound_violation_exits_2(self, tmp_path, capsys):
        text = WORKED_WEIGHTS.replace("beta = 0.05", "beta = 0.05\nalpha = 1.5")
        cfgp = write_cfg(tmp_path, text)
        rc = main(["verify-weights", "--config", str(cfgp), "--out",
                   str(tmp_path / "out")])
        assert rc == 2
        assert "(0, 1)" in capsys.readouterr().err

    def test_unknown_key_exits_2(self, tmp_path, capsys):
        cfgp = write_cfg(tmp_path, WORKED_WEIGHTS + "\n[grid]\n")
        (tmp_path / "bad.ini").write_text("[weight]\nwobble = 3\n")
        rc = main(["verify-weights", "--config", str(tmp_path / "bad.ini"),
                   "--out", str(tmp_path / "out")])
        assert rc == 2
        assert "wobble" in capsys.readouterr().err


class TestCarlemanSweep:
    def test_reruns_byte_identical(self, tmp_path):
        cfgp = write_cfg(tmp_path, SMALL_CUTOFF)
        rc1 = main(["carleman-sweep", "--config", str(cfgp), "--out",
                    str(tmp_path / "o1")])
        rc2 = main(["carleman-sweep", "--config", str(cfgp), "--out",
                    str(tmp_path / "o2")])
        assert rc1 == 0 and rc2 == 0
        names1 = sorted(p.name for p in (tmp_path / "o1").glob("*.csv"))
        names2 = sorted(p.name for p in (tmp_path / "o2").glob("*.csv"))
        assert names1 == names2 and names1
        for name in names1:
            assert (tmp_path / "o1" / name).read_bytes() == \
                (tmp_path / "o2" / name).read_bytes()

    def test_schema(self, tmp_path):
        cfgp = write_cfg(tmp_path, SMALL_CUTOFF)
        assert main(["carleman-sweep", "--config", str(cfgp), "--out",
                     str(tmp_path / "out")]) == 0
        for p in (tmp_path / "out").glob("carleman_sweep_*.csv"):
            head = p.read_text().splitlines()[0]
            assert head == "s,lhs,rhs_interior,rhs_boundary,ratio"


class TestInverseStability:
    def test_schema_and_fit(self, tmp_path):
        cfgp = write_cfg(tmp_path, SMALL_RECON)
        assert main(["inverse-stability", "--config", str(cfgp), "--out",
                     str(tmp_path / "out")]) == 0
        lines = (tmp_path / "out" / "inverse_stability.csv").read_text().splitlines()
        assert lines[0] == "amplitude,d,f_norm,M,theta_fit,C_fit,bound,passed"
        assert len(lines) == 3
        rows = [line.split(",") for line in lines[1:]]
        assert all(row[-1] == "true" for row in rows)
        assert float(rows[0][4]) == pytest.approx(1.0, abs=1e-9)
        recon = (tmp_path / "out" / "recon_error.csv").read_text().splitlines()
        assert recon[0] == "x,y,f_true,f_rec,abs_error"

    def test_seed_flag_reproduces(self, tmp_path):
        text = SMALL_RECON.replace("noise = 0", "noise = 0.001")
        cfgp = write_cfg(tmp_path, text)
        for out in ("o1", "o2"):
            assert main(["inverse-stability", "--config", str(cfgp), "--out",
                         str(tmp_path / out), "--seed", "99"]) == 0
        b1 = (tmp_path / "o1" / "inverse_stability.csv").read_bytes()
        b2 = (tmp_path / "o2" / "inverse_stability.csv").read_bytes()
        assert b1 == b2


class TestForward:
    def test_checkpoint_round_trip(self, tmp_path):
        cfgp = write_cfg(tmp_path, SMALL_RECON)
        assert main(["forward", "--config", str(cfgp), "--out",
                     str(tmp_path / "out")]) == 0
        cps = list((tmp_path / "out").glob("traj_*.csv"))
        assert len(cps) == 1
        fld = read_field(cps[0])
        assert fld.grid.nx == 17 and fld.grid.nt == 33
        assert np.max(np.abs(fld.values)) > 0


class TestConvergence:
    def test_orders_near_two(self, tmp_path):
        text = SMALL_RECON.replace("nx = 17", "nx = 9").replace("ny = 37", "ny = 9")
        text = text.replace("nt = 33", "nt = 9").replace("L = 9", "L = 1")
        cfgp = write_cfg(tmp_path, text)
        assert main(["convergence", "--config", str(cfgp), "--out",
                     str(tmp_path / "out")]) == 0
        lines = (tmp_path / "out" / "convergence.csv").read_text().splitlines()
        assert lines[0] == "level,h,dt,error"
        errs = [float(line.split(",")[3]) for line in lines[1:]]
        assert len(errs) == 3
        import math

        assert math.log2(errs[1] / errs[2]) >= 1.8
