import json
import subprocess
import sys

import numpy as np
import pytest

from lassospec import ExperimentConfig, load_config
from lassospec.config import PotentialSpec

STD_TOML = """\
[problem]
m = 2
k = 1

[potential.sigma1]
preset = "bump"
amplitude = 0.2

[potential.sigma2]
preset = "sine"
amplitude = 0.3
frequency = 1
offset = 0.1

[truncation]
n = 4
n0 = 4
n_loop = 4

[numerics]
allow_degenerate_signs = true
"""

ZERO_TOML = """\
[problem]
m = 2
k = 1

[potential.sigma1]
preset = "bump"
amplitude = 0.2

[potential.sigma2]
preset = "zero"

[truncation]
n = 4
n0 = 4
n_loop = 4
"""


def run_cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "lassospec", *args],
                          capture_output=True, text=True, cwd=cwd)


@pytest.fixture()
def std_config(tmp_path):
    p = tmp_path / "std.toml"
    p.write_text(STD_TOML)
    return p


@pytest.fixture()
def zero_config(tmp_path):
    p = tmp_path / "zero.toml"
    p.write_text(ZERO_TOML)
    return p


# ----------------------------------------------------------------- config

def test_config_roundtrips_through_dict():
    cfg = ExperimentConfig(m=3, k=2, n=7,
                           sigma1=PotentialSpec(preset="sine", params={"amplitude": 0.2}),
                           sigma2=PotentialSpec(values=[0.0, 0.1, 0.0]))
    d = cfg.to_dict()
    cfg2 = ExperimentConfig.from_dict(d)
    assert cfg2.to_dict() == d


def test_config_loads_from_toml(std_config):
    cfg = load_config(std_config)
    assert cfg.m == 2 and cfg.k == 1 and cfg.n == 4
    assert cfg.allow_degenerate_signs
    s1, s2 = cfg.build_potentials()
    assert s1.length == 2.0 and s2.length == 1.0
    assert s2(0.25) == pytest.approx(0.4, abs=1e-12)


def test_config_missing_sigma2_rejected():
    with pytest.raises(ValueError, match="sigma2"):
        ExperimentConfig.from_dict({"problem": {"m": 1, "k": 1},
                                    "potential": {"sigma1": {"preset": "zero"}}})


def test_config_unknown_preset_rejected():
    with pytest.raises(ValueError, match="preset"):
        PotentialSpec(preset="wiggle").validate()


def test_config_branch_bounds():
    with pytest.raises(ValueError):
        ExperimentConfig(m=2, k=3).validate()
    with pytest.raises(ValueError):
        ExperimentConfig(m=2, k=1, n=0).validate()


# -------------------------------------------------------------------- CLI

def test_cli_alpha(std_config, tmp_path):
    r = run_cli(["alpha", "--config", "std.toml", "--out", "o"], tmp_path)
    assert r.returncode == 0
    lines = (tmp_path / "o" / "alpha.csv").read_text().splitlines()
    assert lines[0] == "k,alpha,interval_lo,interval_hi,residual"
    assert len(lines) == 3
    k, alpha, lo, hi, res = lines[1].split(",")
    assert float(lo) < float(alpha) < float(hi)
    assert abs(float(res)) < 1e-12
    # 15 significant digits survive a parse round trip
    assert f"%.15g" % float(alpha) == alpha


def test_cli_forward_outputs_and_determinism(std_config, tmp_path):
    r1 = run_cli(["forward", "--config", "std.toml", "--out", "a"], tmp_path)
    r2 = run_cli(["forward", "--config", "std.toml", "--out", "b"], tmp_path)
    assert r1.returncode == 0 and r2.returncode == 0
    for name in ("eigenvalues.csv", "subspectrum.csv", "alpha.csv", "omegas.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    header = (tmp_path / "a" / "eigenvalues.csv").read_text().splitlines()[0]
    assert header == "n,j,lambda,rho,asymptote,residual"
    om = json.loads((tmp_path / "a" / "omegas.json").read_text())
    assert set(om) == {"omegas", "degenerate_indices"}
    assert all(w in (-1, 1) for w in om["omegas"])


def test_cli_roundtrip_standard(std_config, tmp_path):
    r = run_cli(["roundtrip", "--config", "std.toml", "--out", "o"], tmp_path)
    assert r.returncode == 0, r.stderr
    rep = json.loads((tmp_path / "o" / "roundtrip.json").read_text())
    assert rep["l2_error_mod_constant"] < 5e-2
    assert rep["gram_condition"] > 1.0
    assert set(rep["timings"]) == {"forward_s", "inverse_s"}
    rec = json.loads((tmp_path / "o" / "reconstruction.json").read_text())
    assert set(rec) == {"K", "N", "residual_norm", "gram_condition", "recovered_sigma2"}
    sd = json.loads((tmp_path / "o" / "spectral_data.json").read_text())
    assert set(sd) == {"nus", "betas", "omegas"}
    assert len(sd["nus"]) == len(sd["betas"]) == 4


def test_cli_zero_sigma2_rejected_with_a3(zero_config, tmp_path):
    r = run_cli(["check", "--config", "zero.toml", "--out", "o"], tmp_path)
    assert r.returncode == 2
    assert "A3" in r.stderr
    rep = json.loads((tmp_path / "o" / "check.json").read_text())
    assert rep["a3_ok"] is False
    assert rep["a3_failing_n"] == [2, 4]
    r = run_cli(["roundtrip", "--config", "zero.toml", "--out", "o2"], tmp_path)
    assert r.returncode == 2
    assert "A3" in r.stderr


def test_cli_shift_flag_flips_a2(std_config, tmp_path):
    r = run_cli(["check", "--config", "std.toml", "--out", "o", "--shift", "-50"],
                tmp_path)
    assert r.returncode == 2
    assert "A2" in r.stderr


def test_cli_n_and_k_overrides(std_config, tmp_path):
    r = run_cli(["forward", "--config", "std.toml", "--out", "o", "--n", "2",
                 "--k", "2"], tmp_path)
    assert r.returncode == 0
    rows = (tmp_path / "o" / "subspectrum.csv").read_text().splitlines()[1:]
    js = {int(line.split(",")[1]) for line in rows}
    assert js == {0, 2}


def test_cli_bad_config_is_computation_error(tmp_path):
    (tmp_path / "bad.toml").write_text("[problem]\nm = 2\nk = 1\n")
    r = run_cli(["forward", "--config", "bad.toml", "--out", "o"], tmp_path)
    assert r.returncode == 1
    assert "sigma" in r.stderr


# --------------------------------------------------------------- plot data

def test_plotdata_masks_and_crossings(std_config, tmp_path):
    from lassospec import solve_alpha

    r = run_cli(["plotdata", "--config", "std.toml", "--out", "o"], tmp_path)
    assert r.returncode == 0
    data = np.genfromtxt(tmp_path / "o" / "plotdata.csv", delimiter=",", names=True)
    rho = data["rho"]
    tan_col = data["tan_rho_m"]
    ratio = data["neg_sin_ratio"]
    m = 2
    # no finite tan value within 1e-3 of a pole of tan(rho m)
    poles = [(np.pi / 2 + j * np.pi) / m for j in range(2 * m)]
    for p in poles:
        if p < np.pi:
            near = np.abs(rho - p) < 1e-3
            assert np.all(np.isnan(tan_col[near]))
    # sign changes of (tan - ratio) between consecutive finite rows bracket
    # exactly the alpha_k
    alphas = solve_alpha(m)
    diff = tan_col - ratio
    finite = ~np.isnan(diff)
    crossings = []
    for i in range(len(rho) - 1):
        if finite[i] and finite[i + 1] and diff[i] * diff[i + 1] < 0:
            crossings.append((rho[i], rho[i + 1]))
    assert len(crossings) == m
    for (lo, hi), a in zip(crossings, alphas):
        assert lo < a < hi


def test_cli_invert_and_subspectrum(std_config, tmp_path):
    r = run_cli(["subspectrum", "--config", "std.toml", "--out", "o"], tmp_path)
    assert r.returncode == 0
    assert "k=1" in r.stdout
    r = run_cli(["invert", "--config", "std.toml", "--out", "o"], tmp_path)
    assert r.returncode == 0
    assert (tmp_path / "o" / "reconstruction.json").exists()
    assert (tmp_path / "o" / "spectral_data.json").exists()


def test_cli_standard_fixture_needs_degenerate_flag(tmp_path):
    # without allow_degenerate_signs the symmetric standard fixture is
    # refused just like the zero one: its A3 signature is identical
    strict = STD_TOML.replace("allow_degenerate_signs = true",
                              "allow_degenerate_signs = false")
    (tmp_path / "strict.toml").write_text(strict)
    r = run_cli(["roundtrip", "--config", "strict.toml", "--out", "o"], tmp_path)
    assert r.returncode == 2
    assert "allow_degenerate_signs" in r.stderr
