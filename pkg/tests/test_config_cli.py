"""Scenario-file parsing and the command-line front end."""

import pytest

from detuned_tls import ConfigError, build_system_spec, parse_config, serialize_config
from detuned_tls.cli import main
from detuned_tls.config import config_from_system_spec, resolve_parameter_key

CLASSICAL_CFG = """\
# resonant scenario
e_upper = 1.0
e_lower = 0.0
drive.omega = 1.0          # matches the gap
drive.epsilon = 0.1
reservoir_u.gamma = 0.3
reservoir_u.mu = 1.2
reservoir_u.temperature = 0.2
reservoir_u.occupation = effective
reservoir_l.gamma = 0.2
reservoir_l.mu = 0.0
reservoir_l.temperature = 0.2
reservoir_l.occupation = effective
"""

QUANTUM_CFG = """\
e_upper = 1.0
e_lower = 0.0
cavity.omega_cav = 1.2
cavity.g = 0.04
cavity.fock_cutoff = 10
reservoir_u.gamma = 0.3
reservoir_u.mu = 0.9
reservoir_u.temperature = 0.2
reservoir_u.occupation = fixed:0.7
reservoir_l.gamma = 0.2
reservoir_l.mu = 0.1
reservoir_l.temperature = 0.2
reservoir_l.occupation = fixed:0.2
bath.gamma = 0.25
bath.temperature = 0.3
bath.occupation = fixed:0.1
"""

LASER_CFG = """\
e_upper = 1.0
e_lower = 0.0
cavity.omega_cav = 1.2
cavity.g = 0.35
reservoir_u.gamma = 0.4
reservoir_u.mu = 1.2
reservoir_u.temperature = 0.2
reservoir_u.occupation = fixed:0.95
reservoir_l.gamma = 0.4
reservoir_l.mu = 0.0
reservoir_l.temperature = 0.2
reservoir_l.occupation = fixed:0.05
bath.gamma = 0.25
bath.temperature = 0.2
bath.occupation = fixed:0.0
"""


def test_parse_serialize_round_trip_is_idempotent():
    cfg = parse_config(CLASSICAL_CFG)
    text = serialize_config(cfg)
    cfg2 = parse_config(text)
    assert cfg2.values == cfg.values
    assert serialize_config(cfg2) == text


def test_parse_rejects_unknown_key_with_line_number():
    with pytest.raises(ConfigError) as err:
        parse_config("e_upper = 1.0\nmystery = 2\n")
    assert err.value.line == 2
    assert "mystery" in str(err.value)


def test_parse_rejects_duplicates_and_malformed_lines():
    with pytest.raises(ConfigError) as err:
        parse_config("e_upper = 1.0\ne_upper = 2.0\n")
    assert err.value.line == 2
    with pytest.raises(ConfigError):
        parse_config("just some words\n")
    with pytest.raises(ConfigError):
        parse_config("e_upper =\n")


def test_build_spec_requires_complete_sections():
    with pytest.raises(ConfigError) as err:
        build_system_spec(parse_config("e_upper = 1.0\ne_lower = 0.0\ndrive.omega = 1.0\n"))
    assert "reservoir_u" in str(err.value)

    incomplete_drive = CLASSICAL_CFG.replace("drive.epsilon = 0.1\n", "")
    with pytest.raises(ConfigError) as err:
        build_system_spec(parse_config(incomplete_drive))
    assert "drive.epsilon" in str(err.value)


def test_build_spec_reports_semantic_errors_as_config_errors():
    swapped = CLASSICAL_CFG.replace("e_upper = 1.0", "e_upper = -2.0")
    with pytest.raises(ConfigError):
        build_system_spec(parse_config(swapped))
    bad_occ = CLASSICAL_CFG.replace("reservoir_u.occupation = effective",
                                    "reservoir_u.occupation = sometimes")
    with pytest.raises(ConfigError):
        build_system_spec(parse_config(bad_occ))


def test_spec_config_round_trip():
    spec = build_system_spec(parse_config(QUANTUM_CFG))
    cfg = config_from_system_spec(spec)
    assert build_system_spec(cfg) == spec


def test_resolve_parameter_key_suffix_match():
    assert resolve_parameter_key("omega_cav") == "cavity.omega_cav"
    assert resolve_parameter_key("drive.omega") == "drive.omega"
    with pytest.raises(ConfigError):
        resolve_parameter_key("gamma")  # ambiguous
    with pytest.raises(ConfigError):
        resolve_parameter_key("nope")


@pytest.fixture()
def classical_cfg_file(tmp_path):
    path = tmp_path / "classical.cfg"
    path.write_text(CLASSICAL_CFG)
    return path


@pytest.fixture()
def quantum_cfg_file(tmp_path):
    path = tmp_path / "quantum.cfg"
    path.write_text(QUANTUM_CFG)
    return path


@pytest.fixture()
def laser_cfg_file(tmp_path):
    path = tmp_path / "laser.cfg"
    path.write_text(LASER_CFG)
    return path


def _read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    return header, rows


def test_classical_ss_resonant_effective_energy_is_bare(classical_cfg_file, tmp_path):
    out = tmp_path / "out.csv"
    code = main(["classical-ss", "--config", str(classical_cfg_file), "--out", str(out)])
    assert code == 0
    header, rows = _read_csv(out)
    assert header[0] == "sample_id"
    assert header[-1] == "flags"
    assert len(rows) == 1
    assert float(rows[0]["Eeff_u"]) == 1.0
    assert float(rows[0]["Eeff_l"]) == 0.0
    assert abs(float(rows[0]["law1_residual"])) < 1e-12


def test_cli_output_is_deterministic(classical_cfg_file, tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["classical-ss", "--config", str(classical_cfg_file),
            "--sweep", "drive.omega=0.9:1.3:5"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_laser_sweep_rows_match_pulled_frequency_formula(laser_cfg_file, tmp_path):
    out = tmp_path / "laser.csv"
    code = main([
        "laser", "--config", str(laser_cfg_file),
        "--sweep", "omega_cav=1.0:1.4:41", "--out", str(out),
    ])
    assert code == 0
    header, rows = _read_csv(out)
    assert len(rows) == 41
    for row in rows:
        omega_cav = float(row["cavity.omega_cav"])
        gamma_u = float(row["reservoir_u.gamma"])
        gamma_l = float(row["reservoir_l.gamma"])
        gamma_b = float(row["bath.gamma"])
        gap = float(row["e_upper"]) - float(row["e_lower"])
        expected = ((gamma_u + gamma_l) * omega_cav + gamma_b * gap) / (
            gamma_u + gamma_l + gamma_b
        )
        assert float(row["omega"]) == pytest.approx(expected, rel=1e-15)


def test_bloch_gain_spectrum_csv(tmp_path):
    out = tmp_path / "gain.csv"
    code = main([
        "bloch-gain", "--equal-occupations", "fermi:T=0.1,mu=0.2",
        "--e-k0", "0.3", "--gamma-u", "0.05", "--gamma-l", "0.05",
        "--grid=-1:1:201", "--out", str(out),
    ])
    assert code == 0
    header, rows = _read_csv(out)
    assert header == ["sample_id", "delta", "rate"]
    assert len(rows) == 201
    mid = rows[100]
    assert float(mid["delta"]) == 0.0
    assert float(mid["rate"]) == 0.0
    for row in rows:
        assert float(row["delta"]) * float(row["rate"]) <= 1e-15


def test_quantum_ss_row(quantum_cfg_file, tmp_path):
    out = tmp_path / "q.csv"
    code = main(["quantum-ss", "--config", str(quantum_cfg_file), "--out", str(out)])
    assert code == 0
    _, rows = _read_csv(out)
    assert len(rows) == 1
    rate = float(rows[0]["R_ss"])
    assert rate > 0
    assert abs(float(rows[0]["law1_residual"])) < 1e-9


def test_quantum_ss_exhausted_cutoff_exits_3(tmp_path, capsys):
    cfg = QUANTUM_CFG.replace("bath.occupation = fixed:0.1", "bath.occupation = fixed:3.0")
    path = tmp_path / "hot.cfg"
    path.write_text(cfg)
    code = main(["quantum-ss", "--config", str(path), "--fock-cutoff", "1"])
    assert code == 3
    assert "solver error" in capsys.readouterr().err


def test_malformed_config_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("e_upper = 1.0\nwhatever = 3\n")
    code = main(["classical-ss", "--config", str(path)])
    assert code == 2
    assert "line 2" in capsys.readouterr().err


def test_classical_evolve_trajectory(classical_cfg_file, tmp_path):
    out = tmp_path / "traj.csv"
    code = main([
        "classical-evolve", "--config", str(classical_cfg_file),
        "--t-final", "20", "--out", str(out),
    ])
    assert code == 0
    header, rows = _read_csv(out)
    assert header == ["t", "sigma_uu", "sigma_ll", "re_sigma_ul", "im_sigma_ul"]
    assert float(rows[0]["t"]) == 0.0
    assert float(rows[-1]["t"]) == pytest.approx(20.0, abs=1e-12)


def test_quantum_evolve_trajectory(quantum_cfg_file, tmp_path):
    out = tmp_path / "qtraj.csv"
    code = main([
        "quantum-evolve", "--config", str(quantum_cfg_file), "--fock-cutoff", "4",
        "--t-final", "2.0", "--n-store", "5", "--out", str(out),
    ])
    assert code == 0
    header, rows = _read_csv(out)
    assert header == ["t", "sigma_uu", "sigma_ll", "n_ph", "rate"]
    assert len(rows) == 5
    assert float(rows[0]["sigma_uu"]) == 0.0
    assert float(rows[-1]["sigma_uu"]) > 0.0


def test_audit_random_deterministic_and_flags(classical_cfg_file, tmp_path):
    out1, out2 = tmp_path / "a1.csv", tmp_path / "a2.csv"
    args = [
        "audit", "--config", str(classical_cfg_file),
        "--random", "25", "--seed", "7",
        "--range", "drive.omega=0.6:1.8",
        "--range", "reservoir_u.mu=-0.5:1.5",
    ]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    _, rows = _read_csv(out1)
    assert len(rows) == 25
    assert all(row["flags"].startswith("regime=") for row in rows)
    assert not any("violation" in row["flags"] for row in rows)


def test_audit_grid_handles_failed_samples(classical_cfg_file, tmp_path):
    out = tmp_path / "g.csv"
    code = main([
        "audit", "--config", str(classical_cfg_file),
        "--sweep", "e_upper=-0.5:1.5:5", "--out", str(out),
    ])
    assert code == 0
    _, rows = _read_csv(out)
    assert any("error=" in row["flags"] for row in rows)
    assert any("regime=" in row["flags"] for row in rows)


def test_find_violation_exit_codes(tmp_path):
    out = tmp_path / "v.csv"
    code = main(["find-violation", "--seed", "3", "--out", str(out)])
    assert code == 0
    _, rows = _read_csv(out)
    assert len(rows) == 1
    assert "violation" in rows[0]["flags"]
    assert float(rows[0]["Sdot_total"]) < -1e-10

    # resonant-only search space: bare equals effective, nothing to find
    code = main([
        "find-violation", "--seed", "3", "--max-samples", "50",
        "--range", "drive.omega=1.0:1.0",
    ])
    assert code == 4
