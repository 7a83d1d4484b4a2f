"""Command-line interface: configs, exit codes, artifact layout."""

import json
from pathlib import Path

import numpy as np
import pytest

from eqchain.cli import (
    EXIT_NO_CONVERGENCE,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VALIDATION,
    ConfigError,
    load_config,
    main,
)


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def strip_timestamps(path: Path):
    lines = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("# timestamp") or '"timestamp"' in line:
            continue
        lines.append(line)
    return lines


def test_unknown_top_level_key_is_rejected(tmp_path):
    cfg = write_config(tmp_path, {"potentials": {"N": 4}})
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path)]) == EXIT_USAGE


def test_unknown_block_key_is_rejected(tmp_path):
    cfg = write_config(tmp_path, {"spectrum": {"kmax": 8}})
    with pytest.raises(ConfigError):
        load_config(cfg)
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path)]) == EXIT_USAGE


def test_malformed_json_is_usage_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    assert main(["spectrum", "--config", str(path), "--out", str(tmp_path)]) == EXIT_USAGE


def test_bad_flag_is_usage_error(capsys):
    assert main(["spectrum", "--scheme", "not-a-scheme"]) == EXIT_USAGE
    capsys.readouterr()


def test_inadmissible_potential_is_usage_error(tmp_path):
    cfg = write_config(tmp_path, {"potential": {"N": 4, "v": [1.0, 0.0, 0.0]}})
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path)]) == EXIT_USAGE


def test_spectrum_artifacts_are_reproducible(tmp_path):
    cfg = write_config(tmp_path, {"spectrum": {"k_max": 8, "parity": "odd"}})
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    for out in (out1, out2):
        code = main(
            ["spectrum", "--config", cfg, "--out", str(out), "--sector", "odd"]
        )
        assert code == EXIT_OK
    for name in ("chains.csv", "report.json"):
        assert strip_timestamps(out1 / name) == strip_timestamps(out2 / name)


def test_spectrum_csv_format(tmp_path):
    cfg = write_config(tmp_path, {"spectrum": {"k_max": 8}})
    out = tmp_path / "out"
    assert main(["spectrum", "--config", cfg, "--out", str(out), "--sector", "odd"]) == EXIT_OK
    lines = (out / "chains.csv").read_text(encoding="utf-8").splitlines()
    meta = [l for l in lines if l.startswith("#")]
    assert any(l.startswith("# command: spectrum") for l in meta)
    assert any(l.startswith("# version:") for l in meta)
    body = [l for l in lines if not l.startswith("#")]
    assert body[0] == "ell,parity,k,re_E,im_E"
    ell, parity, k, re_e, im_e = body[1].split(",")
    assert (ell, parity, k) == ("0", "-", "0")
    # 17 significant digits survive a float round-trip exactly
    assert float(re_e) == pytest.approx(3.7996730297979106, rel=1e-7)
    assert f"{float(re_e):.17g}" == re_e


def test_spectrum_with_oracle_comparison(tmp_path):
    cfg = write_config(tmp_path, {"spectrum": {"k_max": 8}})
    out = tmp_path / "out"
    code = main(
        ["spectrum", "--config", cfg, "--out", str(out), "--sector", "odd",
         "--with-oracle"]
    )
    assert code == EXIT_OK
    rows = [
        l for l in (out / "oracle_comparison.csv").read_text().splitlines()
        if not l.startswith(("#", "parity"))
    ]
    rels = np.array([float(r.split(",")[-1]) for r in rows])
    assert rels.max() < 1e-6


def test_via_dw_recovers_even_levels(tmp_path):
    cfg = write_config(tmp_path, {"spectrum": {"k_max": 12}})
    out = tmp_path / "out"
    assert main(["spectrum", "--config", cfg, "--out", str(out), "--via-dw"]) == EXIT_OK
    rows = [
        l for l in (out / "even_levels_dw.csv").read_text().splitlines()
        if not l.startswith(("#", "k,"))
    ]
    ground = float(rows[0].split(",")[1])
    assert ground == pytest.approx(1.0603620904841829, abs=1e-7)


def test_wavefunction_requires_grid_and_lambda(tmp_path):
    out = str(tmp_path / "out")
    cfg = write_config(tmp_path, {"wavefunction": {"lambda": 0.75}}, "a.json")
    assert main(["wavefunction", "--config", cfg, "--out", out]) == EXIT_USAGE
    cfg = write_config(tmp_path, {"wavefunction": {"a_grid": [0.0]}}, "b.json")
    assert main(["wavefunction", "--config", cfg, "--out", out]) == EXIT_USAGE


def test_wavefunction_artifacts(tmp_path):
    cfg = write_config(
        tmp_path,
        {"wavefunction": {"lambda": 0.75, "a_grid": [0.0, 0.5], "k_max": 12}},
    )
    out = tmp_path / "out"
    assert main(["wavefunction", "--config", cfg, "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "wavefunction_report.json").read_text())
    assert report["max_relative_deviation"] < 1e-4
    assert report["flagged_points"] == []
    rows = [
        l for l in (out / "wavefunction.csv").read_text().splitlines()
        if not l.startswith(("#", "a,"))
    ]
    sources = {r.split(",")[-1] for r in rows}
    assert sources == {"eqc", "oracle"}


def test_stability_reports_nan_for_unconverged(tmp_path):
    cfg = write_config(
        tmp_path,
        {"stability": {"v2_grid": [0.0], "schemes": ["alternating-immediate"],
                       "k_max": 8, "max_sweeps": 2}},
    )
    out = tmp_path / "out"
    assert main(["stability", "--config", cfg, "--out", str(out), "--sector", "odd"]) == EXIT_OK
    rows = [
        l for l in (out / "stability.csv").read_text().splitlines()
        if not l.startswith(("#", "v2,"))
    ]
    assert len(rows) == 1
    v2, parity, scheme, ratio, radius = rows[0].split(",")
    assert (parity, scheme) == ("-", "alternating-immediate")
    assert radius == "nan"
    assert np.isfinite(float(ratio))


def test_stability_rejects_unknown_scheme(tmp_path):
    cfg = write_config(tmp_path, {"stability": {"schemes": ["jacobi"]}})
    assert main(["stability", "--config", cfg, "--out", str(tmp_path)]) == EXIT_USAGE


def test_validate_pass_and_corruption_detection(tmp_path):
    base = {
        "validate": {"checks": ["dw_residual"], "n_lambda": 2, "n_levels": 16}
    }
    cfg = write_config(tmp_path, base)
    out = tmp_path / "out"
    assert main(["validate", "--config", cfg, "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "validation.json").read_text())
    assert report["passed"] is True
    assert report["checks"]["dw_residual"]["value"] < 1e-6

    # corrupt one Dirichlet level by 1%: the identity must break loudly
    chain_file = tmp_path / "chains.csv"
    chain_file.write_text(
        "ell,parity,k,re_E,im_E\n0,-,0,3.837789,0.0\n", encoding="utf-8"
    )
    corrupted = dict(base)
    corrupted["validate"] = dict(base["validate"], chain_file=str(chain_file))
    cfg2 = write_config(tmp_path, corrupted, "corrupted.json")
    out2 = tmp_path / "out2"
    assert main(["validate", "--config", cfg2, "--out", str(out2)]) == EXIT_VALIDATION
    report2 = json.loads((out2 / "validation.json").read_text())
    assert report2["passed"] is False


def test_validate_unknown_check_is_usage_error(tmp_path):
    cfg = write_config(tmp_path, {"validate": {"checks": ["spectral_flow"]}})
    assert main(["validate", "--config", cfg, "--out", str(tmp_path)]) == EXIT_USAGE
