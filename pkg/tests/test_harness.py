"""Experiment drivers: slope fits, config parsing, determinism, audits."""

import math

import numpy as np
import pytest

from maxmult.harness import (
    ExperimentConfig,
    ScalingReport,
    fit_slope,
    parse_config_file,
    run_decomposition_audit,
    run_entropy_scaling,
    run_lower_bound,
    run_upper_scaling,
    save_json,
    save_report_csv,
    subseed_rng,
)


def test_fit_slope_exact_power_law():
    slope, err = fit_slope([(2, 8.0), (4, 64.0), (8, 512.0)])
    assert slope == pytest.approx(3.0, rel=1e-12)
    assert err == pytest.approx(0.0, abs=1e-9)


def test_fit_slope_two_points_has_zero_stderr():
    slope, err = fit_slope([(4, 2.0), (16, 4.0)])
    assert slope == pytest.approx(0.5)
    assert err == 0.0


def test_fit_slope_noisy_within_three_sigma():
    rng = np.random.default_rng(8)
    sizes = [2 ** j for j in range(3, 11)]
    vals = [0.7 * n ** 0.4 * 2.0 ** rng.normal(scale=0.05) for n in sizes]
    slope, err = fit_slope(zip(sizes, vals))
    assert err > 0
    assert abs(slope - 0.4) <= 3 * err


def test_fit_slope_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_slope([(4, 2.0)])
    with pytest.raises(ValueError):
        fit_slope([(4, 2.0), (8, 0.0)])
    with pytest.raises(ValueError):
        fit_slope([(4, 2.0), (8, -1.0)])


def test_sweeps_need_four_points():
    with pytest.raises(ValueError):
        run_lower_bound(n_list=(8, 16, 32))
    with pytest.raises(ValueError):
        run_entropy_scaling(n_list=(4, 8, 16))


def test_config_file_parsing(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(
        "# full line comment\n"
        "experiment = upper  # trailing comment\n"
        "p = 1.5\n"
        "trials = 3\n"
        "sizes = 8, 16, 32, 64\n"
        "lambdas = -2, -1, 1, 2\n"
        "\n"
        "weight_mode = ones\n"
    )
    data = parse_config_file(str(path))
    assert data["experiment"] == "upper"
    assert data["p"] == 1.5 and isinstance(data["p"], float)
    assert data["trials"] == 3 and isinstance(data["trials"], int)
    assert data["sizes"] == (8, 16, 32, 64)
    assert data["lambdas"] == (-2.0, -1.0, 1.0, 2.0)
    assert data["weight_mode"] == "ones"

    cfg = ExperimentConfig.from_mapping(data)
    assert cfg.sizes == (8, 16, 32, 64)
    assert cfg.seed == 0  # untouched default

    bad = tmp_path / "bad.cfg"
    bad.write_text("just words\n")
    with pytest.raises(ValueError):
        parse_config_file(str(bad))
    with pytest.raises(ValueError):
        ExperimentConfig.from_mapping({"tile_budget": 7})


def test_subseed_streams_are_stable_and_distinct():
    a = subseed_rng(42, "lower/N=8").integers(0, 1 << 30, size=6)
    b = subseed_rng(42, "lower/N=8").integers(0, 1 << 30, size=6)
    c = subseed_rng(42, "lower/N=16").integers(0, 1 << 30, size=6)
    d = subseed_rng(43, "lower/N=8").integers(0, 1 << 30, size=6)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_lower_bound_unit_case_and_determinism():
    kwargs = dict(p=1.5, n_list=(1, 2, 4, 8), trials=4, seed=7,
                  length_log2=6, samples_log2=13)
    rep = run_lower_bound(**kwargs)
    # one frequency block: the multiplier is a global sign, ratio exactly 1
    assert rep.values[0] == 1.0
    assert rep.experiment == "lower_bound"
    assert rep.sizes == (1, 2, 4, 8)
    assert all(v > 0 for v in rep.values)
    assert rep.extras["fnorm_target"] == pytest.approx(1 - 1 / 1.5)
    again = run_lower_bound(**kwargs)
    assert again.to_dict() == rep.to_dict()

    with pytest.raises(ValueError):
        run_lower_bound(p=2.5)
    with pytest.raises(ValueError):
        run_lower_bound(n_list=(8, 16, 32, 512), samples_log2=13)


def test_upper_scaling_with_chain_verification():
    # the verify flag asserts single scale <= maximal <= crude control
    # pointwise inside the driver; any violation raises
    rep = run_upper_scaling(p=1.5, r=2.5, n_list=(4, 8, 16, 32), trials=2,
                            seed=3, length_log2=9, samples_log2=16,
                            verify_chain=True)
    assert rep.experiment == "upper_scaling"
    assert all(v > 0 for v in rep.values)
    assert rep.extras["slope_bound"] == pytest.approx(1 / 1.5 - 1 / 2.5 + 0.15)
    with pytest.raises(ValueError):
        run_upper_scaling(p=2.5)
    with pytest.raises(ValueError):
        run_upper_scaling(r=2.0)


def test_entropy_scaling_small_sweep():
    rep = run_entropy_scaling(r=2.5, n_list=(4, 8, 16, 32), k_scales=4,
                              trials=1, seed=11)
    assert rep.experiment == "entropy_scaling"
    assert math.isnan(rep.p)
    assert all(v > 0 for v in rep.values)
    # normalized instances stay within a small factor of the envelope
    assert rep.extras["max_instance_ratio"] <= 8.0
    with pytest.raises(ValueError):
        run_entropy_scaling(r=2.0)


def test_decomposition_audit_small():
    out = run_decomposition_audit(tile_count=40, trials=3, seed=5)
    assert out["ok"] and out["problems"] == []
    assert len(out["sets"]) == 3
    assert 0 < out["max_tiles"] <= 40
    assert out["worst_bessel"] >= 0
    assert out["rng"] == "philox"


def test_report_writers_are_byte_stable(tmp_path):
    rep = ScalingReport("lower_bound", 1.5, math.nan, 0, (2, 4),
                        (0.5, 0.7071067811865476), 0.25, 0.0, {"trials": 1})
    csv_path = tmp_path / "r.csv"
    save_report_csv(rep, str(csv_path))
    text = csv_path.read_text()
    assert text.startswith("N,value\n")
    for line in text.strip().split("\n")[1:]:
        n_txt, v_txt = line.split(",")
        assert float(v_txt) in rep.values  # repr round trips exactly
    save_report_csv(rep, str(tmp_path / "r2.csv"))
    assert (tmp_path / "r2.csv").read_bytes() == csv_path.read_bytes()

    blob = {"b": 1, "a": [1, 2]}
    save_json(blob, str(tmp_path / "a.json"))
    save_json(blob, str(tmp_path / "b.json"))
    a = (tmp_path / "a.json").read_bytes()
    assert a == (tmp_path / "b.json").read_bytes()
    assert a.endswith(b"\n")
    assert a.index(b'"a"') < a.index(b'"b"')  # keys sorted


def test_report_to_dict_carries_extras():
    rep = ScalingReport("upper_scaling", 1.5, 2.5, 9, (8, 16), (1.0, 1.1),
                        0.1, 0.01, {"slope_bound": 0.4})
    d = rep.to_dict()
    assert d["slope_bound"] == 0.4
    assert d["rng"] == "philox"
    assert d["sizes"] == [8, 16]
    assert rep.rows() == [(8, 1.0), (16, 1.1)]
