import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from varlab.lab_harness import (
    CSV_HEADER,
    GrowthReport,
    GrowthRow,
    check_bands,
    clear_cache,
    fit_growth,
    growth_study,
    load_descriptors,
    read_config,
    refinement_study,
    run_cli,
)


# fitting ----------------------------------------------------------------------------

def test_fit_exact_log_power():
    rows = [(n, 3 * math.log(n) ** 0.5) for n in (16, 32, 64, 128, 256)]
    b, r = fit_growth(rows, "log_power")
    assert b == pytest.approx(0.5, abs=1e-12) and r < 1e-10


def test_fit_constant_and_poly():
    b, r = fit_growth([(n, 7.0) for n in range(1, 6)], "constant")
    assert b == 0 and r < 1e-15
    b, r = fit_growth([(n, 2 * n ** 0.25) for n in (4, 8, 16, 32)], "poly_power")
    assert b == pytest.approx(0.25, abs=1e-12)
    b, _ = fit_growth([(n, 5.0) for n in (4, 8, 16, 32)], "poly_power")
    assert abs(b) < 1e-12


def test_fit_noisy_log_power():
    rng = np.random.default_rng(1)
    ns = 2 ** np.arange(4, 21)
    rows = [(n, 3 * math.log(n) ** 0.5 * (1 + 0.01 * rng.normal())) for n in ns]
    b, _ = fit_growth(rows, "log_power")
    assert 0.45 <= b <= 0.55


def test_fit_errors():
    with pytest.raises(ValueError):
        fit_growth([(2, 1), (4, 1), (8, 1)], "constant")
    with pytest.raises(ValueError):
        fit_growth([(2, 1), (4, 0), (8, 1), (16, 1)], "constant")
    with pytest.raises(ValueError):
        fit_growth([(4, 1), (4, 2), (4, 3), (4, 4)], "poly_power")
    with pytest.raises(ValueError):
        fit_growth([(1, 1), (2, 2), (3, 3), (4, 4)], "log_power")
    with pytest.raises(ValueError):
        fit_growth([(2, 1), (4, 1), (8, 1), (16, 1)], "cubic")


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(0.1, 10))
def test_fit_recovers_power(beta, a):
    rows = [(n, a * n ** beta) for n in (2, 4, 8, 16, 32)]
    b, r = fit_growth(rows, "poly_power")
    assert b == pytest.approx(beta, abs=1e-9) and r < 1e-9


# studies ----------------------------------------------------------------------------

def test_identity_study():
    rep = growth_study("identity")
    assert np.allclose(rep.ratios, 1.0, rtol=1e-13)
    assert abs(rep.fitted_exponent) < 1e-9
    assert all(ok for _, ok, _ in check_bands(rep, load_descriptors()["identity"]["bands"]))


def test_study_rejects_few_params_and_unknown():
    with pytest.raises(ValueError):
        growth_study("identity", params=[1, 2, 3])
    with pytest.raises(ValueError):
        growth_study("nope")
    with pytest.raises(ValueError):
        growth_study({"runner": "nope", "params": [1, 2, 3, 4], "norms": [2, None, 2]})


def test_homogeneity_invariance():
    # scaling inputs by param leaves ratios invariant for linear operators
    d = {"runner": "identity", "params": [1, 2, 4, 8], "norms": [2, None, 2], "model": "poly_power",
         "config": {"grid_m": 1024, "period": 32.0, "seed": 0}}
    rep = growth_study(d)
    assert np.allclose(rep.ratios, 1.0) and abs(rep.fitted_exponent) < 1e-9


def test_determinism():
    clear_cache()
    a = growth_study("expsum", params=[16, 32, 64, 128])
    clear_cache()
    b = growth_study("expsum", params=[16, 32, 64, 128])
    assert a.to_csv() == b.to_csv()


def test_refinement_study_identity():
    rr = refinement_study("identity", levels=3)
    assert rr.levels == [0, 1, 2] and len(rr.changes) == 2
    assert rr.final_change < 1e-12
    assert rr.reports[-1].certificates["row_change_max"] < 1e-12
    with pytest.raises(ValueError):
        refinement_study("identity", levels=1)


# serialization ----------------------------------------------------------------------

def test_csv_and_json_roundtrip():
    rep = growth_study("expsum", params=[16, 32, 64, 128])
    text = rep.to_csv()
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    exp, ps, rows = GrowthReport.rows_from_csv(text)
    assert exp == "expsum" and ps == (1.5, None)
    assert [r.ratio for r in rows] == [r.ratio for r in rep.rows]
    back = GrowthReport.from_json(rep.to_json())
    assert back.to_csv() == text
    assert back.fitted_exponent == rep.fitted_exponent


def test_json_inf_norm():
    rep = GrowthReport("x", [GrowthRow(1.0, (1.0, 2.0), 2.0, 1.0)], "constant", 0.0, 0.0, (4, math.inf, 1))
    d = json.loads(rep.to_json())
    assert d["norms"][1] == "inf"
    assert GrowthReport.from_json(rep.to_json()).norms[1] == math.inf
    assert ",inf," in rep.to_csv()


def test_rows_sorted_and_bad_csv():
    rows = [GrowthRow(p, (1.0,), 1.0, 1.0) for p in (3.0, 1.0, 2.0)]
    assert [r.param for r in GrowthReport("x", rows, "constant", 0, 0).rows] == [1, 2, 3]
    with pytest.raises(ValueError):
        GrowthReport.rows_from_csv("a,b\n1,2\n")
    with pytest.raises(ValueError):
        GrowthReport("x", rows, "constant", 0, -1)


def test_packaged_descriptors_cover_runners():
    from varlab.lab_harness import RUNNERS

    for name, d in load_descriptors().items():
        assert d["runner"] in RUNNERS
        assert len(d["params"]) >= 4


# command line ------------------------------------------------------------------------

def test_cli_orbit(capsys):
    assert run_cli(["orbit", "--m", "3"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["count"] == 100 and out["distinct"]


def test_cli_cover_verify(capsys):
    assert run_cli(["cover", "--k0", "8", "--verify"]) == 0
    cov = json.loads(capsys.readouterr().out)
    assert cov["covered_measure"] >= 128


def test_cli_theta_verify():
    assert run_cli(["theta", "--k0", "16", "--verify"]) == 0


def test_cli_errors():
    assert run_cli(["bogus"]) == 1
    assert run_cli(["expsum", "--grid-m", "12"]) == 1
    assert run_cli(["orbit", "--m", "40"]) == 1
    assert run_cli(["refine"]) == 1


def test_cli_band_violation_exit_code():
    # the maximal-adjoint sweep misses its exponent band at desk scale
    assert run_cli(["badjoint-counter", "--k0", "7"]) == 2


def test_cli_expsum_output(tmp_path):
    out = tmp_path / "e.csv"
    assert run_cli(["expsum", "--p", "1.5", "--n-max", "128", "--out", str(out)]) == 0
    exp, ps, rows = GrowthReport.rows_from_csv(out.read_text())
    assert exp == "expsum" and [r.param for r in rows] == [16, 32, 64, 128]


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# orbit settings\nm = 2\nformat = json\n")
    assert read_config(cfg) == {"m": 2, "format": "json"}
    assert run_cli(["orbit", "--config", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out)["m"] == 2
    assert run_cli(["orbit", "--config", str(cfg), "--m", "4"]) == 0
    assert json.loads(capsys.readouterr().out)["count"] == 500
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    assert run_cli(["orbit", "--config", str(bad)]) == 1
