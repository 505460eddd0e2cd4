import json
import math

import numpy as np
import pytest

import frictionbreak as fb


def test_critical_values():
    assert fb.hansen_critical_value(0.95) == pytest.approx(7.35, abs=0.005)
    x = fb.hansen_critical_value(0.9)
    assert (1 - math.exp(-x / 2)) ** 2 == pytest.approx(0.9, abs=1e-12)


def test_threshold_fit_on_simulated_break():
    y, q = fb.gen_threshold_dgp(n=2000, sigma=2.0, seed=3)
    fit = fb.estimate_threshold(y, q)
    # The region is a set of observed candidates, so truth sits inside it or
    # between its upper end and the next candidate.
    above = [c for c in fit["candidates"] if c > fit["conf_hi"]]
    assert fit["conf_lo"] <= 1.63 <= (above[0] if above else fit["conf_hi"])
    assert fit["net_damage"] == pytest.approx(6.06 - 15.44, abs=0.5)
    assert fit["n1"] + fit["n2"] == 2000
    # Brute-force SSR check at the reported split.
    y, q = np.asarray(y), np.asarray(q)
    low = q <= fit["gamma_hat"]
    ssr = ((y[low] - y[low].mean()) ** 2).sum() + ((y[~low] - y[~low].mean()) ** 2).sum()
    assert fit["ssr"] == pytest.approx(ssr, rel=1e-10)


def test_sup_wald_and_bca():
    y, q = fb.gen_threshold_dgp(n=800, seed=4)
    r = fb.sup_wald_test(y, q, n_boot=199, seed=1)
    assert 0.0 <= r["p_value"] <= 1.0
    assert r == fb.sup_wald_test(y, q, n_boot=199, seed=1, workers=2)
    b = fb.bca_net_damage(y, q, 1.63, n_boot=499, seed=2)
    assert b["lo"] <= b["hi"]
    assert len(b["replicates"]) == 499


def test_adf_matches_statsmodels_at_fixed_lag():
    adfuller = pytest.importorskip("statsmodels.tsa.stattools").adfuller
    x = fb.gen_ar1(300, 0.7, 11)
    ours = fb.adf_test(x, 0)
    ref = adfuller(np.asarray(x), maxlag=0, autolag=None, regression="c")
    assert ours["statistic"] == pytest.approx(ref[0], rel=1e-9)
    assert ours["p_value"] == pytest.approx(ref[1], abs=1e-6)
    ours_ct = fb.adf_test(x, 0, trend=True)
    ref_ct = adfuller(np.asarray(x), maxlag=0, autolag=None, regression="ct")
    assert ours_ct["statistic"] == pytest.approx(ref_ct[0], rel=1e-9)
    assert ours_ct["p_value"] == pytest.approx(ref_ct[1], abs=1e-6)


def test_granger_matches_statsmodels():
    sm = pytest.importorskip("statsmodels.tsa.stattools")
    y = np.asarray(fb.gen_ar1(400, 0.4, 1))
    x = np.asarray(fb.gen_ar1(400, 0.2, 2))
    ours = fb.granger_test(y.tolist(), x.tolist(), 2)
    ref = sm.grangercausalitytests(np.column_stack([y, x]), maxlag=[2])[2][0]["ssr_ftest"]
    assert ours["statistic"] == pytest.approx(ref[0], rel=1e-9)
    assert ours["p_value"] == pytest.approx(ref[1], rel=1e-9)


def test_welch_matches_scipy():
    stats = pytest.importorskip("scipy.stats")
    a = fb.gen_ar1(60, 0.0, 5)
    b = [v + 0.5 for v in fb.gen_ar1(90, 0.0, 6)]
    ours = fb.welch_t(a, b)
    ref = stats.ttest_ind(a, b, equal_var=False)
    assert ours["statistic"] == pytest.approx(ref.statistic, rel=1e-10)
    assert ours["p_value"] == pytest.approx(ref.pvalue, rel=1e-8)


def test_two_sls_near_truth():
    beta, se, f = fb.two_sls_beta(2000, 1.0, 0.8, 1.0, 9)
    assert abs(beta - 1.0) < 4 * se
    assert f > 10


def test_errors_map_to_python_exceptions():
    with pytest.raises(fb.InputError):
        fb.hansen_critical_value(1.5)
    with pytest.raises(fb.FrictionbreakError):
        fb.gen_ar1(10, 0.5, 1)


def test_analysis_report_and_bundle(tmp_path):
    cfg = fb.write_source_fixture(tmp_path / "fixture", n=400, seed=7)
    report = fb.analyze(cfg, seed=5, n_boot=199)
    for key in ("threshold", "bootstrap", "iv", "diagnostics", "events"):
        assert key in report
    assert report == json.loads(fb.analyze_json(str(cfg), seed=5, n_boot=199, workers=2))
    fb.write_report_bundle(cfg, tmp_path / "out", seed=5, n_boot=199)
    on_disk = json.loads((tmp_path / "out" / "report.json").read_text())
    assert on_disk["threshold"]["gamma_hat"] == report["threshold"]["gamma_hat"]
