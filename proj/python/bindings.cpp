// Python bindings. Results come back as plain dicts and lists; the report is
// passed through as serialized JSON and decoded on the Python side.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "frictionbreak/bootstrap.hpp"
#include "frictionbreak/error.hpp"
#include "frictionbreak/iv.hpp"
#include "frictionbreak/linmodel.hpp"
#include "frictionbreak/pipeline.hpp"
#include "frictionbreak/synth.hpp"
#include "frictionbreak/threshold.hpp"

namespace py = pybind11;
namespace fb = frictionbreak;
using Vec = std::vector<double>;

namespace {

py::dict test_dict(const fb::TestResult& r) {
  py::dict d;
  d["statistic"] = r.statistic;
  d["p_value"] = r.p_value;
  d["detail"] = r.detail;
  return d;
}

py::dict fit_dict(const fb::ThresholdFit& f) {
  py::dict d;
  d["gamma_hat"] = f.gamma_hat;
  d["gamma_percentile"] = f.gamma_percentile;
  d["beta1"] = f.beta1;
  d["beta2"] = f.beta2;
  d["net_damage"] = f.net_damage;
  d["ssr"] = f.ssr;
  d["n1"] = f.n1;
  d["n2"] = f.n2;
  d["candidates"] = f.candidates;
  d["lr_curve"] = f.lr_curve;
  d["critical_value"] = f.critical_value;
  d["conf_lo"] = f.conf_lo;
  d["conf_hi"] = f.conf_hi;
  return d;
}

fb::RunConfig run_config(const std::filesystem::path& config, std::uint64_t seed, int n_boot, unsigned workers) {
  fb::RunConfig cfg;
  cfg.apply(fb::read_key_value_file(config), config);
  cfg.seed = seed;
  cfg.n_boot = n_boot;
  cfg.workers = workers;
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_frictionbreak, m) {
  m.doc() = "Threshold econometrics of transaction friction and on-chain velocity";

  auto base = py::register_exception<fb::Error>(m, "FrictionbreakError");
  py::register_exception<fb::InputError>(m, "InputError", base.ptr());
  py::register_exception<fb::DegenerateError>(m, "DegenerateError", base.ptr());
  py::register_exception<fb::ParseError>(m, "ParseError", base.ptr());

  m.def("hansen_critical_value", &fb::hansen_critical_value, py::arg("confidence"));

  m.def(
      "estimate_threshold",
      [](const Vec& y, const Vec& q, double trim, int min_regime, double confidence) {
        return fit_dict(fb::estimate_threshold(y, q, {trim, min_regime, confidence}));
      },
      py::arg("y"), py::arg("q"), py::arg("trim") = 0.05, py::arg("min_regime") = 10, py::arg("confidence") = 0.95);

  m.def(
      "sup_wald_test",
      [](const Vec& y, const Vec& q, int n_boot, std::uint64_t seed, double trim, unsigned workers) {
        const auto res = fb::sup_wald_test(y, q, {.trim = trim}, n_boot, seed, workers);
        py::dict d;
        d["statistic"] = res.statistic;
        d["p_value"] = res.p_value;
        d["gamma_at_sup"] = res.gamma_at_sup;
        d["n_boot"] = res.n_boot;
        return d;
      },
      py::arg("y"), py::arg("q"), py::arg("n_boot") = 499, py::arg("seed") = 0, py::arg("trim") = 0.05,
      py::arg("workers") = 1);

  m.def(
      "bca_net_damage",
      [](const Vec& y, const Vec& q, double gamma, int n_boot, std::uint64_t seed, double level) {
        const auto dist = fb::bootstrap_net_damage(y, q, gamma, {.n_boot = n_boot, .seed = seed});
        const auto ci = fb::bca_interval(dist, y, q, level);
        py::dict d;
        d["point_estimate"] = dist.point_estimate;
        d["lo"] = ci.lo;
        d["hi"] = ci.hi;
        d["z0"] = ci.z0;
        d["acceleration"] = ci.acceleration;
        d["replicates"] = dist.replicates;
        return d;
      },
      py::arg("y"), py::arg("q"), py::arg("gamma"), py::arg("n_boot") = 999, py::arg("seed") = 0,
      py::arg("level") = 0.95);

  m.def(
      "adf_test",
      [](const Vec& x, int max_lag, bool trend) {
        return test_dict(fb::adf_test(x, max_lag, trend ? fb::AdfTrend::kConstantTrend : fb::AdfTrend::kConstant));
      },
      py::arg("series"), py::arg("max_lag"), py::arg("trend") = false);
  m.def(
      "granger_test", [](const Vec& y, const Vec& x, int lags) { return test_dict(fb::granger_test(y, x, lags)); },
      py::arg("y"), py::arg("x"), py::arg("lags"));
  m.def(
      "welch_t", [](const Vec& a, const Vec& b) { return test_dict(fb::welch_t(a, b)); }, py::arg("a"), py::arg("b"));

  m.def(
      "gen_threshold_dgp",
      [](int n, double gamma, double mu1, double mu2, double sigma, std::uint64_t seed) {
        const auto s = fb::gen_threshold_dgp({n, gamma, mu1, mu2, sigma, {}, seed});
        return py::make_tuple(s.y, s.q);
      },
      py::arg("n") = 2856, py::arg("gamma") = 1.63, py::arg("mu1") = 15.44, py::arg("mu2") = 6.06,
      py::arg("sigma") = 40.0, py::arg("seed") = 0);
  m.def("gen_ar1", &fb::gen_ar1, py::arg("n"), py::arg("phi"), py::arg("seed"));
  m.def(
      "two_sls_beta",
      [](int n, double beta, double endogeneity, double strength, std::uint64_t seed) {
        const auto s = fb::gen_iv_dgp(n, beta, endogeneity, strength, seed);
        const auto f = fb::two_sls(s.y, s.endo, s.instruments);
        return py::make_tuple(f.second_stage_beta, f.second_stage_se, f.first_stage_f);
      },
      py::arg("n"), py::arg("beta"), py::arg("endogeneity"), py::arg("strength"), py::arg("seed"),
      "Simulates the IV design and returns (beta, standard error, first-stage F) from 2SLS.");

  m.def(
      "write_source_fixture",
      [](const std::filesystem::path& dir, int n, std::uint64_t seed, double sigma) {
        fb::SourceFixtureSpec spec;
        spec.dgp.n = n;
        spec.dgp.seed = seed;
        spec.dgp.sigma = sigma;
        fb::write_source_fixture(dir, spec);
        return dir / "sources.cfg";
      },
      py::arg("dir"), py::arg("n") = 400, py::arg("seed") = 0, py::arg("sigma") = 10.0);

  m.def(
      "analyze_json",
      [](const std::filesystem::path& config, std::uint64_t seed, int n_boot, unsigned workers) {
        const fb::RunConfig cfg = run_config(config, seed, n_boot, workers);
        py::gil_scoped_release release;
        fb::Analysis a(fb::load_panel(cfg), cfg);
        return a.report().dump();
      },
      py::arg("config"), py::arg("seed") = 20240101, py::arg("n_boot") = 999, py::arg("workers") = 1);

  m.def(
      "write_report_bundle",
      [](const std::filesystem::path& config, const std::filesystem::path& out, std::uint64_t seed, int n_boot,
         unsigned workers) {
        const fb::RunConfig cfg = run_config(config, seed, n_boot, workers);
        py::gil_scoped_release release;
        fb::Analysis a(fb::load_panel(cfg), cfg);
        fb::write_report_bundle(a, out);
      },
      py::arg("config"), py::arg("out"), py::arg("seed") = 20240101, py::arg("n_boot") = 999,
      py::arg("workers") = 1);
}
