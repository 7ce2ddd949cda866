#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include "infoest/config.hpp"
#include "infoest/io.hpp"

using namespace infoest;
using nlohmann::json;

namespace {

json minimal_config() {
  return json{
      {"basis", {{"n", 4}, {"T", 1.0}}},
      {"prior",
       {{"kind", "scaled_shape"},
        {"shape", "constant"},
        {"amplitude", {{"kind", "pm1"}}}}},
      {"rho_grid", {0.5, 1.0}},
      {"mc", {{"samples", 2000}, {"batches", 10}, {"seed", 7}}},
  };
}

}  // namespace

TEST_CASE("minimal config parses", "[config]") {
  const ExperimentConfig cfg = parse_config(minimal_config());
  CHECK(cfg.basis.n == 4);
  CHECK(cfg.mc.seed == 7);
  CHECK(cfg.seed_from_config);
  CHECK(cfg.rho_grid == std::vector<double>{0.5, 1.0});
  const SignalPrior prior = build_prior(cfg.prior_spec, cfg.basis);
  CHECK(dimension(prior) == 4);
  CHECK(enumerable(prior));
}

TEST_CASE("config diagnostics carry the field path", "[config]") {
  auto expect_error = [](json j, const std::string& needle) {
    try {
      parse_config(j);
      FAIL("expected config_error for " << needle);
    } catch (const config_error& e) {
      INFO(e.what());
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  json j = minimal_config();
  j.erase("basis");
  expect_error(j, "basis");

  j = minimal_config();
  j["basis"]["n"] = 0;
  expect_error(j, "basis.n");

  j = minimal_config();
  j["rho_grid"] = json::array();
  expect_error(j, "rho_grid");

  j = minimal_config();
  j["rho_grid"] = {1.0, 0.5};
  expect_error(j, "rho_grid");

  j = minimal_config();
  j["prior"]["kind"] = "mystery";
  expect_error(j, "prior.kind");

  j = minimal_config();
  j["prior"] = {{"kind", "atomic"},
                {"atoms", {{{"coeffs", {1.0, 2.0}}, {"weight", 1.0}}}}};
  expect_error(j, "prior.atoms[0].coeffs");

  j = minimal_config();
  j["mc"]["batches"] = 1;
  expect_error(j, "mc.batches");

  j = minimal_config();
  j["prior"] = {{"kind", "gaussian_diagonal"},
                {"mean", {0.0, 0.0, 0.0, 0.0}},
                {"variances", {1.0, 1.0, -1.0, 1.0}}};
  expect_error(j, "prior");
}

TEST_CASE("atomic and gaussian priors from config", "[config]") {
  json j = minimal_config();
  j["prior"] = {{"kind", "atomic"},
                {"atoms",
                 {{{"coeffs", {1.0, 0.0, 0.0, 0.0}}, {"weight", 0.25}},
                  {{"coeffs", {0.0, -1.0, 0.0, 0.0}}, {"weight", 0.75}}}}};
  const ExperimentConfig cfg = parse_config(j);
  const SignalPrior prior = build_prior(cfg.prior_spec, cfg.basis);
  const AtomicPrior atoms = enumerate_atoms(prior);
  CHECK(atoms.atoms.size() == 2);
  CHECK(atoms.weights[1] == Catch::Approx(0.75));

  j["prior"] = {{"kind", "gaussian_diagonal"},
                {"mean", {0.0, 0.5, 0.0, -0.5}},
                {"variances", {1.0, 0.5, 0.25, 0.0}}};
  const SignalPrior gauss = build_prior(parse_config(j).prior_spec, cfg.basis);
  CHECK(prior_moments(gauss).energy == Catch::Approx(0.5 + 1.75));
}

TEST_CASE("shape-based priors rebuild on any basis", "[config]") {
  const json spec = minimal_config()["prior"];
  for (int n : {4, 16, 64}) {
    const SignalPrior prior = build_prior(spec, Basis(n, 1.0));
    CHECK(dimension(prior) == n);
    CHECK(prior_moments(prior).energy == Catch::Approx(1.0));
  }
}

TEST_CASE("csv schemas are fixed", "[config]") {
  SnrCurve curve;
  curve.points.push_back({});
  const std::string csv = sweep_csv(curve);
  CHECK(csv.rfind("schema_version,rho,I_direct,I_direct_se,I_immse,I_immse_se,I_duncan,"
                  "I_duncan_se,mmse_nc,mmse_nc_se,mmse_c,mmse_c_se,relent,relent_se\n",
                  0) == 0);

  IdentityReport r;
  r.name = "demo";
  r.pass = true;
  const std::string vcsv = verify_csv({r});
  CHECK(vcsv.rfind("schema_version,identity,rho,n,N,lhs,rhs,stderr_lhs,stderr_rhs,"
                   "residual,tolerance,pass\n",
                   0) == 0);
  CHECK(vcsv.find(",demo,") != std::string::npos);
  CHECK(vcsv.find(",true\n") != std::string::npos);
}

TEST_CASE("fit order recovers a power law", "[config]") {
  std::vector<int> ns = {16, 64, 256};
  std::vector<double> res;
  for (int n : ns) res.push_back(3.0 / n);
  CHECK_THAT(fit_order(ns, res), Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK(fit_order({16}, {0.1}) == 0.0);
}
