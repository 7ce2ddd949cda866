#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "infoest/oracle.hpp"
#include "infoest/rng.hpp"

using namespace infoest;
using namespace infoest::oracle;

TEST_CASE("gauss-hermite rule reproduces normal moments", "[oracle]") {
  for (int order : {2, 16, 64, 128}) {
    const QuadratureRule rule = gauss_hermite(order);
    double w = 0.0, m2 = 0.0, m4 = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      w += rule.weights[i];
      m2 += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
      m4 += rule.weights[i] * std::pow(rule.nodes[i], 4);
    }
    CHECK_THAT(w, Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(m2, Catch::Matchers::WithinAbs(1.0, 1e-12));
    if (order >= 4) CHECK_THAT(m4, Catch::Matchers::WithinAbs(3.0, 1e-10));
  }
  CHECK_THROWS_AS(gauss_hermite(0), std::invalid_argument);
}

TEST_CASE("gaussian closed form anchor values", "[oracle]") {
  const auto zero = gaussian_closed_form(1.0, 1.0, 0.0);
  CHECK(zero.mi == 0.0);
  CHECK(zero.mmse_nc == 1.0);
  CHECK(zero.rel_ent == 0.0);
  CHECK(zero.mmse_c_integral == 1.0);

  const auto f = gaussian_closed_form(1.0, 1.0, 1.0);
  CHECK_THAT(f.mi, Catch::Matchers::WithinAbs(0.5 * std::log(2.0), 1e-15));
  CHECK_THAT(f.mmse_nc, Catch::Matchers::WithinAbs(0.5, 1e-15));
  CHECK_THAT(f.mmse_c_integral, Catch::Matchers::WithinAbs(std::log(2.0), 1e-15));
  CHECK_THAT(f.rel_ent, Catch::Matchers::WithinAbs(0.5 * (1.0 - std::log(2.0)), 1e-15));
  CHECK_THAT(f.e_xbar2, Catch::Matchers::WithinAbs(0.5, 1e-15));
  CHECK_THAT(f.e_xhat2, Catch::Matchers::WithinAbs(1.0 - std::log(2.0), 1e-15));
}

TEST_CASE("gaussian closed form internal consistency", "[oracle]") {
  auto eng = make_engine(4, "gauss_cf", 0);
  std::uniform_real_distribution<double> unif(0.05, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double sigma2 = unif(eng), T = unif(eng), rho = unif(eng);
    const auto f = gaussian_closed_form(sigma2, T, rho);
    CHECK_THAT(f.mi, Catch::Matchers::WithinRel(0.5 * rho * rho * f.mmse_c_integral, 1e-12));
    CHECK_THAT(f.mi + f.rel_ent,
               Catch::Matchers::WithinRel(0.5 * rho * rho * sigma2 * T, 1e-12));
    CHECK_THAT(f.e_xbar2 + f.mmse_nc,
               Catch::Matchers::WithinRel(sigma2 * T, 1e-12));
  }
}

TEST_CASE("discrete causal filter sums approach the integrals", "[oracle]") {
  const double sigma2 = 1.0, T = 1.0, rho = 1.0;
  const auto cont = gaussian_closed_form(sigma2, T, rho);
  double prev_gap = 1e9;
  for (int n : {16, 64, 256, 1024}) {
    const auto disc = gaussian_discrete_causal(sigma2, T, rho, n);
    const double gap = std::abs(disc.mmse_c - cont.mmse_c_integral);
    CHECK(gap < prev_gap);
    prev_gap = gap;
    CHECK_THAT(disc.mmse_c + disc.e_xhat2, Catch::Matchers::WithinAbs(sigma2 * T, 1e-12));
  }
  // gap is O(1/n): n * gap roughly constant
  const double g16 = std::abs(gaussian_discrete_causal(sigma2, T, rho, 16).mmse_c -
                              cont.mmse_c_integral);
  const double g256 = std::abs(gaussian_discrete_causal(sigma2, T, rho, 256).mmse_c -
                               cont.mmse_c_integral);
  CHECK(g16 / g256 > 8.0);
  CHECK(g16 / g256 < 32.0);
}

TEST_CASE("scalar quadrature: point mass and gaussian cross-check", "[oracle]") {
  const auto pm = quadrature_scalar(AmplitudeLaw::atoms({0.7}, {1.0}), 1.3, 64);
  CHECK_THAT(pm.mi, Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(pm.mmse, Catch::Matchers::WithinAbs(0.0, 1e-12));

  for (double rho : {0.5, 1.0, 2.0}) {
    const auto q = quadrature_scalar(AmplitudeLaw::gaussian(0.0, 1.0), rho, 64);
    const auto f = gaussian_closed_form(1.0, 1.0, rho);
    CHECK_THAT(q.mi, Catch::Matchers::WithinAbs(f.mi, 1e-8));
    CHECK_THAT(q.mmse, Catch::Matchers::WithinAbs(f.mmse_nc, 1e-8));
    CHECK_THAT(q.rel_ent, Catch::Matchers::WithinAbs(f.rel_ent, 1e-8));
    CHECK_THAT(q.e_xbar2, Catch::Matchers::WithinAbs(f.e_xbar2, 1e-8));
    // extended de Bruijn chain in closed form: fisher = rho^2 E1 xbar^2
    CHECK_THAT(q.fisher, Catch::Matchers::WithinAbs(rho * rho * f.e_xbar2, 1e-8));
  }
}

TEST_CASE("scalar quadrature is order-stable", "[oracle]") {
  const AmplitudeLaw pm1 = AmplitudeLaw::pm1();
  for (double rho : {0.5, 1.0}) {
    const auto a = oracle::detail::quadrature_scalar_at(pm1, rho, 64);
    const auto b = oracle::detail::quadrature_scalar_at(pm1, rho, 128);
    CHECK_THAT(a.mi, Catch::Matchers::WithinAbs(b.mi, 1e-8));
    CHECK_THAT(a.mmse, Catch::Matchers::WithinAbs(b.mmse, 1e-8));
  }
  // the rho = 2 integrand is sharper; one refinement level further
  const auto a2 = oracle::detail::quadrature_scalar_at(pm1, 2.0, 128);
  const auto b2 = oracle::detail::quadrature_scalar_at(pm1, 2.0, 256);
  CHECK_THAT(a2.mi, Catch::Matchers::WithinAbs(b2.mi, 1e-8));
  CHECK_THAT(a2.mmse, Catch::Matchers::WithinAbs(b2.mmse, 1e-8));
  CHECK_THROWS_AS(quadrature_scalar(pm1, 1.0, 8), std::invalid_argument);
}

TEST_CASE("gaussian scalar likelihood closed form", "[oracle]") {
  // matches the conjugate formula at a few hand values
  CHECK_THAT(gaussian_scalar_log_likelihood(1.0, 1.0, 0.0),
             Catch::Matchers::WithinAbs(-0.5 * std::log(2.0), 1e-15));
  CHECK_THAT(gaussian_scalar_log_likelihood(1.0, 1.0, 2.0),
             Catch::Matchers::WithinAbs(1.0 - 0.5 * std::log(2.0), 1e-15));
}

TEST_CASE("tensor quadrature agrees with the scalar rule at n=1", "[oracle]") {
  const AtomicPrior pm1 = enumerate_atoms(make_scaled_shape({1.0}, AmplitudeLaw::pm1()));
  for (double rho : {0.5, 1.0}) {
    const auto t = tensor_quadrature(pm1, rho, 64);
    const auto s = quadrature_scalar(AmplitudeLaw::pm1(), rho, 64);
    CHECK_THAT(t.mi, Catch::Matchers::WithinAbs(s.mi, 1e-10));
    CHECK_THAT(t.mmse_nc, Catch::Matchers::WithinAbs(s.mmse, 1e-10));
    CHECK_THAT(t.rel_ent, Catch::Matchers::WithinAbs(s.rel_ent, 1e-10));
  }
}

TEST_CASE("tensor quadrature: independent coordinates add information", "[oracle]") {
  // product of two independent +-1 coordinates
  const AtomicPrior prod = make_atomic(
      {{1.0, 1.0}, {1.0, -1.0}, {-1.0, 1.0}, {-1.0, -1.0}},
      {0.25, 0.25, 0.25, 0.25});
  const double rho = 0.8;
  const auto two = tensor_quadrature(prod, rho, 48);
  const auto one = quadrature_scalar(AmplitudeLaw::pm1(), rho, 64);
  CHECK_THAT(two.mi, Catch::Matchers::WithinAbs(2.0 * one.mi, 1e-8));
  CHECK_THAT(two.mmse_nc, Catch::Matchers::WithinAbs(2.0 * one.mmse, 1e-8));
}

TEST_CASE("tensor quadrature budget", "[oracle]") {
  const AtomicPrior p4 = make_atomic({{1, 1, 1, 1}, {-1, -1, -1, -1}}, {0.5, 0.5});
  CHECK_THROWS_AS(tensor_quadrature(p4, 1.0, 32), std::invalid_argument);
  const AtomicPrior p3 = make_atomic({{1, 1, 1}, {-1, -1, -1}}, {0.5, 0.5});
  CHECK_THROWS_AS(tensor_quadrature(p3, 1.0, 80), std::invalid_argument);
}

TEST_CASE("golden file matches a fresh oracle run", "[oracle]") {
  const char* path = std::getenv("INFOEST_GOLDEN");
  REQUIRE(path != nullptr);
  std::ifstream in(path);
  REQUIRE(in.good());
  nlohmann::json golden;
  in >> golden;
  for (const auto& rec : golden["records"]) {
    const std::string model = rec["model"];
    const double rho = rec["rho"];
    const int order = rec["order"];
    ScalarChannelFacts f;
    if (model == "pm1_scalar")
      f = quadrature_scalar(AmplitudeLaw::pm1(), rho, order);
    else if (model == "gaussian_scalar")
      f = quadrature_scalar(AmplitudeLaw::gaussian(0.0, 1.0), rho, order);
    else
      FAIL("unknown golden model " << model);
    CHECK_THAT(f.mi, Catch::Matchers::WithinAbs(double(rec["I"]), 1e-10));
    CHECK_THAT(f.mmse, Catch::Matchers::WithinAbs(double(rec["mmse"]), 1e-10));
    CHECK_THAT(f.rel_ent, Catch::Matchers::WithinAbs(double(rec["relent"]), 1e-10));
  }
}
