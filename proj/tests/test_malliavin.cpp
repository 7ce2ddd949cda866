#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "infoest/malliavin.hpp"
#include "infoest/rng.hpp"

using namespace infoest;

namespace {

SmoothFunctional pairing_functional(HVector h) {
  SmoothFunctional f;
  f.value = [h](const std::vector<double>& w) { return pairing(w, h); };
  f.gradient = [h](const std::vector<double>&) { return h; };
  f.hessian_trace = [](const std::vector<double>&) { return 0.0; };
  return f;
}

}  // namespace

TEST_CASE("gradient_fd on first-chaos and quadratic functionals", "[malliavin]") {
  const HVector h = {0.5, -1.0, 2.0};
  const SmoothFunctional f = pairing_functional(h);
  const std::vector<double> w = {0.1, 0.2, -0.4};
  const HVector g = gradient_fd(f, w, 1e-5);
  for (int i = 0; i < 3; ++i) CHECK_THAT(g[i], Catch::Matchers::WithinAbs(h[i], 1e-9));

  SmoothFunctional half_norm;
  half_norm.value = [](const std::vector<double>& v) { return 0.5 * h_norm2(v); };
  const HVector g2 = gradient_fd(half_norm, w, 1e-5);
  for (int i = 0; i < 3; ++i) CHECK_THAT(g2[i], Catch::Matchers::WithinAbs(w[i], 1e-9));

  CHECK_THROWS_AS(gradient_fd(f, w, 0.0), std::invalid_argument);
}

TEST_CASE("gradient_fd matches the analytic log-likelihood gradient", "[malliavin]") {
  const SignalPrior prior =
      make_atomic({{1.0, 0.5}, {-0.5, 1.0}, {0.0, -1.0}}, {0.3, 0.3, 0.4});
  const double rho = 1.2;
  const SmoothFunctional logell = log_likelihood_functional(prior, rho);
  auto eng = make_engine(21, "grad_logell", 0);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> w = {normal(eng), normal(eng)};
    const HVector fd = gradient_fd(logell, w, 1e-5);
    const HVector an = logell.gradient(w);
    double scale = 1.0;
    for (double g : an) scale = std::max(scale, std::abs(g));
    for (int i = 0; i < 2; ++i) CHECK(std::abs(fd[i] - an[i]) <= 1e-5 * scale);
  }
}

TEST_CASE("divergence of a constant field is the pairing", "[malliavin]") {
  const HVector h = {1.0, -2.0, 0.5};
  VectorField u;
  u.value = [h](const std::vector<double>&) { return h; };
  u.jacobian_trace = [](const std::vector<double>&) { return 0.0; };
  const std::vector<double> w = {0.3, 0.1, -0.7};
  CHECK(divergence(u, w) == pairing(w, h));

  VectorField no_trace;
  no_trace.value = u.value;
  CHECK_THROWS_AS(divergence(no_trace, w), std::invalid_argument);
  CHECK_THAT(divergence_fd(no_trace, w, 1e-5),
             Catch::Matchers::WithinAbs(pairing(w, h), 1e-8));
}

TEST_CASE("E delta h = 0 under the noise law", "[malliavin]") {
  const Basis basis(3, 1.0);
  const HVector h = {1.0, -2.0, 0.5};
  VectorField u;
  u.value = [h](const std::vector<double>&) { return h; };
  u.jacobian_trace = [](const std::vector<double>&) { return 0.0; };
  McConfig mc;
  mc.samples = 100000;
  mc.batches = 50;
  mc.seed = 22;
  auto est = mc_mean(mc, "delta_mean", [&](std::mt19937_64& eng) {
    return divergence(u, sample_noise(basis, eng));
  });
  CHECK(std::abs(est.value) <= 4.0 * est.se);
}

TEST_CASE("product rule delta(f u) = f delta u - (grad f, u)", "[malliavin]") {
  // u(w) = f(w) h with f(w) = <w, h1>: delta u = <w,h1><w,h> - (h1,h)
  const HVector h = {0.5, 1.0, -1.0};
  const HVector h1 = {2.0, 0.0, 1.0};
  VectorField u;
  u.value = [h, h1](const std::vector<double>& w) {
    HVector out = h;
    const double f = pairing(w, h1);
    for (double& c : out) c *= f;
    return out;
  };
  u.jacobian_trace = [h, h1](const std::vector<double>&) { return h_inner(h, h1); };
  auto eng = make_engine(23, "prod_rule", 0);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> w = {normal(eng), normal(eng), normal(eng)};
    const double want = pairing(w, h1) * pairing(w, h) - h_inner(h1, h);
    CHECK_THAT(divergence(u, w), Catch::Matchers::WithinAbs(want, 1e-12));
    CHECK_THAT(divergence_fd(u, w, 1e-6), Catch::Matchers::WithinAbs(want, 1e-7));
  }
}

TEST_CASE("integration by parts duality", "[malliavin]") {
  // f = <w, h1>, u = h2 constant: E (grad f, u) = (h1,h2) = E f delta u
  const Basis basis(3, 1.0);
  const HVector h1 = {1.0, 0.5, -0.5};
  const HVector h2 = {-1.0, 2.0, 0.25};
  VectorField u;
  u.value = [h2](const std::vector<double>&) { return h2; };
  u.jacobian_trace = [](const std::vector<double>&) { return 0.0; };
  McConfig mc;
  mc.samples = 100000;
  mc.batches = 50;
  mc.seed = 24;
  auto rhs = mc_mean(mc, "ibp", [&](std::mt19937_64& eng) {
    const NoiseCoords z = sample_noise(basis, eng);
    return pairing(z, h1) * divergence(u, z);
  });
  const double want = h_inner(h1, h2);
  CHECK(std::abs(rhs.value - want) <= 4.0 * rhs.se);
}

TEST_CASE("number operator eigenvalues on the first two chaoses", "[malliavin]") {
  const HVector h = {0.6, -0.8};
  const SmoothFunctional first = pairing_functional(h);
  SmoothFunctional second;
  second.value = [h](const std::vector<double>& w) {
    const double p = pairing(w, h);
    return p * p - h_norm2(h);
  };
  second.gradient = [h](const std::vector<double>& w) {
    HVector g = h;
    const double p = pairing(w, h);
    for (double& c : g) c *= 2.0 * p;
    return g;
  };
  second.hessian_trace = [h](const std::vector<double>&) { return 2.0 * h_norm2(h); };
  SmoothFunctional constant;
  constant.value = [](const std::vector<double>&) { return 3.0; };
  constant.gradient = [](const std::vector<double>& w) { return HVector(w.size(), 0.0); };
  constant.hessian_trace = [](const std::vector<double>&) { return 0.0; };

  auto eng = make_engine(25, "chaos", 0);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> w = {normal(eng), normal(eng)};
    CHECK_THAT(number_operator(first, w),
               Catch::Matchers::WithinAbs(first.value(w), 1e-13));
    CHECK_THAT(number_operator(second, w),
               Catch::Matchers::WithinAbs(2.0 * second.value(w), 1e-12));
    CHECK(number_operator(constant, w) == 0.0);
  }
  SmoothFunctional missing;
  missing.value = constant.value;
  CHECK_THROWS_AS(number_operator(missing, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("tilde divergence reduces to delta under a flat likelihood", "[malliavin]") {
  const SignalPrior pm0 = make_atomic({{0.0, 0.0}}, {1.0});
  const auto ev = likelihood_evaluator(pm0, 1.0);
  const HVector h = {1.0, 0.5};
  VectorField u;
  u.value = [h](const std::vector<double>&) { return h; };
  u.jacobian_trace = [](const std::vector<double>&) { return 0.0; };
  auto eng = make_engine(26, "tilde_flat", 0);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> w = {normal(eng), normal(eng)};
    CHECK(tilde_divergence(u, ev, w) == divergence(u, w));
  }
}

TEST_CASE("tilde divergence of xbar matches L ell / (rho ell)", "[malliavin]") {
  const SignalPrior prior = make_scaled_shape({1.0, -0.5}, AmplitudeLaw::pm1());
  const double rho = 1.3;
  const auto ev = likelihood_evaluator(prior, rho);
  const VectorField xbar = posterior_mean_field(prior, rho);
  auto eng = make_engine(27, "tilde_xbar", 0);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> w = {normal(eng), normal(eng)};
    const Observation y{w, rho};
    const double lhs = tilde_divergence(xbar, ev, w);
    const double rhs =
        pairing(w, noncausal_estimate(prior, y)) - rho * posterior_second_moment(prior, y);
    CHECK_THAT(lhs, Catch::Matchers::WithinAbs(rhs, 1e-8));
  }
}

TEST_CASE("duality under the observation measure", "[malliavin]") {
  // E1[f tilde-delta u] = E1[(grad f, u)] for f = <., h>, u = h2 constant
  const SignalPrior prior = make_scaled_shape({0.5, 1.0}, AmplitudeLaw::pm1());
  const double rho = 1.0;
  const Basis basis(2, 1.0);
  const auto ev = likelihood_evaluator(prior, rho);
  const HVector h = {1.0, -1.0};
  const HVector h2 = {0.5, 0.25};
  VectorField u;
  u.value = [h2](const std::vector<double>&) { return h2; };
  u.jacobian_trace = [](const std::vector<double>&) { return 0.0; };
  McConfig mc;
  mc.samples = 100000;
  mc.batches = 50;
  mc.seed = 28;
  auto gap = mc_mean(mc, "tilde_duality", [&](std::mt19937_64& eng) {
    const HVector x = sample_signal(prior, eng);
    const Observation y = channel(x, sample_noise(basis, eng), rho);
    const double f = pairing(y.v, h);
    return f * tilde_divergence(u, ev, y.v) - h_inner(h, h2);
  });
  CHECK(std::abs(gap.value) <= 4.0 * gap.se);
}

TEST_CASE("number identity for the likelihood", "[malliavin]") {
  // L log ell = rho delta xbar, analytic both sides
  const SignalPrior prior =
      make_atomic({{0.5, 1.0, -0.5}, {-1.0, 0.0, 0.5}}, {0.6, 0.4});
  const double rho = 0.9;
  const SmoothFunctional logell = log_likelihood_functional(prior, rho);
  const VectorField xbar = posterior_mean_field(prior, rho);
  auto eng = make_engine(29, "number_logell", 0);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> w = {normal(eng), normal(eng), normal(eng)};
    CHECK_THAT(number_operator(logell, w),
               Catch::Matchers::WithinAbs(rho * divergence(xbar, w), 1e-8));
  }
}
