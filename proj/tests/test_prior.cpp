#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "infoest/prior.hpp"
#include "infoest/rng.hpp"

using namespace infoest;

namespace {

SignalPrior pm1_scalar() {
  return make_scaled_shape({1.0}, AmplitudeLaw::pm1());
}

}  // namespace

TEST_CASE("atomic prior validation and normalization", "[prior]") {
  CHECK_THROWS_AS(make_atomic({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(make_atomic({{1.0}}, {0.5}), std::invalid_argument);
  CHECK_THROWS_AS(make_atomic({{1.0}, {2.0}}, {1.0, -0.1}), std::invalid_argument);
  CHECK_THROWS_AS(make_atomic({{1.0}, {2.0, 3.0}}, {0.5, 0.5}), std::invalid_argument);
  const AtomicPrior p = make_atomic({{1.0}, {2.0}}, {0.3, 0.7});
  CHECK_THAT(p.weights[0] + p.weights[1], Catch::Matchers::WithinAbs(1.0, 1e-15));
}

TEST_CASE("point mass sampling is constant", "[prior]") {
  const SignalPrior prior = make_atomic({{1.5, -0.5}}, {1.0});
  auto eng = make_engine(1, "pm", 0);
  for (int i = 0; i < 10; ++i) CHECK(sample_signal(prior, eng) == HVector{1.5, -0.5});
}

TEST_CASE("degenerate gaussian sampling is the mean", "[prior]") {
  const SignalPrior prior = make_gaussian_diagonal({0.5, -2.0}, {0.0, 0.0});
  auto eng = make_engine(2, "degen", 0);
  for (int i = 0; i < 10; ++i) CHECK(sample_signal(prior, eng) == HVector{0.5, -2.0});
}

TEST_CASE("pm1 scaled shape draws both signs equally", "[prior]") {
  const SignalPrior prior = make_scaled_shape({2.0, 1.0}, AmplitudeLaw::pm1());
  auto eng = make_engine(3, "pm1", 0);
  const int N = 100000;
  int plus = 0;
  for (int i = 0; i < N; ++i) {
    const HVector x = sample_signal(prior, eng);
    CHECK((x == HVector{2.0, 1.0} || x == HVector{-2.0, -1.0}));
    if (x[0] > 0) ++plus;
  }
  const double freq = double(plus) / N;
  CHECK(std::abs(freq - 0.5) <= 4.0 * 0.5 / std::sqrt(double(N)));
}

TEST_CASE("enumerate_atoms", "[prior]") {
  const SignalPrior atomic = make_atomic({{1.0}, {2.0}}, {0.3, 0.7});
  const AtomicPrior back = enumerate_atoms(atomic);
  CHECK(back.atoms == std::vector<HVector>{{1.0}, {2.0}});
  CHECK(back.weights[0] == Catch::Approx(0.3));

  const SignalPrior shaped = make_scaled_shape({1.0, -1.0}, AmplitudeLaw::pm1());
  const AtomicPrior reduced = enumerate_atoms(shaped);
  REQUIRE(reduced.atoms.size() == 2);
  CHECK(reduced.atoms[0] == HVector{-1.0, 1.0});
  CHECK(reduced.atoms[1] == HVector{1.0, -1.0});
  CHECK(reduced.weights == std::vector<double>{0.5, 0.5});

  const SignalPrior gauss = make_gaussian_diagonal({0.0}, {1.0});
  CHECK_THROWS_AS(enumerate_atoms(gauss), std::invalid_argument);
  CHECK_FALSE(enumerable(gauss));
  CHECK(enumerable(shaped));
}

TEST_CASE("prior moments closed forms", "[prior]") {
  const SignalPrior sym = make_atomic({{1.0, 1.0}, {-1.0, -1.0}}, {0.5, 0.5});
  const PriorMoments m1 = prior_moments(sym);
  CHECK(m1.mean == HVector{0.0, 0.0});
  CHECK(m1.energy == Catch::Approx(2.0));
  CHECK(m1.exact);

  const SignalPrior gauss = make_gaussian_diagonal({0.0, 0.0, 0.0}, {0.5, 1.0, 2.0});
  CHECK(prior_moments(gauss).energy == Catch::Approx(3.5));

  // shape with |s|^2 = T and standard normal amplitude: energy T
  const double T = 2.0;
  const SignalPrior shaped = make_scaled_shape(HVector(8, std::sqrt(T / 8)),
                                               AmplitudeLaw::gaussian(0.0, 1.0));
  CHECK(prior_moments(shaped).energy == Catch::Approx(T));
  CHECK(prior_moments(shaped).energy >= h_norm2(prior_moments(shaped).mean));
}

TEST_CASE("sampler-only prior needs the MC moment path", "[prior]") {
  SamplerOnlyPrior s;
  s.dim = 2;
  s.sample = [](std::mt19937_64& eng) {
    std::normal_distribution<double> normal;
    return HVector{normal(eng), 0.5 * normal(eng)};
  };
  const SignalPrior prior = s;
  CHECK_THROWS_AS(prior_moments(prior), std::invalid_argument);
  McConfig mc;
  mc.samples = 100000;
  mc.batches = 50;
  mc.seed = 17;
  const PriorMoments m = prior_moments(prior, mc);
  CHECK_FALSE(m.exact);
  CHECK(std::abs(m.energy - 1.25) <= 4.0 * m.se_energy);
}

TEST_CASE("sampling consistency with closed-form moments", "[prior]") {
  const SignalPrior prior =
      make_atomic({{1.0, 0.0}, {0.0, 2.0}, {-1.0, -1.0}}, {0.2, 0.3, 0.5});
  const PriorMoments m = prior_moments(prior);
  auto eng = make_engine(21, "consistency", 0);
  const int N = 100000;
  double energy = 0.0;
  HVector mean(2, 0.0);
  for (int i = 0; i < N; ++i) {
    const HVector x = sample_signal(prior, eng);
    energy += h_norm2(x);
    mean[0] += x[0];
    mean[1] += x[1];
  }
  energy /= N;
  mean[0] /= N;
  mean[1] /= N;
  CHECK(std::abs(energy - m.energy) <= 4.0 * 3.0 / std::sqrt(double(N)));
  CHECK(std::abs(mean[0] - m.mean[0]) <= 4.0 * 1.0 / std::sqrt(double(N)));
  CHECK(std::abs(mean[1] - m.mean[1]) <= 4.0 * 1.5 / std::sqrt(double(N)));
}

TEST_CASE("amplitude law validation", "[prior]") {
  CHECK_THROWS_AS(AmplitudeLaw::atoms({1.0}, {0.5}), std::invalid_argument);
  CHECK_THROWS_AS(AmplitudeLaw::gaussian(0.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_scaled_shape({0.0, 0.0}, AmplitudeLaw::pm1()),
                  std::invalid_argument);
  const AmplitudeLaw pm1 = AmplitudeLaw::pm1();
  CHECK(pm1.first_moment() == 0.0);
  CHECK(pm1.second_moment() == 1.0);
}

TEST_CASE("pm1 scalar helper", "[prior]") {
  const SignalPrior prior = pm1_scalar();
  CHECK(dimension(prior) == 1);
  CHECK(enumerable(prior));
}
