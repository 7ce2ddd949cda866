#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <variant>
#include <vector>

#include "infoest/mc.hpp"
#include "infoest/wiener.hpp"

namespace infoest {

// One-dimensional amplitude law, either finitely atomic or Gaussian. Used by
// the scaled-shape prior and by the scalar reference computations.
struct AmplitudeLaw {
  enum class Kind { Atoms, Gaussian };
  Kind kind = Kind::Gaussian;
  std::vector<double> values;   // Atoms
  std::vector<double> weights;  // Atoms; positive, normalized on construction
  double mean = 0.0;            // Gaussian
  double variance = 1.0;        // Gaussian

  static AmplitudeLaw atoms(std::vector<double> values, std::vector<double> weights) {
    if (values.empty() || values.size() != weights.size())
      throw std::invalid_argument("AmplitudeLaw: need matching nonempty values/weights");
    double sum = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw std::invalid_argument("AmplitudeLaw: weights must be > 0");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("AmplitudeLaw: weights must sum to 1 within 1e-12");
    for (double& w : weights) w /= sum;
    AmplitudeLaw law;
    law.kind = Kind::Atoms;
    law.values = std::move(values);
    law.weights = std::move(weights);
    return law;
  }

  static AmplitudeLaw gaussian(double mean, double variance) {
    if (!(variance >= 0.0)) throw std::invalid_argument("AmplitudeLaw: variance must be >= 0");
    AmplitudeLaw law;
    law.kind = Kind::Gaussian;
    law.mean = mean;
    law.variance = variance;
    return law;
  }

  // +-1 equiprobable; the standard binary test law.
  static AmplitudeLaw pm1() { return atoms({-1.0, 1.0}, {0.5, 0.5}); }

  double first_moment() const {
    if (kind == Kind::Gaussian) return mean;
    double m = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) m += weights[k] * values[k];
    return m;
  }

  double second_moment() const {
    if (kind == Kind::Gaussian) return mean * mean + variance;
    double m = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) m += weights[k] * values[k] * values[k];
    return m;
  }

  double sample(std::mt19937_64& rng) const {
    if (kind == Kind::Gaussian) {
      std::normal_distribution<double> normal(0.0, 1.0);
      return mean + std::sqrt(variance) * normal(rng);
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    double acc = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      acc += weights[k];
      if (u <= acc) return values[k];
    }
    return values.back();
  }
};

// Finite mixture of point masses on H.
struct AtomicPrior {
  std::vector<HVector> atoms;
  std::vector<double> weights;  // positive, normalized
};

// Independent Gaussian coordinates a_i ~ N(mean_i, variances_i).
struct GaussianDiagonalPrior {
  HVector mean;
  std::vector<double> variances;
};

// x = A * shape with a one-dimensional amplitude A.
struct ScaledShapePrior {
  HVector shape;  // |shape|_H > 0
  AmplitudeLaw amplitude;
};

// Opaque sampler. Only the Monte-Carlo paths accept it; operations that need
// exact enumeration or closed forms fail loudly. The moment condition
// E exp(alpha (x,h)_H) < inf for all alpha is the caller's obligation and is
// not checkable from a sampler.
struct SamplerOnlyPrior {
  int dim = 0;
  std::function<HVector(std::mt19937_64&)> sample;
};

using SignalPrior =
    std::variant<AtomicPrior, GaussianDiagonalPrior, ScaledShapePrior, SamplerOnlyPrior>;

inline AtomicPrior make_atomic(std::vector<HVector> atoms, std::vector<double> weights) {
  if (atoms.empty() || atoms.size() != weights.size())
    throw std::invalid_argument("AtomicPrior: need matching nonempty atoms/weights");
  const std::size_t dim = atoms.front().size();
  for (const auto& a : atoms) check_same_size(a.size(), dim, "AtomicPrior");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("AtomicPrior: weights must be > 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("AtomicPrior: weights must sum to 1 within 1e-12");
  for (double& w : weights) w /= sum;
  return AtomicPrior{std::move(atoms), std::move(weights)};
}

inline GaussianDiagonalPrior make_gaussian_diagonal(HVector mean,
                                                    std::vector<double> variances) {
  check_same_size(mean.size(), variances.size(), "GaussianDiagonalPrior");
  if (mean.empty()) throw std::invalid_argument("GaussianDiagonalPrior: empty");
  for (double v : variances)
    if (!(v >= 0.0))
      throw std::invalid_argument("GaussianDiagonalPrior: variances must be >= 0");
  return GaussianDiagonalPrior{std::move(mean), std::move(variances)};
}

inline ScaledShapePrior make_scaled_shape(HVector shape, AmplitudeLaw amplitude) {
  if (!(h_norm2(shape) > 0.0))
    throw std::invalid_argument("ScaledShapePrior: |shape|_H must be > 0");
  return ScaledShapePrior{std::move(shape), std::move(amplitude)};
}

inline int dimension(const SignalPrior& prior) {
  return std::visit(
      [](const auto& p) -> int {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AtomicPrior>)
          return static_cast<int>(p.atoms.front().size());
        else if constexpr (std::is_same_v<T, GaussianDiagonalPrior>)
          return static_cast<int>(p.mean.size());
        else if constexpr (std::is_same_v<T, ScaledShapePrior>)
          return static_cast<int>(p.shape.size());
        else
          return p.dim;
      },
      prior);
}

// True when the prior has a finite support available in closed form.
inline bool enumerable(const SignalPrior& prior) {
  if (std::holds_alternative<AtomicPrior>(prior)) return true;
  if (const auto* s = std::get_if<ScaledShapePrior>(&prior))
    return s->amplitude.kind == AmplitudeLaw::Kind::Atoms;
  return false;
}

// The exact finite support with weights. A scaled shape with an atomic
// amplitude reduces to atoms A_k * shape.
inline AtomicPrior enumerate_atoms(const SignalPrior& prior) {
  if (const auto* a = std::get_if<AtomicPrior>(&prior)) return *a;
  if (const auto* s = std::get_if<ScaledShapePrior>(&prior)) {
    if (s->amplitude.kind == AmplitudeLaw::Kind::Atoms) {
      std::vector<HVector> atoms;
      atoms.reserve(s->amplitude.values.size());
      for (double amp : s->amplitude.values) {
        HVector a = s->shape;
        for (double& c : a) c *= amp;
        atoms.push_back(std::move(a));
      }
      return AtomicPrior{std::move(atoms), s->amplitude.weights};
    }
  }
  throw std::invalid_argument("enumerate_atoms: enumeration unavailable for this prior");
}

inline HVector sample_signal(const SignalPrior& prior, std::mt19937_64& rng) {
  return std::visit(
      [&rng](const auto& p) -> HVector {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AtomicPrior>) {
          std::uniform_real_distribution<double> unif(0.0, 1.0);
          double u = unif(rng);
          double acc = 0.0;
          for (std::size_t k = 0; k < p.atoms.size(); ++k) {
            acc += p.weights[k];
            if (u <= acc) return p.atoms[k];
          }
          return p.atoms.back();
        } else if constexpr (std::is_same_v<T, GaussianDiagonalPrior>) {
          std::normal_distribution<double> normal(0.0, 1.0);
          HVector x(p.mean.size());
          for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = p.mean[i] + std::sqrt(p.variances[i]) * normal(rng);
          return x;
        } else if constexpr (std::is_same_v<T, ScaledShapePrior>) {
          const double amp = p.amplitude.sample(rng);
          HVector x = p.shape;
          for (double& c : x) c *= amp;
          return x;
        } else {
          return p.sample(rng);
        }
      },
      prior);
}

struct PriorMoments {
  HVector mean;
  double energy = 0.0;  // E |x|_H^2
  bool exact = true;
  double se_energy = 0.0;
};

// Closed-form moments; throws for sampler-only priors (use the McConfig
// overload for those).
inline PriorMoments prior_moments(const SignalPrior& prior) {
  PriorMoments m;
  if (const auto* a = std::get_if<AtomicPrior>(&prior)) {
    m.mean.assign(a->atoms.front().size(), 0.0);
    for (std::size_t k = 0; k < a->atoms.size(); ++k) {
      m.energy += a->weights[k] * h_norm2(a->atoms[k]);
      for (std::size_t i = 0; i < m.mean.size(); ++i)
        m.mean[i] += a->weights[k] * a->atoms[k][i];
    }
    return m;
  }
  if (const auto* g = std::get_if<GaussianDiagonalPrior>(&prior)) {
    m.mean = g->mean;
    m.energy = h_norm2(g->mean);
    for (double v : g->variances) m.energy += v;
    return m;
  }
  if (const auto* s = std::get_if<ScaledShapePrior>(&prior)) {
    const double a1 = s->amplitude.first_moment();
    m.mean = s->shape;
    for (double& c : m.mean) c *= a1;
    m.energy = s->amplitude.second_moment() * h_norm2(s->shape);
    return m;
  }
  throw std::invalid_argument("prior_moments: sampler-only prior needs a Monte-Carlo budget");
}

inline PriorMoments prior_moments(const SignalPrior& prior, const McConfig& mc) {
  if (!std::holds_alternative<SamplerOnlyPrior>(prior)) return prior_moments(prior);
  const int dim = dimension(prior);
  const std::int64_t bs = mc.batch_size();
  struct Acc {
    HVector mean;
    double energy = 0.0;
  };
  auto batches = run_batches<Acc>(mc, "prior_moments", [&](int, std::mt19937_64& eng) {
    Acc acc;
    acc.mean.assign(static_cast<std::size_t>(dim), 0.0);
    for (std::int64_t j = 0; j < bs; ++j) {
      HVector x = sample_signal(prior, eng);
      acc.energy += h_norm2(x);
      for (std::size_t i = 0; i < x.size(); ++i) acc.mean[i] += x[i];
    }
    const double inv = 1.0 / static_cast<double>(bs);
    acc.energy *= inv;
    for (double& c : acc.mean) c *= inv;
    return acc;
  });
  PriorMoments m;
  m.exact = false;
  m.mean.assign(static_cast<std::size_t>(dim), 0.0);
  std::vector<double> energies;
  energies.reserve(batches.size());
  for (const auto& b : batches) {
    energies.push_back(b.energy);
    for (std::size_t i = 0; i < m.mean.size(); ++i) m.mean[i] += b.mean[i];
  }
  for (double& c : m.mean) c /= static_cast<double>(batches.size());
  const auto e = batch_mean_estimate(energies);
  m.energy = e.value;
  m.se_energy = e.se;
  return m;
}

}  // namespace infoest
