#pragma once

#include <cmath>
#include <stdexcept>
#include <variant>
#include <vector>

#include "infoest/likelihood.hpp"
#include "infoest/mc.hpp"
#include "infoest/prior.hpp"
#include "infoest/wiener.hpp"

namespace infoest {

struct AtomicWeights {
  std::vector<double> q;  // over the prior's atoms, sum 1
};

struct GaussianParams {
  HVector mean;
  std::vector<double> variances;  // per-coordinate marginal variances
};

struct ParticleSet {
  std::vector<HVector> points;
  std::vector<double> weights;
};

// Conditional law mu_{X|Y} in whatever parametrization the prior admits.
struct PosteriorState {
  std::variant<AtomicWeights, GaussianParams, ParticleSet> state;
};

inline PosteriorState posterior_state(const SignalPrior& prior, const Observation& y) {
  if (enumerable(prior))
    return PosteriorState{AtomicWeights{posterior_weights(prior, y)}};
  if (const auto* g = std::get_if<GaussianDiagonalPrior>(&prior)) {
    GaussianParams p;
    p.mean.resize(g->mean.size());
    p.variances.resize(g->mean.size());
    for (std::size_t i = 0; i < g->mean.size(); ++i) {
      const auto c = detail::conjugate_scalar(g->mean[i], g->variances[i], y.rho * y.rho,
                                              y.rho * y.v[i]);
      p.mean[i] = c.post_mean;
      p.variances[i] = c.post_var;
    }
    return PosteriorState{std::move(p)};
  }
  if (const auto* s = std::get_if<ScaledShapePrior>(&prior)) {
    // Gaussian amplitude: posterior of A is conjugate normal; stored as the
    // induced per-coordinate marginals of x = A * shape.
    const double gain2 = y.rho * y.rho * h_norm2(s->shape);
    const double cross = y.rho * pairing(y.v, s->shape);
    const auto c =
        detail::conjugate_scalar(s->amplitude.mean, s->amplitude.variance, gain2, cross);
    GaussianParams p;
    p.mean = s->shape;
    p.variances.resize(s->shape.size());
    for (std::size_t i = 0; i < s->shape.size(); ++i) {
      p.variances[i] = c.post_var * s->shape[i] * s->shape[i];
      p.mean[i] *= c.post_mean;
    }
    return PosteriorState{std::move(p)};
  }
  throw std::invalid_argument("posterior_state: unsupported prior variant");
}

// Non-causal (smoothing) estimate xbar = E[x | Y], exact. For rho > 0 this
// equals grad log ell / rho; the posterior-mean form is used directly so
// rho = 0 needs no special case.
inline HVector noncausal_estimate(const SignalPrior& prior, const Observation& y) {
  const PosteriorState st = posterior_state(prior, y);
  if (const auto* aw = std::get_if<AtomicWeights>(&st.state)) {
    const AtomicPrior atoms = enumerate_atoms(prior);
    HVector mean(y.v.size(), 0.0);
    for (std::size_t k = 0; k < atoms.atoms.size(); ++k)
      for (std::size_t i = 0; i < mean.size(); ++i)
        mean[i] += aw->q[k] * atoms.atoms[k][i];
    return mean;
  }
  return std::get<GaussianParams>(st.state).mean;
}

// Self-normalized importance estimate of xbar for sampler-only priors.
inline HVector noncausal_estimate_mc(const SignalPrior& prior, const Observation& y,
                                     const McConfig& mc) {
  if (y.rho == 0.0) return prior_moments(prior, mc).mean;
  HVector mean = eval_mc(prior, y, mc).grad_log;
  for (double& c : mean) c /= y.rho;
  return mean;
}

// E[ |x|_H^2 | Y ], exact where a closed form exists.
inline double posterior_second_moment(const SignalPrior& prior, const Observation& y) {
  if (enumerable(prior)) {
    const AtomicPrior atoms = enumerate_atoms(prior);
    const auto post = detail::atomic_posterior(atoms, y);
    return post.second_moment;
  }
  const PosteriorState st = posterior_state(prior, y);
  const auto& g = std::get<GaussianParams>(st.state);
  double m = h_norm2(g.mean);
  for (double v : g.variances) m += v;
  return m;
}

// Monte-Carlo E |x - xbar|_H^2 over joint draws with batch-means error bars.
inline McEstimate noncausal_mmse(const SignalPrior& prior, double rho, const McConfig& mc) {
  const int dim = dimension(prior);
  const Basis basis(dim, 1.0);
  const std::int64_t bs = mc.batch_size();
  auto means = run_batches<double>(mc, "noncausal_mmse", [&](int, std::mt19937_64& eng) {
    double acc = 0.0;
    for (std::int64_t j = 0; j < bs; ++j) {
      const HVector x = sample_signal(prior, eng);
      const Observation y = channel(x, sample_noise(basis, eng), rho);
      const HVector xbar = noncausal_estimate(prior, y);
      double err = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i)
        err += (x[i] - xbar[i]) * (x[i] - xbar[i]);
      acc += err;
    }
    return acc / static_cast<double>(bs);
  });
  return batch_mean_estimate(means);
}

// Exact conditional moment E[ prod_i (h_i, x)_H | Y ] for enumerable priors.
inline double conditional_moment(const SignalPrior& prior, const Observation& y,
                                 const std::vector<HVector>& hs) {
  if (hs.empty()) throw std::invalid_argument("conditional_moment: hs must be nonempty");
  if (!enumerable(prior))
    throw std::invalid_argument("conditional_moment: prior is not enumerable");
  const AtomicPrior atoms = enumerate_atoms(prior);
  const auto q = posterior_weights(prior, y);
  double m = 0.0;
  for (std::size_t k = 0; k < atoms.atoms.size(); ++k) {
    double prod = q[k];
    for (const auto& h : hs) prod *= h_inner(h, atoms.atoms[k]);
    m += prod;
  }
  return m;
}

namespace detail {

// Directional derivative of M_{n-1} along h, divided by rho, evaluated from
// the posterior-weight derivatives d_h q_k = rho q_k ((h,a_k) - (h,xbar)).
// The division makes the expression well defined down to rho = 0, where it
// becomes the prior-covariance term.
inline double moment_gradient_over_rho(const AtomicPrior& atoms,
                                       const std::vector<double>& q, const HVector& xbar,
                                       const std::vector<HVector>& head, const HVector& h) {
  const double hx = h_inner(h, xbar);
  double g = 0.0;
  for (std::size_t k = 0; k < atoms.atoms.size(); ++k) {
    double prod = q[k] * (h_inner(h, atoms.atoms[k]) - hx);
    for (const auto& hi : head) prod *= h_inner(hi, atoms.atoms[k]);
    g += prod;
  }
  return g;
}

}  // namespace detail

// Residual of the conditional-moment recursion
//   M_n = (h_n, xbar) M_{n-1} + (1/rho) grad_{h_n} M_{n-1},
// with the gradient term evaluated analytically from the weight derivatives.
inline double moment_recursion_residual(const SignalPrior& prior, const Observation& y,
                                        const std::vector<HVector>& hs) {
  if (hs.size() < 2)
    throw std::invalid_argument("moment_recursion_residual: need len(hs) >= 2");
  const AtomicPrior atoms = enumerate_atoms(prior);
  const auto q = posterior_weights(prior, y);
  const HVector xbar = noncausal_estimate(prior, y);
  std::vector<HVector> head(hs.begin(), hs.end() - 1);
  const HVector& hn = hs.back();
  const double m_full = conditional_moment(prior, y, hs);
  const double m_head = conditional_moment(prior, y, head);
  const double grad = detail::moment_gradient_over_rho(atoms, q, xbar, head, hn);
  return std::abs(m_full - (h_inner(hn, xbar) * m_head + grad));
}

// Same recursion with the gradient term taken by central finite differences
// of M_{n-1} in the observation; the independent check of the identity.
inline double moment_recursion_residual_fd(const SignalPrior& prior, const Observation& y,
                                           const std::vector<HVector>& hs, double step) {
  if (hs.size() < 2)
    throw std::invalid_argument("moment_recursion_residual_fd: need len(hs) >= 2");
  if (!(y.rho > 0.0))
    throw std::invalid_argument("moment_recursion_residual_fd: need rho > 0");
  if (!(step > 0.0))
    throw std::invalid_argument("moment_recursion_residual_fd: need step > 0");
  std::vector<HVector> head(hs.begin(), hs.end() - 1);
  const HVector& hn = hs.back();
  Observation up = y, dn = y;
  for (std::size_t i = 0; i < y.v.size(); ++i) {
    up.v[i] += step * hn[i];
    dn.v[i] -= step * hn[i];
  }
  const double grad =
      (conditional_moment(prior, up, head) - conditional_moment(prior, dn, head)) /
      (2.0 * step);
  const HVector xbar = noncausal_estimate(prior, y);
  const double m_full = conditional_moment(prior, y, hs);
  const double m_head = conditional_moment(prior, y, head);
  return std::abs(m_full - (h_inner(hn, xbar) * m_head + grad / y.rho));
}

// ---------------------------------------------------------------------------
// Causal filtering: left-to-right scan over coordinates. The predictable
// estimate of coordinate i uses observations 1..i-1, the filtered one 1..i.

struct FilterTrajectory {
  std::vector<double> predictable;
  std::vector<double> filtered;
  std::vector<PosteriorState> states;  // after absorbing coordinate i
};

namespace detail {

struct AtomicScan {
  const AtomicPrior* prior = nullptr;
  double rho = 0.0;
  std::vector<double> logw;
  std::vector<double> q;

  explicit AtomicScan(const AtomicPrior& p, double rho_) : prior(&p), rho(rho_) {
    logw.resize(p.weights.size());
    q.resize(p.weights.size());
    for (std::size_t k = 0; k < p.weights.size(); ++k) logw[k] = std::log(p.weights[k]);
    normalize();
  }

  void normalize() {
    double m = logw.front();
    for (double l : logw) m = std::max(m, l);
    double s = 0.0;
    for (std::size_t k = 0; k < logw.size(); ++k) {
      q[k] = std::exp(logw[k] - m);
      s += q[k];
    }
    for (double& v : q) v /= s;
  }

  double estimate_coord(std::size_t i) const {
    double e = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) e += q[k] * prior->atoms[k][i];
    return e;
  }

  void absorb(std::size_t i, double vi) {
    for (std::size_t k = 0; k < logw.size(); ++k) {
      const double a = prior->atoms[k][i];
      logw[k] += rho * a * vi - 0.5 * rho * rho * a * a;
    }
    normalize();
  }
};

struct ShapeGaussScan {
  const ScaledShapePrior* prior = nullptr;
  double rho = 0.0;
  double prec = 0.0;  // posterior precision of A (0 marks a degenerate law)
  double num = 0.0;   // precision-weighted mean

  explicit ShapeGaussScan(const ScaledShapePrior& p, double rho_) : prior(&p), rho(rho_) {
    if (p.amplitude.variance > 0.0) {
      prec = 1.0 / p.amplitude.variance;
      num = p.amplitude.mean * prec;
    }
  }

  double amp_mean() const { return prec > 0.0 ? num / prec : prior->amplitude.mean; }
  double amp_var() const { return prec > 0.0 ? 1.0 / prec : 0.0; }
  double estimate_coord(std::size_t i) const { return amp_mean() * prior->shape[i]; }

  void absorb(std::size_t i, double vi) {
    if (prec <= 0.0) return;
    const double g = rho * prior->shape[i];
    prec += g * g;
    num += g * vi;
  }
};

}  // namespace detail

// Exact recursive Bayes filter for atomic priors; conjugate scalar recursion
// for the Gaussian-amplitude scaled shape; coordinatewise conjugate update
// for the diagonal Gaussian. Sampler-only priors are rejected (particle
// filtering would contaminate the identity residuals).
inline FilterTrajectory causal_filter(const SignalPrior& prior, const Observation& y) {
  const std::size_t dim = y.v.size();
  check_same_size(static_cast<std::size_t>(dimension(prior)), dim, "causal_filter");
  FilterTrajectory tr;
  tr.predictable.resize(dim);
  tr.filtered.resize(dim);
  tr.states.reserve(dim);

  if (enumerable(prior)) {
    const AtomicPrior atoms = enumerate_atoms(prior);
    detail::AtomicScan scan(atoms, y.rho);
    for (std::size_t i = 0; i < dim; ++i) {
      tr.predictable[i] = scan.estimate_coord(i);
      scan.absorb(i, y.v[i]);
      tr.filtered[i] = scan.estimate_coord(i);
      tr.states.push_back(PosteriorState{AtomicWeights{scan.q}});
    }
    return tr;
  }
  if (const auto* g = std::get_if<GaussianDiagonalPrior>(&prior)) {
    // Independent coordinates: the past carries no information about a_i.
    GaussianParams params{g->mean, g->variances};
    for (std::size_t i = 0; i < dim; ++i) {
      tr.predictable[i] = g->mean[i];
      const auto c = detail::conjugate_scalar(g->mean[i], g->variances[i], y.rho * y.rho,
                                              y.rho * y.v[i]);
      tr.filtered[i] = c.post_mean;
      params.mean[i] = c.post_mean;
      params.variances[i] = c.post_var;
      tr.states.push_back(PosteriorState{params});
    }
    return tr;
  }
  if (const auto* s = std::get_if<ScaledShapePrior>(&prior)) {
    detail::ShapeGaussScan scan(*s, y.rho);
    for (std::size_t i = 0; i < dim; ++i) {
      tr.predictable[i] = scan.estimate_coord(i);
      scan.absorb(i, y.v[i]);
      tr.filtered[i] = scan.estimate_coord(i);
      GaussianParams params;
      params.mean = s->shape;
      params.variances.resize(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        params.variances[j] = scan.amp_var() * s->shape[j] * s->shape[j];
        params.mean[j] *= scan.amp_mean();
      }
      tr.states.push_back(PosteriorState{std::move(params)});
    }
    return tr;
  }
  throw std::invalid_argument("causal_filter: unsupported prior variant");
}

// One joint Monte-Carlo pass over trajectories. mmse_c and e_xhat2 use the
// predictable estimate (the version matched by the discrete Girsanov
// telescoping); the filtered variant is reported alongside to bracket the
// continuous-time object.
struct CausalStats {
  McEstimate mmse_c;
  McEstimate e_xhat2;
  McEstimate e_xhat2_filtered;
};

inline CausalStats causal_stats(const SignalPrior& prior, double rho, const McConfig& mc) {
  const int dim = dimension(prior);
  const Basis basis(dim, 1.0);
  const std::int64_t bs = mc.batch_size();
  struct Acc {
    double mmse = 0.0, xhat2 = 0.0, xhat2f = 0.0;
  };
  auto batches = run_batches<Acc>(mc, "causal_stats", [&](int, std::mt19937_64& eng) {
    Acc acc;
    for (std::int64_t j = 0; j < bs; ++j) {
      const HVector x = sample_signal(prior, eng);
      const Observation y = channel(x, sample_noise(basis, eng), rho);
      const FilterTrajectory tr = causal_filter(prior, y);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - tr.predictable[i];
        acc.mmse += d * d;
        acc.xhat2 += tr.predictable[i] * tr.predictable[i];
        acc.xhat2f += tr.filtered[i] * tr.filtered[i];
      }
    }
    const double inv = 1.0 / static_cast<double>(bs);
    acc.mmse *= inv;
    acc.xhat2 *= inv;
    acc.xhat2f *= inv;
    return acc;
  });
  std::vector<double> m(batches.size()), h(batches.size()), hf(batches.size());
  for (std::size_t b = 0; b < batches.size(); ++b) {
    m[b] = batches[b].mmse;
    h[b] = batches[b].xhat2;
    hf[b] = batches[b].xhat2f;
  }
  return CausalStats{batch_mean_estimate(m), batch_mean_estimate(h),
                     batch_mean_estimate(hf)};
}

inline McEstimate causal_mmse(const SignalPrior& prior, double rho, const McConfig& mc) {
  return causal_stats(prior, rho, mc).mmse_c;
}

}  // namespace infoest
