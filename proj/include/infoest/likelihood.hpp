#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "infoest/mc.hpp"
#include "infoest/prior.hpp"
#include "infoest/wiener.hpp"

namespace infoest {

// One evaluation of the likelihood ratio ell = d mu_Y / d mu_W at an
// observation, with its Malliavin derivatives. Standard errors are zero on
// the exact paths.
struct LikelihoodEval {
  double value = 1.0;
  double log_value = 0.0;
  HVector grad_log;             // rho * (posterior mean)
  double trace_hess_log = 0.0;  // rho^2 * (posterior second-moment trace - |mean|^2)
  double se_value = 0.0;
  double se_grad_log = 0.0;  // Euclidean norm of the per-coordinate errors
  double se_trace = 0.0;
};

namespace detail {

// Cameron-Martin exponent for atom a: rho <v,a> - rho^2 |a|^2 / 2.
inline double cm_exponent(const HVector& a, const Observation& y) {
  return y.rho * pairing(y.v, a) - 0.5 * y.rho * y.rho * h_norm2(a);
}

struct AtomicPosterior {
  double log_ell = 0.0;
  std::vector<double> q;  // normalized posterior weights
  HVector mean;           // posterior mean of x
  double second_moment = 0.0;  // E[|x|^2 | Y]
};

// Max-shifted mixture sum; safe against overflow at large rho |v|.
inline AtomicPosterior atomic_posterior(const AtomicPrior& prior, const Observation& y) {
  const std::size_t natoms = prior.atoms.size();
  check_same_size(prior.atoms.front().size(), y.v.size(), "atomic_posterior");
  std::vector<double> t(natoms);
  for (std::size_t k = 0; k < natoms; ++k)
    t[k] = std::log(prior.weights[k]) + cm_exponent(prior.atoms[k], y);
  double m = t.front();
  for (double v : t) m = std::max(m, v);
  AtomicPosterior post;
  post.q.resize(natoms);
  post.mean.assign(y.v.size(), 0.0);
  double s = 0.0;
  for (std::size_t k = 0; k < natoms; ++k) {
    post.q[k] = std::exp(t[k] - m);
    s += post.q[k];
  }
  post.log_ell = m + std::log(s);
  for (std::size_t k = 0; k < natoms; ++k) {
    post.q[k] /= s;
    post.second_moment += post.q[k] * h_norm2(prior.atoms[k]);
    for (std::size_t i = 0; i < post.mean.size(); ++i)
      post.mean[i] += post.q[k] * prior.atoms[k][i];
  }
  return post;
}

inline LikelihoodEval eval_from_posterior(const AtomicPosterior& post, double rho) {
  LikelihoodEval e;
  e.log_value = post.log_ell;
  e.value = std::exp(post.log_ell);
  e.grad_log = post.mean;
  for (double& c : e.grad_log) c *= rho;
  e.trace_hess_log = rho * rho * (post.second_moment - h_norm2(post.mean));
  return e;
}

// Conjugate scalar update: x = A*shape with A ~ N(mean, var) observed through
// v. Returns the posterior (mean, variance) of A and the log likelihood
// contribution. Complete-the-square in A.
struct ConjugateScalar {
  double post_mean = 0.0;
  double post_var = 0.0;
  double log_ell = 0.0;
};

inline ConjugateScalar conjugate_scalar(double prior_mean, double prior_var, double gain2,
                                        double cross) {
  // gain2 = rho^2 |shape|^2, cross = rho <v, shape>.
  ConjugateScalar c;
  if (prior_var == 0.0) {
    c.post_mean = prior_mean;
    c.post_var = 0.0;
    c.log_ell = cross * prior_mean - 0.5 * gain2 * prior_mean * prior_mean;
    return c;
  }
  const double prec = 1.0 / prior_var + gain2;
  c.post_var = 1.0 / prec;
  c.post_mean = (prior_mean / prior_var + cross) * c.post_var;
  c.log_ell = -0.5 * std::log1p(gain2 * prior_var) +
              0.5 * c.post_mean * c.post_mean * prec -
              0.5 * prior_mean * prior_mean / prior_var;
  return c;
}

}  // namespace detail

// Exact evaluation for enumerable priors (atomic, or scaled shape with an
// atomic amplitude): the finite mixture of Cameron-Martin exponentials.
inline LikelihoodEval eval_exact(const SignalPrior& prior, const Observation& y) {
  if (!enumerable(prior))
    throw std::invalid_argument("eval_exact: prior is not enumerable");
  const AtomicPrior atoms = enumerate_atoms(prior);
  return detail::eval_from_posterior(detail::atomic_posterior(atoms, y), y.rho);
}

// Normalized posterior weights q_k over the prior atoms.
inline std::vector<double> posterior_weights(const SignalPrior& prior, const Observation& y) {
  if (!enumerable(prior))
    throw std::invalid_argument("posterior_weights: prior is not enumerable");
  return detail::atomic_posterior(enumerate_atoms(prior), y).q;
}

// Closed-form evaluation where one exists: enumerable priors, the diagonal
// Gaussian, and the scaled shape with Gaussian amplitude (conjugate forms).
// Empty for sampler-only priors.
inline std::optional<LikelihoodEval> closed_form_eval(const SignalPrior& prior,
                                                      const Observation& y) {
  if (enumerable(prior)) return eval_exact(prior, y);
  if (const auto* g = std::get_if<GaussianDiagonalPrior>(&prior)) {
    check_same_size(g->mean.size(), y.v.size(), "closed_form_eval");
    LikelihoodEval e;
    e.grad_log.assign(y.v.size(), 0.0);
    const double rho = y.rho;
    for (std::size_t i = 0; i < y.v.size(); ++i) {
      const auto c =
          detail::conjugate_scalar(g->mean[i], g->variances[i], rho * rho, rho * y.v[i]);
      e.log_value += c.log_ell;
      e.grad_log[i] = rho * c.post_mean;
      e.trace_hess_log += rho * rho * c.post_var;
    }
    e.value = std::exp(e.log_value);
    return e;
  }
  if (const auto* s = std::get_if<ScaledShapePrior>(&prior)) {
    if (s->amplitude.kind == AmplitudeLaw::Kind::Gaussian) {
      const double rho = y.rho;
      const double gain2 = rho * rho * h_norm2(s->shape);
      const double cross = rho * pairing(y.v, s->shape);
      const auto c = detail::conjugate_scalar(s->amplitude.mean, s->amplitude.variance,
                                              gain2, cross);
      LikelihoodEval e;
      e.log_value = c.log_ell;
      e.value = std::exp(c.log_ell);
      e.grad_log = s->shape;
      for (double& g : e.grad_log) g *= rho * c.post_mean;
      e.trace_hess_log = rho * rho * c.post_var * h_norm2(s->shape);
      return e;
    }
  }
  return std::nullopt;
}

// Monte-Carlo estimate over prior draws:
//   ell_hat = (1/N) sum_j exp(rho <v,x_j> - rho^2 |x_j|^2 / 2),
// with the posterior mean estimated by the self-normalized weighted average.
// Batch sums are kept in a per-batch max-shifted form and combined with a
// global shift in fixed batch order, so the result is overflow-safe and
// independent of the parallelism degree.
inline LikelihoodEval eval_mc(const SignalPrior& prior, const Observation& y,
                              const McConfig& mc) {
  mc.validate();
  const auto dim = y.v.size();
  check_same_size(static_cast<std::size_t>(dimension(prior)), dim, "eval_mc");
  const std::int64_t bs = mc.batch_size();

  struct Batch {
    double shift = 0.0;  // max exponent within the batch
    double s = 0.0;      // sum of exp(e - shift)
    HVector sx;          // sum of exp(e - shift) * x
    double sxx = 0.0;    // sum of exp(e - shift) * |x|^2
  };
  auto batches = run_batches<Batch>(mc, "eval_mc", [&](int, std::mt19937_64& eng) {
    std::vector<double> expo(static_cast<std::size_t>(bs));
    std::vector<HVector> draws(static_cast<std::size_t>(bs));
    Batch b;
    b.shift = -std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < bs; ++j) {
      draws[static_cast<std::size_t>(j)] = sample_signal(prior, eng);
      const double e = detail::cm_exponent(draws[static_cast<std::size_t>(j)], y);
      if (!std::isfinite(e)) throw std::runtime_error("eval_mc: non-finite sample weight");
      expo[static_cast<std::size_t>(j)] = e;
      b.shift = std::max(b.shift, e);
    }
    b.sx.assign(dim, 0.0);
    for (std::int64_t j = 0; j < bs; ++j) {
      const double w = std::exp(expo[static_cast<std::size_t>(j)] - b.shift);
      const HVector& x = draws[static_cast<std::size_t>(j)];
      b.s += w;
      b.sxx += w * h_norm2(x);
      for (std::size_t i = 0; i < dim; ++i) b.sx[i] += w * x[i];
    }
    return b;
  });

  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& b : batches) shift = std::max(shift, b.shift);
  double s = 0.0, sxx = 0.0;
  HVector sx(dim, 0.0);
  for (const auto& b : batches) {
    const double r = std::exp(b.shift - shift);
    s += r * b.s;
    sxx += r * b.sxx;
    for (std::size_t i = 0; i < dim; ++i) sx[i] += r * b.sx[i];
  }
  if (!(s > 0.0) || !std::isfinite(std::log(s)))
    throw std::runtime_error("eval_mc: all sample weights underflowed");

  LikelihoodEval e;
  e.log_value = shift + std::log(s / static_cast<double>(mc.samples));
  e.value = std::exp(e.log_value);
  e.grad_log.assign(dim, 0.0);
  HVector mean(dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) {
    mean[i] = sx[i] / s;
    e.grad_log[i] = y.rho * mean[i];
  }
  e.trace_hess_log = y.rho * y.rho * (sxx / s - h_norm2(mean));

  // Batch-means error bars from per-batch versions of the same estimators.
  const auto bcount = batches.size();
  std::vector<double> val_b(bcount), trace_b(bcount);
  std::vector<HVector> mean_b(bcount);
  for (std::size_t b = 0; b < bcount; ++b) {
    const auto& bb = batches[b];
    val_b[b] = std::exp(bb.shift - e.log_value) * bb.s / static_cast<double>(bs);
    mean_b[b].resize(dim);
    for (std::size_t i = 0; i < dim; ++i) mean_b[b][i] = bb.sx[i] / bb.s;
    trace_b[b] = y.rho * y.rho * (bb.sxx / bb.s - h_norm2(mean_b[b]));
  }
  // val_b are relative to the pooled value, so the spread is a relative se.
  e.se_value = e.value * batch_mean_estimate(val_b).se;
  double grad_var = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    std::vector<double> ci(bcount);
    for (std::size_t b = 0; b < bcount; ++b) ci[b] = mean_b[b][i];
    const double se_i = y.rho * batch_mean_estimate(ci).se;
    grad_var += se_i * se_i;
  }
  e.se_grad_log = std::sqrt(grad_var);
  e.se_trace = batch_mean_estimate(trace_b).se;
  return e;
}

}  // namespace infoest
