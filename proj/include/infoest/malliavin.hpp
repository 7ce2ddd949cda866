#pragma once

// Finite-dimensional Malliavin operators on the coordinate model: gradient,
// divergence (Skorohod integral), number operator, and the divergence under
// the observation measure. The divergence is evaluated from the algebraic
// rearrangement  delta u = <w, u(w)> - trace grad u,  so fields only need a
// Jacobian trace (analytic or finite-difference).

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "infoest/estimators.hpp"
#include "infoest/likelihood.hpp"
#include "infoest/wiener.hpp"

namespace infoest {

struct SmoothFunctional {
  std::function<double(const std::vector<double>&)> value;
  std::function<HVector(const std::vector<double>&)> gradient;       // may be empty
  std::function<double(const std::vector<double>&)> hessian_trace;   // may be empty
};

struct VectorField {
  std::function<HVector(const std::vector<double>&)> value;
  std::function<double(const std::vector<double>&)> jacobian_trace;  // may be empty
};

// Central differences along every basis direction.
inline HVector gradient_fd(const SmoothFunctional& f, const std::vector<double>& w,
                           double step) {
  if (!(step > 0.0)) throw std::invalid_argument("gradient_fd: step must be > 0");
  HVector g(w.size());
  std::vector<double> p = w;
  for (std::size_t i = 0; i < w.size(); ++i) {
    p[i] = w[i] + step;
    const double up = f.value(p);
    p[i] = w[i] - step;
    const double dn = f.value(p);
    p[i] = w[i];
    g[i] = (up - dn) / (2.0 * step);
  }
  return g;
}

// Second central differences along the diagonal; sums to the Hessian trace.
inline double hessian_trace_fd(const SmoothFunctional& f, const std::vector<double>& w,
                               double step) {
  if (!(step > 0.0)) throw std::invalid_argument("hessian_trace_fd: step must be > 0");
  const double mid = f.value(w);
  double tr = 0.0;
  std::vector<double> p = w;
  for (std::size_t i = 0; i < w.size(); ++i) {
    p[i] = w[i] + step;
    const double up = f.value(p);
    p[i] = w[i] - step;
    const double dn = f.value(p);
    p[i] = w[i];
    tr += (up - 2.0 * mid + dn) / (step * step);
  }
  return tr;
}

inline double divergence(const VectorField& u, const std::vector<double>& w) {
  if (!u.jacobian_trace)
    throw std::invalid_argument("divergence: field has no Jacobian trace");
  return pairing(w, u.value(w)) - u.jacobian_trace(w);
}

inline double divergence_fd(const VectorField& u, const std::vector<double>& w,
                            double step) {
  if (!(step > 0.0)) throw std::invalid_argument("divergence_fd: step must be > 0");
  double tr = 0.0;
  std::vector<double> p = w;
  for (std::size_t i = 0; i < w.size(); ++i) {
    p[i] = w[i] + step;
    const double up = u.value(p)[i];
    p[i] = w[i] - step;
    const double dn = u.value(p)[i];
    p[i] = w[i];
    tr += (up - dn) / (2.0 * step);
  }
  return pairing(w, u.value(w)) - tr;
}

// Number operator L = delta grad; multiplies the n-th Wiener chaos by n.
inline double number_operator(const SmoothFunctional& f, const std::vector<double>& w) {
  if (!f.gradient || !f.hessian_trace)
    throw std::invalid_argument("number_operator: needs analytic gradient and Hessian trace");
  return pairing(w, f.gradient(w)) - f.hessian_trace(w);
}

// Divergence with respect to the observation measure (mu_Y):
//   tilde delta u = delta u - (grad log ell, u)_H.
// The indicator on {ell > 0} is identically 1 for the mixture-exponential
// likelihoods this library produces; a nonpositive ell is therefore an error.
inline double tilde_divergence(
    const VectorField& u,
    const std::function<LikelihoodEval(const std::vector<double>&)>& likelihood,
    const std::vector<double>& w) {
  const LikelihoodEval e = likelihood(w);
  if (!(e.value > 0.0) || !std::isfinite(e.log_value))
    throw std::runtime_error("tilde_divergence: likelihood evaluation failed (ell <= 0)");
  return divergence(u, w) - h_inner(e.grad_log, u.value(w));
}

// --- adapters around the closed-form likelihood ----------------------------

inline std::function<LikelihoodEval(const std::vector<double>&)> likelihood_evaluator(
    const SignalPrior& prior, double rho) {
  return [prior, rho](const std::vector<double>& w) {
    auto e = closed_form_eval(prior, Observation{w, rho});
    if (!e) throw std::invalid_argument("likelihood_evaluator: no closed form for prior");
    return *e;
  };
}

// log ell as a smooth functional with analytic gradient and Hessian trace.
inline SmoothFunctional log_likelihood_functional(const SignalPrior& prior, double rho) {
  auto ev = likelihood_evaluator(prior, rho);
  SmoothFunctional f;
  f.value = [ev](const std::vector<double>& w) { return ev(w).log_value; };
  f.gradient = [ev](const std::vector<double>& w) { return ev(w).grad_log; };
  f.hessian_trace = [ev](const std::vector<double>& w) { return ev(w).trace_hess_log; };
  return f;
}

// The field w -> xbar(w), with Jacobian trace rho (E[|x|^2|Y] - |xbar|^2).
inline VectorField posterior_mean_field(const SignalPrior& prior, double rho) {
  VectorField u;
  u.value = [prior, rho](const std::vector<double>& w) {
    return noncausal_estimate(prior, Observation{w, rho});
  };
  u.jacobian_trace = [prior, rho](const std::vector<double>& w) {
    const Observation y{w, rho};
    const HVector xbar = noncausal_estimate(prior, y);
    return rho * (posterior_second_moment(prior, y) - h_norm2(xbar));
  };
  return u;
}

}  // namespace infoest
