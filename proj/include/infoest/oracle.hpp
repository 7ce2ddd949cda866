#pragma once

// Reference computations used to certify the Monte-Carlo estimators:
// conjugate linear-Gaussian closed forms, scalar and small-n tensor
// Gauss-Hermite quadrature. None of this shares code with the likelihood /
// estimator path; densities and posteriors are rederived here from the
// completed-square mixture form.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "infoest/prior.hpp"

namespace infoest::oracle {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1 (probabilists' convention)
  int order = 0;
};

// Gauss-Hermite rule in the probabilists' convention:
//   integral f(x) dN(0,1)(x) ~ sum_i weights[i] * f(nodes[i]).
// Golub-Welsch on the Jacobi matrix of the He recurrence (diagonal 0,
// off-diagonal sqrt(k)): implicit-QL with Wilkinson shifts, rotating only the
// first eigenvector row, whose squared entries are the weights. Stable for
// orders well past anything the suite requests.
inline QuadratureRule gauss_hermite(int order) {
  if (order < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
  const int n = order;
  std::vector<double> d(static_cast<std::size_t>(n), 0.0);   // eigenvalues
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);   // off-diagonals
  std::vector<double> z(static_cast<std::size_t>(n), 0.0);   // first eigenvector row
  for (int k = 1; k < n; ++k) e[static_cast<std::size_t>(k - 1)] = std::sqrt(double(k));
  z[0] = 1.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m = l;
    for (;;) {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[static_cast<std::size_t>(m)]) +
                          std::abs(d[static_cast<std::size_t>(m + 1)]);
        if (std::abs(e[static_cast<std::size_t>(m)]) <= eps * dd) break;
      }
      if (m == l) break;
      if (++iter > 64) throw std::runtime_error("gauss_hermite: QL did not converge");
      double g = (d[static_cast<std::size_t>(l + 1)] - d[static_cast<std::size_t>(l)]) /
                 (2.0 * e[static_cast<std::size_t>(l)]);
      double r = std::hypot(g, 1.0);
      g = d[static_cast<std::size_t>(m)] - d[static_cast<std::size_t>(l)] +
          e[static_cast<std::size_t>(l)] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      for (int i = m - 1; i >= l; --i) {
        double f = s * e[static_cast<std::size_t>(i)];
        const double b = c * e[static_cast<std::size_t>(i)];
        r = std::hypot(f, g);
        e[static_cast<std::size_t>(i + 1)] = r;
        if (r == 0.0) {
          d[static_cast<std::size_t>(i + 1)] -= p;
          e[static_cast<std::size_t>(m)] = 0.0;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[static_cast<std::size_t>(i + 1)] - p;
        r = (d[static_cast<std::size_t>(i)] - g) * s + 2.0 * c * b;
        p = s * r;
        d[static_cast<std::size_t>(i + 1)] = g + p;
        g = c * r - b;
        f = z[static_cast<std::size_t>(i + 1)];
        z[static_cast<std::size_t>(i + 1)] = s * z[static_cast<std::size_t>(i)] + c * f;
        z[static_cast<std::size_t>(i)] = c * z[static_cast<std::size_t>(i)] - s * f;
      }
      if (r == 0.0 && m - 1 >= l) continue;
      d[static_cast<std::size_t>(l)] -= p;
      e[static_cast<std::size_t>(l)] = g;
      e[static_cast<std::size_t>(m)] = 0.0;
    }
  }
  // Sort ascending, weights are the squared first components (mu_0 = 1).
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return d[static_cast<std::size_t>(a)] < d[static_cast<std::size_t>(b)]; });
  QuadratureRule rule;
  rule.order = n;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = d[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    const double zi = z[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    rule.weights[static_cast<std::size_t>(i)] = zi * zi;
  }
  return rule;
}

// Closed forms for the random-constant model x'(t) = A on [0, T] with
// A ~ N(0, sigma2), observed through v = rho x + w. With s = rho^2 sigma2 T:
//   I              = log(1+s)/2
//   mmse_nc        = sigma2 T/(1+s)
//   mmse_c (int.)  = log(1+s)/rho^2          (sigma2 T at rho = 0)
//   rel. entropy   = (s - log(1+s))/2
//   E|xbar|^2      = sigma2 T * s/(1+s)
//   E|xhat|^2      = sigma2 T - mmse_c
struct GaussianChannelFacts {
  double mi = 0.0;
  double mmse_nc = 0.0;
  double mmse_c_integral = 0.0;
  double rel_ent = 0.0;
  double e_xbar2 = 0.0;
  double e_xhat2 = 0.0;
};

inline GaussianChannelFacts gaussian_closed_form(double sigma2, double T, double rho) {
  if (!(sigma2 >= 0.0) || !(T > 0.0) || !(rho >= 0.0))
    throw std::invalid_argument("gaussian_closed_form: need sigma2 >= 0, T > 0, rho >= 0");
  const double energy = sigma2 * T;
  const double s = rho * rho * energy;
  GaussianChannelFacts f;
  f.mi = 0.5 * std::log1p(s);
  f.mmse_nc = energy / (1.0 + s);
  f.mmse_c_integral = (rho > 0.0) ? std::log1p(s) / (rho * rho) : energy;
  f.rel_ent = 0.5 * (s - std::log1p(s));
  f.e_xbar2 = energy * s / (1.0 + s);
  f.e_xhat2 = energy - f.mmse_c_integral;
  return f;
}

// Exact discrete-time (predictable) filter sums for the same model on the
// n-coordinate step basis. The posterior variance of A after i observations
// is 1/(1/sigma2 + rho^2 i D), so both sums are available in closed form.
// Used to pin the discretization tolerance of the causal identities.
struct GaussianDiscreteCausal {
  double mmse_c = 0.0;
  double e_xhat2 = 0.0;
};

inline GaussianDiscreteCausal gaussian_discrete_causal(double sigma2, double T, double rho,
                                                       int n) {
  if (n < 1) throw std::invalid_argument("gaussian_discrete_causal: n must be >= 1");
  const double d = T / n;
  GaussianDiscreteCausal out;
  if (sigma2 == 0.0) return out;
  for (int i = 0; i < n; ++i) {
    const double post_var = 1.0 / (1.0 / sigma2 + rho * rho * i * d);
    out.mmse_c += d * post_var;
    out.e_xhat2 += d * (sigma2 - post_var);
  }
  return out;
}

// log of the n=1 likelihood ratio for x ~ N(0, sigma2): the conjugate form
// log ell(v) = rho^2 sigma2 v^2 / (2 (1+rho^2 sigma2)) - log(1+rho^2 sigma2)/2.
inline double gaussian_scalar_log_likelihood(double sigma2, double rho, double v) {
  const double s = rho * rho * sigma2;
  return 0.5 * s * v * v / (1.0 + s) - 0.5 * std::log1p(s);
}

namespace detail {

inline double log_sum_exp(const std::vector<double>& t) {
  double m = t.front();
  for (double v : t) m = std::max(m, v);
  double s = 0.0;
  for (double v : t) s += std::exp(v - m);
  return m + std::log(s);
}

// Scalar channel v = rho A + z. Marginal density ratio and posterior mean of
// A, from the completed-square mixture form (atomic law) or the conjugate
// normal form (Gaussian law).
struct ScalarModel {
  const AmplitudeLaw& law;
  double rho;

  // log p(v) - log phi(v) where phi is the standard normal density.
  double log_ratio(double v) const {
    if (law.kind == AmplitudeLaw::Kind::Gaussian) {
      const double s2 = 1.0 + rho * rho * law.variance;
      const double d = v - rho * law.mean;
      return -0.5 * std::log(s2) - 0.5 * d * d / s2 + 0.5 * v * v;
    }
    std::vector<double> t(law.values.size());
    for (std::size_t k = 0; k < law.values.size(); ++k) {
      const double d = v - rho * law.values[k];
      t[k] = std::log(law.weights[k]) - 0.5 * d * d;
    }
    return log_sum_exp(t) + 0.5 * v * v;
  }

  double posterior_mean(double v) const {
    if (law.kind == AmplitudeLaw::Kind::Gaussian) {
      const double s2 = 1.0 + rho * rho * law.variance;
      return law.mean + rho * law.variance * (v - rho * law.mean) / s2;
    }
    std::vector<double> t(law.values.size());
    for (std::size_t k = 0; k < law.values.size(); ++k) {
      const double d = v - rho * law.values[k];
      t[k] = std::log(law.weights[k]) - 0.5 * d * d;
    }
    const double m = *std::max_element(t.begin(), t.end());
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < law.values.size(); ++k) {
      const double w = std::exp(t[k] - m);
      num += w * law.values[k];
      den += w;
    }
    return num / den;
  }

  // d/dv log p(v); the score of the output density.
  double density_score(double v) const {
    if (law.kind == AmplitudeLaw::Kind::Gaussian) {
      const double s2 = 1.0 + rho * rho * law.variance;
      return -(v - rho * law.mean) / s2;
    }
    std::vector<double> t(law.values.size());
    for (std::size_t k = 0; k < law.values.size(); ++k) {
      const double d = v - rho * law.values[k];
      t[k] = std::log(law.weights[k]) - 0.5 * d * d;
    }
    const double m = *std::max_element(t.begin(), t.end());
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < law.values.size(); ++k) {
      const double w = std::exp(t[k] - m);
      num += w * (-(v - rho * law.values[k]));
      den += w;
    }
    return num / den;
  }
};

}  // namespace detail

// Scalar-channel facts integrated with Gauss-Hermite over the noise (and,
// for a Gaussian amplitude, over the amplitude as well):
//   mi       I(A; v)
//   mmse     E (A - E[A|v])^2
//   rel_ent  E1 log ell          (expectation under the output law)
//   e_xbar2  E1 (E[A|v])^2
//   fisher   E1 (d log ell / dv)^2
struct ScalarChannelFacts {
  double mi = 0.0;
  double mmse = 0.0;
  double rel_ent = 0.0;
  double e_xbar2 = 0.0;
  double fisher = 0.0;
};

namespace detail {

inline ScalarChannelFacts quadrature_scalar_at(const AmplitudeLaw& law, double rho,
                                               int order) {
  const QuadratureRule rule = gauss_hermite(order);
  const ScalarModel model{law, rho};
  ScalarChannelFacts f;
  auto accumulate = [&](double amp, double outer_weight) {
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double z = rule.nodes[i];
      const double v = rho * amp + z;
      const double ww = outer_weight * rule.weights[i];
      const double lr = model.log_ratio(v);
      const double pm = model.posterior_mean(v);
      const double score = model.density_score(v) + v;  // d/dv log ell
      // log(p(v|A)/p(v)) = (v^2 - z^2)/2 - log ell(v)
      f.mi += ww * (0.5 * (v * v - z * z) - lr);
      f.mmse += ww * (amp - pm) * (amp - pm);
      f.rel_ent += ww * lr;
      f.e_xbar2 += ww * pm * pm;
      f.fisher += ww * score * score;
    }
  };
  if (law.kind == AmplitudeLaw::Kind::Atoms) {
    for (std::size_t k = 0; k < law.values.size(); ++k)
      accumulate(law.values[k], law.weights[k]);
  } else {
    const double sd = std::sqrt(law.variance);
    for (std::size_t j = 0; j < rule.nodes.size(); ++j)
      accumulate(law.mean + sd * rule.nodes[j], rule.weights[j]);
  }
  return f;
}

}  // namespace detail

// Self-validating: computed at `order` and `2*order`; the refined result is
// returned and a disagreement beyond 1e-6 is an error.
inline ScalarChannelFacts quadrature_scalar(const AmplitudeLaw& law, double rho,
                                            int order = 64) {
  if (order < 32) throw std::invalid_argument("quadrature_scalar: order must be >= 32");
  const ScalarChannelFacts coarse = detail::quadrature_scalar_at(law, rho, order);
  const ScalarChannelFacts fine = detail::quadrature_scalar_at(law, rho, 2 * order);
  if (std::abs(coarse.mi - fine.mi) > 1e-6 || std::abs(coarse.mmse - fine.mmse) > 1e-6)
    throw std::runtime_error("quadrature_scalar: order doubling changed result by > 1e-6");
  return fine;
}

// Full tensor-product Gauss-Hermite integration over the n-dimensional noise
// for an atomic prior; brute-force validation of the Monte-Carlo estimators
// at n <= 3.
struct TensorChannelFacts {
  double mi = 0.0;
  double mmse_nc = 0.0;
  double rel_ent = 0.0;
};

namespace detail {

inline TensorChannelFacts tensor_quadrature_at(const AtomicPrior& prior, double rho,
                                               int order) {
  const int dim = static_cast<int>(prior.atoms.front().size());
  const QuadratureRule rule = gauss_hermite(order);
  const std::size_t natoms = prior.atoms.size();
  TensorChannelFacts f;
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
  std::vector<double> t(natoms);
  for (std::size_t k = 0; k < natoms; ++k) {
    const HVector& truth = prior.atoms[k];
    const double pk = prior.weights[k];
    std::fill(idx.begin(), idx.end(), 0);
    for (;;) {
      double wz = pk;
      for (int i = 0; i < dim; ++i) {
        const auto q = static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]);
        v[static_cast<std::size_t>(i)] =
            rho * truth[static_cast<std::size_t>(i)] + rule.nodes[q];
        wz *= rule.weights[q];
      }
      // log p(v) up to the common normal constant, completed-square form
      for (std::size_t j = 0; j < natoms; ++j) {
        double d2 = 0.0;
        for (int i = 0; i < dim; ++i) {
          const double d =
              v[static_cast<std::size_t>(i)] - rho * prior.atoms[j][static_cast<std::size_t>(i)];
          d2 += d * d;
        }
        t[j] = std::log(prior.weights[j]) - 0.5 * d2;
      }
      const double m = *std::max_element(t.begin(), t.end());
      double den = 0.0;
      std::vector<double> mean(static_cast<std::size_t>(dim), 0.0);
      for (std::size_t j = 0; j < natoms; ++j) {
        const double wj = std::exp(t[j] - m);
        den += wj;
        for (int i = 0; i < dim; ++i)
          mean[static_cast<std::size_t>(i)] += wj * prior.atoms[j][static_cast<std::size_t>(i)];
      }
      for (double& c : mean) c /= den;
      double vv = 0.0, zz = 0.0;
      for (int i = 0; i < dim; ++i) {
        const double q = v[static_cast<std::size_t>(i)];
        const double zi = rule.nodes[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
        vv += q * q;
        zz += zi * zi;
      }
      const double log_ratio = (m + std::log(den)) + 0.5 * vv;  // log ell(v)
      double err2 = 0.0;
      for (int i = 0; i < dim; ++i) {
        const double d = truth[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)];
        err2 += d * d;
      }
      // log(p(v|x)/p(v)) = (|v|^2 - |z|^2)/2 - log ell(v)
      f.mi += wz * (0.5 * (vv - zz) - log_ratio);
      f.rel_ent += wz * log_ratio;
      f.mmse_nc += wz * err2;
      // next tensor index
      int pos = 0;
      for (; pos < dim; ++pos) {
        if (++idx[static_cast<std::size_t>(pos)] < order) break;
        idx[static_cast<std::size_t>(pos)] = 0;
      }
      if (pos == dim) break;
    }
  }
  return f;
}

}  // namespace detail

inline TensorChannelFacts tensor_quadrature(const AtomicPrior& prior, double rho,
                                            int order = 32) {
  const int dim = static_cast<int>(prior.atoms.front().size());
  if (dim > 3) throw std::invalid_argument("tensor_quadrature: dimension must be <= 3");
  double budget = 1.0;
  for (int i = 0; i < dim; ++i) budget *= 2.0 * order;
  if (budget > 1e6)
    throw std::invalid_argument("tensor_quadrature: order^dim budget exceeded (max 1e6)");
  const TensorChannelFacts coarse = detail::tensor_quadrature_at(prior, rho, order);
  const TensorChannelFacts fine = detail::tensor_quadrature_at(prior, rho, 2 * order);
  if (std::abs(coarse.mi - fine.mi) > 1e-6 ||
      std::abs(coarse.mmse_nc - fine.mmse_nc) > 1e-6)
    throw std::runtime_error("tensor_quadrature: order doubling changed result by > 1e-6");
  return fine;
}

}  // namespace infoest::oracle
