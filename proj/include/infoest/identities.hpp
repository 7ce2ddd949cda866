#pragma once

// Mutual information by three routes and the statistical / analytic identity
// battery. Expectations under the observation law are always taken by
// sampling y = rho x + z from the joint law; reweighting the noise law with
// ell is avoided because the weight variance explodes with rho. Statistical
// residuals carry batch-means error bars; checks that hold in the continuum
// only (the causal ones) add a discretization allowance pinned to the exact
// discrete linear-Gaussian filter at matched signal energy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "infoest/estimators.hpp"
#include "infoest/likelihood.hpp"
#include "infoest/malliavin.hpp"
#include "infoest/mc.hpp"
#include "infoest/oracle.hpp"
#include "infoest/prior.hpp"

namespace infoest {

struct Tolerances {
  double sigma_mult = 4.0;       // statistical: sigma_mult * combined se
  double analytic_abs = 1e-8;    // closed-form identities
  double analytic_tight = 1e-10; // per-sample closed forms
  double fd_rel = 1e-5;          // finite-difference gradient agreement
  double fd_abs = 1e-4;          // finite-difference second derivatives
  double fd_curvature = 10.0;    // FD-in-rho allowance = fd_curvature * step^2
  double causal_safety = 3.0;    // multiplies the linear-Gaussian discretization gap
  double max_grid_spacing = 0.5; // coarsest admissible rho-grid spacing
};

struct IdentityReport {
  std::string name;
  double lhs = 0.0, rhs = 0.0;
  double se_lhs = 0.0, se_rhs = 0.0;
  double residual = 0.0;  // lhs - rhs
  double tolerance = 0.0;
  bool pass = false;
  std::string rule;  // serialized tolerance rule
  std::string note;
  double rho = 0.0;
  int n = 0;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
};

struct SnrPoint {
  double rho = 0.0;
  McEstimate mi_direct, mi_immse, mi_duncan, mmse_nc, mmse_c, rel_ent;
};

struct SnrCurve {
  std::vector<SnrPoint> points;
};

inline double default_fd_step(double rho) { return std::max(1e-3, rho / 100.0); }

// Discretization allowance for the causal identities: safety times the exact
// gap of the discrete predictable linear-Gaussian filter whose signal energy
// matches the prior's.
inline double causal_discretization_allowance(double rho, double energy, int n,
                                              double safety) {
  if (!(energy > 0.0) || rho == 0.0) return 1e-12;
  const auto cont = oracle::gaussian_closed_form(energy, 1.0, rho);
  const auto disc = oracle::gaussian_discrete_causal(energy, 1.0, rho, n);
  const double gap = std::abs(disc.mmse_c - cont.mmse_c_integral);
  return safety * 0.5 * rho * rho * gap + 1e-12;
}

namespace detail {

// Per-batch means of everything the scalar identities need, from one joint
// pass. The rho +- step evaluations reuse the same (x, z) draws, so
// finite differences in rho are taken with common random numbers.
struct JointBatch {
  double log_ell = 0.0;   // log ell_rho(v)
  double log_up = 0.0;    // log ell_{rho+step}((rho+step) x + z)
  double log_dn = 0.0;    // log ell_{rho-step}((rho-step) x + z)
  double xbar2 = 0.0;     // |xbar|^2
  double err2 = 0.0;      // |x - xbar|^2
  double grad2 = 0.0;     // |grad log ell|^2
  double trace = 0.0;     // trace hess log ell
  double path_mi = 0.0;   // rho<v,x> - rho^2|x|^2/2 - log ell
};

inline LikelihoodEval eval_or_throw(const SignalPrior& prior, const Observation& y) {
  auto e = closed_form_eval(prior, y);
  if (!e)
    throw std::invalid_argument(
        "identities: prior has no closed-form likelihood (sampler-only priors are not "
        "supported here)");
  return *e;
}

inline std::vector<JointBatch> joint_pass(const SignalPrior& prior, double rho,
                                          double fd_step, const McConfig& mc,
                                          std::string_view label) {
  const int dim = dimension(prior);
  const Basis basis(dim, 1.0);
  const std::int64_t bs = mc.batch_size();
  const bool with_fd = fd_step > 0.0 && rho - fd_step > 0.0;
  return run_batches<JointBatch>(mc, label, [&, rho, fd_step](int, std::mt19937_64& eng) {
    JointBatch b;
    for (std::int64_t j = 0; j < bs; ++j) {
      const HVector x = sample_signal(prior, eng);
      const NoiseCoords z = sample_noise(basis, eng);
      const Observation y = channel(x, z, rho);
      const LikelihoodEval e = eval_or_throw(prior, y);
      const HVector& g = e.grad_log;
      double xbar2 = 0.0, err2 = 0.0, grad2 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double xb = (rho > 0.0) ? g[i] / rho : 0.0;
        grad2 += g[i] * g[i];
        if (rho > 0.0) {
          xbar2 += xb * xb;
          err2 += (x[i] - xb) * (x[i] - xb);
        }
      }
      if (rho == 0.0) {
        const HVector xbar = noncausal_estimate(prior, y);
        xbar2 = h_norm2(xbar);
        for (std::size_t i = 0; i < x.size(); ++i)
          err2 += (x[i] - xbar[i]) * (x[i] - xbar[i]);
      }
      b.log_ell += e.log_value;
      b.xbar2 += xbar2;
      b.err2 += err2;
      b.grad2 += grad2;
      b.trace += e.trace_hess_log;
      b.path_mi += rho * pairing(y.v, x) - 0.5 * rho * rho * h_norm2(x) - e.log_value;
      if (with_fd) {
        b.log_up += eval_or_throw(prior, channel(x, z, rho + fd_step)).log_value;
        b.log_dn += eval_or_throw(prior, channel(x, z, rho - fd_step)).log_value;
      }
    }
    const double inv = 1.0 / static_cast<double>(bs);
    b.log_ell *= inv;
    b.log_up *= inv;
    b.log_dn *= inv;
    b.xbar2 *= inv;
    b.err2 *= inv;
    b.grad2 *= inv;
    b.trace *= inv;
    b.path_mi *= inv;
    return b;
  });
}

template <class Get>
McEstimate collect(const std::vector<JointBatch>& batches, Get&& get) {
  std::vector<double> m(batches.size());
  for (std::size_t b = 0; b < batches.size(); ++b) m[b] = get(batches[b]);
  return batch_mean_estimate(m);
}

}  // namespace detail

// E1 log ell: the relative entropy of the observation law w.r.t. noise.
inline McEstimate relative_entropy(const SignalPrior& prior, double rho,
                                   const McConfig& mc) {
  auto batches = detail::joint_pass(prior, rho, 0.0, mc, "rel_ent");
  return detail::collect(batches, [](const detail::JointBatch& b) { return b.log_ell; });
}

// I = (rho^2/2) E|x|^2 - E1 log ell, with the exact prior energy.
inline McEstimate mutual_info_direct(const SignalPrior& prior, double rho,
                                     const McConfig& mc) {
  const double energy = prior_moments(prior).energy;
  auto batches = detail::joint_pass(prior, rho, 0.0, mc, "mi_direct");
  auto rel = detail::collect(batches, [](const detail::JointBatch& b) { return b.log_ell; });
  return {0.5 * rho * rho * energy - rel.value, rel.se};
}

// Direct average of log(d mu_{Y|X}/d mu_W) - log ell over joint draws; the
// second estimator of the same quantity, with its own error bar.
inline McEstimate mutual_info_direct_pathwise(const SignalPrior& prior, double rho,
                                              const McConfig& mc) {
  auto batches = detail::joint_pass(prior, rho, 0.0, mc, "mi_pathwise");
  return detail::collect(batches, [](const detail::JointBatch& b) { return b.path_mi; });
}

// Non-causal MMSE at every grid point with common random numbers across the
// grid (one set of draws, re-scaled observations).
inline std::vector<McEstimate> mmse_grid(const SignalPrior& prior,
                                         const std::vector<double>& rhos,
                                         const McConfig& mc) {
  const int dim = dimension(prior);
  const Basis basis(dim, 1.0);
  const std::int64_t bs = mc.batch_size();
  using Row = std::vector<double>;
  auto batches = run_batches<Row>(mc, "mmse_grid", [&](int, std::mt19937_64& eng) {
    Row acc(rhos.size(), 0.0);
    for (std::int64_t j = 0; j < bs; ++j) {
      const HVector x = sample_signal(prior, eng);
      const NoiseCoords z = sample_noise(basis, eng);
      for (std::size_t r = 0; r < rhos.size(); ++r) {
        const Observation y = channel(x, z, rhos[r]);
        const HVector xbar = noncausal_estimate(prior, y);
        double err = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
          err += (x[i] - xbar[i]) * (x[i] - xbar[i]);
        acc[r] += err;
      }
    }
    for (double& a : acc) a /= static_cast<double>(bs);
    return acc;
  });
  std::vector<McEstimate> out(rhos.size());
  for (std::size_t r = 0; r < rhos.size(); ++r) {
    std::vector<double> m(batches.size());
    for (std::size_t b = 0; b < batches.size(); ++b) m[b] = batches[b][r];
    out[r] = batch_mean_estimate(m);
  }
  return out;
}

// I(rho_j) by the I-MMSE route: composite trapezoid of s * mmse_nc(s) from 0
// over the grid. Returns one estimate per input grid point.
inline std::vector<McEstimate> mutual_info_immse(const SignalPrior& prior,
                                                 const std::vector<double>& rho_grid,
                                                 const McConfig& mc,
                                                 double max_spacing = 0.5) {
  if (rho_grid.empty()) throw std::invalid_argument("mutual_info_immse: empty rho grid");
  for (std::size_t i = 0; i < rho_grid.size(); ++i) {
    if (rho_grid[i] < 0.0)
      throw std::invalid_argument("mutual_info_immse: rho grid must be nonnegative");
    if (i > 0 && rho_grid[i] <= rho_grid[i - 1])
      throw std::invalid_argument("mutual_info_immse: rho grid must be increasing");
  }
  std::vector<double> grid = rho_grid;
  if (grid.front() > 0.0) grid.insert(grid.begin(), 0.0);
  double prev = 0.0;
  for (double s : grid) {
    if (s - prev > max_spacing)
      throw std::invalid_argument("mutual_info_immse: rho grid too coarse (spacing > bound)");
    prev = s;
  }

  const auto moments = prior_moments(prior);
  const double var0 = moments.energy - h_norm2(moments.mean);
  // rho = 0 is exact (prior variance trace); only positive points need MC.
  std::vector<double> positive(grid.begin() + (grid.front() == 0.0 ? 1 : 0), grid.end());
  const auto est = mmse_grid(prior, positive, mc);

  std::vector<double> value(grid.size()), se(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] == 0.0) {
      value[i] = var0;
      se[i] = 0.0;
    } else {
      const std::size_t k = i - (grid.front() == 0.0 ? 1 : 0);
      value[i] = est[k].value;
      se[i] = est[k].se;
    }
  }
  std::vector<McEstimate> integral(grid.size());
  double acc = 0.0, var_acc = 0.0;
  integral[0] = {0.0, 0.0};
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double w = 0.5 * (grid[i] - grid[i - 1]);
    acc += w * (grid[i - 1] * value[i - 1] + grid[i] * value[i]);
    const double e0 = w * grid[i - 1] * se[i - 1];
    const double e1 = w * grid[i] * se[i];
    var_acc += e0 * e0 + e1 * e1;
    integral[i] = {acc, std::sqrt(var_acc)};
  }
  std::vector<McEstimate> out;
  out.reserve(rho_grid.size());
  const std::size_t offset = (grid.size() == rho_grid.size()) ? 0 : 1;
  for (std::size_t i = 0; i < rho_grid.size(); ++i) out.push_back(integral[i + offset]);
  return out;
}

// Duncan's route: I = (rho^2/2) * causal MMSE (exact in the continuum).
inline McEstimate mutual_info_duncan(const SignalPrior& prior, double rho,
                                     const McConfig& mc) {
  const McEstimate m = causal_stats(prior, rho, mc).mmse_c;
  return {0.5 * rho * rho * m.value, 0.5 * rho * rho * m.se};
}

namespace detail {

inline IdentityReport base_report(std::string name, const SignalPrior& prior, double rho,
                                  const McConfig& mc) {
  IdentityReport r;
  r.name = std::move(name);
  r.rho = rho;
  r.n = dimension(prior);
  r.samples = mc.samples;
  r.seed = mc.seed;
  return r;
}

inline void finish_two_sided(IdentityReport& r, double tolerance, std::string rule) {
  r.residual = r.lhs - r.rhs;
  r.tolerance = tolerance;
  r.rule = std::move(rule);
  r.pass = std::abs(r.residual) <= tolerance;
}

inline void finish_one_sided(IdentityReport& r, double tolerance, std::string rule) {
  r.residual = r.lhs - r.rhs;
  r.tolerance = tolerance;
  r.rule = std::move(rule);
  r.pass = r.residual <= tolerance;
}

}  // namespace detail

// GSV / I-MMSE derivative form (central difference of I over rho against
// rho * mmse_nc, common random numbers).
inline IdentityReport gsv_derivative_check(const SignalPrior& prior, double rho,
                                           const McConfig& mc, const Tolerances& tol,
                                           double fd_step = 0.0) {
  if (fd_step <= 0.0) fd_step = default_fd_step(rho);
  IdentityReport r = detail::base_report("eq5.0_gsv_derivative", prior, rho, mc);
  if (rho - fd_step <= 0.0) {
    r.note = "near-singular: rho <= fd_step; check suppressed";
    r.rule = "suppressed";
    r.pass = true;
    return r;
  }
  const double energy = prior_moments(prior).energy;
  auto batches = detail::joint_pass(prior, rho, fd_step, mc, "gsv");
  auto fd = detail::collect(batches, [&](const detail::JointBatch& b) {
    return rho * energy - (b.log_up - b.log_dn) / (2.0 * fd_step);
  });
  auto rhs = detail::collect(batches,
                             [&](const detail::JointBatch& b) { return rho * b.err2; });
  auto res = detail::collect(batches, [&](const detail::JointBatch& b) {
    return rho * energy - (b.log_up - b.log_dn) / (2.0 * fd_step) - rho * b.err2;
  });
  r.lhs = fd.value;
  r.rhs = rhs.value;
  r.se_lhs = fd.se;
  r.se_rhs = rhs.se;
  const double fd_allow = tol.fd_curvature * fd_step * fd_step;
  detail::finish_two_sided(r, tol.sigma_mult * res.se + fd_allow,
                           "|res| <= 4*se(paired) + fd");
  r.residual = res.value;
  r.pass = std::abs(res.value) <= r.tolerance;
  return r;
}

// Extended de Bruijn (rho-parametrized): d/drho E1 log ell vs rho E1|xbar|^2
// vs (1/rho) E1 |grad log ell|^2. The last two coincide per-sample through
// the gradient identity; the finite difference is the independent route.
inline IdentityReport debruijn_check(const SignalPrior& prior, double rho,
                                     const McConfig& mc, const Tolerances& tol,
                                     double fd_step = 0.0) {
  if (fd_step <= 0.0) fd_step = default_fd_step(rho);
  IdentityReport r = detail::base_report("eq6.3_debruijn_extended", prior, rho, mc);
  if (rho < 10.0 * fd_step) {
    r.note = "near-singular: rho < 10*fd_step; derivative check suppressed";
    r.rule = "suppressed";
    r.pass = true;
    return r;
  }
  auto batches = detail::joint_pass(prior, rho, fd_step, mc, "debruijn");
  auto fd = detail::collect(batches, [&](const detail::JointBatch& b) {
    return (b.log_up - b.log_dn) / (2.0 * fd_step);
  });
  auto route_b =
      detail::collect(batches, [&](const detail::JointBatch& b) { return rho * b.xbar2; });
  auto route_c = detail::collect(
      batches, [&](const detail::JointBatch& b) { return b.grad2 / rho; });
  auto res = detail::collect(batches, [&](const detail::JointBatch& b) {
    return (b.log_up - b.log_dn) / (2.0 * fd_step) - rho * b.xbar2;
  });
  r.lhs = fd.value;
  r.rhs = route_b.value;
  r.se_lhs = fd.se;
  r.se_rhs = route_b.se;
  const double fd_allow = tol.fd_curvature * fd_step * fd_step;
  r.tolerance = tol.sigma_mult * res.se + fd_allow;
  r.residual = res.value;
  r.pass = std::abs(res.value) <= r.tolerance &&
           std::abs(route_b.value - route_c.value) <=
               tol.analytic_tight * std::max(1.0, std::abs(route_b.value));
  r.rule = "|res| <= 4*se(paired) + fd; B == C tight";
  return r;
}

// Eq 4.8 / 6.4 averaged under the observation law:
//   E1 trace hess log ell = rho^2 (E|x|^2 - E1|xbar|^2) = rho^2 E|x|^2 - E1|grad|^2.
inline IdentityReport trace_identity_check(const SignalPrior& prior, double rho,
                                           const McConfig& mc, const Tolerances& tol) {
  const double energy = prior_moments(prior).energy;
  IdentityReport r = detail::base_report("eq4.8_trace_mean", prior, rho, mc);
  auto batches = detail::joint_pass(prior, rho, 0.0, mc, "trace_mean");
  auto lhs = detail::collect(batches, [](const detail::JointBatch& b) { return b.trace; });
  auto rhs = detail::collect(batches, [&](const detail::JointBatch& b) {
    return rho * rho * (energy - b.xbar2);
  });
  auto res = detail::collect(batches, [&](const detail::JointBatch& b) {
    return b.trace - rho * rho * (energy - b.xbar2);
  });
  auto res2 = detail::collect(batches, [&](const detail::JointBatch& b) {
    return b.trace - (rho * rho * energy - b.grad2);
  });
  r.lhs = lhs.value;
  r.rhs = rhs.value;
  r.se_lhs = lhs.se;
  r.se_rhs = rhs.se;
  r.residual = res.value;
  r.tolerance = tol.sigma_mult * std::max(res.se, res2.se) + 1e-12;
  r.pass = std::abs(res.value) <= r.tolerance && std::abs(res2.value) <= r.tolerance;
  r.rule = "|res| <= 4*se(paired), both alternate routes";
  return r;
}

// Restricted log-Sobolev gap: (1/2) E1|grad log ell|^2 - E1 log ell >= 0.
inline IdentityReport lsi_gap(const SignalPrior& prior, double rho, const McConfig& mc,
                              const Tolerances& tol) {
  IdentityReport r = detail::base_report("new7.7_lsi_gap", prior, rho, mc);
  auto batches = detail::joint_pass(prior, rho, 0.0, mc, "lsi");
  auto lhs = detail::collect(batches,
                             [](const detail::JointBatch& b) { return 0.5 * b.grad2; });
  auto rel = detail::collect(batches, [](const detail::JointBatch& b) { return b.log_ell; });
  auto gap = detail::collect(batches, [](const detail::JointBatch& b) {
    return 0.5 * b.grad2 - b.log_ell;
  });
  r.lhs = rel.value;   // E1 log ell
  r.rhs = lhs.value;   // (1/2) E1 |grad log ell|^2
  r.se_lhs = rel.se;
  r.se_rhs = lhs.se;
  r.residual = -gap.value;  // lhs - rhs
  r.tolerance = tol.sigma_mult * gap.se;
  r.pass = gap.value >= -r.tolerance;
  r.rule = "gap >= -4*se(paired)";
  r.note = "gap = " + std::to_string(gap.value);
  return r;
}

// Causal-projection inequality E|xhat|^2 <= E|xbar|^2 (new7.6), paired pass.
inline IdentityReport causal_vs_noncausal_check(const SignalPrior& prior, double rho,
                                                const McConfig& mc, const Tolerances& tol) {
  const int dim = dimension(prior);
  const Basis basis(dim, 1.0);
  const std::int64_t bs = mc.batch_size();
  struct Acc {
    double xhat2 = 0.0, xbar2 = 0.0;
  };
  auto batches = run_batches<Acc>(mc, "proj_ineq", [&](int, std::mt19937_64& eng) {
    Acc acc;
    for (std::int64_t j = 0; j < bs; ++j) {
      const HVector x = sample_signal(prior, eng);
      const Observation y = channel(x, sample_noise(basis, eng), rho);
      const FilterTrajectory tr = causal_filter(prior, y);
      const HVector xbar = noncausal_estimate(prior, y);
      for (std::size_t i = 0; i < x.size(); ++i) {
        acc.xhat2 += tr.predictable[i] * tr.predictable[i];
        acc.xbar2 += xbar[i] * xbar[i];
      }
    }
    acc.xhat2 /= static_cast<double>(bs);
    acc.xbar2 /= static_cast<double>(bs);
    return acc;
  });
  std::vector<double> xh(batches.size()), xb(batches.size()), d(batches.size());
  for (std::size_t b = 0; b < batches.size(); ++b) {
    xh[b] = batches[b].xhat2;
    xb[b] = batches[b].xbar2;
    d[b] = batches[b].xhat2 - batches[b].xbar2;
  }
  const auto lhs = batch_mean_estimate(xh);
  const auto rhs = batch_mean_estimate(xb);
  const auto diff = batch_mean_estimate(d);
  IdentityReport r = detail::base_report("new7.6_projection_ineq", prior, rho, mc);
  r.lhs = lhs.value;
  r.rhs = rhs.value;
  r.se_lhs = lhs.se;
  r.se_rhs = rhs.se;
  detail::finish_one_sided(r, tol.sigma_mult * diff.se, "lhs <= rhs + 4*se(paired)");
  r.residual = diff.value;
  r.pass = diff.value <= r.tolerance;
  return r;
}

// Duncan's relation against the direct route, with the discretization
// allowance on top of the Monte-Carlo bars.
inline IdentityReport duncan_check(const SignalPrior& prior, double rho, const McConfig& mc,
                                   const Tolerances& tol) {
  IdentityReport r = detail::base_report("eq7.3_duncan", prior, rho, mc);
  const McEstimate direct = mutual_info_direct(prior, rho, mc);
  const McEstimate duncan = mutual_info_duncan(prior, rho, mc);
  r.lhs = direct.value;
  r.rhs = duncan.value;
  r.se_lhs = direct.se;
  r.se_rhs = duncan.se;
  const double allow = causal_discretization_allowance(
      rho, prior_moments(prior).energy, dimension(prior), tol.causal_safety);
  detail::finish_two_sided(r, tol.sigma_mult * combined_se(direct.se, duncan.se) + allow,
                           "|res| <= 4*se + C/n");
  return r;
}

// (i) E1 log ell = (rho^2/2) E|xhat|^2 (eq 7.4, continuum identity) and
// (ii) E1 log ell = (rho^2/2) E|x|^2 - I (eq 5.2, exact), with I estimated
// by the independent pathwise route.
inline std::vector<IdentityReport> relative_entropy_checks(const SignalPrior& prior,
                                                           double rho, const McConfig& mc,
                                                           const Tolerances& tol) {
  const double energy = prior_moments(prior).energy;
  std::vector<IdentityReport> out;

  const McEstimate rel = relative_entropy(prior, rho, mc);
  {
    IdentityReport r = detail::base_report("eq7.4_relent_causal", prior, rho, mc);
    const McEstimate xhat2 = causal_stats(prior, rho, mc).e_xhat2;
    r.lhs = rel.value;
    r.rhs = 0.5 * rho * rho * xhat2.value;
    r.se_lhs = rel.se;
    r.se_rhs = 0.5 * rho * rho * xhat2.se;
    const double allow = causal_discretization_allowance(rho, energy, dimension(prior),
                                                         tol.causal_safety);
    detail::finish_two_sided(
        r, tol.sigma_mult * combined_se(r.se_lhs, r.se_rhs) + allow, "|res| <= 4*se + C/n");
    out.push_back(std::move(r));
  }
  {
    IdentityReport r = detail::base_report("eq5.2_relent_direct", prior, rho, mc);
    const McEstimate mi = mutual_info_direct_pathwise(prior, rho, mc);
    r.lhs = rel.value;
    r.rhs = 0.5 * rho * rho * energy - mi.value;
    r.se_lhs = rel.se;
    r.se_rhs = mi.se;
    detail::finish_two_sided(r, tol.sigma_mult * combined_se(rel.se, mi.se),
                             "|res| <= 4*se");
    out.push_back(std::move(r));
  }
  return out;
}

// Per-sample number-operator identities over draws from the observation law:
//   L log ell = rho delta xbar          (differentiated eq 4.10)
//   tilde delta xbar = L ell / (rho ell)  (lemma 4.2)
// Both sides analytic; the report carries the maximum residual.
inline std::vector<IdentityReport> number_identity_check(const SignalPrior& prior,
                                                         double rho, int draws,
                                                         std::uint64_t seed,
                                                         const Tolerances& tol) {
  if (!(rho > 0.0))
    throw std::invalid_argument("number_identity_check: needs rho > 0");
  const int dim = dimension(prior);
  const Basis basis(dim, 1.0);
  auto eng = make_engine(seed, "number_identity", 0);
  const SmoothFunctional logell = log_likelihood_functional(prior, rho);
  const VectorField xbar_field = posterior_mean_field(prior, rho);
  const auto ev = likelihood_evaluator(prior, rho);
  double max_number = 0.0, max_tilde = 0.0;
  for (int s = 0; s < draws; ++s) {
    const HVector x = sample_signal(prior, eng);
    const Observation y = channel(x, sample_noise(basis, eng), rho);
    const double lhs1 = number_operator(logell, y.v);
    const double rhs1 = rho * divergence(xbar_field, y.v);
    max_number = std::max(max_number, std::abs(lhs1 - rhs1));
    const double lhs2 = tilde_divergence(xbar_field, ev, y.v);
    // L ell / (rho ell) = <v, xbar> - rho E[|x|^2 | Y]
    const HVector xb = noncausal_estimate(prior, y);
    const double rhs2 = pairing(y.v, xb) - rho * posterior_second_moment(prior, y);
    max_tilde = std::max(max_tilde, std::abs(lhs2 - rhs2));
  }
  std::vector<IdentityReport> out;
  {
    IdentityReport r;
    r.name = "eq4.10_number_operator";
    r.rho = rho;
    r.n = dim;
    r.samples = draws;
    r.seed = seed;
    r.lhs = max_number;
    r.rhs = 0.0;
    detail::finish_two_sided(r, tol.analytic_abs, "max |res| <= 1e-8");
    out.push_back(std::move(r));
  }
  {
    IdentityReport r;
    r.name = "lemma4.2_tilde_divergence";
    r.rho = rho;
    r.n = dim;
    r.samples = draws;
    r.seed = seed;
    r.lhs = max_tilde;
    r.rhs = 0.0;
    detail::finish_two_sided(r, tol.analytic_abs, "max |res| <= 1e-8");
    out.push_back(std::move(r));
  }
  return out;
}

// Classical one-dimensional de Bruijn identity for y = x + sqrt(t) w:
// the entropy derivative dH/dt against half the Fisher information of the
// output density, both by Gauss-Hermite quadrature (five-point stencil for
// the t-derivative).
inline IdentityReport classical_debruijn_1d(const AmplitudeLaw& law, double t, int order,
                                            const Tolerances& tol) {
  if (!(t > 0.0)) throw std::invalid_argument("classical_debruijn_1d: t must be > 0");
  const oracle::QuadratureRule rule = oracle::gauss_hermite(order);

  auto log_density = [&law](double y, double tt) {
    if (law.kind == AmplitudeLaw::Kind::Gaussian) {
      const double s2 = law.variance + tt;
      const double d = y - law.mean;
      return -0.5 * std::log(2.0 * M_PI * s2) - 0.5 * d * d / s2;
    }
    double m = -std::numeric_limits<double>::infinity();
    std::vector<double> e(law.values.size());
    for (std::size_t k = 0; k < law.values.size(); ++k) {
      const double d = y - law.values[k];
      e[k] = std::log(law.weights[k]) - 0.5 * d * d / tt;
      m = std::max(m, e[k]);
    }
    double s = 0.0;
    for (double v : e) s += std::exp(v - m);
    return m + std::log(s) - 0.5 * std::log(2.0 * M_PI * tt);
  };
  auto density_score = [&law](double y, double tt) {
    if (law.kind == AmplitudeLaw::Kind::Gaussian)
      return -(y - law.mean) / (law.variance + tt);
    double m = -std::numeric_limits<double>::infinity();
    std::vector<double> e(law.values.size());
    for (std::size_t k = 0; k < law.values.size(); ++k) {
      const double d = y - law.values[k];
      e[k] = std::log(law.weights[k]) - 0.5 * d * d / tt;
      m = std::max(m, e[k]);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < law.values.size(); ++k) {
      const double w = std::exp(e[k] - m);
      num += w * (-(y - law.values[k]) / tt);
      den += w;
    }
    return num / den;
  };
  // E log p_t(y) under y = A + sqrt(t) u.
  auto avg_log_density = [&](double tt) {
    const double sq = std::sqrt(tt);
    double acc = 0.0;
    auto add = [&](double amp, double pw) {
      for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        acc += pw * rule.weights[i] * log_density(amp + sq * rule.nodes[i], tt);
    };
    if (law.kind == AmplitudeLaw::Kind::Atoms) {
      for (std::size_t k = 0; k < law.values.size(); ++k) add(law.values[k], law.weights[k]);
    } else {
      const double sd = std::sqrt(law.variance);
      for (std::size_t j = 0; j < rule.nodes.size(); ++j)
        add(law.mean + sd * rule.nodes[j], rule.weights[j]);
    }
    return acc;
  };

  const double h = 0.01 * t;
  // Five-point first-derivative stencil; O(h^4) truncation.
  const double df = (avg_log_density(t - 2 * h) - 8.0 * avg_log_density(t - h) +
                     8.0 * avg_log_density(t + h) - avg_log_density(t + 2 * h)) /
                    (12.0 * h);
  const double entropy_rate = -df;

  double fisher = 0.0;
  {
    const double sq = std::sqrt(t);
    auto add = [&](double amp, double pw) {
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double sc = density_score(amp + sq * rule.nodes[i], t);
        fisher += pw * rule.weights[i] * sc * sc;
      }
    };
    if (law.kind == AmplitudeLaw::Kind::Atoms) {
      for (std::size_t k = 0; k < law.values.size(); ++k) add(law.values[k], law.weights[k]);
    } else {
      const double sd = std::sqrt(law.variance);
      for (std::size_t j = 0; j < rule.nodes.size(); ++j)
        add(law.mean + sd * rule.nodes[j], rule.weights[j]);
    }
  }

  IdentityReport r;
  r.name = "eq6.2_debruijn_classical";
  r.rho = 0.0;
  r.n = 1;
  r.samples = order;
  r.lhs = entropy_rate;
  r.rhs = 0.5 * fisher;
  detail::finish_two_sided(r, tol.fd_abs, "|res| <= 1e-4 (quadrature + fd)");
  r.note = "t = " + std::to_string(t);
  return r;
}

// ---------------------------------------------------------------------------
// Per-sample analytic rows of the battery (closed forms on both sides).

namespace detail {

struct SampleResiduals {
  double grad_analytic = 0.0;   // max_inf |grad log ell - rho xbar|
  double grad_fd = 0.0;         // max scaled FD deviation of the gradient
  double hess_fd = 0.0;         // max |analytic directional 2nd deriv - FD|
  double hess_routes = 0.0;     // max |two analytic routes of eq 4.5b|
  double trace_routes = 0.0;    // max |trace via eval - trace via moments|
  double recursion = 0.0;       // max analytic recursion residual
  double recursion_fd = 0.0;    // max FD-route recursion residual
  bool has_moment_rows = false; // enumerable prior
};

inline SampleResiduals per_sample_residuals(const SignalPrior& prior, double rho,
                                            int draws, std::uint64_t seed) {
  const int dim = dimension(prior);
  const Basis basis(dim, 1.0);
  auto eng = make_engine(seed, "per_sample", 0);
  const SmoothFunctional logell = log_likelihood_functional(prior, rho);
  SampleResiduals out;
  out.has_moment_rows = enumerable(prior);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int fd_every = std::max(1, draws / 8);  // FD columns are n evals each
  for (int s = 0; s < draws; ++s) {
    const HVector x = sample_signal(prior, eng);
    const Observation y = channel(x, sample_noise(basis, eng), rho);
    const LikelihoodEval e = eval_or_throw(prior, y);
    const HVector xbar = noncausal_estimate(prior, y);
    for (std::size_t i = 0; i < xbar.size(); ++i)
      out.grad_analytic =
          std::max(out.grad_analytic, std::abs(e.grad_log[i] - rho * xbar[i]));

    // random direction for the directional second derivative
    HVector h(static_cast<std::size_t>(dim));
    for (double& c : h) c = normal(eng);
    const double hn = h_norm(h);
    for (double& c : h) c /= hn;

    if (s % fd_every == 0) {
      const double step = 1e-5;
      const HVector g_fd = gradient_fd(logell, y.v, step);
      double scale = 1.0;
      for (double g : e.grad_log) scale = std::max(scale, std::abs(g));
      for (std::size_t i = 0; i < g_fd.size(); ++i)
        out.grad_fd = std::max(out.grad_fd, std::abs(g_fd[i] - e.grad_log[i]) / scale);

      // directional second derivative: FD of log ell along h
      const double eps = 1e-4;
      Observation up = y, dn = y;
      for (std::size_t i = 0; i < y.v.size(); ++i) {
        up.v[i] += eps * h[i];
        dn.v[i] -= eps * h[i];
      }
      const double second_fd = (eval_or_throw(prior, up).log_value -
                                2.0 * e.log_value + eval_or_throw(prior, dn).log_value) /
                               (eps * eps);
      double second_an;
      if (out.has_moment_rows) {
        const double m2 = conditional_moment(prior, y, {h, h});
        second_an = rho * rho * (m2 - h_inner(h, xbar) * h_inner(h, xbar));
        // second analytic route: quadratic form assembled from the weights
        const AtomicPrior atoms = enumerate_atoms(prior);
        const auto q = posterior_weights(prior, y);
        double first = 0.0, second = 0.0;
        for (std::size_t k = 0; k < atoms.atoms.size(); ++k) {
          const double ha = h_inner(h, atoms.atoms[k]);
          first += q[k] * ha;
          second += q[k] * ha * ha;
        }
        const double route2 = rho * rho * (second - first * first);
        out.hess_routes = std::max(out.hess_routes, std::abs(second_an - route2));
      } else if (const auto* sp = std::get_if<ScaledShapePrior>(&prior)) {
        // rank-one posterior covariance along the shape
        const double gain2 = rho * rho * h_norm2(sp->shape);
        const double cross = rho * pairing(y.v, sp->shape);
        const auto c = detail::conjugate_scalar(sp->amplitude.mean,
                                                sp->amplitude.variance, gain2, cross);
        const double hs = h_inner(h, sp->shape);
        second_an = rho * rho * c.post_var * hs * hs;
      } else {
        const PosteriorState st = posterior_state(prior, y);
        const auto& gp = std::get<GaussianParams>(st.state);
        double q = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) q += gp.variances[i] * h[i] * h[i];
        second_an = rho * rho * q;
      }
      out.hess_fd = std::max(out.hess_fd, std::abs(second_an - second_fd));
    }

    if (out.has_moment_rows) {
      // trace via the conditional-moment machinery vs the eval-internal route
      double m2sum = 0.0;
      for (int i = 0; i < dim; ++i) {
        const HVector ei = basis_vector(dim, i);
        m2sum += conditional_moment(prior, y, {ei, ei});
      }
      const double trace_moments = rho * rho * (m2sum - h_norm2(xbar));
      out.trace_routes =
          std::max(out.trace_routes, std::abs(trace_moments - e.trace_hess_log));

      // moment recursion with products of length 2 and 3
      std::vector<HVector> hs2 = {h, h};
      HVector h2(static_cast<std::size_t>(dim));
      for (double& c : h2) c = normal(eng);
      const double h2n = h_norm(h2);
      for (double& c : h2) c /= h2n;
      std::vector<HVector> hs3 = {h, h2, h};
      out.recursion = std::max(out.recursion, moment_recursion_residual(prior, y, hs2));
      out.recursion = std::max(out.recursion, moment_recursion_residual(prior, y, hs3));
      if (rho > 0.0 && s % fd_every == 0) {
        out.recursion_fd =
            std::max(out.recursion_fd, moment_recursion_residual_fd(prior, y, hs2, 1e-5));
        out.recursion_fd =
            std::max(out.recursion_fd, moment_recursion_residual_fd(prior, y, hs3, 1e-5));
      }
    }
  }
  return out;
}

inline IdentityReport max_residual_report(std::string name, double max_res, double tolerance,
                                          std::string rule, const SignalPrior& prior,
                                          double rho, int draws, std::uint64_t seed) {
  IdentityReport r;
  r.name = std::move(name);
  r.rho = rho;
  r.n = dimension(prior);
  r.samples = draws;
  r.seed = seed;
  r.lhs = max_res;
  r.rhs = 0.0;
  detail::finish_two_sided(r, tolerance, std::move(rule));
  return r;
}

}  // namespace detail

// The full per-rho identity battery. Requires a prior with a closed-form
// likelihood; the conditional-moment rows additionally require enumerability
// and are omitted otherwise.
inline std::vector<IdentityReport> run_identity_battery(const SignalPrior& prior, double rho,
                                                        const McConfig& mc,
                                                        const Tolerances& tol,
                                                        double fd_step = 0.0) {
  std::vector<IdentityReport> rows;
  const int sample_draws = 64;
  const std::uint64_t seed = mc.seed;
  const auto ps = detail::per_sample_residuals(prior, rho, sample_draws, seed);
  rows.push_back(detail::max_residual_report("eq4.4_gradient", ps.grad_analytic,
                                             tol.analytic_tight, "max |res| <= 1e-10",
                                             prior, rho, sample_draws, seed));
  rows.push_back(detail::max_residual_report("eq4.4_gradient_fd", ps.grad_fd, tol.fd_rel,
                                             "max rel fd dev <= 1e-5", prior, rho,
                                             sample_draws, seed));
  rows.push_back(detail::max_residual_report("eq4.5b_second_derivative_fd", ps.hess_fd,
                                             tol.fd_abs, "max |res| <= 1e-4", prior, rho,
                                             sample_draws, seed));
  if (ps.has_moment_rows) {
    rows.push_back(detail::max_residual_report("eq4.5b_second_derivative", ps.hess_routes,
                                               tol.analytic_tight, "max |res| <= 1e-10",
                                               prior, rho, sample_draws, seed));
    rows.push_back(detail::max_residual_report("eq4.8_trace_sample", ps.trace_routes,
                                               tol.analytic_tight, "max |res| <= 1e-10",
                                               prior, rho, sample_draws, seed));
    rows.push_back(detail::max_residual_report("eq4.7_moment_recursion", ps.recursion,
                                               tol.analytic_abs, "max |res| <= 1e-8", prior,
                                               rho, sample_draws, seed));
    if (rho > 0.0)
      rows.push_back(detail::max_residual_report("eq4.7_moment_recursion_fd",
                                                 ps.recursion_fd, tol.analytic_abs,
                                                 "max |res| <= 1e-8", prior, rho,
                                                 sample_draws, seed));
  }
  if (rho > 0.0) {
    auto number_rows = number_identity_check(prior, rho, sample_draws, seed, tol);
    rows.insert(rows.end(), number_rows.begin(), number_rows.end());
  }

  rows.push_back(trace_identity_check(prior, rho, mc, tol));
  rows.push_back(gsv_derivative_check(prior, rho, mc, tol, fd_step));
  auto rel_rows = relative_entropy_checks(prior, rho, mc, tol);
  rows.insert(rows.end(), rel_rows.begin(), rel_rows.end());
  rows.push_back(debruijn_check(prior, rho, mc, tol, fd_step));
  rows.push_back(duncan_check(prior, rho, mc, tol));
  rows.push_back(causal_vs_noncausal_check(prior, rho, mc, tol));
  rows.push_back(lsi_gap(prior, rho, mc, tol));

  if (const auto* s = std::get_if<ScaledShapePrior>(&prior))
    rows.push_back(classical_debruijn_1d(s->amplitude, 1.0, 64, tol));
  return rows;
}

// One SNR sweep row; the three information routes plus both error curves.
inline SnrCurve snr_sweep(const SignalPrior& prior, const std::vector<double>& rho_grid,
                          const McConfig& mc, const Tolerances& tol) {
  if (rho_grid.empty()) throw std::invalid_argument("snr_sweep: empty rho grid");
  SnrCurve curve;
  curve.points.resize(rho_grid.size());
  const double energy = prior_moments(prior).energy;
  const auto immse = mutual_info_immse(prior, rho_grid, mc, tol.max_grid_spacing);
  const auto mmse_points = mmse_grid(prior, rho_grid, mc);
  for (std::size_t i = 0; i < rho_grid.size(); ++i) {
    const double rho = rho_grid[i];
    SnrPoint& p = curve.points[i];
    p.rho = rho;
    auto batches = detail::joint_pass(prior, rho, 0.0, mc, "sweep");
    const auto rel =
        detail::collect(batches, [](const detail::JointBatch& b) { return b.log_ell; });
    p.rel_ent = rel;
    p.mi_direct = {0.5 * rho * rho * energy - rel.value, rel.se};
    p.mi_immse = immse[i];
    p.mmse_nc = mmse_points[i];
    const CausalStats cs = causal_stats(prior, rho, mc);
    p.mmse_c = cs.mmse_c;
    p.mi_duncan = {0.5 * rho * rho * cs.mmse_c.value, 0.5 * rho * rho * cs.mmse_c.se};
  }
  return curve;
}

}  // namespace infoest
