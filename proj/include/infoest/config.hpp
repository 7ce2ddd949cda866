#pragma once

// Experiment configuration: one JSON file per experiment. Validation errors
// carry the offending field path so a bad config is diagnosable from the CLI
// exit message alone.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "infoest/identities.hpp"
#include "infoest/mc.hpp"
#include "infoest/prior.hpp"
#include "infoest/wiener.hpp"

namespace infoest {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  int schema_version = 1;
  Basis basis{64, 1.0};
  nlohmann::json prior_spec;  // kept so the prior can be rebuilt per basis
  std::vector<double> rho_grid;
  McConfig mc;
  double fd_step = 0.0;  // 0 -> default per rho
  Tolerances tol;
  std::string out_dir = "out";
  std::vector<int> n_list;       // convergence study
  double convergence_rho = 1.0;  // rho used by the convergence study
  bool seed_from_config = false;
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const std::string& key,
                                           const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw config_error(path + key + ": missing required field");
  return *it;
}

template <class T>
T field_as(const nlohmann::json& j, const std::string& key, const std::string& path) {
  const auto& v = require_field(j, key, path);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw config_error(path + key + ": wrong type");
  }
}

template <class T>
T field_or(const nlohmann::json& j, const std::string& key, const std::string& path,
           T fallback) {
  if (!j.contains(key)) return fallback;
  return field_as<T>(j, key, path);
}

inline HVector vector_field(const nlohmann::json& j, const std::string& key,
                            const std::string& path, int n) {
  auto v = field_as<std::vector<double>>(j, key, path);
  if (static_cast<int>(v.size()) != n)
    throw config_error(path + key + ": expected " + std::to_string(n) + " entries, got " +
                       std::to_string(v.size()));
  return v;
}

inline AmplitudeLaw amplitude_from_json(const nlohmann::json& j, const std::string& path) {
  const auto kind = field_as<std::string>(j, "kind", path);
  try {
    if (kind == "gaussian")
      return AmplitudeLaw::gaussian(field_or<double>(j, "mean", path, 0.0),
                                    field_as<double>(j, "var", path));
    if (kind == "atoms")
      return AmplitudeLaw::atoms(field_as<std::vector<double>>(j, "values", path),
                                 field_as<std::vector<double>>(j, "weights", path));
    if (kind == "pm1") return AmplitudeLaw::pm1();
  } catch (const std::invalid_argument& e) {
    throw config_error(path + ": " + e.what());
  }
  throw config_error(path + "kind: unknown amplitude kind '" + kind + "'");
}

}  // namespace detail

// Builds the prior described by `spec` on the given basis. Shape-based specs
// ("constant" or a derivative polyline) rebuild cleanly for any n; explicit
// coefficient lists are tied to their basis size.
inline SignalPrior build_prior(const nlohmann::json& spec, const Basis& basis) {
  using detail::field_as;
  const std::string path = "prior.";
  const auto kind = field_as<std::string>(spec, "kind", path);
  try {
    if (kind == "atomic") {
      const auto& atoms_json = detail::require_field(spec, "atoms", path);
      if (!atoms_json.is_array() || atoms_json.empty())
        throw config_error("prior.atoms: expected nonempty array");
      std::vector<HVector> atoms;
      std::vector<double> weights;
      for (std::size_t k = 0; k < atoms_json.size(); ++k) {
        const std::string apath = "prior.atoms[" + std::to_string(k) + "].";
        atoms.push_back(
            detail::vector_field(atoms_json[k], "coeffs", apath, basis.n));
        weights.push_back(field_as<double>(atoms_json[k], "weight", apath));
      }
      return make_atomic(std::move(atoms), std::move(weights));
    }
    if (kind == "gaussian_diagonal") {
      return make_gaussian_diagonal(
          detail::vector_field(spec, "mean", path, basis.n),
          detail::vector_field(spec, "variances", path, basis.n));
    }
    if (kind == "scaled_shape") {
      HVector shape;
      const auto& sj = detail::require_field(spec, "shape", path);
      if (sj.is_string() && sj.get<std::string>() == "constant")
        shape = constant_shape(basis);
      else if (sj.is_array()) {
        shape = sj.get<std::vector<double>>();
        if (static_cast<int>(shape.size()) != basis.n)
          throw config_error("prior.shape: expected " + std::to_string(basis.n) +
                             " coefficients");
      } else
        throw config_error("prior.shape: expected \"constant\" or a coefficient array");
      return make_scaled_shape(std::move(shape),
                               detail::amplitude_from_json(
                                   detail::require_field(spec, "amplitude", path),
                                   "prior.amplitude."));
    }
  } catch (const std::invalid_argument& e) {
    throw config_error(path + ": " + e.what());
  }
  throw config_error("prior.kind: unknown prior kind '" + kind + "'");
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::field_as;
  using detail::field_or;
  ExperimentConfig cfg;
  cfg.schema_version = field_or<int>(j, "schema_version", "", 1);
  if (cfg.schema_version != 1)
    throw config_error("schema_version: unsupported version " +
                       std::to_string(cfg.schema_version));

  const auto& basis = detail::require_field(j, "basis", "");
  const int n = field_as<int>(basis, "n", "basis.");
  const double T = field_or<double>(basis, "T", "basis.", 1.0);
  if (n < 1) throw config_error("basis.n: must be >= 1");
  if (!(T > 0.0)) throw config_error("basis.T: must be > 0");
  cfg.basis = Basis(n, T);

  cfg.prior_spec = detail::require_field(j, "prior", "");
  build_prior(cfg.prior_spec, cfg.basis);  // validate eagerly

  cfg.rho_grid = field_as<std::vector<double>>(j, "rho_grid", "");
  if (cfg.rho_grid.empty()) throw config_error("rho_grid: must be nonempty");
  for (std::size_t i = 0; i < cfg.rho_grid.size(); ++i) {
    if (cfg.rho_grid[i] < 0.0) throw config_error("rho_grid: entries must be >= 0");
    if (i > 0 && cfg.rho_grid[i] <= cfg.rho_grid[i - 1])
      throw config_error("rho_grid: must be strictly increasing");
  }

  if (j.contains("mc")) {
    const auto& mc = j["mc"];
    cfg.mc.samples = field_or<std::int64_t>(mc, "samples", "mc.", cfg.mc.samples);
    cfg.mc.batches = field_or<int>(mc, "batches", "mc.", cfg.mc.batches);
    if (mc.contains("seed")) {
      cfg.mc.seed = field_as<std::uint64_t>(mc, "seed", "mc.");
      cfg.seed_from_config = true;
    }
    try {
      cfg.mc.validate();
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what());
    }
  }

  cfg.fd_step = field_or<double>(j, "fd_step", "", 0.0);
  if (cfg.fd_step < 0.0) throw config_error("fd_step: must be >= 0");

  if (j.contains("tolerance")) {
    const auto& t = j["tolerance"];
    cfg.tol.sigma_mult = field_or<double>(t, "sigma_mult", "tolerance.", cfg.tol.sigma_mult);
    cfg.tol.analytic_abs =
        field_or<double>(t, "analytic_abs", "tolerance.", cfg.tol.analytic_abs);
    cfg.tol.analytic_tight =
        field_or<double>(t, "analytic_tight", "tolerance.", cfg.tol.analytic_tight);
    cfg.tol.fd_rel = field_or<double>(t, "fd_rel", "tolerance.", cfg.tol.fd_rel);
    cfg.tol.fd_abs = field_or<double>(t, "fd_abs", "tolerance.", cfg.tol.fd_abs);
    cfg.tol.causal_safety =
        field_or<double>(t, "causal_safety", "tolerance.", cfg.tol.causal_safety);
    cfg.tol.max_grid_spacing =
        field_or<double>(t, "max_grid_spacing", "tolerance.", cfg.tol.max_grid_spacing);
  }

  if (j.contains("output"))
    cfg.out_dir = field_or<std::string>(j["output"], "dir", "output.", cfg.out_dir);

  if (j.contains("convergence")) {
    const auto& c = j["convergence"];
    cfg.n_list = field_as<std::vector<int>>(c, "n_list", "convergence.");
    for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
      if (cfg.n_list[i] < 1) throw config_error("convergence.n_list: entries must be >= 1");
      if (i > 0 && cfg.n_list[i] <= cfg.n_list[i - 1])
        throw config_error("convergence.n_list: must be strictly increasing");
    }
    cfg.convergence_rho = field_or<double>(c, "rho", "convergence.", 1.0);
    if (!(cfg.convergence_rho > 0.0)) throw config_error("convergence.rho: must be > 0");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace infoest
