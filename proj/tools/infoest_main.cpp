// Reproducible experiment runner around the identity suite: configure a
// prior, basis and rho grid in a JSON file, then
//   infoest sweep       -- SNR sweep, writes sweep.csv / sweep.json
//   infoest verify      -- identity battery, writes verify.csv / verify.json
//   infoest convergence -- causal residuals over an n list
// Exit codes: 0 ok, 1 identity failure (verify), 2 bad config, 3 compute error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "infoest/infoest.hpp"

namespace {

using namespace infoest;

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int threads = 1;
};

std::uint64_t resolve_seed(const ExperimentConfig& cfg, const CliOptions& opt) {
  if (opt.seed) return *opt.seed;
  if (cfg.seed_from_config) return cfg.mc.seed;
  if (const char* env = std::getenv("INFOEST_SEED")) return std::strtoull(env, nullptr, 10);
  return 12345;
}

ExperimentConfig prepare(const CliOptions& opt) {
  ExperimentConfig cfg = load_config(opt.config_path);
  cfg.mc.seed = resolve_seed(cfg, opt);
  cfg.mc.threads = opt.threads;
  if (opt.out_dir) cfg.out_dir = *opt.out_dir;
  std::filesystem::create_directories(cfg.out_dir);
  return cfg;
}

int run_sweep(const CliOptions& opt) {
  const ExperimentConfig cfg = prepare(opt);
  const SignalPrior prior = build_prior(cfg.prior_spec, cfg.basis);
  const SnrCurve curve = snr_sweep(prior, cfg.rho_grid, cfg.mc, cfg.tol);
  write_file(cfg.out_dir + "/sweep.csv", sweep_csv(curve));
  write_file(cfg.out_dir + "/sweep.json", sweep_json(curve, cfg.mc.seed).dump(2) + "\n");
  std::cout << "sweep: " << curve.points.size() << " rho points -> " << cfg.out_dir
            << "/sweep.csv\n";
  return 0;
}

int run_verify(const CliOptions& opt) {
  const ExperimentConfig cfg = prepare(opt);
  const SignalPrior prior = build_prior(cfg.prior_spec, cfg.basis);
  std::vector<IdentityReport> reports;
  for (double rho : cfg.rho_grid) {
    auto rows = run_identity_battery(prior, rho, cfg.mc, cfg.tol, cfg.fd_step);
    reports.insert(reports.end(), rows.begin(), rows.end());
  }
  write_file(cfg.out_dir + "/verify.csv", verify_csv(reports));
  write_file(cfg.out_dir + "/verify.json",
             verify_json(reports, cfg.mc.seed).dump(2) + "\n");
  int failures = 0;
  for (const auto& r : reports)
    if (!r.pass) ++failures;
  std::cout << "verify: " << reports.size() << " checks, " << failures << " failed -> "
            << cfg.out_dir << "/verify.csv\n";
  return failures == 0 ? 0 : 1;
}

int run_convergence(const CliOptions& opt) {
  const ExperimentConfig cfg = prepare(opt);
  if (cfg.n_list.empty())
    throw config_error("convergence.n_list: required for the convergence command");
  // Only shape-parametric priors rebuild cleanly across n.
  if (!(cfg.prior_spec.contains("kind") && cfg.prior_spec["kind"] == "scaled_shape" &&
        cfg.prior_spec.contains("shape") && cfg.prior_spec["shape"].is_string()))
    throw config_error(
        "prior: convergence study needs a scaled_shape prior with shape \"constant\"");
  ConvergenceTable table;
  const double rho = cfg.convergence_rho;
  std::vector<double> duncan_res, relent_res;
  for (int n : cfg.n_list) {
    const Basis basis(n, cfg.basis.horizon);
    const SignalPrior prior = build_prior(cfg.prior_spec, basis);
    ConvergenceRow row;
    row.n = n;
    row.duncan = duncan_check(prior, rho, cfg.mc, cfg.tol);
    auto rel = relative_entropy_checks(prior, rho, cfg.mc, cfg.tol);
    row.relent_causal = rel.front();
    duncan_res.push_back(row.duncan.residual);
    relent_res.push_back(row.relent_causal.residual);
    table.rows.push_back(std::move(row));
  }
  if (cfg.n_list.size() >= 2) {
    table.has_fit = true;
    table.fitted_order_duncan = fit_order(cfg.n_list, duncan_res);
    table.fitted_order_relent = fit_order(cfg.n_list, relent_res);
  }
  write_file(cfg.out_dir + "/convergence.csv", convergence_csv(table));
  write_file(cfg.out_dir + "/convergence.json",
             convergence_json(table, cfg.mc.seed).dump(2) + "\n");
  std::cout << "convergence: " << table.rows.size() << " n points -> " << cfg.out_dir
            << "/convergence.csv";
  if (table.has_fit)
    std::cout << " (fitted order duncan " << table.fitted_order_duncan << ", relent "
              << table.fitted_order_relent << ")";
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo verification of information-estimation identities on the "
               "additive Gaussian channel"};
  app.require_subcommand(1);

  CliOptions opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", opt.seed, "override the config seed");
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--threads", opt.threads, "worker threads (results are unaffected)")
        ->check(CLI::PositiveNumber);
  };
  auto* sweep = app.add_subcommand("sweep", "SNR sweep over the rho grid");
  auto* verify = app.add_subcommand("verify", "run the identity battery");
  auto* convergence =
      app.add_subcommand("convergence", "causal-identity residuals over an n list");
  add_common(sweep);
  add_common(verify);
  add_common(convergence);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sweep->parsed()) return run_sweep(opt);
    if (verify->parsed()) return run_verify(opt);
    return run_convergence(opt);
  } catch (const infoest::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "compute error: " << e.what() << "\n";
    return 3;
  }
}
