#pragma once

// Machine-readable outputs. The CSV column sets are fixed and versioned; the
// JSON files mirror the CSV rows with run metadata. Numbers are printed with
// %.12g so identical runs produce identical bytes.

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "infoest/identities.hpp"

namespace infoest {

inline constexpr int kSchemaVersion = 1;

inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << contents;
}

inline std::string sweep_csv(const SnrCurve& curve) {
  std::string s =
      "schema_version,rho,I_direct,I_direct_se,I_immse,I_immse_se,I_duncan,I_duncan_se,"
      "mmse_nc,mmse_nc_se,mmse_c,mmse_c_se,relent,relent_se\n";
  for (const auto& p : curve.points) {
    s += std::to_string(kSchemaVersion);
    for (double x : {p.rho, p.mi_direct.value, p.mi_direct.se, p.mi_immse.value,
                     p.mi_immse.se, p.mi_duncan.value, p.mi_duncan.se, p.mmse_nc.value,
                     p.mmse_nc.se, p.mmse_c.value, p.mmse_c.se, p.rel_ent.value,
                     p.rel_ent.se})
      s += "," + format_double(x);
    s += "\n";
  }
  return s;
}

inline nlohmann::json sweep_json(const SnrCurve& curve, std::uint64_t seed) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : curve.points) {
    rows.push_back({{"rho", p.rho},
                    {"I_direct", p.mi_direct.value},
                    {"I_direct_se", p.mi_direct.se},
                    {"I_immse", p.mi_immse.value},
                    {"I_immse_se", p.mi_immse.se},
                    {"I_duncan", p.mi_duncan.value},
                    {"I_duncan_se", p.mi_duncan.se},
                    {"mmse_nc", p.mmse_nc.value},
                    {"mmse_nc_se", p.mmse_nc.se},
                    {"mmse_c", p.mmse_c.value},
                    {"mmse_c_se", p.mmse_c.se},
                    {"relent", p.rel_ent.value},
                    {"relent_se", p.rel_ent.se}});
  }
  return {{"schema_version", kSchemaVersion}, {"seed", seed}, {"rows", rows}};
}

inline std::string verify_csv(const std::vector<IdentityReport>& reports) {
  std::string s =
      "schema_version,identity,rho,n,N,lhs,rhs,stderr_lhs,stderr_rhs,residual,tolerance,"
      "pass\n";
  for (const auto& r : reports) {
    s += std::to_string(kSchemaVersion);
    s += "," + r.name;
    s += "," + format_double(r.rho);
    s += "," + std::to_string(r.n);
    s += "," + std::to_string(r.samples);
    for (double x : {r.lhs, r.rhs, r.se_lhs, r.se_rhs, r.residual, r.tolerance})
      s += "," + format_double(x);
    s += r.pass ? ",true" : ",false";
    s += "\n";
  }
  return s;
}

inline nlohmann::json verify_json(const std::vector<IdentityReport>& reports,
                                  std::uint64_t seed) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : reports) {
    rows.push_back({{"identity", r.name},
                    {"rho", r.rho},
                    {"n", r.n},
                    {"N", r.samples},
                    {"lhs", r.lhs},
                    {"rhs", r.rhs},
                    {"stderr_lhs", r.se_lhs},
                    {"stderr_rhs", r.se_rhs},
                    {"residual", r.residual},
                    {"tolerance", r.tolerance},
                    {"rule", r.rule},
                    {"note", r.note},
                    {"pass", r.pass}});
  }
  return {{"schema_version", kSchemaVersion}, {"seed", seed}, {"rows", rows}};
}

struct ConvergenceRow {
  int n = 0;
  IdentityReport duncan;
  IdentityReport relent_causal;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double fitted_order_duncan = 0.0;   // slope of log|residual| vs log n
  double fitted_order_relent = 0.0;
  bool has_fit = false;
};

inline std::string convergence_csv(const ConvergenceTable& table) {
  std::string s =
      "schema_version,identity,rho,n,N,lhs,rhs,stderr_lhs,stderr_rhs,residual,tolerance,"
      "pass\n";
  for (const auto& row : table.rows) {
    for (const IdentityReport* r : {&row.duncan, &row.relent_causal}) {
      s += std::to_string(kSchemaVersion);
      s += "," + r->name;
      s += "," + format_double(r->rho);
      s += "," + std::to_string(r->n);
      s += "," + std::to_string(r->samples);
      for (double x : {r->lhs, r->rhs, r->se_lhs, r->se_rhs, r->residual, r->tolerance})
        s += "," + format_double(x);
      s += r->pass ? ",true" : ",false";
      s += "\n";
    }
  }
  return s;
}

inline nlohmann::json convergence_json(const ConvergenceTable& table, std::uint64_t seed) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    rows.push_back({{"n", row.n},
                    {"duncan_residual", row.duncan.residual},
                    {"duncan_tolerance", row.duncan.tolerance},
                    {"relent_residual", row.relent_causal.residual},
                    {"relent_tolerance", row.relent_causal.tolerance}});
  }
  nlohmann::json j = {{"schema_version", kSchemaVersion}, {"seed", seed}, {"rows", rows}};
  if (table.has_fit) {
    j["fitted_order_duncan"] = table.fitted_order_duncan;
    j["fitted_order_relent"] = table.fitted_order_relent;
  }
  return j;
}

// Least-squares slope of log|residual| against log n; the empirical
// convergence order of the causal identities.
inline double fit_order(const std::vector<int>& ns, const std::vector<double>& residuals) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(std::abs(residuals[i]) > 0.0)) continue;
    const double x = std::log(static_cast<double>(ns[i]));
    const double y = std::log(std::abs(residuals[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return 0.0;
  return -(m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace infoest
