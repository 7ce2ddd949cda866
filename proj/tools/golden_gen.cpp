// Regenerates data/golden.json: scalar-channel reference values produced by
// the quadrature oracle at a pinned order. The test suite recomputes these
// and fails if the oracle ever drifts.

#include <fstream>
#include <iostream>

#include <json.hpp>

#include "infoest/oracle.hpp"

using namespace infoest;

int main(int argc, char** argv) {
  const std::string out = argc > 1 ? argv[1] : "data/golden.json";
  const int order = 128;  // self-validated against order 256 internally
  nlohmann::json records = nlohmann::json::array();
  for (const char* model : {"pm1_scalar", "gaussian_scalar"}) {
    for (double rho : {0.5, 1.0, 2.0}) {
      const AmplitudeLaw law = std::string(model) == "pm1_scalar"
                                   ? AmplitudeLaw::pm1()
                                   : AmplitudeLaw::gaussian(0.0, 1.0);
      const auto f = oracle::quadrature_scalar(law, rho, order);
      records.push_back({{"model", model},
                         {"rho", rho},
                         {"order", order},
                         {"method", "gauss-hermite"},
                         {"I", f.mi},
                         {"mmse", f.mmse},
                         {"relent", f.rel_ent},
                         {"e_xbar2", f.e_xbar2},
                         {"fisher", f.fisher}});
    }
  }
  nlohmann::json golden = {{"generator", "golden_gen"},
                           {"order", order},
                           {"records", records}};
  std::ofstream file(out);
  file << golden.dump(2) << "\n";
  std::cout << "wrote " << out << " (" << records.size() << " records)\n";
  return 0;
}
