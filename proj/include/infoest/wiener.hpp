#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace infoest {

// Coefficient vector of a Cameron-Martin element in the fixed orthonormal
// step basis. |h|_H^2 is the plain sum of squared coefficients.
using HVector = std::vector<double>;

// Realization of the i.i.d. N(0,1) noise coordinates (the delta e_i).
using NoiseCoords = std::vector<double>;

// Orthonormal step basis on [0, T]: e_i'(t) = 1_{[(i-1)D, iD)}(t) / sqrt(D)
// with D = T/n. In these coordinates the H-inner product is the Euclidean
// one and the noise coordinates are exactly i.i.d. standard normal.
struct Basis {
  int n = 1;
  double horizon = 1.0;

  Basis() = default;
  Basis(int n_, double horizon_) : n(n_), horizon(horizon_) {
    if (n < 1) throw std::invalid_argument("Basis: n must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("Basis: T must be > 0");
  }

  double step() const { return horizon / static_cast<double>(n); }
};

// Channel output v = rho*a + z, carrying the SNR scale it was produced with.
struct Observation {
  std::vector<double> v;
  double rho = 0.0;
};

inline void check_same_size(std::size_t a, std::size_t b, const char* where) {
  if (a != b)
    throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
}

inline double h_inner(const HVector& a, const HVector& b) {
  check_same_size(a.size(), b.size(), "h_inner");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double h_norm2(const HVector& a) { return h_inner(a, a); }

inline double h_norm(const HVector& a) { return std::sqrt(h_norm2(a)); }

// <<w, h>>: the action of h on the path w (a stochastic integral when w is
// noise). For deterministic h this is the divergence delta h, distributed
// N(0, |h|_H^2) under the noise law.
inline double pairing(const std::vector<double>& w, const HVector& h) {
  check_same_size(w.size(), h.size(), "pairing");
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * h[i];
  return s;
}

inline NoiseCoords sample_noise(const Basis& basis, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  NoiseCoords z(static_cast<std::size_t>(basis.n));
  for (auto& zi : z) zi = normal(rng);
  return z;
}

inline Observation channel(const HVector& a, const NoiseCoords& z, double rho) {
  check_same_size(a.size(), z.size(), "channel");
  if (!(rho >= 0.0)) throw std::invalid_argument("channel: rho must be >= 0");
  Observation y;
  y.rho = rho;
  y.v.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) y.v[i] = rho * a[i] + z[i];
  return y;
}

// pi_theta: the resolution-of-identity projection. Keeps the first
// floor(theta*n) coordinates and zeroes the rest.
inline std::vector<double> truncate(const std::vector<double>& x, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0))
    throw std::invalid_argument("truncate: theta must be in [0,1]");
  auto keep = static_cast<std::size_t>(std::floor(theta * static_cast<double>(x.size())));
  std::vector<double> out(x);
  for (std::size_t i = keep; i < out.size(); ++i) out[i] = 0.0;
  return out;
}

inline Observation truncate(const Observation& y, double theta) {
  return Observation{truncate(y.v, theta), y.rho};
}

// Coefficients of the path with derivative x'(t): a_i = x'(t_{i-1}) * sqrt(D).
inline HVector coeffs_from_derivative(const Basis& basis,
                                      const std::function<double(double)>& xprime) {
  const double d = basis.step();
  const double sd = std::sqrt(d);
  HVector a(static_cast<std::size_t>(basis.n));
  for (int i = 0; i < basis.n; ++i) a[static_cast<std::size_t>(i)] = xprime(i * d) * sd;
  return a;
}

// Coefficients of x'(t) = 1 on [0, T]; |shape|_H^2 = T for every n.
inline HVector constant_shape(const Basis& basis) {
  return HVector(static_cast<std::size_t>(basis.n), std::sqrt(basis.step()));
}

inline HVector basis_vector(int n, int i) {
  HVector e(static_cast<std::size_t>(n), 0.0);
  e[static_cast<std::size_t>(i)] = 1.0;
  return e;
}

}  // namespace infoest
