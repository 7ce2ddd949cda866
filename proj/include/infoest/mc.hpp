#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <thread>
#include <vector>

#include "infoest/rng.hpp"

namespace infoest {

// Monte-Carlo budget. Estimates are reported with batch-means standard
// errors: the samples are split into `batches` independent streams and the
// spread of the per-batch means gives the error bar.
struct McConfig {
  std::int64_t samples = 100000;
  int batches = 50;
  std::uint64_t seed = 0;
  int threads = 1;  // performance knob only; results never depend on it

  void validate() const {
    if (batches < 2) throw std::invalid_argument("mc.batches: must be >= 2");
    if (samples < batches)
      throw std::invalid_argument("mc.samples: must be >= mc.batches");
    if (threads < 1) throw std::invalid_argument("mc.threads: must be >= 1");
  }

  std::int64_t batch_size() const { return samples / batches; }

  McConfig with_seed(std::uint64_t s) const {
    McConfig c = *this;
    c.seed = s;
    return c;
  }
};

struct McEstimate {
  double value = 0.0;
  double se = 0.0;
};

inline double combined_se(double a, double b) { return std::sqrt(a * a + b * b); }

// Runs fn(batch_index, engine) for every batch and returns the results in
// batch order. Batches may execute on several threads; each batch has its own
// deterministic engine and the caller reduces in index order, so the outcome
// is bit-identical for any thread count.
template <class R, class F>
std::vector<R> run_batches(const McConfig& mc, std::string_view label, F&& fn) {
  mc.validate();
  std::vector<R> out(static_cast<std::size_t>(mc.batches));
  auto work = [&](int b) {
    auto eng = make_engine(mc.seed, label, static_cast<std::uint64_t>(b));
    out[static_cast<std::size_t>(b)] = fn(b, eng);
  };
  const int workers = std::min(mc.threads, mc.batches);
  if (workers <= 1) {
    for (int b = 0; b < mc.batches; ++b) work(b);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const int b = next.fetch_add(1);
          if (b >= mc.batches) break;
          work(b);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

inline McEstimate batch_mean_estimate(const std::vector<double>& batch_means) {
  const auto bcount = batch_means.size();
  if (bcount < 2) throw std::invalid_argument("batch_mean_estimate: need >= 2 batches");
  double mean = 0.0;
  for (double m : batch_means) mean += m;
  mean /= static_cast<double>(bcount);
  double ss = 0.0;
  for (double m : batch_means) ss += (m - mean) * (m - mean);
  const double var_of_mean = ss / static_cast<double>(bcount - 1) / static_cast<double>(bcount);
  return {mean, std::sqrt(var_of_mean)};
}

// Batch-means estimate of E[g] where per_draw(engine) samples one g value.
template <class G>
McEstimate mc_mean(const McConfig& mc, std::string_view label, G&& per_draw) {
  const std::int64_t bs = mc.batch_size();
  auto means = run_batches<double>(mc, label, [&](int, std::mt19937_64& eng) {
    double s = 0.0;
    for (std::int64_t i = 0; i < bs; ++i) s += per_draw(eng);
    return s / static_cast<double>(bs);
  });
  return batch_mean_estimate(means);
}

}  // namespace infoest
