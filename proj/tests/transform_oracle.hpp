#ifndef WORKLOAD_TRANSFORM_ORACLE_HPP
#define WORKLOAD_TRANSFORM_ORACLE_HPP

// Direct per-channel convolution with explicit weight vectors, used to check the
// summed-channel shortcut in the library transform.

#include <random>
#include <vector>

#include "workload/profiler.hpp"

namespace workload::testing {

inline std::vector<double> direct_features(const Window& w, const KernelBank& bank) {
  std::vector<double> out;
  for (const auto& combo : bank.combinations) {
    const auto weights = kernel_weights(bank.kernels[combo.kernel]);
    const std::size_t d = combo.dilation;
    const std::size_t n = w.length - 8 * d;
    std::vector<double> conv(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      double acc = 0.0;
      for (std::size_t c : combo.channels) {
        for (std::size_t k = 0; k < 9; ++k) acc += weights[k] * w.at(c, t + k * d);
      }
      conv[t] = acc;
    }
    for (double bias : combo.biases) {
      std::size_t pos = 0;
      for (double v : conv) pos += v > bias;
      out.push_back(static_cast<double>(pos) / static_cast<double>(n));
    }
  }
  return out;
}

// Window of small dyadic values, so sums of weighted taps are exact.
inline Window dyadic_window(std::mt19937_64& rng, std::size_t q, std::size_t length) {
  Window w(q, length);
  std::uniform_int_distribution<int> d(-512, 512);
  for (double& v : w.values) v = d(rng) / 64.0;
  return w;
}

inline Window random_window(std::mt19937_64& rng, std::size_t q, std::size_t length) {
  Window w(q, length);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : w.values) v = n(rng);
  return w;
}

}  // namespace workload::testing

#endif  // WORKLOAD_TRANSFORM_ORACLE_HPP
