#ifndef SHIFTCAL_TESTS_FIXTURES_H_
#define SHIFTCAL_TESTS_FIXTURES_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "shiftcal/core.h"

namespace shiftcal::testing {

// Calibrated-by-construction data: p = softmax(random scores), y ~ p, and the
// emitted logits are T0 * log p. Temperature scaling should recover T0.
inline PredictionSet calibrated_logits(std::size_t n, std::size_t k, double t0,
                                       std::uint64_t seed, double score_scale = 2.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, score_scale);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::optional<int>> labels(n);
  std::vector<double> logits(n * k);
  std::vector<double> scores(k);
  for (std::size_t i = 0; i < n; ++i) {
    double top = -INFINITY;
    for (double& s : scores) {
      s = z(gen);
      top = std::max(top, s);
    }
    double total = 0.0;
    for (double s : scores) total += std::exp(s - top);
    const double lse = top + std::log(total);
    const double draw = u(gen);
    double cum = 0.0;
    std::optional<std::size_t> label;
    for (std::size_t c = 0; c < k; ++c) {
      const double logp = scores[c] - lse;
      logits[i * k + c] = t0 * logp;
      cum += std::exp(logp);
      if (!label && draw < cum) label = c;
    }
    labels[i] = static_cast<int>(label.value_or(k - 1));
  }
  return PredictionSet(k, std::move(labels), std::move(logits));
}

}  // namespace shiftcal::testing

#endif  // SHIFTCAL_TESTS_FIXTURES_H_
