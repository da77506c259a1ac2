#ifndef SHIFTCAL_SYNTH_H_
#define SHIFTCAL_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "shiftcal/core.h"
#include "shiftcal/importance.h"

namespace shiftcal {

// Shape of the additive evaluation-time feature noise.
enum class NoiseKind {
  kGaussian,
  // Uniform on [-a, a] per coordinate with a = sqrt(3) * shift_std, so the
  // variance matches the Gaussian case.
  kUniform,
};

std::string to_string(NoiseKind kind);
NoiseKind noise_from_string(const std::string& name);

// Gaussian class-conditional mixture with uniform class prior.
//
// Each row draws y ~ U{0..K-1}, x ~ N(mean_y, within_class_std^2 I) and
// observes x' = x + noise(shift_std). The emitted logits are
// temperature_distortion * log p(y | x') under the noise-free mixture, i.e. a
// Bayes classifier that does not know about the shift.
//
// Random streams: labels, clean features and noise each come from their own
// stream of `seed`, and every row consumes a fixed number of draws from each.
// Two specs that differ only in shift_std therefore share labels and clean
// features row by row.
struct SynthSpec {
  std::size_t num_classes = 10;
  std::size_t dim = 8;
  std::vector<std::vector<double>> class_means;
  double within_class_std = 1.0;
  double shift_std = 0.0;
  NoiseKind noise = NoiseKind::kGaussian;
  double temperature_distortion = 1.0;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
};

struct SynthData {
  PredictionSet preds;
  // p(predicted class | x') under the shifted generative model.
  std::vector<double> true_confidence;
  // Observed features x'.
  FeatureSet features;
};

// K means in R^d with coordinates drawn i.i.d. N(0, separation^2 / (2d)), so the
// expected squared distance between two class means is separation^2.
std::vector<std::vector<double>> default_class_means(std::size_t num_classes, std::size_t dim,
                                                     double separation, std::uint64_t seed);

void validate(const SynthSpec& spec);

SynthData generate(const SynthSpec& spec);

}  // namespace shiftcal

#endif  // SHIFTCAL_SYNTH_H_
