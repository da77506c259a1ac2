#include "shiftcal/synth.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shiftcal/random.h"

namespace shiftcal {

std::string to_string(NoiseKind kind) {
  return kind == NoiseKind::kGaussian ? "gaussian" : "uniform";
}

NoiseKind noise_from_string(const std::string& name) {
  if (name == "gaussian") return NoiseKind::kGaussian;
  if (name == "uniform") return NoiseKind::kUniform;
  throw ValidationError("unknown noise type \"" + name + "\" (supported: gaussian, uniform)");
}

std::vector<std::vector<double>> default_class_means(std::size_t num_classes, std::size_t dim,
                                                     double separation, std::uint64_t seed) {
  if (num_classes < 2 || dim < 1) {
    throw ValidationError("class means need at least 2 classes and 1 dimension");
  }
  if (!(separation > 0.0) || !std::isfinite(separation)) {
    throw ValidationError("class separation must be positive");
  }
  Rng rng(seed, Stream::kClassMeans);
  const double sd = separation / std::sqrt(2.0 * static_cast<double>(dim));
  std::vector<std::vector<double>> means(num_classes, std::vector<double>(dim));
  for (auto& mean : means) {
    for (double& v : mean) v = sd * rng.normal();
  }
  return means;
}

void validate(const SynthSpec& spec) {
  if (spec.num_classes < 2) throw ValidationError("synth: need at least 2 classes");
  if (spec.dim < 1) throw ValidationError("synth: dimension must be >= 1");
  if (spec.n < 1) throw ValidationError("synth: sample count must be >= 1");
  if (spec.class_means.size() != spec.num_classes) {
    throw ValidationError("synth: expected " + std::to_string(spec.num_classes) +
                          " class means, got " + std::to_string(spec.class_means.size()));
  }
  for (const auto& mean : spec.class_means) {
    if (mean.size() != spec.dim) {
      throw ValidationError("synth: class mean has dimension " + std::to_string(mean.size()) +
                            ", expected " + std::to_string(spec.dim));
    }
  }
  if (!(spec.within_class_std > 0.0) || !std::isfinite(spec.within_class_std)) {
    throw ValidationError("synth: within-class std must be positive");
  }
  if (!(spec.shift_std >= 0.0) || !std::isfinite(spec.shift_std)) {
    throw ValidationError("synth: shift std must be non-negative");
  }
  if (!(spec.temperature_distortion > 0.0) || !std::isfinite(spec.temperature_distortion)) {
    throw ValidationError("synth: temperature distortion must be positive");
  }
}

namespace {

// Upper normal tail probability.
double upper_tail(double t) { return 0.5 * std::erfc(t / std::numbers::sqrt2); }

// log of the density, up to a class-independent constant, of N(0, s^2) + U(-a, a)
// at offset z: log(Phi((z + a) / s) - Phi((z - a) / s)).
double log_uniform_convolution(double z, double s, double a) {
  const double t = std::abs(z);
  const double mass = upper_tail((t - a) / s) - upper_tail((t + a) / s);
  return std::log(std::max(mass, 1e-300));
}

void log_softmax_inplace(std::vector<double>& v) {
  const double top = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double x : v) total += std::exp(x - top);
  const double lse = top + std::log(total);
  for (double& x : v) x -= lse;
}

}  // namespace

SynthData generate(const SynthSpec& spec) {
  validate(spec);
  const std::size_t k = spec.num_classes;
  const std::size_t d = spec.dim;
  const double s = spec.within_class_std;
  const double sigma = spec.shift_std;
  const double half_width = std::sqrt(3.0) * sigma;
  // Uniform noise much narrower than s is indistinguishable from Gaussian noise
  // of equal variance, and the tail difference would cancel catastrophically.
  const bool uniform_truth = spec.noise == NoiseKind::kUniform && half_width > 1e-3 * s;

  Rng label_rng(spec.seed, Stream::kLabels);
  Rng feature_rng(spec.seed, Stream::kFeatures);
  Rng noise_rng(spec.seed, Stream::kNoise);

  std::vector<std::optional<int>> labels(spec.n);
  std::vector<double> logits(spec.n * k);
  std::vector<double> truth(spec.n);
  std::vector<double> observed(spec.n * d);

  std::vector<double> x(d);
  std::vector<double> model_scores(k);
  std::vector<double> shifted_scores(k);
  const double model_var = s * s;
  const double shifted_var = s * s + sigma * sigma;

  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto y = static_cast<std::size_t>(label_rng.uniform_index(k));
    labels[i] = static_cast<int>(y);
    for (std::size_t c = 0; c < d; ++c) {
      x[c] = spec.class_means[y][c] + s * feature_rng.normal();
    }
    for (std::size_t c = 0; c < d; ++c) {
      const double e = spec.noise == NoiseKind::kGaussian
                           ? sigma * noise_rng.normal()
                           : half_width * (2.0 * noise_rng.uniform() - 1.0);
      x[c] += e;
      observed[i * d + c] = x[c];
    }

    for (std::size_t j = 0; j < k; ++j) {
      double sq = 0.0;
      double uniform_log = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double z = x[c] - spec.class_means[j][c];
        sq += z * z;
        if (uniform_truth) uniform_log += log_uniform_convolution(z, s, half_width);
      }
      model_scores[j] = -sq / (2.0 * model_var);
      shifted_scores[j] = uniform_truth ? uniform_log : -sq / (2.0 * shifted_var);
    }
    log_softmax_inplace(model_scores);
    log_softmax_inplace(shifted_scores);
    for (std::size_t j = 0; j < k; ++j) {
      logits[i * k + j] = spec.temperature_distortion * model_scores[j];
    }
    const std::size_t predicted = argmax(std::span<const double>(logits.data() + i * k, k));
    truth[i] = std::exp(shifted_scores[predicted]);
  }

  return SynthData{PredictionSet(k, std::move(labels), std::move(logits)), std::move(truth),
                   FeatureSet(d, std::move(observed))};
}

}  // namespace shiftcal
