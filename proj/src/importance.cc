#include "shiftcal/importance.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shiftcal/scaling.h"

namespace shiftcal {

FeatureSet::FeatureSet(std::size_t dim, std::vector<double> values)
    : dim_(dim), values_(std::move(values)) {
  if (dim_ == 0) throw ValidationError("feature set needs dimension >= 1");
  if (values_.size() % dim_ != 0) {
    throw ValidationError("feature set: " + std::to_string(values_.size()) +
                          " values is not a multiple of dimension " + std::to_string(dim_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ValidationError("feature set: row " + std::to_string(i / dim_) +
                            " has a non-finite value");
    }
  }
}

double Discriminator::log_odds(std::span<const double> x) const {
  double s = intercept;
  for (std::size_t c = 0; c < coefficients.size(); ++c) {
    s += coefficients[c] * (x[c] - mean[c]) / scale[c];
  }
  return s;
}

namespace {

// log(1 + e^s) without overflow.
double softplus(double s) {
  return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

struct Problem {
  std::size_t dim;
  // Standardized rows, source first then target.
  std::vector<double> x;
  std::vector<double> y;
  double l2;

  std::size_t size() const { return y.size(); }

  double loss(const std::vector<double>& beta, double b) const {
    CompensatedSum sum;
    for (std::size_t i = 0; i < size(); ++i) {
      const double s = score(beta, b, i);
      sum.add(softplus(s) - y[i] * s);
    }
    double penalty = 0.0;
    for (double v : beta) penalty += v * v;
    return sum.value() / static_cast<double>(size()) + 0.5 * l2 * penalty;
  }

  double score(const std::vector<double>& beta, double b, std::size_t i) const {
    double s = b;
    for (std::size_t c = 0; c < dim; ++c) s += beta[c] * x[i * dim + c];
    return s;
  }

  // Fills the gradient (coefficients then intercept) and returns its norm.
  double gradient(const std::vector<double>& beta, double b, std::vector<double>& grad) const {
    std::vector<CompensatedSum> acc(dim + 1);
    for (std::size_t i = 0; i < size(); ++i) {
      const double r = sigmoid(score(beta, b, i)) - y[i];
      for (std::size_t c = 0; c < dim; ++c) acc[c].add(r * x[i * dim + c]);
      acc[dim].add(r);
    }
    double norm2 = 0.0;
    for (std::size_t c = 0; c <= dim; ++c) {
      grad[c] = acc[c].value() / static_cast<double>(size());
      if (c < dim) grad[c] += l2 * beta[c];
      norm2 += grad[c] * grad[c];
    }
    return std::sqrt(norm2);
  }
};

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

Discriminator train_discriminator(const FeatureSet& source, const FeatureSet& target,
                                  const DiscriminatorOptions& options) {
  if (source.dim() != target.dim()) {
    throw ValidationError("source features have dimension " + std::to_string(source.dim()) +
                          ", target features " + std::to_string(target.dim()));
  }
  if (source.size() == 0 || target.size() == 0) {
    throw ValidationError("domain classifier needs non-empty source and target features");
  }
  const std::size_t d = source.dim();
  const std::size_t n = source.size() + target.size();

  Discriminator model;
  model.mean.assign(d, 0.0);
  model.scale.assign(d, 1.0);
  for (std::size_t c = 0; c < d; ++c) {
    CompensatedSum sum, sq;
    for (const auto* set : {&source, &target}) {
      for (std::size_t i = 0; i < set->size(); ++i) sum.add(set->row(i)[c]);
    }
    const double mu = sum.value() / static_cast<double>(n);
    for (const auto* set : {&source, &target}) {
      for (std::size_t i = 0; i < set->size(); ++i) {
        const double dv = set->row(i)[c] - mu;
        sq.add(dv * dv);
      }
    }
    const double sd = std::sqrt(sq.value() / static_cast<double>(n));
    model.mean[c] = mu;
    model.scale[c] = sd > 0.0 ? sd : 1.0;
  }

  Problem p{d, {}, {}, options.l2};
  p.x.reserve(n * d);
  p.y.reserve(n);
  for (const auto* set : {&source, &target}) {
    const double label = set == &source ? 0.0 : 1.0;
    for (std::size_t i = 0; i < set->size(); ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        p.x.push_back((set->row(i)[c] - model.mean[c]) / model.scale[c]);
      }
      p.y.push_back(label);
    }
  }

  std::vector<double> beta(d, 0.0);
  double b = 0.0;
  std::vector<double> grad(d + 1);
  std::vector<double> trial(d);
  double loss = p.loss(beta, b);
  double step = 1.0;
  int iter = 0;
  double gnorm = p.gradient(beta, b, grad);
  for (; iter < options.max_iterations && gnorm >= options.gradient_tolerance; ++iter) {
    // Armijo backtracking, restarting from twice the last accepted step.
    step = std::min(step * 2.0, 1e3);
    double trial_b = 0.0;
    double trial_loss = 0.0;
    for (int halvings = 0; halvings < 60; ++halvings) {
      for (std::size_t c = 0; c < d; ++c) trial[c] = beta[c] - step * grad[c];
      trial_b = b - step * grad[d];
      trial_loss = p.loss(trial, trial_b);
      if (trial_loss <= loss - 0.5 * step * gnorm * gnorm) break;
      step *= 0.5;
    }
    if (!(trial_loss < loss)) break;
    beta = trial;
    b = trial_b;
    loss = trial_loss;
    gnorm = p.gradient(beta, b, grad);
  }

  model.coefficients = std::move(beta);
  model.intercept = b;
  model.iterations = iter;
  model.gradient_norm = gnorm;
  return model;
}

ImportanceWeights estimate_weights(const FeatureSet& source, const FeatureSet& target,
                                   const FeatureSet& cal, const DiscriminatorOptions& options) {
  if (cal.dim() != source.dim()) {
    throw ValidationError("calibration features have dimension " + std::to_string(cal.dim()) +
                          ", source features " + std::to_string(source.dim()));
  }
  if (cal.size() == 0) {
    throw ValidationError("no calibration feature rows");
  }
  const Discriminator model = train_discriminator(source, target, options);
  const double prior_ratio =
      static_cast<double>(source.size()) / static_cast<double>(target.size());

  // p / (1 - p) = exp(log-odds); overflow is the "p numerically 1" case.
  std::vector<double> raw(cal.size());
  std::vector<double> finite;
  finite.reserve(cal.size());
  for (std::size_t i = 0; i < cal.size(); ++i) {
    raw[i] = prior_ratio * std::exp(model.log_odds(cal.row(i)));
    if (std::isfinite(raw[i])) finite.push_back(raw[i]);
  }
  if (finite.empty()) {
    throw ValidationError("importance weights: every calibration row overflowed");
  }
  const double cap = quantile(finite, options.clamp_quantile);
  CompensatedSum sum;
  for (double& w : raw) {
    w = std::min(w, cap);
    // Keep weights strictly positive even when exp underflows.
    w = std::max(w, std::numeric_limits<double>::min());
    sum.add(w);
  }
  const double mean = sum.value() / static_cast<double>(raw.size());
  for (double& w : raw) w /= mean;
  return ImportanceWeights{std::move(raw)};
}

TemperatureFit cpcs_fit(const PredictionSet& cal, const ImportanceWeights& weights) {
  return fit_temperature(cal, ObjectiveKind::kWeightedBrier, weights.weights);
}

TemperatureFit transcal_lite_fit(const PredictionSet& cal, const ImportanceWeights& weights) {
  return fit_temperature(cal, ObjectiveKind::kWeightedEce, weights.weights);
}

}  // namespace shiftcal
