#include "shiftcal/surrogate.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shiftcal/random.h"
#include "shiftcal/scaling.h"

namespace shiftcal {

std::string to_string(Distance distance) {
  switch (distance) {
    case Distance::kMean:
      return "mean";
    case Distance::kKs:
      return "ks";
    case Distance::kW1:
      return "w1";
  }
  return "unknown";
}

Distance distance_from_string(const std::string& name) {
  if (name == "mean") return Distance::kMean;
  if (name == "ks") return Distance::kKs;
  if (name == "w1") return Distance::kW1;
  throw ValidationError("unknown distance \"" + name + "\" (supported: mean, ks, w1)");
}

namespace {

void check_sample(std::span<const double> s, const char* name) {
  if (s.empty()) {
    throw ValidationError(std::string("distance: sample ") + name + " is empty");
  }
  for (double v : s) {
    if (!std::isfinite(v)) {
      throw ValidationError(std::string("distance: sample ") + name +
                            " has a non-finite value");
    }
  }
}

double sample_mean(std::span<const double> s) {
  CompensatedSum sum;
  for (double v : s) sum.add(v);
  return sum.value() / static_cast<double>(s.size());
}

std::vector<double> sorted_copy(std::span<const double> s) {
  std::vector<double> out(s.begin(), s.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Walks the merged support of two sorted samples, calling visit(x, next_x,
// F_a(x), F_b(x)) at each distinct point. next_x is +inf at the last point.
template <typename Visit>
void walk_ecdfs(const std::vector<double>& a, const std::vector<double>& b, Visit visit) {
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (j == b.size() || (i < a.size() && a[i] <= b[j])) {
      x = a[i];
    } else {
      x = b[j];
    }
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    double next = std::numeric_limits<double>::infinity();
    if (i < a.size()) next = a[i];
    if (j < b.size()) next = std::min(next, b[j]);
    visit(x, next, static_cast<double>(i) / n, static_cast<double>(j) / m);
  }
}

}  // namespace

double dist_mean(std::span<const double> a, std::span<const double> b) {
  check_sample(a, "a");
  check_sample(b, "b");
  return std::abs(sample_mean(a) - sample_mean(b));
}

double dist_ks(std::span<const double> a, std::span<const double> b) {
  check_sample(a, "a");
  check_sample(b, "b");
  double sup = 0.0;
  walk_ecdfs(sorted_copy(a), sorted_copy(b), [&](double, double, double fa, double fb) {
    sup = std::max(sup, std::abs(fa - fb));
  });
  return sup;
}

double dist_w1(std::span<const double> a, std::span<const double> b) {
  check_sample(a, "a");
  check_sample(b, "b");
  CompensatedSum area;
  walk_ecdfs(sorted_copy(a), sorted_copy(b), [&](double x, double next, double fa, double fb) {
    // Both ECDFs reach 1 at the last point, so the infinite tail adds nothing.
    if (std::isfinite(next)) area.add(std::abs(fa - fb) * (next - x));
  });
  return area.value();
}

double distance(Distance kind, std::span<const double> a, std::span<const double> b) {
  switch (kind) {
    case Distance::kMean:
      return dist_mean(a, b);
    case Distance::kKs:
      return dist_ks(a, b);
    case Distance::kW1:
      return dist_w1(a, b);
  }
  throw ValidationError("unknown distance");
}

SurrogateLadder build_ladder(std::vector<std::pair<std::string, PredictionSet>> sets) {
  if (sets.empty()) {
    throw ValidationError("surrogate ladder needs at least one calibration set");
  }
  const std::size_t k = sets.front().second.num_classes();
  for (const auto& [tag, preds] : sets) {
    if (preds.num_classes() != k) {
      throw ValidationError("surrogate set \"" + tag + "\" has " +
                            std::to_string(preds.num_classes()) + " classes, expected " +
                            std::to_string(k));
    }
    preds.require_labels("surrogate set \"" + tag + "\"");
  }
  SurrogateLadder ladder;
  ladder.entries.reserve(sets.size());
  for (auto& [tag, preds] : sets) {
    LadderEntry entry;
    entry.tag = tag;
    entry.fit = fit_temperature(preds, ObjectiveKind::kNll);
    const auto pmax = vanilla_pmax(preds);
    entry.mean_pmax = sample_mean(pmax);
    entry.preds = std::move(preds);
    ladder.entries.push_back(std::move(entry));
  }
  return ladder;
}

std::size_t sac_select_index(const SurrogateLadder& ladder,
                             std::span<const double> test_pmax, Distance kind) {
  if (ladder.entries.empty()) {
    throw ValidationError("SAC selection needs a non-empty ladder");
  }
  if (test_pmax.empty()) {
    throw ValidationError("SAC selection needs a non-empty test sample");
  }
  std::size_t best = 0;
  double best_distance = std::numeric_limits<double>::infinity();
  const double test_mean = kind == Distance::kMean ? sample_mean(test_pmax) : 0.0;
  for (std::size_t j = 0; j < ladder.entries.size(); ++j) {
    const auto& entry = ladder.entries[j];
    double d;
    if (kind == Distance::kMean) {
      d = std::abs(test_mean - entry.mean_pmax);
    } else {
      if (!entry.preds) {
        throw ValidationError("distance " + to_string(kind) + " needs the predictions of "
                              "ladder entry \"" + entry.tag + "\"");
      }
      d = distance(kind, vanilla_pmax(*entry.preds), test_pmax);
    }
    if (d < best_distance) {
      best_distance = d;
      best = j;
    }
  }
  return best + 1;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count,
                                        std::uint64_t seed) {
  if (count == 0) {
    throw ValidationError("subsample size must be positive");
  }
  if (count > n) {
    throw ValidationError("subsample size " + std::to_string(count) +
                          " exceeds test set size " + std::to_string(n));
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed, Stream::kSubsample);
  // Partial Fisher-Yates: the first `count` slots become the sample.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

SacLadderModel sac_select(std::shared_ptr<const SurrogateLadder> ladder,
                          const PredictionSet& test, const SacOptions& options) {
  if (!ladder) throw ValidationError("SAC selection needs a ladder");
  std::vector<double> pmax = vanilla_pmax(test);
  if (options.subsample) {
    const auto idx = sample_indices(pmax.size(), *options.subsample, options.seed);
    std::vector<double> sub;
    sub.reserve(idx.size());
    for (std::size_t i : idx) sub.push_back(pmax[i]);
    pmax = std::move(sub);
  }
  SacLadderModel model;
  model.selected = sac_select_index(*ladder, pmax, options.distance);
  model.ladder = std::move(ladder);
  return model;
}

TemperatureModel sts_fit(const SurrogateLadder& ladder) {
  if (ladder.entries.empty()) {
    throw ValidationError("STS needs a non-empty ladder");
  }
  for (const auto& entry : ladder.entries) {
    if (!entry.preds) {
      throw ValidationError("STS needs the predictions of ladder entry \"" + entry.tag + "\"");
    }
  }
  PredictionSet pooled = *ladder.entries.front().preds;
  for (std::size_t j = 1; j < ladder.entries.size(); ++j) {
    pooled = pooled.concatenated(*ladder.entries[j].preds);
  }
  const auto fit = fit_temperature(pooled, ObjectiveKind::kNll);
  return TemperatureModel{fit.temperature, ObjectiveKind::kNll, "sts"};
}

}  // namespace shiftcal
