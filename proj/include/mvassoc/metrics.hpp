/*
 * Copyright 2026 The mvassoc Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Association quality metrics: ranking metrics over instance pairs (AP,
// FPR at a recall level) and image-pair accuracy (IPAA-X), optionally broken
// down by camera angle difference.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvassoc/errors.hpp"

namespace mvassoc {

/// Candidate instance pair with its confidence and whether both boxes show
/// the same object.
struct ScoredPair {
  double confidence = 0.0;
  bool is_positive = false;
};

/// Confidence for a distance already scaled into [0, 1].
inline double confidence_from_distance(double scaled_distance) {
  if (!(scaled_distance >= 0.0 && scaled_distance <= 1.0)) {
    throw InvariantError("scaled distance must lie in [0, 1]");
  }
  return 1.0 - scaled_distance;
}

namespace detail {
inline std::vector<std::size_t> rank_by_confidence(std::span<const ScoredPair> pairs) {
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pairs[a].confidence > pairs[b].confidence;
  });
  return order;
}
}  // namespace detail

/// Mean of the precision at the rank of each positive, ranking by descending
/// confidence with ties kept in input order.
inline double average_precision(std::span<const ScoredPair> pairs) {
  std::size_t positives = 0;
  for (const auto& p : pairs) positives += p.is_positive ? 1 : 0;
  if (positives == 0) throw InvariantError("average precision needs a positive pair");
  double sum = 0.0;
  std::size_t seen = 0, hits = 0;
  for (std::size_t idx : detail::rank_by_confidence(pairs)) {
    ++seen;
    if (pairs[idx].is_positive) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(seen);
    }
  }
  return sum / static_cast<double>(positives);
}

inline constexpr double kDefaultRecallTarget = 0.95;

/// False positive rate at the highest confidence threshold whose recall
/// reaches `recall_target`. Pairs with equal confidence enter together.
inline double fpr_at_recall(std::span<const ScoredPair> pairs,
                            double recall_target = kDefaultRecallTarget) {
  std::size_t pos = 0, neg = 0;
  for (const auto& p : pairs) (p.is_positive ? pos : neg)++;
  if (pos == 0 || neg == 0) {
    throw InvariantError("FPR at recall needs positive and negative pairs");
  }
  if (!(recall_target > 0.0 && recall_target <= 1.0)) {
    throw ConfigError("recall target must lie in (0, 1]");
  }
  const auto order = detail::rank_by_confidence(pairs);
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double c = pairs[order[k]].confidence;
    while (k < order.size() && pairs[order[k]].confidence == c) {
      (pairs[order[k]].is_positive ? tp : fp)++;
      ++k;
    }
    if (static_cast<double>(tp) / static_cast<double>(pos) >= recall_target) break;
  }
  return static_cast<double>(fp) / static_cast<double>(neg);
}

/// Predicted and true cross-view matches of one image pair, keyed by
/// instance id. `ids_a` / `ids_b` list the objects present in each view.
struct PairAdjacency {
  std::set<int> ids_a;
  std::set<int> ids_b;
  std::map<int, int> predicted;  // id in A -> id in B
  std::map<int, int> truth;      // id in A -> id in B

  std::set<int> universe() const {
    std::set<int> u = ids_a;
    u.insert(ids_b.begin(), ids_b.end());
    return u;
  }

  void validate() const {
    auto check = [&](const std::map<int, int>& m, const char* name) {
      std::set<int> targets;
      for (const auto& [a, b] : m) {
        if (!ids_a.contains(a) || !ids_b.contains(b)) {
          throw InvariantError(std::string(name) + " match references an absent object");
        }
        if (!targets.insert(b).second) {
          throw InvariantError(std::string(name) + " mapping is not one-to-one");
        }
      }
    };
    check(predicted, "predicted");
    check(truth, "truth");
  }
};

namespace detail {
inline std::optional<int> partner(const std::map<int, int>& m, int key) {
  auto it = m.find(key);
  if (it == m.end()) return std::nullopt;
  return it->second;
}
inline std::map<int, int> inverted(const std::map<int, int>& m) {
  std::map<int, int> r;
  for (const auto& [a, b] : m) r.emplace(b, a);
  return r;
}
}  // namespace detail

/// Fraction of objects present in either view whose association is correct.
/// An object is correct when its partner in the other view (or the absence of
/// one) matches the truth from every view it appears in. An empty universe
/// counts as fully correct.
inline double pair_fraction_correct(const PairAdjacency& adj) {
  adj.validate();
  const auto universe = adj.universe();
  if (universe.empty()) return 1.0;
  const auto pred_ba = detail::inverted(adj.predicted);
  const auto truth_ba = detail::inverted(adj.truth);
  std::size_t correct = 0;
  for (int u : universe) {
    bool ok = true;
    if (adj.ids_a.contains(u))
      ok = ok && detail::partner(adj.predicted, u) == detail::partner(adj.truth, u);
    if (adj.ids_b.contains(u))
      ok = ok && detail::partner(pred_ba, u) == detail::partner(truth_ba, u);
    correct += ok ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(universe.size());
}

inline constexpr int kIpaaLevels[] = {100, 90, 80};

/// Fraction of image pairs with at least `percent`% of objects correct.
inline double ipaa(std::span<const double> fractions_correct, int percent) {
  if (fractions_correct.empty()) throw InvariantError("IPAA needs at least one image pair");
  if (percent <= 0 || percent > 100) throw ConfigError("IPAA level must lie in (0, 100]");
  const double level = percent / 100.0;
  std::size_t hits = 0;
  for (double f : fractions_correct) hits += (f + 1e-12 >= level) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(fractions_correct.size());
}

inline double ipaa(std::span<const PairAdjacency> adjacencies, int percent) {
  std::vector<double> f;
  f.reserve(adjacencies.size());
  for (const auto& a : adjacencies) f.push_back(pair_fraction_correct(a));
  return ipaa(f, percent);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Everything the report needs about one evaluated image pair.
struct PairMetrics {
  std::string scene_id;
  int camera_a = 0;
  int camera_b = 0;
  double angle_deg = 0.0;
  double fraction_correct = 0.0;
  std::size_t matches = 0;
  std::vector<ScoredPair> scored;
};

struct IpaaValue {
  int percent = 0;
  double value = 0.0;
};

struct AngleBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t pairs = 0;
  std::size_t scored_pairs = 0;
  std::size_t positives = 0;
  std::optional<double> ap;
  std::optional<double> fpr95;
  std::vector<IpaaValue> ipaa;
};

enum class ApMode { kPooled, kPerPairMean };

struct MetricsReport {
  std::size_t pairs = 0;
  std::size_t scored_pairs = 0;
  std::size_t positives = 0;
  std::optional<double> ap;
  std::optional<double> fpr95;
  std::vector<IpaaValue> ipaa;  // levels 100, 90, 80 in that order
  std::vector<AngleBin> bins;
};

inline constexpr double kDefaultBinWidth = 15.0;

namespace detail {

inline std::vector<IpaaValue> ipaa_levels(std::span<const double> fractions) {
  std::vector<IpaaValue> out;
  for (int level : kIpaaLevels) {
    out.push_back({level, fractions.empty() ? 0.0 : ipaa(fractions, level)});
  }
  return out;
}

struct RankingSummary {
  std::size_t scored = 0;
  std::size_t positives = 0;
  std::optional<double> ap;
  std::optional<double> fpr;
};

inline RankingSummary summarize_ranking(std::span<const PairMetrics* const> pairs,
                                        ApMode mode) {
  RankingSummary s;
  std::vector<ScoredPair> pooled;
  double ap_sum = 0.0;
  std::size_t ap_count = 0;
  for (const auto* p : pairs) {
    pooled.insert(pooled.end(), p->scored.begin(), p->scored.end());
    if (mode == ApMode::kPerPairMean &&
        std::any_of(p->scored.begin(), p->scored.end(),
                    [](const ScoredPair& x) { return x.is_positive; })) {
      ap_sum += average_precision(p->scored);
      ++ap_count;
    }
  }
  s.scored = pooled.size();
  for (const auto& x : pooled) s.positives += x.is_positive ? 1 : 0;
  if (mode == ApMode::kPooled && s.positives > 0) {
    s.ap = average_precision(pooled);
  } else if (mode == ApMode::kPerPairMean && ap_count > 0) {
    s.ap = ap_sum / static_cast<double>(ap_count);
  }
  if (s.positives > 0 && s.positives < s.scored) s.fpr = fpr_at_recall(pooled);
  return s;
}

}  // namespace detail

/// Groups image pairs by camera angle difference into bins of `bin_width`
/// degrees covering [0, 180]; the last bin is closed at 180.
inline std::vector<AngleBin> angle_binned_report(std::span<const PairMetrics> pairs,
                                                 double bin_width = kDefaultBinWidth,
                                                 ApMode mode = ApMode::kPooled) {
  if (!(bin_width > 0.0) || bin_width > 180.0) {
    throw ConfigError("bin width must lie in (0, 180]");
  }
  const auto nbins = static_cast<std::size_t>(std::ceil(180.0 / bin_width - 1e-9));
  std::vector<std::vector<const PairMetrics*>> members(nbins);
  for (const auto& p : pairs) {
    auto b = static_cast<std::size_t>(std::max(0.0, std::floor(p.angle_deg / bin_width)));
    members[std::min(b, nbins - 1)].push_back(&p);
  }
  std::vector<AngleBin> bins;
  for (std::size_t b = 0; b < nbins; ++b) {
    AngleBin bin;
    bin.lo = static_cast<double>(b) * bin_width;
    bin.hi = std::min(180.0, static_cast<double>(b + 1) * bin_width);
    bin.pairs = members[b].size();
    std::vector<double> fractions;
    for (const auto* p : members[b]) fractions.push_back(p->fraction_correct);
    bin.ipaa = detail::ipaa_levels(fractions);
    const auto r = detail::summarize_ranking(members[b], mode);
    bin.scored_pairs = r.scored;
    bin.positives = r.positives;
    bin.ap = r.ap;
    bin.fpr95 = r.fpr;
    bins.push_back(std::move(bin));
  }
  return bins;
}

inline MetricsReport make_report(std::span<const PairMetrics> pairs,
                                 double bin_width = kDefaultBinWidth,
                                 ApMode mode = ApMode::kPooled) {
  MetricsReport report;
  report.pairs = pairs.size();
  std::vector<double> fractions;
  std::vector<const PairMetrics*> all;
  for (const auto& p : pairs) {
    fractions.push_back(p.fraction_correct);
    all.push_back(&p);
  }
  report.ipaa = detail::ipaa_levels(fractions);
  const auto r = detail::summarize_ranking(all, mode);
  report.scored_pairs = r.scored;
  report.positives = r.positives;
  report.ap = r.ap;
  report.fpr95 = r.fpr;
  report.bins = angle_binned_report(pairs, bin_width, mode);
  return report;
}

/// Spearman rank correlation with average ranks for ties. Returns nullopt when
/// either series is constant or shorter than 2.
inline std::optional<double> spearman_rho(std::span<const double> x,
                                          std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("series lengths differ");
  if (x.size() < 2) return std::nullopt;
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace mvassoc
