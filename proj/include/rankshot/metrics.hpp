#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rankshot/common.hpp"

namespace rankshot {

enum class MetricKind {
  Cosine,
  NegEuclidean,
  KendallExact,
  KendallSmooth,
  KendallSampled,
};

// Closed description of a similarity kernel. One MetricSpec plus the input
// dimension fully determines every similarity value this library produces.
struct MetricSpec {
  MetricKind kind = MetricKind::Cosine;
  double alpha = 0.5;             // KendallSmooth only
  std::size_t pair_budget = 0;    // KendallSampled only
  std::uint64_t sampler_seed = 0; // KendallSampled only
  // When set, every call with the same sampler_seed reuses one pair draw
  // (per-episode freezing); otherwise each call_index gets a fresh draw.
  bool freeze_pairs = false;

  static MetricSpec cosine() { return {MetricKind::Cosine}; }
  static MetricSpec neg_euclidean() { return {MetricKind::NegEuclidean}; }
  static MetricSpec kendall_exact() { return {MetricKind::KendallExact}; }
  static MetricSpec kendall_smooth(double a) {
    MetricSpec s;
    s.kind = MetricKind::KendallSmooth;
    s.alpha = a;
    return s;
  }
  static MetricSpec kendall_sampled(std::size_t budget, std::uint64_t seed,
                                    bool freeze = false) {
    MetricSpec s;
    s.kind = MetricKind::KendallSampled;
    s.pair_budget = budget;
    s.sampler_seed = seed;
    s.freeze_pairs = freeze;
    return s;
  }

  // Grammar: cosine | negeuclid | kendall | kendall-smooth[:ALPHA]
  //        | kendall-sampled:M[:SEED]
  static MetricSpec parse(const std::string& text);
  std::string to_string() const;

  bool differentiable() const { return kind == MetricKind::KendallSmooth; }
};

// Channel index pairs (i, j) with j < i, no duplicates.
using PairList = std::vector<std::pair<std::size_t, std::size_t>>;

double cosine_similarity(const FeatureVector& x, const FeatureVector& y);
double neg_euclidean(const FeatureVector& x, const FeatureVector& y);

// Exact Kendall tau by full pair enumeration, O(n^2). Ties count in neither
// N_con nor N_dis; the denominator stays n(n-1)/2 (tau-a).
double kendall_tau_naive(const FeatureVector& x, const FeatureVector& y);

// Same value as kendall_tau_naive on every input, via sort + merge-sort
// inversion counting with tie-group corrections, O(n log n).
double kendall_tau_fast(const FeatureVector& x, const FeatureVector& y);

// (1/N0) sum_{i<j} tanh(alpha (x_i-x_j)) tanh(alpha (y_i-y_j)).
double smooth_kendall(const FeatureVector& x, const FeatureVector& y, double alpha);

struct SmoothKendallGrad {
  FeatureVector grad_x;
  FeatureVector grad_y;
};

// Analytic gradient of smooth_kendall in both arguments:
// grad_x[i] = (alpha/N0) sum_{j!=i} sech^2(alpha (x_i-x_j)) tanh(alpha (y_i-y_j)).
SmoothKendallGrad smooth_kendall_grad(const FeatureVector& x, const FeatureVector& y,
                                      double alpha);

// m distinct pairs drawn uniformly without replacement from the n(n-1)/2
// possible channel pairs; deterministic in seed.
PairList sample_pairs(std::size_t n, std::size_t m, std::uint64_t seed);

// (C - D) / m over the supplied pairs; ties count in neither C nor D.
double sampled_kendall(const FeatureVector& x, const FeatureVector& y,
                       const PairList& pairs);

// Dispatch on spec. KendallExact routes to the fast path. KendallSampled
// derives its pair draw from (sampler_seed, call_index), or from
// (sampler_seed, 0) when freeze_pairs is set.
double similarity(const MetricSpec& spec, const FeatureVector& x,
                  const FeatureVector& y, std::uint64_t call_index = 0);

}  // namespace rankshot
