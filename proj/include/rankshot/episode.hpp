#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rankshot/classifier.hpp"
#include "rankshot/data.hpp"

namespace rankshot {

struct EpisodeConfig {
  std::size_t n_way = 5;
  std::size_t k_shot = 1;
  std::size_t q_per_class = 15;
};

// One N-way K-shot task: disjoint support and query draws over N classes.
struct EpisodeTask {
  std::vector<Sample> support;  // n_way * k_shot, class-major, labels ascending
  std::vector<Sample> query;    // n_way * q_per_class, same order
  std::vector<std::string> class_ids;
};

struct EvalReport {
  std::size_t task_count = 0;
  double mean_accuracy = 0.0;
  double ci95 = 0.0;  // 1.96 * sample-std / sqrt(T)
  std::vector<double> per_task_accuracy;
};

using EmbedFn = std::function<FeatureVector(const FeatureVector&)>;

inline FeatureVector identity_embed(const FeatureVector& v) { return v; }

EpisodeTask sample_episode(const LabeledFeatureSet& dataset, const EpisodeConfig& config,
                           std::uint64_t seed);

// Mean negative log posterior over the query set, prototypes from the
// embedded support set. Any metric is accepted for forward-only reporting.
double episode_loss(const EpisodeTask& task, const EmbedFn& embed,
                    const ClassifierConfig& config);

// Gradient of episode_loss with respect to every support and query embedding.
struct EpisodeGradients {
  double loss = 0.0;
  std::vector<FeatureVector> support;  // aligned with task.support
  std::vector<FeatureVector> query;    // aligned with task.query
};

// Requires a differentiable metric (KendallSmooth).
EpisodeGradients episode_loss_backward(const EpisodeTask& task, const EmbedFn& embed,
                                       const ClassifierConfig& config);

// Samples task_count episodes with per-task seeds derived from (seed, index)
// and reports accuracy. Identical output for any `threads` value.
EvalReport evaluate_tasks(const LabeledFeatureSet& dataset, const EpisodeConfig& econfig,
                          const ClassifierConfig& cconfig, std::size_t task_count,
                          std::uint64_t seed, std::size_t threads = 1);

double ci95_half_width(const std::vector<double>& per_task_accuracy);

}  // namespace rankshot
