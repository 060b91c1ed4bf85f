#pragma once

#include <cstdint>
#include <vector>

#include "rankshot/episode.hpp"
#include "rankshot/model.hpp"

namespace rankshot {

enum class MaskKind { LowCut, HighCut };

// LowCut zeroes channels strictly below the threshold (keeps large values);
// HighCut zeroes channels strictly above it (keeps small values). Equality
// always keeps the channel.
struct MaskSpec {
  MaskKind kind = MaskKind::LowCut;
  double threshold = 0.0;
};

FeatureVector apply_mask(const FeatureVector& x, const MaskSpec& spec);
LabeledFeatureSet apply_mask(const LabeledFeatureSet& set, const MaskSpec& spec);

// evaluate_tasks with every embedding masked against its own values before
// any similarity is computed (prototype inputs included).
EvalReport masked_eval(const LabeledFeatureSet& dataset, const EpisodeConfig& econfig,
                       const ClassifierConfig& cconfig, const MaskSpec& spec,
                       std::size_t task_count, std::uint64_t seed,
                       std::size_t threads = 1);

struct SweepRow {
  double param = 0.0;
  double accuracy = 0.0;
  double ci95 = 0.0;
};

// One meta-training run per alpha from the same initial model, same seeded
// episodes, evaluated (exact Kendall) on the same seeded novel tasks.
std::vector<SweepRow> sweep_alpha(const LabeledFeatureSet& base,
                                  const LabeledFeatureSet& novel,
                                  const LinearEmbedder& init_model,
                                  const std::vector<double>& alphas,
                                  const TrainConfig& base_config);

// Sampled-Kendall evaluation at each pair budget on identical seeded tasks.
std::vector<SweepRow> sweep_pair_budget(const LabeledFeatureSet& dataset,
                                        const EpisodeConfig& econfig,
                                        const ClassifierConfig& cconfig,
                                        const std::vector<std::size_t>& budgets,
                                        std::size_t task_count, std::uint64_t seed,
                                        std::size_t threads = 1);

// CSV with header "param,accuracy,ci95"; `comment` lines are '#'-prefixed.
std::string sweep_to_csv(const std::vector<SweepRow>& rows,
                         const std::string& comment = "");

}  // namespace rankshot
