#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rankshot/episode.hpp"

namespace rankshot {

enum class Nonlinearity { None, Rectify };

// Trainable affine embedder: weight (d_out x d_in, row-major) and bias,
// with optional elementwise rectification.
struct LinearEmbedder {
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  Nonlinearity nonlinearity = Nonlinearity::None;
  std::vector<double> weight;  // row-major, d_out rows of d_in
  std::vector<double> bias;

  static LinearEmbedder identity(std::size_t dim, Nonlinearity nl = Nonlinearity::None);
  static LinearEmbedder random(std::size_t d_in, std::size_t d_out, std::uint64_t seed,
                               Nonlinearity nl = Nonlinearity::None);

  double& w(std::size_t row, std::size_t col) { return weight[row * d_in + col]; }
  double w(std::size_t row, std::size_t col) const { return weight[row * d_in + col]; }
};

struct ParamGrads {
  std::vector<double> weight;
  std::vector<double> bias;
};

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t episodes = 200;       // meta-training episodes / pretrain steps
  double alpha = 0.5;               // smooth-Kendall sharpness for training
  double temperature = 10.0;
  EpisodeConfig econfig;
  std::uint64_t seed = 42;
  std::size_t eval_every = 0;       // 0 disables periodic evaluation
  std::size_t eval_tasks = 200;     // tasks per periodic evaluation
  std::size_t batch_size = 32;      // pretraining mini-batch size
};

struct TrainLog {
  std::vector<double> losses;  // one per training episode
  std::vector<std::pair<std::size_t, EvalReport>> evals;  // (episodes completed, report)
  std::string final_snapshot;  // content digest of the trained parameters
};

FeatureVector embed(const LinearEmbedder& model, const FeatureVector& raw);

// Parameter gradients for one sample given the gradient at the embedding
// output; the rectification gate passes gradient only where pre-activation
// is positive.
ParamGrads embed_backward(const LinearEmbedder& model, const FeatureVector& raw,
                          const FeatureVector& upstream);
void accumulate_embed_backward(const LinearEmbedder& model, const FeatureVector& raw,
                               const FeatureVector& upstream, ParamGrads& acc);

LabeledFeatureSet embed_dataset(const LinearEmbedder& model, const LabeledFeatureSet& set);

// Mini-batch gradient descent on softmax cross-entropy of head(embed(x)) over
// the base classes; config.episodes counts optimizer steps. The head is
// updated in place, the trained embedder is returned.
LinearEmbedder pretrain_ce(const LabeledFeatureSet& base, const LinearEmbedder& model,
                           LinearEmbedder& head, const TrainConfig& config);

// The fraction of base samples that head(embed(x)) classifies correctly.
double head_accuracy(const LabeledFeatureSet& base, const LinearEmbedder& model,
                     const LinearEmbedder& head);

// Seed of the fixed novel-split task set used by periodic and post-training
// evaluations; shared so sweep cells reproduce standalone runs exactly.
std::uint64_t eval_task_seed(const TrainConfig& config);

// Episodic training with the smooth Kendall loss; periodic evaluations run
// exact Kendall on the embedded novel split.
std::pair<LinearEmbedder, TrainLog> train_meta(const LabeledFeatureSet& base,
                                               const LabeledFeatureSet& novel_val,
                                               const LinearEmbedder& model,
                                               const TrainConfig& config);

// Checkpoint text format: '#' comment lines, then "linear_embedder 1",
// "<d_in> <d_out> <none|rectify>", d_out weight rows, one bias line. Decimal
// values round-trip exactly.
std::string checkpoint_to_string(const LinearEmbedder& model);
LinearEmbedder checkpoint_from_string(const std::string& text);
void save_checkpoint(const LinearEmbedder& model, const std::string& path,
                     const std::string& provenance_comment = "");
LinearEmbedder load_checkpoint(const std::string& path);

// FNV-1a digest of the serialized parameters; used as the snapshot id.
std::string parameter_digest(const LinearEmbedder& model);

}  // namespace rankshot
