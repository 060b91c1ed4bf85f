#include "rankshot/episode.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>

#include "rankshot/rng.hpp"

namespace rankshot {

EpisodeTask sample_episode(const LabeledFeatureSet& dataset, const EpisodeConfig& config,
                           std::uint64_t seed) {
  if (config.n_way < 2 || config.k_shot < 1 || config.q_per_class < 1) {
    throw std::invalid_argument("episode shape requires n_way >= 2, k_shot >= 1, q >= 1");
  }
  const std::size_t needed = config.k_shot + config.q_per_class;

  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    by_class[dataset.samples[i].label].push_back(i);
  }
  if (by_class.size() < config.n_way) {
    throw DataError("episode needs " + std::to_string(config.n_way) + " classes, dataset has " +
                    std::to_string(by_class.size()));
  }
  for (const auto& [label, members] : by_class) {
    if (members.size() < needed) {
      throw DataError("class '" + label + "' has " + std::to_string(members.size()) +
                      " samples, episode needs " + std::to_string(needed));
    }
  }

  Rng rng(seed);
  std::vector<std::string> labels;
  labels.reserve(by_class.size());
  for (const auto& [label, members] : by_class) labels.push_back(label);
  // Partial Fisher-Yates: the first n_way entries are a uniform draw.
  for (std::size_t i = 0; i < config.n_way; ++i) {
    std::swap(labels[i], labels[i + static_cast<std::size_t>(rng.below(labels.size() - i))]);
  }
  labels.resize(config.n_way);
  std::sort(labels.begin(), labels.end());

  EpisodeTask task;
  task.class_ids = labels;
  for (const auto& label : labels) {
    std::vector<std::size_t> members = by_class[label];
    for (std::size_t i = 0; i < needed; ++i) {
      std::swap(members[i], members[i + static_cast<std::size_t>(rng.below(members.size() - i))]);
    }
    for (std::size_t i = 0; i < config.k_shot; ++i) {
      task.support.push_back(dataset.samples[members[i]]);
    }
    for (std::size_t i = 0; i < config.q_per_class; ++i) {
      task.query.push_back(dataset.samples[members[config.k_shot + i]]);
    }
  }
  return task;
}

namespace {

struct EmbeddedTask {
  std::vector<Sample> support;  // embedded values, original labels
  std::vector<FeatureVector> query;
  std::vector<std::string> query_labels;
};

EmbeddedTask embed_task(const EpisodeTask& task, const EmbedFn& embed) {
  EmbeddedTask out;
  out.support.reserve(task.support.size());
  for (const auto& s : task.support) {
    out.support.push_back({s.label, embed(s.values)});
  }
  out.query.reserve(task.query.size());
  for (const auto& q : task.query) {
    out.query.push_back(embed(q.values));
    out.query_labels.push_back(q.label);
  }
  return out;
}

}  // namespace

double episode_loss(const EpisodeTask& task, const EmbedFn& embed,
                    const ClassifierConfig& config) {
  const EmbeddedTask et = embed_task(task, embed);
  const PrototypeSet protos = compute_prototypes(et.support);
  double loss = 0.0;
  for (std::size_t qi = 0; qi < et.query.size(); ++qi) {
    const Posterior post = class_posteriors(et.query[qi], protos, config,
                                            qi * protos.class_ids.size());
    const auto it =
        std::find(post.class_ids.begin(), post.class_ids.end(), et.query_labels[qi]);
    if (it == post.class_ids.end()) {
      throw std::invalid_argument("query label '" + et.query_labels[qi] +
                                  "' missing from support classes");
    }
    loss -= std::log(post.probs[static_cast<std::size_t>(it - post.class_ids.begin())]);
  }
  return loss / static_cast<double>(et.query.size());
}

EpisodeGradients episode_loss_backward(const EpisodeTask& task, const EmbedFn& embed,
                                       const ClassifierConfig& config) {
  if (!config.metric.differentiable()) {
    throw std::invalid_argument("non-differentiable metric in training");
  }
  const EmbeddedTask et = embed_task(task, embed);
  const PrototypeSet protos = compute_prototypes(et.support);
  const std::size_t n_classes = protos.class_ids.size();
  const std::size_t dim = protos.prototypes.front().size();
  const double query_weight = 1.0 / static_cast<double>(et.query.size());

  EpisodeGradients out;
  out.query.assign(et.query.size(), FeatureVector(dim, 0.0));
  std::vector<FeatureVector> proto_grads(n_classes, FeatureVector(dim, 0.0));

  for (std::size_t qi = 0; qi < et.query.size(); ++qi) {
    std::vector<double> sims(n_classes);
    std::vector<SmoothKendallGrad> sim_grads(n_classes);
    for (std::size_t k = 0; k < n_classes; ++k) {
      sims[k] = smooth_kendall(et.query[qi], protos.prototypes[k], config.metric.alpha);
      sim_grads[k] =
          smooth_kendall_grad(et.query[qi], protos.prototypes[k], config.metric.alpha);
    }
    const Posterior post = softmax_posterior(protos.class_ids, sims, config.temperature);
    const std::vector<double> dloss_dsim =
        posterior_loss_backward(post, et.query_labels[qi], config.temperature);
    for (std::size_t k = 0; k < n_classes; ++k) {
      const double coeff = query_weight * dloss_dsim[k];
      for (std::size_t d = 0; d < dim; ++d) {
        out.query[qi][d] += coeff * sim_grads[k].grad_x[d];
        proto_grads[k][d] += coeff * sim_grads[k].grad_y[d];
      }
    }
    const auto it =
        std::find(post.class_ids.begin(), post.class_ids.end(), et.query_labels[qi]);
    out.loss -= std::log(post.probs[static_cast<std::size_t>(it - post.class_ids.begin())]);
  }
  // Same accumulation order and final division as episode_loss, so the two
  // report bit-identical loss values.
  out.loss /= static_cast<double>(et.query.size());

  // Prototype means fan gradients out to each contributing support embedding.
  std::map<std::string, std::size_t> class_index, class_size;
  for (std::size_t k = 0; k < n_classes; ++k) class_index[protos.class_ids[k]] = k;
  for (const auto& s : et.support) ++class_size[s.label];
  out.support.assign(et.support.size(), FeatureVector(dim, 0.0));
  for (std::size_t si = 0; si < et.support.size(); ++si) {
    const std::size_t k = class_index[et.support[si].label];
    const double share = 1.0 / static_cast<double>(class_size[et.support[si].label]);
    for (std::size_t d = 0; d < dim; ++d) {
      out.support[si][d] = share * proto_grads[k][d];
    }
  }
  return out;
}

double ci95_half_width(const std::vector<double>& per_task_accuracy) {
  const std::size_t n = per_task_accuracy.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double a : per_task_accuracy) mean += a;
  mean /= static_cast<double>(n);
  double sq = 0.0;
  for (double a : per_task_accuracy) sq += (a - mean) * (a - mean);
  const double sample_std = std::sqrt(sq / static_cast<double>(n - 1));
  return 1.96 * sample_std / std::sqrt(static_cast<double>(n));
}

EvalReport evaluate_tasks(const LabeledFeatureSet& dataset, const EpisodeConfig& econfig,
                          const ClassifierConfig& cconfig, std::size_t task_count,
                          std::uint64_t seed, std::size_t threads) {
  if (task_count < 1) throw std::invalid_argument("task_count must be >= 1");

  EvalReport report;
  report.task_count = task_count;
  report.per_task_accuracy.assign(task_count, 0.0);

  auto run_task = [&](std::size_t t) {
    const EpisodeTask task = sample_episode(dataset, econfig, derive_seed(seed, t));
    const PrototypeSet protos = compute_prototypes(task.support);
    ClassifierConfig task_config = cconfig;
    if (task_config.metric.kind == MetricKind::KendallSampled) {
      // Per-task stream keeps pair draws independent across tasks while
      // remaining a pure function of (sampler_seed, task index).
      task_config.metric.sampler_seed = derive_seed(cconfig.metric.sampler_seed, t);
    }
    std::size_t correct = 0;
    for (std::size_t qi = 0; qi < task.query.size(); ++qi) {
      const std::string predicted = predict(task.query[qi].values, protos, task_config,
                                            qi * protos.class_ids.size());
      if (predicted == task.query[qi].label) ++correct;
    }
    report.per_task_accuracy[t] =
        static_cast<double>(correct) / static_cast<double>(task.query.size());
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, task_count));
  if (workers == 1) {
    for (std::size_t t = 0; t < task_count; ++t) run_task(t);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t t = w; t < task_count; t += workers) run_task(t);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  double mean = 0.0;
  for (double a : report.per_task_accuracy) mean += a;
  report.mean_accuracy = mean / static_cast<double>(task_count);
  report.ci95 = ci95_half_width(report.per_task_accuracy);
  return report;
}

}  // namespace rankshot
