#include "rankshot/ablation.hpp"

#include <charconv>

namespace rankshot {

FeatureVector apply_mask(const FeatureVector& x, const MaskSpec& spec) {
  FeatureVector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool drop = spec.kind == MaskKind::LowCut ? x[i] < spec.threshold
                                                    : x[i] > spec.threshold;
    out[i] = drop ? 0.0 : x[i];
  }
  return out;
}

LabeledFeatureSet apply_mask(const LabeledFeatureSet& set, const MaskSpec& spec) {
  LabeledFeatureSet out;
  out.dim = set.dim;
  out.samples.reserve(set.samples.size());
  for (const auto& s : set.samples) {
    out.samples.push_back({s.label, apply_mask(s.values, spec)});
  }
  return out;
}

EvalReport masked_eval(const LabeledFeatureSet& dataset, const EpisodeConfig& econfig,
                       const ClassifierConfig& cconfig, const MaskSpec& spec,
                       std::size_t task_count, std::uint64_t seed, std::size_t threads) {
  return evaluate_tasks(apply_mask(dataset, spec), econfig, cconfig, task_count, seed,
                        threads);
}

std::vector<SweepRow> sweep_alpha(const LabeledFeatureSet& base,
                                  const LabeledFeatureSet& novel,
                                  const LinearEmbedder& init_model,
                                  const std::vector<double>& alphas,
                                  const TrainConfig& base_config) {
  if (alphas.empty()) throw std::invalid_argument("alpha grid must be nonempty");
  std::vector<SweepRow> rows;
  rows.reserve(alphas.size());
  for (double alpha : alphas) {
    TrainConfig config = base_config;
    config.alpha = alpha;
    config.eval_every = 0;  // one final evaluation per cell is enough
    auto [model, log] = train_meta(base, novel, init_model, config);
    const LabeledFeatureSet embedded = embed_dataset(model, novel);
    const ClassifierConfig eval_config{MetricSpec::kendall_exact(), config.temperature};
    const EvalReport report = evaluate_tasks(embedded, config.econfig, eval_config,
                                             config.eval_tasks, eval_task_seed(config));
    rows.push_back({alpha, report.mean_accuracy, report.ci95});
  }
  return rows;
}

std::vector<SweepRow> sweep_pair_budget(const LabeledFeatureSet& dataset,
                                        const EpisodeConfig& econfig,
                                        const ClassifierConfig& cconfig,
                                        const std::vector<std::size_t>& budgets,
                                        std::size_t task_count, std::uint64_t seed,
                                        std::size_t threads) {
  if (budgets.empty()) throw std::invalid_argument("budget grid must be nonempty");
  if (cconfig.metric.kind != MetricKind::KendallSampled) {
    throw std::invalid_argument("pair-budget sweep needs a sampled-Kendall metric");
  }
  std::vector<SweepRow> rows;
  rows.reserve(budgets.size());
  for (std::size_t budget : budgets) {
    ClassifierConfig cell = cconfig;
    cell.metric.pair_budget = budget;
    const EvalReport report =
        evaluate_tasks(dataset, econfig, cell, task_count, seed, threads);
    rows.push_back({static_cast<double>(budget), report.mean_accuracy, report.ci95});
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows, const std::string& comment) {
  auto fmt = [](double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
  };
  std::string out;
  if (!comment.empty()) out += "# " + comment + "\n";
  out += "param,accuracy,ci95\n";
  for (const auto& row : rows) {
    out += fmt(row.param) + "," + fmt(row.accuracy) + "," + fmt(row.ci95) + "\n";
  }
  return out;
}

}  // namespace rankshot
