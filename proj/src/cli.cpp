#include "rankshot/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rankshot/ablation.hpp"
#include "rankshot/classifier.hpp"
#include "rankshot/common.hpp"
#include "rankshot/data.hpp"
#include "rankshot/episode.hpp"
#include "rankshot/metrics.hpp"
#include "rankshot/model.hpp"
#include "rankshot/rng.hpp"

namespace rankshot::cli {
namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Serialize-then-write so a failure never leaves a partial output file.
void write_output(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) {
    out.close();
    std::error_code ec;
    std::filesystem::remove(path, ec);
    throw DataError("write failed: " + path);
  }
}

// Every artifact embeds the full run configuration: JSON reports under a
// "config" key, CSV and checkpoint files as a leading "# config {...}" line.
void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
  } else {
    write_output(out_path, content);
    std::cout << "wrote " << out_path << "\n";
  }
}

json report_to_json(const EvalReport& r) {
  return json{{"task_count", r.task_count},
              {"mean_accuracy", r.mean_accuracy},
              {"ci95", r.ci95},
              {"per_task_accuracy", r.per_task_accuracy}};
}

json stats_to_json(const ChannelStats& s) {
  return json{{"across_channel_mean_variance", s.across_channel_mean_variance},
              {"across_sample_mean_variance", s.across_sample_mean_variance},
              {"histogram",
               {{"bin_edges", s.histogram.bin_edges}, {"counts", s.histogram.counts}}}};
}

struct EvalFlags {
  std::size_t n_way = 5;
  std::size_t k_shot = 1;
  std::size_t q_per_class = 15;
  std::size_t tasks = 200;
  double temperature = 10.0;
  std::uint64_t seed = 42;
  std::size_t threads = 1;
};

void add_eval_flags(CLI::App* sub, EvalFlags& f, bool with_tasks = true) {
  sub->add_option("--nway", f.n_way, "classes per task");
  sub->add_option("--kshot", f.k_shot, "support shots per class");
  sub->add_option("--qper", f.q_per_class, "query samples per class");
  if (with_tasks) sub->add_option("--tasks", f.tasks, "number of sampled tasks");
  sub->add_option("--temp", f.temperature, "softmax temperature");
  sub->add_option("--seed", f.seed, "master RNG seed");
  sub->add_option("--threads", f.threads, "worker threads (results are thread-invariant)");
}

json eval_flags_json(const EvalFlags& f) {
  return json{{"n_way", f.n_way},     {"k_shot", f.k_shot}, {"q_per_class", f.q_per_class},
              {"tasks", f.tasks},     {"temperature", f.temperature},
              {"seed", f.seed},       {"threads", f.threads}};
}

EpisodeConfig episode_config(const EvalFlags& f) {
  return EpisodeConfig{f.n_way, f.k_shot, f.q_per_class};
}

struct ModelFlags {
  std::size_t d_out = 0;  // 0: keep the input dimension
  bool rectify = false;
  std::string init = "identity";
  std::size_t pretrain_steps = 0;
  std::size_t batch_size = 32;
  double pretrain_lr = 0.05;
};

void add_model_flags(CLI::App* sub, ModelFlags& f) {
  sub->add_option("--dout", f.d_out, "embedding dimension (0 keeps input dim)");
  sub->add_flag("--rectify", f.rectify, "rectified embedder output");
  sub->add_option("--init", f.init, "parameter init: identity | random")
      ->check(CLI::IsMember({"identity", "random"}));
  sub->add_option("--pretrain-steps", f.pretrain_steps,
                  "cross-entropy pretraining steps before episodic training");
  sub->add_option("--batch", f.batch_size, "pretraining mini-batch size");
  sub->add_option("--pretrain-lr", f.pretrain_lr, "pretraining learning rate");
}

json model_flags_json(const ModelFlags& f) {
  return json{{"d_out", f.d_out},
              {"rectify", f.rectify},
              {"init", f.init},
              {"pretrain_steps", f.pretrain_steps},
              {"batch_size", f.batch_size},
              {"pretrain_lr", f.pretrain_lr}};
}

// Builds the initial embedder and runs optional CE pretraining on the base
// split. Shared by `train` and `sweep-alpha` so both start from the same
// parameters for the same flags.
LinearEmbedder prepare_model(const LabeledFeatureSet& base, const ModelFlags& f,
                             const TrainConfig& config) {
  const std::size_t d_in = base.dim;
  const std::size_t d_out = f.d_out == 0 ? d_in : f.d_out;
  const Nonlinearity nl = f.rectify ? Nonlinearity::Rectify : Nonlinearity::None;
  LinearEmbedder model;
  if (f.init == "identity") {
    if (d_out != d_in) {
      throw std::invalid_argument("--init identity requires --dout equal to the input dim (" +
                                  std::to_string(d_in) + "); use --init random");
    }
    model = LinearEmbedder::identity(d_in, nl);
  } else {
    model = LinearEmbedder::random(d_in, d_out, derive_seed(config.seed, 0x1417), nl);
  }
  if (f.pretrain_steps > 0) {
    const std::size_t classes = base.class_labels().size();
    LinearEmbedder head =
        LinearEmbedder::random(d_out, classes, derive_seed(config.seed, 0x4ead), Nonlinearity::None);
    TrainConfig pre = config;
    pre.episodes = f.pretrain_steps;
    pre.batch_size = f.batch_size;
    pre.learning_rate = f.pretrain_lr;
    model = pretrain_ce(base, model, head, pre);
  }
  return model;
}

int cmd_gen(const SyntheticSpec& spec, std::uint64_t seed, std::size_t bins,
            const std::string& out_base, const std::string& out_novel,
            const std::string& out_report) {
  spec.validate();
  const auto [base, novel] = generate_synthetic(spec, seed);
  write_output(out_base, features_to_csv(base));
  write_output(out_novel, features_to_csv(novel));

  json config{{"command", "gen"},
              {"classes", spec.class_count},
              {"samples", spec.samples_per_class},
              {"dim", spec.dim},
              {"cores", spec.core_channels_per_class},
              {"core_mean", spec.core_mean},
              {"core_std", spec.core_std},
              {"minor_low", spec.minor_low},
              {"minor_high", spec.minor_high},
              {"noise_std", spec.noise_std},
              {"concentration", spec.concentration},
              {"seed", seed},
              {"bins", bins},
              {"out_base", out_base},
              {"out_novel", out_novel}};
  json report{{"config", config},
              {"base", stats_to_json(channel_stats(base, bins))},
              {"novel", stats_to_json(channel_stats(novel, bins))}};
  emit(out_report, report.dump(2));
  return 0;
}

int cmd_eval(const std::string& features_path, const std::string& metric,
             const EvalFlags& flags, const std::string& out_path) {
  if (flags.tasks < 1) throw std::invalid_argument("--tasks must be >= 1");
  const ClassifierConfig cconfig{MetricSpec::parse(metric), flags.temperature};
  const LabeledFeatureSet dataset = load_features(features_path);
  const EvalReport report = evaluate_tasks(dataset, episode_config(flags), cconfig,
                                           flags.tasks, flags.seed, flags.threads);

  json config = eval_flags_json(flags);
  config["command"] = "eval";
  config["features"] = features_path;
  config["metric"] = cconfig.metric.to_string();
  json out{{"config", config},
           {"task_count", report.task_count},
           {"mean_accuracy", report.mean_accuracy},
           {"ci95", report.ci95},
           {"per_task_accuracy", report.per_task_accuracy}};
  emit(out_path, out.dump(2));
  return 0;
}

int cmd_train(const std::string& base_path, const std::string& novel_path,
              const ModelFlags& mflags, const EvalFlags& eflags, double learning_rate,
              std::size_t episodes, double alpha, std::size_t eval_every,
              std::size_t eval_tasks, const std::string& out_model,
              const std::string& out_log, const std::string& out_report) {
  const LabeledFeatureSet base = load_features(base_path);
  const LabeledFeatureSet novel = load_features(novel_path);

  TrainConfig config;
  config.learning_rate = learning_rate;
  config.episodes = episodes;
  config.alpha = alpha;
  config.temperature = eflags.temperature;
  config.econfig = episode_config(eflags);
  config.seed = eflags.seed;
  config.eval_every = eval_every;
  config.eval_tasks = eval_tasks;
  config.batch_size = mflags.batch_size;

  json jconfig = eval_flags_json(eflags);
  jconfig.erase("tasks");
  jconfig.erase("threads");
  jconfig["command"] = "train";
  jconfig["base"] = base_path;
  jconfig["novel"] = novel_path;
  jconfig["learning_rate"] = learning_rate;
  jconfig["episodes"] = episodes;
  jconfig["alpha"] = alpha;
  jconfig["eval_every"] = eval_every;
  jconfig["eval_tasks"] = eval_tasks;
  jconfig["out_model"] = out_model;
  jconfig["out_log"] = out_log;
  json jm = model_flags_json(mflags);
  jconfig.update(jm);

  LinearEmbedder model = prepare_model(base, mflags, config);
  auto [trained, log] = train_meta(base, novel, model, config);

  // Guarantee a post-training evaluation even when periodic evals are off;
  // the task set matches in-training evals and sweep cells bit for bit.
  if (log.evals.empty() || log.evals.back().first != episodes) {
    const ClassifierConfig eval_config{MetricSpec::kendall_exact(), config.temperature};
    const LabeledFeatureSet embedded = embed_dataset(trained, novel);
    log.evals.emplace_back(episodes, evaluate_tasks(embedded, config.econfig, eval_config,
                                                    config.eval_tasks, eval_task_seed(config)));
  }

  const std::string comment = "config " + jconfig.dump();
  write_output(out_model, "# " + comment + "\n" + checkpoint_to_string(trained));

  if (!out_log.empty()) {
    std::map<std::size_t, const EvalReport*> eval_at;
    for (const auto& [done, rep] : log.evals) eval_at[done] = &rep;
    std::string csv = "# " + comment + "\n";
    csv += "episode,loss,eval_accuracy,eval_ci95\n";
    auto eval_cols = [&](std::size_t ep) -> std::string {
      const auto it = eval_at.find(ep);
      if (it == eval_at.end()) return ",,";
      return "," + fmt(it->second->mean_accuracy) + "," + fmt(it->second->ci95);
    };
    if (eval_at.count(0)) csv += "0," + eval_cols(0) + "\n";
    for (std::size_t i = 0; i < log.losses.size(); ++i) {
      csv += std::to_string(i + 1) + "," + fmt(log.losses[i]) + eval_cols(i + 1) + "\n";
    }
    write_output(out_log, csv);
  }

  const EvalReport& final_eval = log.evals.back().second;
  json out{{"config", jconfig},
           {"episodes_run", log.losses.size()},
           {"final_loss", log.losses.empty() ? json() : json(log.losses.back())},
           {"final_eval", report_to_json(final_eval)},
           {"snapshot", log.final_snapshot}};
  emit(out_report, out.dump(2));
  return 0;
}

int cmd_ablate(const std::string& features_path, const std::string& metric,
               const std::string& mask_name, const std::vector<double>& thresholds,
               const EvalFlags& flags, const std::string& out_path) {
  if (flags.tasks < 1) throw std::invalid_argument("--tasks must be >= 1");
  if (thresholds.empty()) throw std::invalid_argument("--thresholds requires at least one value");
  const ClassifierConfig cconfig{MetricSpec::parse(metric), flags.temperature};
  MaskSpec mask;
  if (mask_name == "lowcut") {
    mask.kind = MaskKind::LowCut;
  } else if (mask_name == "highcut") {
    mask.kind = MaskKind::HighCut;
  } else {
    throw std::invalid_argument("unknown --mask: " + mask_name);
  }
  const LabeledFeatureSet dataset = load_features(features_path);

  std::vector<SweepRow> rows;
  for (const double threshold : thresholds) {
    mask.threshold = threshold;
    const EvalReport rep = masked_eval(dataset, episode_config(flags), cconfig, mask,
                                       flags.tasks, flags.seed, flags.threads);
    rows.push_back(SweepRow{threshold, rep.mean_accuracy, rep.ci95});
  }

  json config = eval_flags_json(flags);
  config["command"] = "ablate";
  config["features"] = features_path;
  config["metric"] = cconfig.metric.to_string();
  config["mask"] = mask_name;
  config["thresholds"] = thresholds;
  emit(out_path, sweep_to_csv(rows, "config " + config.dump()));
  return 0;
}

int cmd_sweep_alpha(const std::string& base_path, const std::string& novel_path,
                    const std::vector<double>& alphas, const ModelFlags& mflags,
                    const EvalFlags& eflags, double learning_rate, std::size_t episodes,
                    std::size_t eval_tasks, const std::string& out_path) {
  if (alphas.empty()) throw std::invalid_argument("--alphas requires at least one value");
  const LabeledFeatureSet base = load_features(base_path);
  const LabeledFeatureSet novel = load_features(novel_path);

  TrainConfig config;
  config.learning_rate = learning_rate;
  config.episodes = episodes;
  config.temperature = eflags.temperature;
  config.econfig = episode_config(eflags);
  config.seed = eflags.seed;
  config.eval_tasks = eval_tasks;
  config.batch_size = mflags.batch_size;

  const LinearEmbedder init_model = prepare_model(base, mflags, config);
  const std::vector<SweepRow> rows = sweep_alpha(base, novel, init_model, alphas, config);

  json jconfig = eval_flags_json(eflags);
  jconfig.erase("tasks");
  jconfig.erase("threads");
  jconfig["command"] = "sweep-alpha";
  jconfig["base"] = base_path;
  jconfig["novel"] = novel_path;
  jconfig["alphas"] = alphas;
  jconfig["learning_rate"] = learning_rate;
  jconfig["episodes"] = episodes;
  jconfig["eval_tasks"] = eval_tasks;
  jconfig.update(model_flags_json(mflags));
  emit(out_path, sweep_to_csv(rows, "config " + jconfig.dump()));
  return 0;
}

int cmd_sweep_pairs(const std::string& features_path, const std::vector<std::size_t>& budgets,
                    std::uint64_t sampler_seed, bool freeze, const EvalFlags& flags,
                    const std::string& out_path) {
  if (flags.tasks < 1) throw std::invalid_argument("--tasks must be >= 1");
  if (budgets.empty()) throw std::invalid_argument("--budgets requires at least one value");
  const LabeledFeatureSet dataset = load_features(features_path);
  const ClassifierConfig cconfig{MetricSpec::kendall_sampled(0, sampler_seed, freeze),
                                 flags.temperature};
  const std::vector<SweepRow> rows =
      sweep_pair_budget(dataset, episode_config(flags), cconfig, budgets, flags.tasks,
                        flags.seed, flags.threads);

  json config = eval_flags_json(flags);
  config["command"] = "sweep-pairs";
  config["features"] = features_path;
  config["budgets"] = budgets;
  config["sampler_seed"] = sampler_seed;
  config["freeze"] = freeze;
  emit(out_path, sweep_to_csv(rows, "config " + config.dump()));
  return 0;
}

// Median wall time per call; the inner repeat count is auto-ranged so each
// measurement spans at least ~100us of clock.
double time_kernel(const std::function<double()>& kernel, std::size_t reps, double& sink) {
  using clock = std::chrono::steady_clock;
  auto measure = [&](std::size_t inner) {
    const auto start = clock::now();
    for (std::size_t i = 0; i < inner; ++i) sink += kernel();
    const std::chrono::duration<double> dt = clock::now() - start;
    return dt.count() / static_cast<double>(inner);
  };
  double per_call = measure(1);
  std::size_t inner = 1;
  if (per_call < 1e-4) {
    inner = static_cast<std::size_t>(1e-4 / std::max(per_call, 1e-9)) + 1;
  }
  std::vector<double> times(reps);
  for (std::size_t r = 0; r < reps; ++r) times[r] = measure(inner);
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

int cmd_bench(const std::vector<std::size_t>& dims, std::size_t reps, std::size_t pair_factor,
              std::uint64_t seed, const std::string& out_path) {
  if (dims.empty()) throw std::invalid_argument("--dims requires at least one value");
  if (reps < 1) throw std::invalid_argument("--reps must be >= 1");
  if (pair_factor < 1) throw std::invalid_argument("--pair-factor must be >= 1");

  json config{{"command", "bench"}, {"dims", dims},   {"reps", reps},
              {"pair_factor", pair_factor}, {"seed", seed}};
  std::string csv = "# config " + config.dump() + "\n";
  csv += "dim,kernel,median_seconds\n";

  double sink = 0.0;
  std::vector<std::pair<std::size_t, std::pair<double, double>>> naive_vs_fast;
  for (std::size_t di = 0; di < dims.size(); ++di) {
    const std::size_t n = dims[di];
    if (n < 2) throw std::invalid_argument("--dims entries must be >= 2");
    Rng rng(derive_seed(seed, di));
    FeatureVector x(n), y(n);
    for (auto& v : x) v = rng.uniform();
    for (auto& v : y) v = rng.uniform();

    const std::size_t total_pairs = n * (n - 1) / 2;
    const std::size_t budget = std::min(pair_factor * n, total_pairs);
    const PairList pairs = sample_pairs(n, budget, derive_seed(seed, 0xbe9c + di));

    // Cross-kernel agreement on the exact inputs being timed.
    const double v_naive = kendall_tau_naive(x, y);
    const double v_fast = kendall_tau_fast(x, y);
    const double v_sampled = sampled_kendall(x, y, pairs);
    const double v_cos = cosine_similarity(x, y);
    if (std::abs(v_naive - v_fast) > 1e-12) {
      throw NumericalError("naive/fast kendall disagree at dim " + std::to_string(n) + ": " +
                           fmt(v_naive) + " vs " + fmt(v_fast));
    }
    if (budget == total_pairs && std::abs(v_sampled - v_naive) > 1e-12) {
      throw NumericalError("full-budget sampled kendall disagrees at dim " + std::to_string(n));
    }
    for (const double v : {v_naive, v_fast, v_sampled, v_cos}) {
      if (!(std::abs(v) <= 1.0 + 1e-9)) {
        throw NumericalError("similarity out of range at dim " + std::to_string(n));
      }
    }

    const double t_naive = time_kernel([&] { return kendall_tau_naive(x, y); }, reps, sink);
    const double t_fast = time_kernel([&] { return kendall_tau_fast(x, y); }, reps, sink);
    const double t_sampled = time_kernel([&] { return sampled_kendall(x, y, pairs); }, reps, sink);
    const double t_cos = time_kernel([&] { return cosine_similarity(x, y); }, reps, sink);
    naive_vs_fast.emplace_back(n, std::make_pair(t_naive, t_fast));

    csv += std::to_string(n) + ",kendall_naive," + fmt(t_naive) + "\n";
    csv += std::to_string(n) + ",kendall_fast," + fmt(t_fast) + "\n";
    csv += std::to_string(n) + ",kendall_sampled," + fmt(t_sampled) + "\n";
    csv += std::to_string(n) + ",cosine," + fmt(t_cos) + "\n";
  }
  if (!std::isfinite(sink)) throw NumericalError("benchmark accumulator overflowed");

  for (const auto& [n, times] : naive_vs_fast) {
    if (n >= 512 && !(times.second < times.first)) {
      throw NumericalError("fast kendall not faster than naive at dim " + std::to_string(n) +
                           " (" + fmt(times.second) + "s vs " + fmt(times.first) + "s)");
    }
  }
  emit(out_path, csv);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"rankshot: rank-correlation similarity toolkit for few-shot evaluation"};
  app.require_subcommand(1);

  // --- gen ---
  auto* gen = app.add_subcommand("gen", "generate a synthetic base/novel feature corpus");
  SyntheticSpec gspec;
  std::uint64_t gen_seed = 42;
  std::size_t gen_bins = 20;
  std::string gen_out_base, gen_out_novel, gen_out_report;
  gen->add_option("--classes", gspec.class_count, "classes per split");
  gen->add_option("--samples", gspec.samples_per_class, "samples per class");
  gen->add_option("--dim", gspec.dim, "feature dimension");
  gen->add_option("--cores", gspec.core_channels_per_class, "shared high-value channels");
  gen->add_option("--core-mean", gspec.core_mean, "core channel mean");
  gen->add_option("--core-std", gspec.core_std, "core channel noise std");
  gen->add_option("--minor-low", gspec.minor_low, "minor channel range low");
  gen->add_option("--minor-high", gspec.minor_high, "minor channel range high");
  gen->add_option("--noise-std", gspec.noise_std, "minor channel noise std");
  gen->add_option("--concentration", gspec.concentration, "novel-split spread shrink in [0,1]");
  gen->add_option("--seed", gen_seed, "master RNG seed");
  gen->add_option("--bins", gen_bins, "histogram bins in the stats report");
  gen->add_option("--out-base", gen_out_base, "base split CSV path")->required();
  gen->add_option("--out-novel", gen_out_novel, "novel split CSV path")->required();
  gen->add_option("--out", gen_out_report, "stats report JSON path (default: stdout)");

  // --- eval ---
  auto* eval = app.add_subcommand("eval", "few-shot accuracy of a metric on a feature set");
  std::string eval_features, eval_metric = "kendall", eval_out;
  EvalFlags eval_flags;
  eval->add_option("--features", eval_features, "labeled feature CSV")->required();
  eval->add_option("--metric", eval_metric,
                   "cosine | negeuclid | kendall | kendall-smooth[:ALPHA] | kendall-sampled:M[:SEED]");
  add_eval_flags(eval, eval_flags);
  eval->add_option("--out", eval_out, "report JSON path (default: stdout)");

  // --- train ---
  auto* train = app.add_subcommand("train", "episodic training with the smooth Kendall loss");
  std::string train_base, train_novel, train_out_model, train_out_log, train_out_report;
  ModelFlags train_mflags;
  EvalFlags train_eflags;
  double train_lr = 0.05, train_alpha = 0.5;
  std::size_t train_episodes = 200, train_eval_every = 0, train_eval_tasks = 200;
  train->add_option("--base", train_base, "base split CSV")->required();
  train->add_option("--novel", train_novel, "novel split CSV")->required();
  add_model_flags(train, train_mflags);
  add_eval_flags(train, train_eflags, /*with_tasks=*/false);
  train->add_option("--lr", train_lr, "gradient-descent learning rate");
  train->add_option("--episodes", train_episodes, "training episodes");
  train->add_option("--alpha", train_alpha, "smooth Kendall sharpness");
  train->add_option("--eval-every", train_eval_every, "evaluate every E episodes (0: off)");
  train->add_option("--eval-tasks", train_eval_tasks, "tasks per evaluation");
  train->add_option("--out-model", train_out_model, "checkpoint path")->required();
  train->add_option("--out-log", train_out_log, "training curve CSV path");
  train->add_option("--out", train_out_report, "report JSON path (default: stdout)");

  // --- ablate ---
  auto* ablate = app.add_subcommand("ablate", "accuracy under channel masking thresholds");
  std::string ab_features, ab_metric = "kendall", ab_mask, ab_out;
  std::vector<double> ab_thresholds;
  EvalFlags ab_flags;
  ablate->add_option("--features", ab_features, "labeled feature CSV")->required();
  ablate->add_option("--metric", ab_metric, "similarity metric");
  ablate->add_option("--mask", ab_mask, "lowcut | highcut")->required();
  ablate->add_option("--thresholds", ab_thresholds, "mask thresholds")->required()->expected(-1);
  add_eval_flags(ablate, ab_flags);
  ablate->add_option("--out", ab_out, "curve CSV path (default: stdout)");

  // --- sweep-alpha ---
  auto* swa = app.add_subcommand("sweep-alpha", "train at several alphas, compare accuracy");
  std::string swa_base, swa_novel, swa_out;
  std::vector<double> swa_alphas;
  ModelFlags swa_mflags;
  EvalFlags swa_eflags;
  double swa_lr = 0.05;
  std::size_t swa_episodes = 200, swa_eval_tasks = 200;
  swa->add_option("--base", swa_base, "base split CSV")->required();
  swa->add_option("--novel", swa_novel, "novel split CSV")->required();
  swa->add_option("--alphas", swa_alphas, "alpha values")->required()->expected(-1);
  add_model_flags(swa, swa_mflags);
  add_eval_flags(swa, swa_eflags, /*with_tasks=*/false);
  swa->add_option("--lr", swa_lr, "gradient-descent learning rate");
  swa->add_option("--episodes", swa_episodes, "training episodes per alpha");
  swa->add_option("--eval-tasks", swa_eval_tasks, "tasks per evaluation");
  swa->add_option("--out", swa_out, "curve CSV path (default: stdout)");

  // --- sweep-pairs ---
  auto* swp = app.add_subcommand("sweep-pairs", "sampled-Kendall accuracy across pair budgets");
  std::string swp_features, swp_out;
  std::vector<std::size_t> swp_budgets;
  std::uint64_t swp_sampler_seed = 0;
  bool swp_freeze = false;
  EvalFlags swp_flags;
  swp->add_option("--features", swp_features, "labeled feature CSV")->required();
  swp->add_option("--budgets", swp_budgets, "pair budgets")->required()->expected(-1);
  swp->add_option("--sampler-seed", swp_sampler_seed, "pair-draw seed");
  swp->add_flag("--freeze", swp_freeze, "reuse one pair draw per task");
  add_eval_flags(swp, swp_flags);
  swp->add_option("--out", swp_out, "curve CSV path (default: stdout)");

  // --- bench ---
  auto* bench = app.add_subcommand("bench", "kernel timing and agreement checks");
  std::vector<std::size_t> bench_dims{64, 128, 256, 512, 1024};
  std::size_t bench_reps = 5, bench_pair_factor = 5;
  std::uint64_t bench_seed = 42;
  std::string bench_out;
  bench->add_option("--dims", bench_dims, "vector dimensions")->expected(-1);
  bench->add_option("--reps", bench_reps, "timing repetitions per kernel");
  bench->add_option("--pair-factor", bench_pair_factor, "sampled budget = factor * dim");
  bench->add_option("--seed", bench_seed, "input RNG seed");
  bench->add_option("--out", bench_out, "timing CSV path (default: stdout)");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("rankshot");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (gen->parsed()) {
      return cmd_gen(gspec, gen_seed, gen_bins, gen_out_base, gen_out_novel, gen_out_report);
    }
    if (eval->parsed()) return cmd_eval(eval_features, eval_metric, eval_flags, eval_out);
    if (train->parsed()) {
      return cmd_train(train_base, train_novel, train_mflags, train_eflags, train_lr,
                       train_episodes, train_alpha, train_eval_every, train_eval_tasks,
                       train_out_model, train_out_log, train_out_report);
    }
    if (ablate->parsed()) {
      return cmd_ablate(ab_features, ab_metric, ab_mask, ab_thresholds, ab_flags, ab_out);
    }
    if (swa->parsed()) {
      return cmd_sweep_alpha(swa_base, swa_novel, swa_alphas, swa_mflags, swa_eflags, swa_lr,
                             swa_episodes, swa_eval_tasks, swa_out);
    }
    if (swp->parsed()) {
      return cmd_sweep_pairs(swp_features, swp_budgets, swp_sampler_seed, swp_freeze, swp_flags,
                             swp_out);
    }
    if (bench->parsed()) return cmd_bench(bench_dims, bench_reps, bench_pair_factor, bench_seed, bench_out);
    return 1;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the diagnostic; exit-code policy below is ours
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace rankshot::cli
