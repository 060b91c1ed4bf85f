#include "rankshot/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "rankshot/rng.hpp"

namespace rankshot {

namespace {

constexpr std::uint64_t kEvalStream = 0x5eedf00d;

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw DataError("failed to format value");
  return std::string(buf, end);
}

void check_model(const LinearEmbedder& m) {
  if (m.d_out < 1 || m.d_in < 1) throw std::invalid_argument("empty embedder shape");
  if (m.weight.size() != m.d_in * m.d_out || m.bias.size() != m.d_out) {
    throw std::invalid_argument("embedder parameter shapes disagree with (d_in, d_out)");
  }
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    norm += p[i];
  }
  for (double& v : p) v /= norm;
  return p;
}

void apply_step(LinearEmbedder& m, const ParamGrads& g, double lr) {
  for (std::size_t i = 0; i < m.weight.size(); ++i) m.weight[i] -= lr * g.weight[i];
  for (std::size_t i = 0; i < m.bias.size(); ++i) m.bias[i] -= lr * g.bias[i];
}

}  // namespace

LinearEmbedder LinearEmbedder::identity(std::size_t dim, Nonlinearity nl) {
  LinearEmbedder m;
  m.d_in = m.d_out = dim;
  m.nonlinearity = nl;
  m.weight.assign(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) m.w(i, i) = 1.0;
  m.bias.assign(dim, 0.0);
  return m;
}

LinearEmbedder LinearEmbedder::random(std::size_t d_in, std::size_t d_out,
                                      std::uint64_t seed, Nonlinearity nl) {
  LinearEmbedder m;
  m.d_in = d_in;
  m.d_out = d_out;
  m.nonlinearity = nl;
  Rng rng(seed);
  const double scale = std::sqrt(2.0 / static_cast<double>(d_in + d_out));
  m.weight.resize(d_in * d_out);
  for (double& w : m.weight) w = rng.normal(0.0, scale);
  m.bias.assign(d_out, 0.0);
  return m;
}

FeatureVector embed(const LinearEmbedder& model, const FeatureVector& raw) {
  check_model(model);
  if (raw.size() != model.d_in) {
    throw std::invalid_argument("input dimension " + std::to_string(raw.size()) +
                                " does not match embedder d_in " +
                                std::to_string(model.d_in));
  }
  FeatureVector out(model.d_out);
  for (std::size_t o = 0; o < model.d_out; ++o) {
    double acc = model.bias[o];
    const double* row = model.weight.data() + o * model.d_in;
    for (std::size_t i = 0; i < model.d_in; ++i) acc += row[i] * raw[i];
    out[o] = model.nonlinearity == Nonlinearity::Rectify ? std::max(0.0, acc) : acc;
  }
  return out;
}

void accumulate_embed_backward(const LinearEmbedder& model, const FeatureVector& raw,
                               const FeatureVector& upstream, ParamGrads& acc) {
  check_model(model);
  if (raw.size() != model.d_in || upstream.size() != model.d_out) {
    throw std::invalid_argument("gradient shapes do not match embedder");
  }
  if (acc.weight.size() != model.weight.size()) acc.weight.assign(model.weight.size(), 0.0);
  if (acc.bias.size() != model.bias.size()) acc.bias.assign(model.bias.size(), 0.0);

  for (std::size_t o = 0; o < model.d_out; ++o) {
    double gate = upstream[o];
    if (model.nonlinearity == Nonlinearity::Rectify) {
      double pre = model.bias[o];
      const double* row = model.weight.data() + o * model.d_in;
      for (std::size_t i = 0; i < model.d_in; ++i) pre += row[i] * raw[i];
      if (pre <= 0.0) gate = 0.0;
    }
    if (gate == 0.0) continue;
    double* wrow = acc.weight.data() + o * model.d_in;
    for (std::size_t i = 0; i < model.d_in; ++i) wrow[i] += gate * raw[i];
    acc.bias[o] += gate;
  }
}

ParamGrads embed_backward(const LinearEmbedder& model, const FeatureVector& raw,
                          const FeatureVector& upstream) {
  ParamGrads g;
  accumulate_embed_backward(model, raw, upstream, g);
  return g;
}

LabeledFeatureSet embed_dataset(const LinearEmbedder& model, const LabeledFeatureSet& set) {
  LabeledFeatureSet out;
  out.dim = model.d_out;
  out.samples.reserve(set.samples.size());
  for (const auto& s : set.samples) {
    out.samples.push_back({s.label, embed(model, s.values)});
  }
  return out;
}

LinearEmbedder pretrain_ce(const LabeledFeatureSet& base, const LinearEmbedder& model,
                           LinearEmbedder& head, const TrainConfig& config) {
  check_model(model);
  check_model(head);
  if (base.samples.empty()) throw DataError("pretraining needs a nonempty base set");
  if (head.d_in != model.d_out) {
    throw std::invalid_argument("head d_in must equal embedder d_out");
  }
  const std::vector<std::string> labels = base.class_labels();
  if (head.d_out != labels.size()) {
    throw std::invalid_argument("head d_out must equal the number of base classes");
  }
  std::map<std::string, std::size_t> class_index;
  for (std::size_t i = 0; i < labels.size(); ++i) class_index[labels[i]] = i;

  LinearEmbedder trained = model;
  Rng rng(derive_seed(config.seed, 0xce));
  std::vector<std::size_t> order(base.samples.size());
  std::size_t cursor = order.size();  // forces an initial shuffle

  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  for (std::size_t step = 0; step < config.episodes; ++step) {
    ParamGrads model_grads, head_grads;
    std::size_t actual = 0;
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor >= order.size()) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        cursor = 0;
      }
      const Sample& sample = base.samples[order[cursor++]];
      ++actual;

      const FeatureVector h = embed(trained, sample.values);
      const FeatureVector logits = embed(head, h);
      std::vector<double> p = softmax(logits);
      p[class_index[sample.label]] -= 1.0;  // dL/dlogits for one sample

      accumulate_embed_backward(head, h, p, head_grads);
      FeatureVector dh(head.d_in, 0.0);
      for (std::size_t o = 0; o < head.d_out; ++o) {
        const double* row = head.weight.data() + o * head.d_in;
        for (std::size_t i = 0; i < head.d_in; ++i) dh[i] += row[i] * p[o];
      }
      accumulate_embed_backward(trained, sample.values, dh, model_grads);
    }
    const double scale = 1.0 / static_cast<double>(actual);
    for (double& g : model_grads.weight) g *= scale;
    for (double& g : model_grads.bias) g *= scale;
    for (double& g : head_grads.weight) g *= scale;
    for (double& g : head_grads.bias) g *= scale;
    apply_step(trained, model_grads, config.learning_rate);
    apply_step(head, head_grads, config.learning_rate);
  }
  return trained;
}

double head_accuracy(const LabeledFeatureSet& base, const LinearEmbedder& model,
                     const LinearEmbedder& head) {
  const std::vector<std::string> labels = base.class_labels();
  std::size_t correct = 0;
  for (const auto& s : base.samples) {
    const FeatureVector logits = embed(head, embed(model, s.values));
    const std::size_t best = static_cast<std::size_t>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (labels[best] == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(base.samples.size());
}

std::uint64_t eval_task_seed(const TrainConfig& config) {
  return derive_seed(config.seed, kEvalStream);
}

std::pair<LinearEmbedder, TrainLog> train_meta(const LabeledFeatureSet& base,
                                               const LabeledFeatureSet& novel_val,
                                               const LinearEmbedder& model,
                                               const TrainConfig& config) {
  check_model(model);
  if (config.alpha <= 0.0) throw std::invalid_argument("alpha must be > 0");

  LinearEmbedder trained = model;
  TrainLog log;

  ClassifierConfig train_config{MetricSpec::kendall_smooth(config.alpha),
                                config.temperature};
  // Test-time metric is exact Kendall; one fixed task set across evaluations.
  ClassifierConfig eval_config{MetricSpec::kendall_exact(), config.temperature};
  const std::uint64_t eval_seed = eval_task_seed(config);

  auto run_eval = [&](std::size_t episodes_done) {
    const LabeledFeatureSet embedded = embed_dataset(trained, novel_val);
    log.evals.emplace_back(episodes_done,
                           evaluate_tasks(embedded, config.econfig, eval_config,
                                          config.eval_tasks, eval_seed));
  };
  const bool periodic_eval = config.eval_every > 0 && !novel_val.samples.empty();
  if (periodic_eval) run_eval(0);

  for (std::size_t ep = 0; ep < config.episodes; ++ep) {
    const EpisodeTask task = sample_episode(base, config.econfig, derive_seed(config.seed, ep));
    const EmbedFn embed_fn = [&trained](const FeatureVector& v) { return embed(trained, v); };
    const EpisodeGradients grads = episode_loss_backward(task, embed_fn, train_config);
    if (!std::isfinite(grads.loss)) {
      const std::string last = log.losses.empty() ? "none" : format_double(log.losses.back());
      throw NumericalError("non-finite loss at episode " + std::to_string(ep) +
                           " (last finite loss: " + last + ")");
    }

    ParamGrads param_grads;
    for (std::size_t i = 0; i < task.support.size(); ++i) {
      accumulate_embed_backward(trained, task.support[i].values, grads.support[i], param_grads);
    }
    for (std::size_t i = 0; i < task.query.size(); ++i) {
      accumulate_embed_backward(trained, task.query[i].values, grads.query[i], param_grads);
    }
    apply_step(trained, param_grads, config.learning_rate);
    log.losses.push_back(grads.loss);

    if (periodic_eval && ((ep + 1) % config.eval_every == 0 || ep + 1 == config.episodes)) {
      run_eval(ep + 1);
    }
  }

  log.final_snapshot = parameter_digest(trained);
  return {std::move(trained), std::move(log)};
}

std::string checkpoint_to_string(const LinearEmbedder& model) {
  check_model(model);
  std::string out = "linear_embedder 1\n";
  out += std::to_string(model.d_in) + " " + std::to_string(model.d_out) + " " +
         (model.nonlinearity == Nonlinearity::Rectify ? "rectify" : "none") + "\n";
  for (std::size_t o = 0; o < model.d_out; ++o) {
    for (std::size_t i = 0; i < model.d_in; ++i) {
      if (i) out += ' ';
      out += format_double(model.w(o, i));
    }
    out += '\n';
  }
  for (std::size_t o = 0; o < model.d_out; ++o) {
    if (o) out += ' ';
    out += format_double(model.bias[o]);
  }
  out += '\n';
  return out;
}

LinearEmbedder checkpoint_from_string(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    lines.push_back(line);
  }
  if (lines.size() < 3 || lines[0] != "linear_embedder 1") {
    throw DataError("not a linear_embedder checkpoint");
  }

  LinearEmbedder m;
  {
    std::istringstream hdr(lines[1]);
    std::string nl;
    if (!(hdr >> m.d_in >> m.d_out >> nl) || m.d_in < 1 || m.d_out < 1) {
      throw DataError("bad checkpoint header: " + lines[1]);
    }
    if (nl == "rectify") {
      m.nonlinearity = Nonlinearity::Rectify;
    } else if (nl == "none") {
      m.nonlinearity = Nonlinearity::None;
    } else {
      throw DataError("unknown nonlinearity '" + nl + "'");
    }
  }
  if (lines.size() != 2 + m.d_out + 1) {
    throw DataError("checkpoint has " + std::to_string(lines.size() - 2) +
                    " value lines, expected " + std::to_string(m.d_out + 1));
  }

  auto parse_row = [](const std::string& row_text, std::size_t expect,
                      std::vector<double>& out) {
    std::istringstream row(row_text);
    std::string token;
    std::size_t count = 0;
    while (row >> token) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v)) {
        throw DataError("bad checkpoint value '" + token + "'");
      }
      out.push_back(v);
      ++count;
    }
    if (count != expect) {
      throw DataError("checkpoint row has " + std::to_string(count) +
                      " values, expected " + std::to_string(expect));
    }
  };

  m.weight.reserve(m.d_in * m.d_out);
  for (std::size_t o = 0; o < m.d_out; ++o) parse_row(lines[2 + o], m.d_in, m.weight);
  m.bias.reserve(m.d_out);
  parse_row(lines[2 + m.d_out], m.d_out, m.bias);
  return m;
}

void save_checkpoint(const LinearEmbedder& model, const std::string& path,
                     const std::string& provenance_comment) {
  std::string payload;
  if (!provenance_comment.empty()) payload = "# " + provenance_comment + "\n";
  payload += checkpoint_to_string(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << payload;
  if (!out) throw DataError("write failed for " + path);
}

LinearEmbedder load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str());
}

std::string parameter_digest(const LinearEmbedder& model) {
  const std::string bytes = checkpoint_to_string(model);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rankshot
