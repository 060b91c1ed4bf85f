#include "rankshot/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rankshot/rng.hpp"

namespace rankshot {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw DataError("failed to format value");
  return std::string(buf, end);
}

double parse_double(const std::string& token, const std::string& origin,
                    std::size_t line_no) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw DataError(origin + ":" + std::to_string(line_no) + ": bad number '" +
                    token + "'");
  }
  if (!std::isfinite(value)) {
    throw DataError(origin + ":" + std::to_string(line_no) +
                    ": non-finite value '" + token + "'");
  }
  return value;
}

double population_variance(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  return sq / n;
}

}  // namespace

std::vector<std::string> LabeledFeatureSet::class_labels() const {
  std::set<std::string> labels;
  for (const auto& s : samples) labels.insert(s.label);
  return {labels.begin(), labels.end()};
}

LabeledFeatureSet features_from_csv(const std::string& text, const std::string& origin) {
  LabeledFeatureSet set;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      throw DataError(origin + ":" + std::to_string(line_no) + ": empty line");
    }

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() < 2) {
      throw DataError(origin + ":" + std::to_string(line_no) +
                      ": expected 'label,v1,...,vn'");
    }
    if (fields[0].empty()) {
      throw DataError(origin + ":" + std::to_string(line_no) + ": empty label");
    }

    Sample sample;
    sample.label = fields[0];
    sample.values.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      sample.values.push_back(parse_double(fields[i], origin, line_no));
    }

    if (set.samples.empty()) {
      set.dim = sample.values.size();
    } else if (sample.values.size() != set.dim) {
      throw DataError(origin + ":" + std::to_string(line_no) + ": dimension " +
                      std::to_string(sample.values.size()) + " differs from " +
                      std::to_string(set.dim));
    }
    set.samples.push_back(std::move(sample));
  }
  if (set.samples.empty()) {
    throw DataError(origin + ": no samples");
  }
  return set;
}

LabeledFeatureSet load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return features_from_csv(buf.str(), path);
}

std::string features_to_csv(const LabeledFeatureSet& set) {
  if (set.samples.empty()) throw DataError("refusing to save an empty feature set");
  std::string out;
  for (const auto& s : set.samples) {
    if (s.values.size() != set.dim) {
      throw DataError("sample dimension " + std::to_string(s.values.size()) +
                      " differs from set dimension " + std::to_string(set.dim));
    }
    out += s.label;
    for (double v : s.values) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void save_features(const LabeledFeatureSet& set, const std::string& path) {
  const std::string payload = features_to_csv(set);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << payload;
  if (!out) throw DataError("write failed for " + path);
}

void SyntheticSpec::validate() const {
  if (class_count < 1) throw std::invalid_argument("class_count must be >= 1");
  if (samples_per_class < 1) throw std::invalid_argument("samples_per_class must be >= 1");
  if (dim < 2) throw std::invalid_argument("dim must be >= 2");
  if (core_channels_per_class < 1 || core_channels_per_class >= dim) {
    throw std::invalid_argument("core_channels_per_class must be in [1, dim)");
  }
  if (!(minor_low < minor_high)) {
    throw std::invalid_argument("minor_low must be < minor_high");
  }
  if (core_std < 0.0 || noise_std < 0.0) {
    throw std::invalid_argument("standard deviations must be >= 0");
  }
  if (concentration < 0.0 || concentration > 1.0) {
    throw std::invalid_argument("concentration must be in [0, 1]");
  }
}

std::pair<LabeledFeatureSet, LabeledFeatureSet> generate_synthetic(
    const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);

  // One core-channel subset shared by every class of both splits; across
  // classes the large channels coincide, so class identity has to come from
  // the minor channels, which is the regime of interest.
  std::vector<std::size_t> channels(spec.dim);
  for (std::size_t i = 0; i < spec.dim; ++i) channels[i] = i;
  rng.shuffle(channels);
  std::vector<bool> is_core(spec.dim, false);
  for (std::size_t i = 0; i < spec.core_channels_per_class; ++i) {
    is_core[channels[i]] = true;
  }

  const double mid = 0.5 * (spec.minor_low + spec.minor_high);
  const double half = 0.5 * (spec.minor_high - spec.minor_low);

  auto make_split = [&](const std::string& prefix, double spread_scale) {
    LabeledFeatureSet split;
    split.dim = spec.dim;
    // Core levels are drawn once per split and shared across its classes.
    FeatureVector core_level(spec.dim, 0.0);
    for (std::size_t c = 0; c < spec.dim; ++c) {
      if (is_core[c]) core_level[c] = rng.normal(spec.core_mean, spec.core_std);
    }
    for (std::size_t k = 0; k < spec.class_count; ++k) {
      FeatureVector tmpl(spec.dim);
      for (std::size_t c = 0; c < spec.dim; ++c) {
        tmpl[c] = is_core[c] ? core_level[c]
                             : mid + half * spread_scale * rng.uniform(-1.0, 1.0);
      }
      char label[32];
      std::snprintf(label, sizeof(label), "%s%03zu", prefix.c_str(), k);
      for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
        Sample sample;
        sample.label = label;
        sample.values.resize(spec.dim);
        for (std::size_t c = 0; c < spec.dim; ++c) {
          sample.values[c] = tmpl[c] + (spec.noise_std > 0.0
                                            ? rng.normal(0.0, spec.noise_std)
                                            : 0.0);
        }
        split.samples.push_back(std::move(sample));
      }
    }
    return split;
  };

  LabeledFeatureSet base = make_split("base", 1.0);
  LabeledFeatureSet novel = make_split("novel", 1.0 - spec.concentration);
  return {std::move(base), std::move(novel)};
}

ChannelStats channel_stats(const LabeledFeatureSet& set, std::size_t bins) {
  if (set.samples.size() < 2) {
    throw std::invalid_argument("channel statistics need at least 2 samples");
  }
  if (bins < 1) throw std::invalid_argument("histogram needs at least 1 bin");

  ChannelStats stats;
  const std::size_t n_samples = set.samples.size();
  const std::size_t dim = set.dim;

  double acc = 0.0;
  for (const auto& s : set.samples) acc += population_variance(s.values);
  stats.across_channel_mean_variance = acc / static_cast<double>(n_samples);

  double acc2 = 0.0;
  std::vector<double> column(n_samples);
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t i = 0; i < n_samples; ++i) column[i] = set.samples[i].values[c];
    acc2 += population_variance(column);
  }
  stats.across_sample_mean_variance = acc2 / static_cast<double>(dim);

  double lo = set.samples[0].values[0], hi = lo;
  for (const auto& s : set.samples) {
    for (double v : s.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi == lo) hi = lo + 1.0;  // degenerate range: single occupied bin
  stats.histogram.bin_edges.resize(bins + 1);
  stats.histogram.counts.assign(bins, 0);
  for (std::size_t b = 0; b <= bins; ++b) {
    stats.histogram.bin_edges[b] =
        lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
  }
  for (const auto& s : set.samples) {
    for (double v : s.values) {
      auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
      if (b >= bins) b = bins - 1;
      ++stats.histogram.counts[b];
    }
  }
  return stats;
}

std::pair<LabeledFeatureSet, LabeledFeatureSet> split_classes(
    const LabeledFeatureSet& set, double novel_fraction, std::uint64_t seed) {
  if (!(novel_fraction > 0.0 && novel_fraction < 1.0)) {
    throw std::invalid_argument("novel_fraction must be in (0, 1)");
  }
  std::vector<std::string> labels = set.class_labels();
  if (labels.size() < 2) {
    throw DataError("class split needs at least 2 classes");
  }
  Rng rng(seed);
  rng.shuffle(labels);

  auto novel_count = static_cast<std::size_t>(
      std::llround(novel_fraction * static_cast<double>(labels.size())));
  novel_count = std::max<std::size_t>(1, std::min(novel_count, labels.size() - 1));

  std::set<std::string> novel_labels(labels.begin(),
                                     labels.begin() + static_cast<std::ptrdiff_t>(novel_count));
  LabeledFeatureSet base, novel;
  base.dim = novel.dim = set.dim;
  for (const auto& s : set.samples) {
    (novel_labels.count(s.label) ? novel : base).samples.push_back(s);
  }
  return {std::move(base), std::move(novel)};
}

}  // namespace rankshot
