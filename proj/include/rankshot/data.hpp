#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rankshot/common.hpp"

namespace rankshot {

struct Sample {
  std::string label;
  FeatureVector values;
};

// A labeled embedding collection with one shared dimension.
struct LabeledFeatureSet {
  std::size_t dim = 0;
  std::vector<Sample> samples;

  std::vector<std::string> class_labels() const;  // distinct, ascending
};

// Parameters of the synthetic generator. Every class shares one set of
// `core_channels_per_class` large-valued channels; class identity lives in the
// per-class pattern of the remaining "minor" channels inside
// [minor_low, minor_high]. The base split draws minor patterns over the full
// half-range; the novel split shrinks the spread by (1 - concentration),
// which clusters novel values near the interval midpoint.
struct SyntheticSpec {
  std::size_t class_count = 20;  // per split; base and novel get this many each
  std::size_t samples_per_class = 50;
  std::size_t dim = 64;
  std::size_t core_channels_per_class = 4;
  double core_mean = 1.0;
  double core_std = 0.05;
  double minor_low = 0.1;
  double minor_high = 0.3;
  double noise_std = 0.01;
  double concentration = 0.9;  // novel-split minor spread shrink, in [0, 1]

  void validate() const;
};

struct Histogram {
  std::vector<double> bin_edges;       // bins + 1 edges
  std::vector<std::uint64_t> counts;  // bins entries
};

struct ChannelStats {
  // (a) variance across channels within a sample, averaged over samples.
  double across_channel_mean_variance = 0.0;
  // (b) variance across samples within a channel, averaged over channels.
  double across_sample_mean_variance = 0.0;
  Histogram histogram;
};

// CSV format: one record per line, "label,v1,...,vn", LF endings, no header.
LabeledFeatureSet load_features(const std::string& path);
void save_features(const LabeledFeatureSet& set, const std::string& path);

// Serialization used by save_features; exposed so callers can write
// atomically or embed the payload elsewhere. Decimal output round-trips
// bit-exactly through load_features.
std::string features_to_csv(const LabeledFeatureSet& set);
LabeledFeatureSet features_from_csv(const std::string& text, const std::string& origin);

std::pair<LabeledFeatureSet, LabeledFeatureSet> generate_synthetic(
    const SyntheticSpec& spec, std::uint64_t seed);

// Population (divide-by-N) variance convention throughout.
ChannelStats channel_stats(const LabeledFeatureSet& set, std::size_t bins = 20);

std::pair<LabeledFeatureSet, LabeledFeatureSet> split_classes(
    const LabeledFeatureSet& set, double novel_fraction, std::uint64_t seed);

}  // namespace rankshot
