#include "rankshot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "rankshot/rng.hpp"

namespace rankshot {

namespace {

void require_kendall_input(const FeatureVector& x, const FeatureVector& y) {
  require_same_dim(x, y);
  if (x.size() < 2) {
    throw std::invalid_argument("Kendall kernels need dimension >= 2, got " +
                                std::to_string(x.size()));
  }
}

double pair_count(std::size_t n) {
  return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
}

// Strict inversions in v, counted by bottom-up merge sort. Equal elements are
// not inversions (left element is taken first on ties).
std::uint64_t count_inversions(std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<double> buf(n);
  std::uint64_t inversions = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
      const std::size_t mid = lo + width;
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          inversions += mid - i;
          buf[k++] = v[j++];
        } else {
          buf[k++] = v[i++];
        }
      }
      while (i < mid) buf[k++] = v[i++];
      while (j < hi) buf[k++] = v[j++];
      std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
                buf.begin() + static_cast<std::ptrdiff_t>(hi),
                v.begin() + static_cast<std::ptrdiff_t>(lo));
    }
  }
  return inversions;
}

// Sum of g*(g-1)/2 over maximal runs of equal keys; `equal` compares adjacent
// elements of an already grouped (sorted) sequence.
template <typename Equal>
std::uint64_t tied_pairs(std::size_t n, Equal equal) {
  std::uint64_t total = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (equal(i - 1, i)) {
      ++run;
    } else {
      total += static_cast<std::uint64_t>(run) * (run - 1) / 2;
      run = 1;
    }
  }
  total += static_cast<std::uint64_t>(run) * (run - 1) / 2;
  return total;
}

// Map a flat pair index p in [0, n(n-1)/2) to (i, j) with j < i.
std::pair<std::size_t, std::size_t> unrank_pair(std::uint64_t p) {
  auto i = static_cast<std::uint64_t>(
      (1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(p))) / 2.0);
  while (i * (i - 1) / 2 > p) --i;
  while ((i + 1) * i / 2 <= p) ++i;
  return {static_cast<std::size_t>(i), static_cast<std::size_t>(p - i * (i - 1) / 2)};
}

}  // namespace

double cosine_similarity(const FeatureVector& x, const FeatureVector& y) {
  require_same_dim(x, y);
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  if (nx == 0.0 || ny == 0.0) {
    throw NumericalError("cosine similarity of a zero vector is undefined");
  }
  return dot / (std::sqrt(nx) * std::sqrt(ny));
}

double neg_euclidean(const FeatureVector& x, const FeatureVector& y) {
  require_same_dim(x, y);
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    sq += d * d;
  }
  return -std::sqrt(sq);
}

double kendall_tau_naive(const FeatureVector& x, const FeatureVector& y) {
  require_kendall_input(x, y);
  const std::size_t n = x.size();
  std::int64_t concordant_minus_discordant = 0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx > 0.0) {
        if (dy > 0.0)
          ++concordant_minus_discordant;
        else if (dy < 0.0)
          --concordant_minus_discordant;
      } else if (dx < 0.0) {
        if (dy < 0.0)
          ++concordant_minus_discordant;
        else if (dy > 0.0)
          --concordant_minus_discordant;
      }
    }
  }
  return static_cast<double>(concordant_minus_discordant) / pair_count(n);
}

double kendall_tau_fast(const FeatureVector& x, const FeatureVector& y) {
  require_kendall_input(x, y);
  const std::size_t n = x.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  // Pairs tied in x, and tied in both, from runs of the (x, y)-sorted order.
  const std::uint64_t tied_x =
      tied_pairs(n, [&](std::size_t a, std::size_t b) { return x[order[a]] == x[order[b]]; });
  const std::uint64_t tied_xy = tied_pairs(n, [&](std::size_t a, std::size_t b) {
    return x[order[a]] == x[order[b]] && y[order[a]] == y[order[b]];
  });

  std::vector<double> y_in_x_order(n);
  for (std::size_t i = 0; i < n; ++i) y_in_x_order[i] = y[order[i]];
  // Within an x-tie group y is ascending, so group-internal pairs contribute
  // no inversions; the count is exactly the discordant pairs.
  const std::uint64_t discordant = count_inversions(y_in_x_order);

  std::vector<double> y_sorted(y);
  std::sort(y_sorted.begin(), y_sorted.end());
  const std::uint64_t tied_y =
      tied_pairs(n, [&](std::size_t a, std::size_t b) { return y_sorted[a] == y_sorted[b]; });

  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t untied = total - tied_x - tied_y + tied_xy;
  const auto concordant_minus_discordant =
      static_cast<std::int64_t>(untied) - 2 * static_cast<std::int64_t>(discordant);
  return static_cast<double>(concordant_minus_discordant) / pair_count(n);
}

double smooth_kendall(const FeatureVector& x, const FeatureVector& y, double alpha) {
  require_kendall_input(x, y);
  if (alpha <= 0.0) {
    throw std::invalid_argument("smooth Kendall requires alpha > 0");
  }
  const std::size_t n = x.size();
  double sum = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      sum += std::tanh(alpha * (x[i] - x[j])) * std::tanh(alpha * (y[i] - y[j]));
    }
  }
  return sum / pair_count(n);
}

SmoothKendallGrad smooth_kendall_grad(const FeatureVector& x, const FeatureVector& y,
                                      double alpha) {
  require_kendall_input(x, y);
  if (alpha <= 0.0) {
    throw std::invalid_argument("smooth Kendall requires alpha > 0");
  }
  const std::size_t n = x.size();
  const double scale = alpha / pair_count(n);
  SmoothKendallGrad g{FeatureVector(n, 0.0), FeatureVector(n, 0.0)};
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double tx = std::tanh(alpha * (x[i] - x[j]));
      const double ty = std::tanh(alpha * (y[i] - y[j]));
      const double sech2_x = 1.0 - tx * tx;
      const double sech2_y = 1.0 - ty * ty;
      // d/dx_i of the (i, j) term; the j entry gets the opposite sign.
      g.grad_x[i] += scale * sech2_x * ty;
      g.grad_x[j] -= scale * sech2_x * ty;
      g.grad_y[i] += scale * sech2_y * tx;
      g.grad_y[j] -= scale * sech2_y * tx;
    }
  }
  return g;
}

PairList sample_pairs(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (n < 2) {
    throw std::invalid_argument("pair sampling needs dimension >= 2");
  }
  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  if (m < 1 || m > total) {
    throw std::invalid_argument("pair budget " + std::to_string(m) +
                                " out of range [1, " + std::to_string(total) + "]");
  }
  // Partial Fisher-Yates over the virtual array 0..total-1; only displaced
  // slots are materialized, so memory is O(m).
  Rng rng(seed);
  std::unordered_map<std::uint64_t, std::uint64_t> displaced;
  displaced.reserve(2 * m);
  PairList pairs;
  pairs.reserve(m);
  for (std::uint64_t k = 0; k < m; ++k) {
    const std::uint64_t r = k + rng.below(total - k);
    auto value_at = [&](std::uint64_t idx) {
      auto it = displaced.find(idx);
      return it == displaced.end() ? idx : it->second;
    };
    const std::uint64_t picked = value_at(r);
    displaced[r] = value_at(k);
    pairs.push_back(unrank_pair(picked));
  }
  return pairs;
}

double sampled_kendall(const FeatureVector& x, const FeatureVector& y,
                       const PairList& pairs) {
  require_kendall_input(x, y);
  if (pairs.empty()) {
    throw std::invalid_argument("sampled Kendall needs a nonempty pair list");
  }
  const std::size_t n = x.size();
  std::int64_t concordant_minus_discordant = 0;
  for (const auto& [i, j] : pairs) {
    if (i >= n || j >= n) {
      throw std::invalid_argument("pair index out of range for dimension " +
                                  std::to_string(n));
    }
    const double dx = x[i] - x[j];
    const double dy = y[i] - y[j];
    if (dx > 0.0) {
      if (dy > 0.0)
        ++concordant_minus_discordant;
      else if (dy < 0.0)
        --concordant_minus_discordant;
    } else if (dx < 0.0) {
      if (dy < 0.0)
        ++concordant_minus_discordant;
      else if (dy > 0.0)
        --concordant_minus_discordant;
    }
  }
  return static_cast<double>(concordant_minus_discordant) /
         static_cast<double>(pairs.size());
}

double similarity(const MetricSpec& spec, const FeatureVector& x,
                  const FeatureVector& y, std::uint64_t call_index) {
  switch (spec.kind) {
    case MetricKind::Cosine:
      return cosine_similarity(x, y);
    case MetricKind::NegEuclidean:
      return neg_euclidean(x, y);
    case MetricKind::KendallExact:
      return kendall_tau_fast(x, y);
    case MetricKind::KendallSmooth:
      return smooth_kendall(x, y, spec.alpha);
    case MetricKind::KendallSampled: {
      const std::uint64_t draw = spec.freeze_pairs ? 0 : call_index;
      const PairList pairs =
          sample_pairs(x.size(), spec.pair_budget, derive_seed(spec.sampler_seed, draw));
      return sampled_kendall(x, y, pairs);
    }
  }
  throw std::invalid_argument("unknown metric kind");
}

MetricSpec MetricSpec::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t colon = text.find(':', start);
    parts.push_back(text.substr(start, colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  const std::string& name = parts[0];
  auto want_args = [&](std::size_t lo, std::size_t hi) {
    if (parts.size() - 1 < lo || parts.size() - 1 > hi) {
      throw std::invalid_argument("bad metric string: " + text);
    }
  };
  try {
    if (name == "cosine") {
      want_args(0, 0);
      return cosine();
    }
    if (name == "negeuclid") {
      want_args(0, 0);
      return neg_euclidean();
    }
    if (name == "kendall") {
      want_args(0, 0);
      return kendall_exact();
    }
    if (name == "kendall-smooth") {
      want_args(0, 1);
      const double a = parts.size() > 1 ? std::stod(parts[1]) : 0.5;
      if (a <= 0.0) throw std::invalid_argument("alpha must be > 0");
      return kendall_smooth(a);
    }
    if (name == "kendall-sampled") {
      want_args(1, 2);
      const auto budget = static_cast<std::size_t>(std::stoull(parts[1]));
      const std::uint64_t seed = parts.size() > 2 ? std::stoull(parts[2]) : 0;
      if (budget < 1) throw std::invalid_argument("pair budget must be >= 1");
      return kendall_sampled(budget, seed);
    }
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("bad metric string: " + text);
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("bad metric string: " + text);
  }
  throw std::invalid_argument("unknown metric: " + text);
}

std::string MetricSpec::to_string() const {
  switch (kind) {
    case MetricKind::Cosine:
      return "cosine";
    case MetricKind::NegEuclidean:
      return "negeuclid";
    case MetricKind::KendallExact:
      return "kendall";
    case MetricKind::KendallSmooth:
      return "kendall-smooth:" + std::to_string(alpha);
    case MetricKind::KendallSampled:
      return "kendall-sampled:" + std::to_string(pair_budget) + ":" +
             std::to_string(sampler_seed);
  }
  return "?";
}

}  // namespace rankshot
