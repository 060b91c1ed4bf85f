#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <vector>

#include "rankshot/metrics.hpp"
#include "rankshot/rng.hpp"

using namespace rankshot;

namespace {

FeatureVector random_vector(Rng& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  FeatureVector v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Values on a strict grid, randomly permuted: pairwise gaps are multiples of
// `gap`, so the minimum gap is exactly `gap` and there are no ties.
FeatureVector gapped_vector(Rng& rng, std::size_t n, double gap) {
  FeatureVector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i) * gap;
  rng.shuffle(v);
  return v;
}

// Rectified noise: a controlled fraction of exact zeros produces real ties.
FeatureVector tied_vector(Rng& rng, std::size_t n) {
  FeatureVector v(n);
  for (auto& x : v) x = std::max(0.0, rng.uniform(-1.0, 1.0));
  return v;
}

}  // namespace

TEST_CASE("cosine similarity basics") {
  CHECK(cosine_similarity({1, 0}, {1, 0}) == doctest::Approx(1.0));
  CHECK(cosine_similarity({1, 0}, {0, 1}) == doctest::Approx(0.0));
  CHECK(cosine_similarity({1, 2}, {-1, -2}) == doctest::Approx(-1.0));

  SUBCASE("dog/wolf cosine distances") {
    const FeatureVector query{0.8, 0.27, 0.22};
    const double d_dog = 1.0 - cosine_similarity(query, {1, 0.28, 0.2});
    const double d_wolf = 1.0 - cosine_similarity(query, {1, 0.25, 0.28});
    CHECK(d_dog == doctest::Approx(0.0033963612791894082));
    CHECK(d_wolf == doctest::Approx(0.0030789755126958696));
    CHECK(std::abs(d_dog - 0.0034) < 0.0001);
    CHECK(std::abs(d_wolf - 0.0031) < 0.0001);
    CHECK(d_wolf < d_dog);  // cosine prefers the wolf prototype
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(cosine_similarity({1, 0}, {1, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(cosine_similarity({0, 0}, {1, 0}), NumericalError);
    CHECK_THROWS_AS(cosine_similarity({1, 0}, {0, 0}), NumericalError);
  }

  SUBCASE("symmetry and range on random inputs") {
    Rng rng(101);
    for (int c = 0; c < 200; ++c) {
      const auto x = random_vector(rng, 16, -2.0, 2.0);
      const auto y = random_vector(rng, 16, -2.0, 2.0);
      const double s = cosine_similarity(x, y);
      CHECK(s == cosine_similarity(y, x));
      CHECK(s >= -1.0 - 1e-12);
      CHECK(s <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("negative euclidean distance") {
  CHECK(neg_euclidean({1, 2}, {1, 2}) == 0.0);
  CHECK(neg_euclidean({0, 0}, {3, 4}) == doctest::Approx(-5.0));
  CHECK(neg_euclidean({1, 0, 0}, {0, 1, 0}) == doctest::Approx(-1.4142135623730951));
  CHECK_THROWS_AS(neg_euclidean({1}, {1, 2}), std::invalid_argument);

  Rng rng(102);
  for (int c = 0; c < 100; ++c) {
    const auto x = random_vector(rng, 8);
    const auto y = random_vector(rng, 8);
    CHECK(neg_euclidean(x, y) == neg_euclidean(y, x));
    CHECK(neg_euclidean(x, y) <= 0.0);
  }
}

TEST_CASE("exact Kendall tau, naive kernel") {
  CHECK(kendall_tau_naive({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(kendall_tau_naive({1, 2, 3}, {3, 2, 1}) == -1.0);

  SUBCASE("dog/wolf rankings") {
    const FeatureVector query{0.8, 0.27, 0.22};
    CHECK(kendall_tau_naive(query, {1, 0.28, 0.2}) == 1.0);
    CHECK(kendall_tau_naive(query, {1, 0.25, 0.28}) == 1.0 / 3.0);
  }

  SUBCASE("ties count in neither direction but stay in the denominator") {
    CHECK(kendall_tau_naive({1, 1, 2}, {1, 2, 3}) == doctest::Approx(2.0 / 3.0));
    CHECK(kendall_tau_naive({1, 1, 2}, {5, 5, 1}) == doctest::Approx(-2.0 / 3.0));
    CHECK(kendall_tau_naive({1, 1}, {3, 7}) == 0.0);
    CHECK(kendall_tau_naive({2, 2, 2}, {1, 2, 3}) == 0.0);
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(kendall_tau_naive({1.0}, {2.0}), std::invalid_argument);
    CHECK_THROWS_AS(kendall_tau_naive({1, 2}, {1, 2, 3}), std::invalid_argument);
  }

  SUBCASE("invariant under strictly increasing per-vector transforms") {
    Rng rng(103);
    for (int c = 0; c < 50; ++c) {
      const auto x = random_vector(rng, 12);
      const auto y = random_vector(rng, 12);
      FeatureVector scaled = x;
      const double a = rng.uniform(0.1, 5.0);
      const double b = rng.uniform(-3.0, 3.0);
      for (auto& v : scaled) v = a * v + b;
      CHECK(kendall_tau_naive(scaled, y) == kendall_tau_naive(x, y));
      FeatureVector curved = x;
      for (auto& v : curved) v = std::exp(v);  // strictly increasing
      CHECK(kendall_tau_naive(curved, y) == kendall_tau_naive(x, y));
    }
  }
}

TEST_CASE("fast Kendall equals naive Kendall") {
  CHECK(kendall_tau_fast({1, 2, 3, 4}, {2, 1, 4, 3}) == doctest::Approx(1.0 / 3.0));
  CHECK(kendall_tau_fast({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(kendall_tau_fast({1, 1, 2}, {1, 2, 3}) == kendall_tau_naive({1, 1, 2}, {1, 2, 3}));
  CHECK_THROWS_AS(kendall_tau_fast({1.0}, {2.0}), std::invalid_argument);

  SUBCASE("tie-free random sweep") {
    Rng rng(104);
    const std::vector<std::size_t> sizes{8, 16, 64, 256, 1024};
    for (std::size_t n : sizes) {
      for (int c = 0; c < 200; ++c) {
        const auto x = random_vector(rng, n);
        const auto y = random_vector(rng, n);
        CHECK(std::abs(kendall_tau_fast(x, y) - kendall_tau_naive(x, y)) <= 1e-12);
      }
    }
  }

  SUBCASE("tied random sweep (rectified inputs with exact zeros)") {
    Rng rng(105);
    for (int c = 0; c < 300; ++c) {
      const std::size_t n = 2 + static_cast<std::size_t>(rng.below(63));
      const auto x = tied_vector(rng, n);
      const auto y = tied_vector(rng, n);
      CHECK(std::abs(kendall_tau_fast(x, y) - kendall_tau_naive(x, y)) <= 1e-12);
    }
  }

  SUBCASE("coarse integer grids maximize tie groups") {
    Rng rng(106);
    for (int c = 0; c < 300; ++c) {
      const std::size_t n = 2 + static_cast<std::size_t>(rng.below(30));
      FeatureVector x(n), y(n);
      for (auto& v : x) v = static_cast<double>(rng.below(4));
      for (auto& v : y) v = static_cast<double>(rng.below(4));
      CHECK(std::abs(kendall_tau_fast(x, y) - kendall_tau_naive(x, y)) <= 1e-12);
    }
  }
}

TEST_CASE("smooth Kendall forward") {
  const double t05 = std::tanh(0.5);

  CHECK(smooth_kendall({1, 0}, {1, 0}, 0.5) == doctest::Approx(0.21355226703407257));
  CHECK(smooth_kendall({1, 0}, {1, 0}, 0.5) == doctest::Approx(t05 * t05));
  CHECK(smooth_kendall({1, 0}, {0, 1}, 0.5) == doctest::Approx(-0.21355226703407257));
  CHECK(smooth_kendall({3, 3, 3}, {1, 2, 3}, 1.0) == 0.0);

  CHECK_THROWS_AS(smooth_kendall({1, 0}, {1, 0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(smooth_kendall({1, 0}, {1, 0}, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(smooth_kendall({1, 0, 2}, {1, 0}, 0.5), std::invalid_argument);

  SUBCASE("strictly inside (-1, 1), symmetric") {
    Rng rng(107);
    for (int c = 0; c < 100; ++c) {
      const auto x = random_vector(rng, 10);
      const auto y = random_vector(rng, 10);
      const double s = smooth_kendall(x, y, 2.0);
      CHECK(s > -1.0);
      CHECK(s < 1.0);
      CHECK(s == smooth_kendall(y, x, 2.0));
    }
  }

  SUBCASE("no overflow at extreme alpha * difference") {
    const double s = smooth_kendall({1000.0, -1000.0}, {500.0, -500.0}, 1e6);
    CHECK(std::isfinite(s));
    CHECK(s == doctest::Approx(1.0));
  }

  SUBCASE("limit bound: |smooth - exact| <= 4 exp(-2 alpha delta)") {
    Rng rng(108);
    const double delta = 0.05;
    for (const double alpha : {50.0, 100.0, 200.0}) {
      const double bound = 4.0 * std::exp(-2.0 * alpha * delta);
      for (int c = 0; c < 50; ++c) {
        const auto x = gapped_vector(rng, 32, delta);
        const auto y = gapped_vector(rng, 32, delta);
        const double err = std::abs(smooth_kendall(x, y, alpha) - kendall_tau_naive(x, y));
        CHECK(err <= bound);
      }
    }
  }

  SUBCASE("approximation error is non-increasing in alpha on monotone-related pairs") {
    // On concordant (or fully discordant) inputs every pair term approaches
    // its sign limit monotonically, so the total error is monotone in alpha.
    Rng rng(109);
    const std::vector<double> grid{0.1, 0.5, 1.0, 5.0, 10.0, 50.0};
    for (int c = 0; c < 40; ++c) {
      const auto x = gapped_vector(rng, 16, 0.05);
      FeatureVector y = x;
      for (auto& v : y) v = 2.0 * v + 1.0;  // concordant with x
      if (c % 2 == 1) {
        for (auto& v : y) v = -v;  // fully discordant instead
      }
      const double tau = kendall_tau_naive(x, y);
      double prev = std::numeric_limits<double>::infinity();
      for (const double alpha : grid) {
        const double err = std::abs(smooth_kendall(x, y, alpha) - tau);
        CHECK(err <= prev + 1e-15);
        prev = err;
      }
    }
  }
}

TEST_CASE("smooth Kendall gradient") {
  SUBCASE("single-pair closed form") {
    const auto g = smooth_kendall_grad({1, 0}, {1, 0}, 0.5);
    CHECK(g.grad_x[0] == doctest::Approx(0.18171549534589682));
    CHECK(g.grad_x[1] == doctest::Approx(-0.18171549534589682));
    CHECK(g.grad_y[0] == doctest::Approx(0.18171549534589682));
    CHECK(g.grad_y[1] == doctest::Approx(-0.18171549534589682));
  }

  SUBCASE("constant vectors have zero gradient") {
    const auto g = smooth_kendall_grad({2, 2, 2}, {2, 2, 2}, 1.5);
    for (const double v : g.grad_x) CHECK(v == 0.0);
    for (const double v : g.grad_y) CHECK(v == 0.0);
  }

  SUBCASE("central finite differences, 100 random triples") {
    Rng rng(110);
    const std::vector<std::size_t> sizes{2, 8, 64};
    int cases = 0;
    while (cases < 100) {
      const std::size_t n = sizes[cases % sizes.size()];
      const double alpha = rng.uniform(0.2, 4.0);
      auto x = random_vector(rng, n);
      auto y = random_vector(rng, n);
      const auto g = smooth_kendall_grad(x, y, alpha);
      const double h = 1e-4;
      for (std::size_t probe = 0; probe < std::min<std::size_t>(n, 4); ++probe) {
        const std::size_t i = probe * (n / std::min<std::size_t>(n, 4));
        const double keep_x = x[i];
        x[i] = keep_x + h;
        const double up = smooth_kendall(x, y, alpha);
        x[i] = keep_x - h;
        const double dn = smooth_kendall(x, y, alpha);
        x[i] = keep_x;
        const double fd = (up - dn) / (2.0 * h);
        CHECK(std::abs(g.grad_x[i] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));

        const double keep_y = y[i];
        y[i] = keep_y + h;
        const double upy = smooth_kendall(x, y, alpha);
        y[i] = keep_y - h;
        const double dny = smooth_kendall(x, y, alpha);
        y[i] = keep_y;
        const double fdy = (upy - dny) / (2.0 * h);
        CHECK(std::abs(g.grad_y[i] - fdy) <= 1e-5 * std::max(1.0, std::abs(fdy)));
      }
      ++cases;
    }
  }

  SUBCASE("errors mirror the forward kernel") {
    CHECK_THROWS_AS(smooth_kendall_grad({1, 0}, {1, 0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(smooth_kendall_grad({1}, {1}, 0.5), std::invalid_argument);
  }
}

TEST_CASE("pair sampling") {
  SUBCASE("full budget returns the complete pair set") {
    auto pairs = sample_pairs(3, 3, 7);
    std::sort(pairs.begin(), pairs.end());
    const PairList expected{{1, 0}, {2, 0}, {2, 1}};
    CHECK(pairs == expected);
  }

  SUBCASE("budget beyond the population is rejected") {
    CHECK_THROWS_AS(sample_pairs(4, 7, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_pairs(4, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_pairs(1, 1, 1), std::invalid_argument);
  }

  SUBCASE("5n draw at n=640: distinct, valid, reproducible") {
    const auto pairs = sample_pairs(640, 3200, 99);
    CHECK(pairs.size() == 3200);
    std::set<std::pair<std::size_t, std::size_t>> seen(pairs.begin(), pairs.end());
    CHECK(seen.size() == 3200);
    for (const auto& [i, j] : pairs) {
      CHECK(j < i);
      CHECK(i < 640);
    }
    CHECK(sample_pairs(640, 3200, 99) == pairs);
    CHECK(sample_pairs(640, 3200, 100) != pairs);
  }

  SUBCASE("small-population draws cover uniformly") {
    // n=4 has 6 pairs; across many seeds each pair should appear in a
    // 2-of-6 draw with frequency near 1/3.
    std::vector<std::size_t> hits(6, 0);
    auto index_of = [](std::size_t i, std::size_t j) { return i * (i - 1) / 2 + j; };
    const int draws = 3000;
    for (int s = 0; s < draws; ++s) {
      for (const auto& [i, j] : sample_pairs(4, 2, static_cast<std::uint64_t>(s))) {
        ++hits[index_of(i, j)];
      }
    }
    for (const std::size_t h : hits) {
      CHECK(h > draws / 3 - 150);
      CHECK(h < draws / 3 + 150);
    }
  }
}

TEST_CASE("sampled Kendall") {
  SUBCASE("complete set on perfect discordance") {
    const auto pairs = sample_pairs(3, 3, 1);
    CHECK(sampled_kendall({1, 2, 3}, {3, 2, 1}, pairs) == -1.0);
  }

  SUBCASE("hand-picked discordant pairs") {
    const PairList pairs{{1, 0}, {3, 2}};
    CHECK(sampled_kendall({1, 2, 3, 4}, {2, 1, 4, 3}, pairs) == -1.0);
  }

  SUBCASE("ties count in neither direction") {
    const PairList pairs{{1, 0}};
    CHECK(sampled_kendall({1, 1}, {2, 3}, pairs) == 0.0);
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(sampled_kendall({1, 2}, {1, 2}, {}), std::invalid_argument);
    const PairList bad{{5, 0}};
    CHECK_THROWS_AS(sampled_kendall({1, 2}, {1, 2}, bad), std::invalid_argument);
  }

  SUBCASE("complete pair set reproduces the naive value bit for bit") {
    Rng rng(111);
    for (int c = 0; c < 20; ++c) {
      const std::size_t n = 4 + static_cast<std::size_t>(rng.below(29));
      const auto x = random_vector(rng, n);
      const auto y = random_vector(rng, n);
      const auto pairs = sample_pairs(n, n * (n - 1) / 2, static_cast<std::uint64_t>(c));
      CHECK(sampled_kendall(x, y, pairs) == kendall_tau_naive(x, y));
    }
  }

  SUBCASE("mean over 100 independent 5n draws tracks exact tau, n=640") {
    Rng rng(112);
    const auto x = gapped_vector(rng, 640, 0.01);
    const auto y = gapped_vector(rng, 640, 0.01);
    const double exact = kendall_tau_naive(x, y);
    double mean = 0.0;
    for (int d = 0; d < 100; ++d) {
      mean += sampled_kendall(x, y, sample_pairs(640, 3200, 1000 + static_cast<std::uint64_t>(d)));
    }
    mean /= 100.0;
    CHECK(std::abs(mean - exact) <= 0.05);
  }
}

TEST_CASE("metric spec parsing and dispatch") {
  SUBCASE("grammar round-trips") {
    CHECK(MetricSpec::parse("cosine").kind == MetricKind::Cosine);
    CHECK(MetricSpec::parse("negeuclid").kind == MetricKind::NegEuclidean);
    CHECK(MetricSpec::parse("kendall").kind == MetricKind::KendallExact);

    const auto smooth = MetricSpec::parse("kendall-smooth:2.5");
    CHECK(smooth.kind == MetricKind::KendallSmooth);
    CHECK(smooth.alpha == doctest::Approx(2.5));
    CHECK(MetricSpec::parse("kendall-smooth").alpha == doctest::Approx(0.5));

    const auto sampled = MetricSpec::parse("kendall-sampled:320:17");
    CHECK(sampled.kind == MetricKind::KendallSampled);
    CHECK(sampled.pair_budget == 320);
    CHECK(sampled.sampler_seed == 17);
    CHECK(MetricSpec::parse("kendall-sampled:64").sampler_seed == 0);

    for (const char* text : {"cosine", "negeuclid", "kendall", "kendall-smooth:2.5",
                             "kendall-sampled:320:17"}) {
      CHECK(MetricSpec::parse(MetricSpec::parse(text).to_string()).to_string() ==
            MetricSpec::parse(text).to_string());
    }
  }

  SUBCASE("invalid strings are usage errors") {
    for (const char* text : {"", "kendal", "cosine:1", "kendall-smooth:0",
                             "kendall-smooth:-1", "kendall-sampled",
                             "kendall-sampled:0", "kendall-sampled:x", "spearman"}) {
      CHECK_THROWS_AS(MetricSpec::parse(text), std::invalid_argument);
    }
  }

  SUBCASE("dispatch") {
    CHECK(similarity(MetricSpec::cosine(), {1, 0}, {1, 0}) == doctest::Approx(1.0));
    CHECK(similarity(MetricSpec::kendall_exact(), {1, 2, 3}, {3, 2, 1}) == -1.0);
    CHECK(similarity(MetricSpec::kendall_smooth(0.5), {1, 0}, {1, 0}) ==
          doctest::Approx(0.21355226703407257));
    CHECK(similarity(MetricSpec::neg_euclidean(), {0, 0}, {3, 4}) == doctest::Approx(-5.0));
  }

  SUBCASE("exact dispatch agrees with both exact kernels") {
    Rng rng(113);
    for (int c = 0; c < 50; ++c) {
      const auto x = random_vector(rng, 32);
      const auto y = random_vector(rng, 32);
      CHECK(similarity(MetricSpec::kendall_exact(), x, y) == kendall_tau_fast(x, y));
    }
  }

  SUBCASE("sampled dispatch: fresh draw per call index, frozen when requested") {
    Rng rng(114);
    const auto x = random_vector(rng, 64);
    const auto y = random_vector(rng, 64);

    const auto fresh = MetricSpec::kendall_sampled(32, 5);
    const double a0 = similarity(fresh, x, y, 0);
    const double a1 = similarity(fresh, x, y, 1);
    CHECK(similarity(fresh, x, y, 0) == a0);  // same call index, same value
    bool any_difference = (a0 != a1);
    for (std::uint64_t k = 2; k < 10 && !any_difference; ++k) {
      any_difference = (similarity(fresh, x, y, k) != a0);
    }
    CHECK(any_difference);

    auto frozen = MetricSpec::kendall_sampled(32, 5, /*freeze=*/true);
    const double f0 = similarity(frozen, x, y, 0);
    for (std::uint64_t k = 1; k < 10; ++k) CHECK(similarity(frozen, x, y, k) == f0);
  }

  SUBCASE("full-budget sampled dispatch equals exact") {
    Rng rng(115);
    const auto x = random_vector(rng, 16);
    const auto y = random_vector(rng, 16);
    const auto spec = MetricSpec::kendall_sampled(16 * 15 / 2, 3);
    CHECK(similarity(spec, x, y, 4) == kendall_tau_naive(x, y));
  }
}
