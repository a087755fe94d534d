#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "bdc/scoring.hpp"
#include "fixtures.hpp"

namespace bdc {
namespace {

const CoclVariant kAll[] = {CoclVariant::exp_avg(), CoclVariant::exp_max(), CoclVariant::exp_min(),
                            CoclVariant::weighted(0.0), CoclVariant::weighted(0.3), CoclVariant::weighted(1.0)};

TEST(Cocl, Examples) {
  EXPECT_DOUBLE_EQ(cocl(0.5, 0, 0, CoclVariant::exp_avg()), 0.5);
  EXPECT_NEAR(cocl(0.5, 1, 1, CoclVariant::exp_avg()), 0.5 * std::exp(1.0), 1e-15);
  EXPECT_NEAR(cocl(0.5, 1, 1, CoclVariant::exp_avg()), 1.35914, 1e-5);
  EXPECT_DOUBLE_EQ(cocl(0.4, 0.2, 0.8, CoclVariant::exp_max()), 0.4 * std::exp(0.8));
  EXPECT_DOUBLE_EQ(cocl(0.4, 0.2, 0.8, CoclVariant::exp_min()), 0.4 * std::exp(0.2));
  EXPECT_DOUBLE_EQ(cocl(0.4, 0.2, 0.8, CoclVariant::weighted(0.3)), std::pow(0.4, 0.3) * std::pow(0.5, 0.7));
}

TEST(Cocl, WeightedDegenerateRows) {
  fixtures::Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double s = fixtures::uniform(rng, 0, 1), a = fixtures::uniform(rng, 0, 1), b = fixtures::uniform(rng, 0, 1);
    EXPECT_EQ(cocl(s, a, b, CoclVariant::weighted(1.0)), s);
    EXPECT_EQ(cocl(s, a, b, CoclVariant::weighted(0.0)), (a + b) / 2.0);
  }
  // 0^0 = 1 on both factors.
  EXPECT_EQ(cocl(0.0, 0.3, 0.3, CoclVariant::weighted(0.0)), 0.3);
  EXPECT_EQ(cocl(0.7, 0.0, 0.0, CoclVariant::weighted(1.0)), 0.7);
}

TEST(Cocl, EqualCornersCollapseExpVariants) {
  for (double m : {0.0, 0.25, 0.5, 1.0}) {
    const double v = cocl(0.6, m, m, CoclVariant::exp_avg());
    EXPECT_EQ(v, cocl(0.6, m, m, CoclVariant::exp_max()));
    EXPECT_EQ(v, cocl(0.6, m, m, CoclVariant::exp_min()));
  }
}

TEST(Cocl, RejectsOutOfRangeInputs) {
  EXPECT_THROW(cocl(1.1, 0, 0, CoclVariant::exp_avg()), std::invalid_argument);
  EXPECT_THROW(cocl(0.5, -0.1, 0, CoclVariant::exp_avg()), std::invalid_argument);
  EXPECT_THROW(cocl(0.5, 0, NAN, CoclVariant::exp_avg()), std::invalid_argument);
  EXPECT_THROW(cocl(0.5, 0, 0, CoclVariant::weighted(1.5)), std::invalid_argument);
}

TEST(Cocl, MonotoneAndBounded) {
  fixtures::Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    double x[3], y[3];
    for (int k = 0; k < 3; ++k) {
      x[k] = fixtures::uniform(rng, 0, 1);
      y[k] = x[k];
    }
    const int axis = static_cast<int>(fixtures::below(rng, 3));
    y[axis] = fixtures::uniform(rng, x[axis], 1.0);
    for (const auto& v : kAll) {
      const double lo = cocl(x[0], x[1], x[2], v);
      EXPECT_LE(lo, cocl(y[0], y[1], y[2], v));
      EXPECT_GE(lo, 0.0);
      EXPECT_LE(lo, v.kind == CoclVariant::Kind::weighted ? 1.0 : std::exp(1.0));
    }
  }
}

std::vector<std::size_t> argsort(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  return idx;
}

TEST(Cocl, FixedCornersPreserveClassificationOrder) {
  fixtures::Rng rng(3);
  // weighted(0) ignores s_cls entirely, so it is left out.
  const CoclVariant variants[] = {CoclVariant::exp_avg(), CoclVariant::exp_max(), CoclVariant::exp_min(),
                                  CoclVariant::weighted(0.3), CoclVariant::weighted(1.0)};
  for (int trial = 0; trial < 200; ++trial) {
    const double a = fixtures::uniform(rng, 0.01, 1), b = fixtures::uniform(rng, 0.01, 1);
    std::vector<double> s(50);
    // Quantized scores produce ties, which must keep their input order.
    for (auto& x : s) x = std::round(fixtures::uniform(rng, 0, 1) * 20) / 20;
    const auto want = argsort(s);
    for (const auto& v : variants) {
      std::vector<double> c;
      for (double x : s) c.push_back(cocl(x, a, b, v));
      EXPECT_EQ(argsort(c), want) << v.to_string();
    }
  }
}

TEST(CoclVariant, ParseAndFormat) {
  EXPECT_EQ(CoclVariant::parse("exp-avg").kind, CoclVariant::Kind::exp_avg);
  EXPECT_EQ(CoclVariant::parse("exp-max").kind, CoclVariant::Kind::exp_max);
  EXPECT_EQ(CoclVariant::parse("exp-min").kind, CoclVariant::Kind::exp_min);
  const auto w = CoclVariant::parse("weighted:0.3");
  EXPECT_EQ(w.kind, CoclVariant::Kind::weighted);
  EXPECT_DOUBLE_EQ(w.alpha, 0.3);
  EXPECT_EQ(w.to_string(), "weighted:0.3");
  EXPECT_THROW(CoclVariant::parse("weighted:"), std::invalid_argument);
  EXPECT_THROW(CoclVariant::parse("weighted:1.5"), std::invalid_argument);
  EXPECT_THROW(CoclVariant::parse("weighted:0.3x"), std::invalid_argument);
  EXPECT_THROW(CoclVariant::parse("mean"), std::invalid_argument);
}

}  // namespace
}  // namespace bdc
