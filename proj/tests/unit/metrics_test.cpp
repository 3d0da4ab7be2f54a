#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "trajagent/error.hpp"
#include "trajagent/metrics.hpp"

namespace trajagent {
namespace {

TEST(Metrics, TopkHandExample) {
  const std::vector<Prediction> preds = {{{3, 1, 2}, {}}, {{0}, {}}, {{5, 6}, {}}};
  const std::vector<Id> truths = {2, 0, 7};
  EXPECT_DOUBLE_EQ(topk_rate(preds, truths, 1).value, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(topk_rate(preds, truths, 3).value, 2.0 / 3.0);
}

TEST(Metrics, RegressionHandExample) {
  const std::vector<double> p = {1, 2, 3}, t = {2, 2, 5};
  EXPECT_DOUBLE_EQ(mae(p, t).value, 1.0);
  EXPECT_DOUBLE_EQ(rmse(p, t).value, std::sqrt(5.0 / 3.0));
  EXPECT_EQ(mae(p, t).direction, MetricDirection::kLowerBetter);
}

TEST(Metrics, AucWithTies) {
  const std::vector<double> s = {0.9, 0.5, 0.5, 0.1};
  const std::vector<int> l = {1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(auc(s, l).value, (1 + 1 + 0.5 + 1) / 4.0);
}

TEST(Metrics, JsdBounds) {
  const std::vector<double> p = {1, 0}, q = {0, 1}, r = {2, 2};
  EXPECT_DOUBLE_EQ(jsd(p, q).value, 1.0);
  EXPECT_DOUBLE_EQ(jsd(r, r).value, 0.0);
}

TEST(Metrics, PointAccuracyModes) {
  const std::vector<std::vector<Id>> p = {{1, 2}, {1, 1, 1, 1}}, t = {{1, 3}, {1, 1, 1, 1}};
  EXPECT_DOUBLE_EQ(mean_point_accuracy(p, t, AccuracyMode::kPerSequence).value, 0.75);
  EXPECT_DOUBLE_EQ(mean_point_accuracy(p, t, AccuracyMode::kPooled).value, 5.0 / 6.0);
}

TEST(Metrics, ErrorCodes) {
  const std::vector<double> a = {1}, b = {1, 2};
  const std::vector<int> one_class = {1, 1};
  const std::vector<double> neg = {-1, 2};
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  EXPECT_EQ(code_of([&] { mae(a, b); }), ErrorCode::kLengthMismatch);
  EXPECT_EQ(code_of([&] { mae(std::vector<double>{}, std::vector<double>{}); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(code_of([&] { auc(b, one_class); }), ErrorCode::kOneClassOnly);
  EXPECT_EQ(code_of([&] { jsd(neg, b); }), ErrorCode::kNegativeMass);
}

TEST(Metrics, ParseMetricNames) {
  const auto acc = parse_metric("Acc@10");
  ASSERT_TRUE(acc.has_value());
  EXPECT_EQ(acc->k, 10u);
  EXPECT_EQ(parse_metric("MAE")->direction, MetricDirection::kLowerBetter);
  EXPECT_FALSE(is_known_metric("F1"));
  EXPECT_FALSE(is_known_metric("Acc@0"));
  EXPECT_DOUBLE_EQ(maximize_normalized(3.0, MetricDirection::kLowerBetter), -3.0);
}

TEST(Metrics, AgreeWithIndependentOracles) {
  const auto r = testing::run_metric_oracle_suite(100, 60, 11, 1e-12);
  EXPECT_TRUE(r.ok()) << (r.failures.empty() ? "" : r.failures.front());
  EXPECT_GT(r.checks, 500u);
}

}  // namespace
}  // namespace trajagent
