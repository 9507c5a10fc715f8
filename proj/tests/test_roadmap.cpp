#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "qvanet/roadmap.hpp"

using namespace qvanet::roadmap;

namespace {
const std::vector<RoadmapPoint> kDoubling{{0, 1}, {1, 2}, {2, 4}};
}

TEST(QubitsRequired, Formula) {
  EXPECT_EQ(qubits_required(2048), 4099u);
  EXPECT_EQ(qubits_required(1), 5u);
  EXPECT_EQ(qubits_required(4), 11u);
  EXPECT_THROW(qubits_required(0), std::invalid_argument);
}

TEST(FitLinear, ClosedFormValues) {
  const auto p = fit_linear(kDoubling);
  EXPECT_NEAR(p.slope, 1.5, 1e-6);
  EXPECT_NEAR(p.intercept, 0.833333, 1e-6);
}

TEST(FitExponential, ExactOnDoublingData) {
  const auto p = fit_exponential(kDoubling);
  EXPECT_NEAR(p.slope, std::log(2.0), 1e-12);
  EXPECT_NEAR(p.intercept, 0.0, 1e-12);
}

TEST(Fit, RejectsDegenerateInput) {
  EXPECT_THROW(fit_linear({{0, 1}}), std::invalid_argument);
  EXPECT_THROW(fit_exponential({{0, 1}, {1, 0}}), std::invalid_argument);
  EXPECT_THROW(fit_linear({{1, 1}, {1, 2}}), std::invalid_argument);
  EXPECT_THROW(fit_linear({{2, 1}, {1, 2}}), std::invalid_argument);
}

TEST(PredictYear, InverseOfTheFit) {
  const auto exp_fit = fit_exponential(kDoubling);
  EXPECT_NEAR(predict_year(exp_fit, 4099), std::log2(4099.0), 0.01);

  const auto lin_fit = fit_linear(kDoubling);
  EXPECT_NEAR(predict_year(lin_fit, 4099), (4099.0 - 0.833333) / 1.5, 0.01);

  // target equal to an observed point on exactly-fitting data
  EXPECT_NEAR(predict_year(exp_fit, 4.0), 2.0, 1e-9);
}

TEST(PredictYear, RejectsNonGrowingModel) {
  FitParams flat{Model::Linear, 0.0, 5.0};
  EXPECT_THROW(predict_year(flat, 10), std::invalid_argument);
  FitParams shrinking{Model::Exponential, -0.1, 5.0};
  EXPECT_THROW(predict_year(shrinking, 10), std::invalid_argument);
}

TEST(PredictYear, InverseConsistencyProperty) {
  const auto exp_fit = fit_exponential(kDoubling);
  const auto lin_points = std::vector<RoadmapPoint>{{0, 3}, {1, 5}, {2, 7}, {3, 9}};
  const auto lin_fit = fit_linear(lin_points);
  for (double year = 0; year <= 3.0; year += 0.5) {
    EXPECT_NEAR(predict_year(exp_fit, std::exp(exp_fit.intercept + exp_fit.slope * year)), year,
                1e-6);
    EXPECT_NEAR(predict_year(lin_fit, lin_fit.intercept + lin_fit.slope * year), year, 1e-6);
  }
}

TEST(Projection, ConvexDataCrossesExponentialFirst) {
  const std::vector<std::vector<RoadmapPoint>> convex_sets{
      kDoubling,
      {{2019, 27}, {2020, 65}, {2021, 127}, {2022, 433}, {2023, 1121}, {2025, 4158}},
      {{0, 10}, {1, 15}, {2, 40}, {3, 130}, {4, 500}},
  };
  for (const auto& points : convex_sets) {
    const auto exp_year = project(points, Model::Exponential, 4099).predicted_year;
    const auto lin_year = project(points, Model::Linear, 4099).predicted_year;
    EXPECT_LE(exp_year, lin_year);
  }
}

TEST(LoadCsv, ParsesShippedDataset) {
  const auto points = load_csv(std::string(QVANET_DATA_DIR) + "/ibm_roadmap.csv");
  ASSERT_GE(points.size(), 4u);
  for (std::size_t i = 1; i < points.size(); ++i) EXPECT_GT(points[i].year, points[i - 1].year);
  // the shipped dataset accelerates, so the ordering holds on it too
  EXPECT_LE(project(points, Model::Exponential, 4099).predicted_year,
            project(points, Model::Linear, 4099).predicted_year);
}

TEST(LoadCsv, Diagnostics) {
  EXPECT_THROW(load_csv("/nonexistent/file.csv"), std::runtime_error);

  const std::string bad = "/tmp/qvanet_bad_header.csv";
  std::ofstream(bad) << "years,qubits\n2020,100\n";
  EXPECT_THROW(load_csv(bad), std::runtime_error);

  const std::string malformed = "/tmp/qvanet_bad_row.csv";
  std::ofstream(malformed) << "year,qubits\n2020\n";
  EXPECT_THROW(load_csv(malformed), std::runtime_error);
}
