#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "edr/csv.hpp"
#include "edr/report.hpp"
#include "edr/simlab.hpp"

namespace {

using namespace edr;

Sample parse(const std::string& text) {
  std::istringstream in(text);
  return parse_sample_csv(in);
}

TEST(CsvIngest, ParsesWellFormedData) {
  const Sample s = parse("y,x1,x2\n0.5,1,2\n-1e-3, 3.25 ,+4\n\n");
  EXPECT_EQ(s.n(), 2);
  EXPECT_EQ(s.d(), 2);
  EXPECT_EQ(s.y()(1), -1e-3);
  EXPECT_EQ(s.x()(1, 0), 3.25);
  EXPECT_EQ(s.x()(1, 1), 4.0);
  EXPECT_EQ(parse("\xEF\xBB\xBFy,x1\r\n1,2\r\n").x()(0, 0), 2.0);
}

void expect_csv_error(const std::string& text, std::size_t row, std::size_t col) {
  try {
    parse(text);
    FAIL() << "expected CsvError for:\n" << text;
  } catch (const CsvError& e) {
    EXPECT_EQ(e.row(), row) << e.what();
    EXPECT_EQ(e.column(), col) << e.what();
  }
}

TEST(CsvIngest, DiagnosesMalformedInput) {
  expect_csv_error("y,x1\n1,2\n3,abc\n", 3, 2);
  expect_csv_error("y,x1\n1,2\n3\n", 3, 2);
  expect_csv_error("y,x1\n1,2,5\n", 2, 3);
  expect_csv_error("y,x1\n1,nan\n", 2, 2);
  expect_csv_error("y,x1\n1,\n", 2, 2);
  expect_csv_error("response,x1\n1,2\n", 1, 1);
  expect_csv_error("y,x2\n1,2\n", 1, 2);
  expect_csv_error("y\n1\n", 1, 2);
  expect_csv_error("y,x1\n", 2, 1);
  expect_csv_error("", 1, 1);
}

TEST(CsvIngest, SimulatedSampleRoundTrips) {
  const Sample s = generate(make_model("m2"), 9, 64);
  const Sample back = parse(sample_to_csv(s));
  EXPECT_EQ(back.y(), s.y());
  EXPECT_EQ(back.x(), s.x());
}

TEST(AtomicWrite, ReplacesTargetWithoutLeavingTemp) {
  const auto dir = std::filesystem::temp_directory_path() / "edr_atomic_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "out.txt").string();
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  std::ifstream in(path);
  std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(contents, "second");
  EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
  EXPECT_THROW(write_file_atomic((dir / "missing" / "x.txt").string(), "z"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(Report, ConvergenceArtifactsCarryConfiguration) {
  ConvergenceOptions options;
  options.oracle_n = 100000;
  const EstimatorConfig config(0.13, 0.01, 0.05, build_order_r_kernel(8));
  const auto report = run_convergence(make_model("m3"), config, {250, 500}, 20, 21, options);
  const auto json = convergence_json(report, options);
  EXPECT_EQ(json["schema_version"], kSchemaVersion);
  EXPECT_EQ(json["config"]["seed"], 21u);
  EXPECT_EQ(json["config"]["model"]["link"], "m3");
  EXPECT_EQ(json["config"]["estimator"]["kernel_order"], 8);
  EXPECT_EQ(json["grid"].size(), 2u);
  EXPECT_TRUE(json["oracle"]["degenerate"].get<bool>());
  EXPECT_TRUE(json["fluctuation_fit"].is_null());

  const std::string csv = convergence_csv(report, options);
  std::istringstream lines(csv);
  std::string header;
  std::string columns;
  std::getline(lines, header);
  std::getline(lines, columns);
  EXPECT_EQ(header.rfind("# {", 0), 0u);
  EXPECT_NE(header.find("\"seed\":21"), std::string::npos);
  EXPECT_EQ(columns.rfind("n,replicate,status", 0), 0u);
  std::size_t rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  EXPECT_EQ(rows, 40u);
}

TEST(Report, EstimateDocument) {
  const Sample s = generate(make_model("m1"), 4, 400);
  const EstimatorConfig config(0.13, 0.01, 0.05, build_order_r_kernel(8));
  const auto lambda = estimate_lambda(s, config);
  const auto cov = empirical_covariance(s);
  const auto basis = edr_basis(lambda, cov, 2);
  const auto json = estimate_json("data.csv", config, s, lambda, cov, basis);
  EXPECT_EQ(json["schema_version"], kSchemaVersion);
  EXPECT_EQ(json["lambda"].size(), 4u);
  EXPECT_EQ(json["vech_lambda"].size(), 10u);
  EXPECT_EQ(json["beta"].size(), 2u);
  EXPECT_EQ(json["eta"].size(), 4u);
  EXPECT_EQ(json["config"]["estimator"]["c1"], 0.13);
  EXPECT_DOUBLE_EQ(json["h"].get<double>(), lambda.h);
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) EXPECT_EQ(json["lambda"][k][l], json["lambda"][l][k]);
}

}  // namespace
