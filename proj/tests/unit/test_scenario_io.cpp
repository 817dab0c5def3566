#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "hrigame/errors.hpp"
#include "hrigame/scenario_io.hpp"
#include "test_support.hpp"

namespace hrigame {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kScenarioDir = fs::path(HRIGAME_SOURCE_DIR) / "scenarios";

json desk_document() { return to_json({testing::desk_scenario(), std::nullopt}); }

std::string error_of(const json& doc) {
  try {
    parse_scenario(doc);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

TEST(ScenarioIo, DeskScenarioRoundTrips) {
  const ScenarioFile file{testing::desk_scenario(ControllerKind::ncgt, 0.3),
                          SweepSpec{SweepParameter::r_r, {5e-5, 1e-4, 1e-3}}};
  EXPECT_EQ(parse_scenario(to_json(file)), file);
  EXPECT_EQ(parse_scenario_text(to_json(file).dump()), file);
}

TEST(ScenarioIo, BundledScenariosRoundTrip) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(kScenarioDir)) {
    if (entry.path().extension() != ".json") continue;
    const ScenarioFile file = load_scenario(entry.path());
    EXPECT_EQ(parse_scenario(to_json(file)), file) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 12);
}

TEST(ScenarioIo, BundledDeskScenarioMatchesFixture) {
  const ScenarioFile file = load_scenario(kScenarioDir / "desk_cgt_a05.json");
  EXPECT_EQ(file.scenario, testing::desk_scenario(ControllerKind::cgt, 0.5));
  EXPECT_FALSE(file.sweep.has_value());

  const ScenarioFile sim3 = load_scenario(kScenarioDir / "sim3_lqr.json");
  ASSERT_TRUE(sim3.sweep.has_value());
  EXPECT_EQ(sim3.sweep->param, SweepParameter::r_r);
  EXPECT_EQ(sim3.sweep->values, (std::vector<double>{5e-5, 1e-4, 1e-3}));
}

TEST(ScenarioIo, MatricesAreRowMajor) {
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const json j = matrix_to_json(m);
  EXPECT_EQ(j.at("rows"), 2);
  EXPECT_EQ(j.at("cols"), 3);
  EXPECT_EQ(j.at("data"), json({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}));
  EXPECT_TRUE(same_matrix(matrix_from_json(j, "m"), m));
}

TEST(ScenarioIo, OptionalFieldsTakeDefaults) {
  json doc = desk_document();
  doc.erase("dt");
  doc.erase("initial_state");
  doc.erase("cost_window");
  const Scenario s = parse_scenario(doc).scenario;
  EXPECT_EQ(s.dt, kDefaultDt);
  EXPECT_EQ(s.initial_state, State::zero(1));
  EXPECT_EQ(s.cost_window, (TimeWindow{0.0, 3.5}));
}

TEST(ScenarioIo, MissingFieldsAreNamed) {
  json doc = desk_document();
  doc["plant"].erase("inertia");
  EXPECT_EQ(error_of(doc), "plant.inertia: missing field");

  doc = desk_document();
  doc["robot"].erase("r_self");
  EXPECT_EQ(error_of(doc), "robot.r_self: missing field");

  doc = desk_document();
  doc.erase("controller");
  EXPECT_EQ(error_of(doc), "controller: missing field");
}

TEST(ScenarioIo, BadValuesAreNamed) {
  json doc = desk_document();
  doc["plant"]["damping"]["data"] = json::array({1.0, 2.0});
  EXPECT_NE(error_of(doc).find("plant.damping"), std::string::npos);

  doc = desk_document();
  doc["alpha"] = "half";
  EXPECT_NE(error_of(doc).find("alpha"), std::string::npos);

  doc = desk_document();
  doc["human"]["r_self"]["data"] = json::array({-1.0});
  EXPECT_NE(error_of(doc).find("human"), std::string::npos);

  doc = desk_document();
  doc["cost_window"] = json::array({12.0, 20.0});
  EXPECT_NE(error_of(doc).find("cost_window"), std::string::npos);

  doc = desk_document();
  doc["schema"] = "hrigame.scenario/2";
  EXPECT_NE(error_of(doc).find("schema"), std::string::npos);
}

TEST(ScenarioIo, RejectsMalformedDocuments) {
  EXPECT_THROW(parse_scenario_text("{not json"), ValidationError);
  EXPECT_THROW(parse_scenario_text("[]"), ValidationError);
  EXPECT_THROW(parse_scenario(json{{"schema", "hrigame.scenario/1"}}), ValidationError);
  json doc = desk_document();
  doc["alpha"] = 1.0;
  EXPECT_THROW(parse_scenario(doc), DomainError);
}

TEST(ScenarioIo, MissingFileIsIoError) {
  EXPECT_THROW(load_scenario(kScenarioDir / "does_not_exist.json"), IoError);
}

TEST(FormatDouble, RoundTripsExactly) {
  for (double x : {0.0, 0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.75, 123456789.123456789}) {
    EXPECT_EQ(std::stod(format_double(x)), x) << format_double(x);
  }
  EXPECT_EQ(format_double(0.001), "0.001");
  EXPECT_EQ(format_double(0.75), "0.75");
  EXPECT_EQ(format_double(3.0), "3");
}

TEST(Csv, TrajectoryHeaderAndRows) {
  Scenario s = testing::desk_scenario();
  s.duration = 0.002;
  s.cost_window = {0.0, 0.002};
  const Trajectory t = run_closed_loop(s);
  std::ostringstream out;
  write_trajectory_csv(out, t);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "time,pos_0,vel_0,u_h_0,u_r_0,u_h_nominal_0");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(Csv, CostsAndSummary) {
  std::ostringstream costs;
  write_costs_csv(costs, {1.5, 0.25, {0.0, 3.5}});
  EXPECT_EQ(costs.str(), "j_h,j_r,window_start,window_end\n1.5,0.25,0,3.5\n");

  Scenario s = testing::desk_scenario();
  s.duration = 1.0;
  s.cost_window = {0.0, 1.0};
  const auto results = sweep(s, SweepParameter::alpha, {0.5, 2.0});
  std::ostringstream summary;
  write_summary_csv(summary, results);
  std::istringstream lines(summary.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "value,equilibrium_0,peak_u_h,peak_u_r,j_h,j_r,error");
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("0.5,", 0), 0u);
  EXPECT_EQ(line.back(), ',');
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("2,", 0), 0u);
  EXPECT_NE(line.find("alpha"), std::string::npos);
}

}  // namespace
}  // namespace hrigame
