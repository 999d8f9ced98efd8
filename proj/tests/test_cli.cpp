#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "config.hpp"
#include "output.hpp"
#include "scenarios.hpp"

using namespace starlab;
using namespace starlab::cli;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> errors_of(const std::string& raw, std::optional<Scenario> s = std::nullopt) {
  ValidationResult v = validate_config(raw, s);
  if (auto* e = std::get_if<std::vector<std::string>>(&v)) return *e;
  return {};
}

bool mentions(const std::vector<std::string>& errs, const std::string& needle) {
  for (const auto& e : errs) {
    if (e.find(needle) != std::string::npos) return true;
  }
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("starlab_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, DefaultsAreValidWithExampleIndices) {
  ValidationResult v = validate_config("{}", Scenario::EvolveThermo);
  ASSERT_TRUE(std::holds_alternative<ScenarioConfig>(v));
  const ScenarioConfig& c = std::get<ScenarioConfig>(v);
  EXPECT_EQ(c.weights.r1, 0.5);
  EXPECT_EQ(c.weights.r2, -0.5);
  EXPECT_EQ(c.weights.l1, -2.5);
  EXPECT_EQ(c.weights.l2, -2.0);
  EXPECT_EQ(c.weights.r_frak, -1.5);
  EXPECT_EQ(c.weights.r3, -2.5);
  EXPECT_EQ(c.scenario, Scenario::EvolveThermo);
}

TEST(Config, IsentropicExponentOutOfRange) {
  EXPECT_TRUE(mentions(errors_of(R"({"weights": {"a": 1.5}})", Scenario::EvolveLinear), "0 < a < 1"));
}

TEST(Config, ThermoGate) {
  EXPECT_TRUE(mentions(errors_of(R"({"model": {"K": 1, "c_nu": 2}})", Scenario::EvolveThermo), "3K - c_nu = 0"));
  EXPECT_TRUE(errors_of(R"({"model": {"K": 1, "c_nu": 3}})", Scenario::EvolveThermo).empty());
}

TEST(Config, ThermoWeightConstraintsOnlyForThermo) {
  const std::string raw = R"({"weights": {"l1": 5.0}})";
  EXPECT_FALSE(errors_of(raw, Scenario::EvolveThermo).empty());
  EXPECT_TRUE(errors_of(raw, Scenario::EvolveLinear).empty());
}

TEST(Config, ReportsEveryProblemAtOnce) {
  const auto errs = errors_of(R"({"grid": {"cells": 2}, "model": {"a0": -1}, "weights": {"a": 2}, "extra": 1})",
                              Scenario::EvolveLinear);
  EXPECT_GE(errs.size(), 4u);
  EXPECT_TRUE(mentions(errs, "cells >= 4"));
  EXPECT_TRUE(mentions(errs, "a0 > 0"));
  EXPECT_TRUE(mentions(errs, "0 < a < 1"));
  EXPECT_TRUE(mentions(errs, "unknown key"));
}

TEST(Config, TypeErrorsAndSyntax) {
  EXPECT_FALSE(errors_of(R"({"model": {"delta": "big"}})", Scenario::Profile).empty());
  EXPECT_FALSE(errors_of("{not json", Scenario::Profile).empty());
}

TEST(Config, SelfSimilarNeedsNegativeDelta) {
  EXPECT_TRUE(mentions(errors_of(R"({"model": {"delta": 0}})", Scenario::EvolveSS), "delta < 0"));
  EXPECT_TRUE(errors_of(R"({"model": {"delta": -0.001}})", Scenario::EvolveSS).empty());
}

TEST(Config, NegativeAmplitudeRejected) {
  EXPECT_TRUE(mentions(errors_of(R"({"perturbation": {"theta0": {"family": "constant", "amplitude": -1}}})",
                                 Scenario::EvolveLinear),
                       "amplitude >= 0"));
}

TEST(Config, ScenarioNames) {
  for (Scenario s : {Scenario::Profile, Scenario::Expansion, Scenario::Phase, Scenario::EvolveSS,
                     Scenario::EvolveLinear, Scenario::EvolveThermo, Scenario::Verify}) {
    EXPECT_EQ(scenario_from_string(to_string(s)), s);
  }
  EXPECT_FALSE(scenario_from_string("warp"));
}

TEST(Config, RoundTripThroughJson) {
  ValidationResult v = validate_config(R"({"model": {"delta": -0.001}, "seed": 9})", Scenario::EvolveSS);
  ASSERT_TRUE(std::holds_alternative<ScenarioConfig>(v));
  const std::string dumped = std::get<ScenarioConfig>(v).to_json().dump();
  ValidationResult again = validate_config(dumped, Scenario::EvolveSS);
  ASSERT_TRUE(std::holds_alternative<ScenarioConfig>(again)) << dumped;
  EXPECT_EQ(std::get<ScenarioConfig>(again).to_json(), std::get<ScenarioConfig>(v).to_json());
}

TEST(Config, SeedFoldsIntoShapes) {
  ShapeSpec s;
  s.family = Family::RandomSmooth;
  EXPECT_NE(seeded(s, 1, 0).seed, seeded(s, 2, 0).seed);
  EXPECT_NE(seeded(s, 1, 0).seed, seeded(s, 1, 1).seed);
  EXPECT_EQ(seeded(s, 5, 2).seed, seeded(s, 5, 2).seed);
}

TEST(Output, CsvIsFullPrecisionAndChecksWidth) {
  CsvTable t({"a", "b"});
  t.add({0.1, 1.0 / 3.0});
  EXPECT_THROW(t.add({1.0}), std::exception);
  const fs::path dir = scratch("csv");
  t.write(dir / "t.csv");
  std::istringstream is(slurp(dir / "t.csv"));
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header, "a,b");
  const double b = std::stod(row.substr(row.find(',') + 1));
  EXPECT_EQ(b, 1.0 / 3.0);
}

TEST(Output, SvgIsWellFormedAndHandlesDegenerateRanges) {
  const std::string flat = line_chart_svg({"t", "x", "y", false}, {{"s", {0, 1, 2}, {1e-3, 1e-3, 1e-3}}});
  EXPECT_EQ(flat.rfind("<svg", 0), 0u);
  EXPECT_NE(flat.find("</svg>"), std::string::npos);
  const std::string log = line_chart_svg({"t", "x", "y", true}, {{"s", {0, 1}, {0.0, -1.0}}});
  EXPECT_NE(log.find("</svg>"), std::string::npos);
  const std::string esc = line_chart_svg({"a < b & c", "x", "y", false}, {});
  EXPECT_NE(esc.find("a &lt; b &amp; c"), std::string::npos);
}

TEST(Scenario, ZeroAmplitudeSelfSimilarRunStaysAtRoundoff) {
  ValidationResult v = validate_config(R"({"model": {"delta": -0.001}, "run": {"end": 0.5, "emit_every": 0.25},
                                         "grid": {"cells": 20}})",
                                       Scenario::EvolveSS);
  ASSERT_TRUE(std::holds_alternative<ScenarioConfig>(v));
  const fs::path dir = scratch("zero");
  const RunReport r = run_scenario(std::get<ScenarioConfig>(v), dir);
  ASSERT_TRUE(r.error.empty()) << r.error;
  EXPECT_TRUE(r.events.empty());
  EXPECT_LT(r.summary["omega_max"].get<double>(), 1e-12);
  std::istringstream is(slurp(dir / "snapshots.csv"));
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');  // clock
    std::getline(ls, cell, ',');  // x
    while (std::getline(ls, cell, ',')) EXPECT_LT(std::abs(std::stod(cell)), 1e-12);
  }
  for (const char* f : {"energy.csv", "energy_schema.json", "physical.csv", "manifest.json", "omega.svg"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
}

TEST(Scenario, PhaseWritesNineTrajectoriesAndPortrait) {
  ValidationResult v = validate_config(R"({"run": {"end": 4.0}})", Scenario::Phase);
  ASSERT_TRUE(std::holds_alternative<ScenarioConfig>(v));
  const fs::path dir = scratch("phase");
  const RunReport r = run_scenario(std::get<ScenarioConfig>(v), dir);
  ASSERT_TRUE(r.error.empty()) << r.error;
  for (int k = 0; k < 9; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "trajectory_%02d.csv", k);
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  EXPECT_TRUE(fs::exists(dir / "portrait.svg"));
  const auto fates = nlohmann::json::parse(slurp(dir / "fates.json"));
  EXPECT_EQ(fates.size(), 9u);
}

TEST(Scenario, ReproducibleOutputs) {
  const std::string raw = R"({"model": {"delta": -0.001}, "run": {"end": 0.5, "emit_every": 0.25},
                             "grid": {"cells": 20},
                             "perturbation": {"theta0": {"family": "random-smooth", "amplitude": 1},
                                              "omega": 0.001}, "seed": 3})";
  ValidationResult v = validate_config(raw, Scenario::EvolveSS);
  ASSERT_TRUE(std::holds_alternative<ScenarioConfig>(v));
  const fs::path a = scratch("rep_a"), b = scratch("rep_b");
  ScenarioConfig c = std::get<ScenarioConfig>(v);
  run_scenario(c, a);
  run_scenario(c, b);
  for (const char* f : {"snapshots.csv", "energy.csv", "physical.csv", "manifest.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(Scenario, LibraryErrorsCarryTheirStage) {
  ValidationResult v = validate_config(R"({"model": {"delta": -0.02}})", Scenario::Profile);
  ASSERT_TRUE(std::holds_alternative<ScenarioConfig>(v));
  const RunReport r = run_scenario(std::get<ScenarioConfig>(v), scratch("err"));
  EXPECT_EQ(r.error.rfind("profile: ", 0), 0u) << r.error;
}
