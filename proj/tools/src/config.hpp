#pragma once

// Scenario configuration: one JSON document, validated in full before any
// computation starts.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "starlab/functionals.hpp"
#include "starlab/lagrangian.hpp"

namespace starlab::cli {

enum class Scenario { Profile, Expansion, Phase, EvolveSS, EvolveLinear, EvolveThermo, Verify };

std::string_view to_string(Scenario s);
std::optional<Scenario> scenario_from_string(std::string_view name);

struct ModelBlock {
  double delta = 0.0;
  double a0 = 1.0;
  std::optional<double> a1;  // defaults to the escape speed for evolve-ss, 1 otherwise
  double K = 1.0;
  double epsilon = 0.25;
  std::optional<double> c_nu;  // defaults to 3K
  double mu = 1.0;
  double central_density = 1.0;
  std::string profile = "isentropic";  // profile scenario: isentropic | thermo
};

struct GridBlock {
  std::size_t cells = 100;          // Lagrangian cells
  std::size_t profile_cells = 400;  // stored profile nodes
  double rtol = 1e-10;
  double atol = 1e-10;
};

struct RunBlock {
  double end = 10.0;         // t (expansion), s (phase, evolve-ss) or tau
  double emit_every = 0.5;   // snapshot cadence in the run clock
  double dt_max = 0.05;
  double cfl = 0.5;
  double max_rel_change = 1e-3;
  std::optional<double> fixed_dt;
  double dt_floor = 1e-12;
  std::optional<double> growth_threshold;
};

struct PerturbationBlock {
  ShapeSpec theta0;
  ShapeSpec theta1;
  ShapeSpec zeta0;
  std::optional<double> omega;  // rescale all components so amplitude() = omega
  bool negative_energy = false; // evolve-ss: theta1 built from theta0 with E < 0
};

struct PhaseBlock {
  double delta = -0.5;
  std::vector<std::pair<double, double>> initial;  // empty: 3 x 3 default grid
};

struct ScenarioConfig {
  Scenario scenario = Scenario::Profile;
  ModelBlock model;
  GridBlock grid;
  RunBlock run;
  PerturbationBlock perturbation;
  WeightSpec weights;
  PhaseBlock phase;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  nlohmann::json to_json() const;
};

using ValidationResult = std::variant<ScenarioConfig, std::vector<std::string>>;

// Parses and checks a JSON document. The scenario given on the command line
// (if any) overrides a "scenario" key. Returns every problem found, each
// naming the violated constraint.
ValidationResult validate_config(std::string_view raw,
                                 std::optional<Scenario> scenario = std::nullopt);

// The shape spec with the run seed folded in (component index k keeps the
// components independent).
ShapeSpec seeded(const ShapeSpec& s, std::uint64_t seed, int k);

}  // namespace starlab::cli
