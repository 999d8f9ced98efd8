#include "config.hpp"

#include <cmath>
#include <set>

#include "starlab/error.hpp"
#include "starlab/expansion.hpp"

namespace starlab::cli {

using nlohmann::json;

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::Profile: return "profile";
    case Scenario::Expansion: return "expansion";
    case Scenario::Phase: return "phase";
    case Scenario::EvolveSS: return "evolve-ss";
    case Scenario::EvolveLinear: return "evolve-linear";
    case Scenario::EvolveThermo: return "evolve-thermo";
    case Scenario::Verify: return "verify";
  }
  return "unknown";
}

std::optional<Scenario> scenario_from_string(std::string_view name) {
  for (Scenario s : {Scenario::Profile, Scenario::Expansion, Scenario::Phase, Scenario::EvolveSS,
                     Scenario::EvolveLinear, Scenario::EvolveThermo, Scenario::Verify}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

ShapeSpec seeded(const ShapeSpec& s, std::uint64_t seed, int k) {
  ShapeSpec out = s;
  out.seed = seed * 1000003ULL + s.seed * 31ULL + static_cast<std::uint64_t>(k);
  return out;
}

namespace {

// Reads known keys out of an object, recording type errors and unknown keys.
class Reader {
 public:
  Reader(const json& obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (!obj_.is_object()) errors_.push_back(path_ + ": expected an object");
  }

  ~Reader() {
    if (!obj_.is_object()) return;
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.count(k)) errors_.push_back(path_ + "." + k + ": unknown key");
    }
  }

  void number(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (v->is_number()) out = v->get<double>();
      else errors_.push_back(where(key) + ": expected a number");
    }
  }

  void number(const char* key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) out.reset();
      else if (v->is_number()) out = v->get<double>();
      else errors_.push_back(where(key) + ": expected a number or null");
    }
  }

  template <class Int>
  void integer(const char* key, Int& out) {
    if (const json* v = find(key)) {
      if (v->is_number_integer() && v->get<long long>() >= 0) out = static_cast<Int>(v->get<long long>());
      else errors_.push_back(where(key) + ": expected a non-negative integer");
    }
  }

  void boolean(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (v->is_boolean()) out = v->get<bool>();
      else errors_.push_back(where(key) + ": expected true or false");
    }
  }

  void string(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (v->is_string()) out = v->get<std::string>();
      else errors_.push_back(where(key) + ": expected a string");
    }
  }

  const json* find(const char* key) {
    seen_.insert(key);
    if (!obj_.is_object()) return nullptr;
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string where(const char* key) const { return path_ + "." + key; }

 private:
  const json& obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

void read_shape(const json& j, const std::string& path, ShapeSpec& s, std::vector<std::string>& errors) {
  Reader r(j, path, errors);
  std::string family = std::string(to_string(s.family));
  r.string("family", family);
  try {
    s.family = family_from_string(family);
  } catch (const Error&) {
    errors.push_back(path + ".family: unknown family '" + family +
                     "' (zero, constant, single-bump, random-smooth)");
  }
  r.number("amplitude", s.amplitude);
  r.number("center", s.center);
  r.number("width", s.width);
  r.integer("modes", s.modes);
  r.integer("seed", s.seed);
  if (!(s.amplitude >= 0.0)) errors.push_back(path + ".amplitude: amplitude >= 0");
  if (s.family == Family::Bump && !(s.width > 0.0)) errors.push_back(path + ".width: width > 0");
  if (s.family == Family::RandomSmooth && s.modes < 1) errors.push_back(path + ".modes: modes >= 1");
}

json shape_json(const ShapeSpec& s) {
  return {{"family", std::string(to_string(s.family))}, {"amplitude", s.amplitude},
          {"center", s.center}, {"width", s.width}, {"modes", s.modes}, {"seed", s.seed}};
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json ScenarioConfig::to_json() const {
  json j;
  j["scenario"] = std::string(cli::to_string(scenario));
  j["seed"] = seed;
  j["out"] = out_dir;
  j["model"] = {{"delta", model.delta}, {"a0", model.a0}, {"a1", opt(model.a1)},
                {"K", model.K}, {"epsilon", model.epsilon}, {"c_nu", opt(model.c_nu)},
                {"mu", model.mu}, {"central_density", model.central_density},
                {"profile", model.profile}};
  j["grid"] = {{"cells", grid.cells}, {"profile_cells", grid.profile_cells},
               {"rtol", grid.rtol}, {"atol", grid.atol}};
  j["run"] = {{"end", run.end}, {"emit_every", run.emit_every}, {"dt_max", run.dt_max},
              {"cfl", run.cfl}, {"max_rel_change", run.max_rel_change},
              {"fixed_dt", opt(run.fixed_dt)}, {"dt_floor", run.dt_floor},
              {"growth_threshold", opt(run.growth_threshold)}};
  j["perturbation"] = {{"theta0", shape_json(perturbation.theta0)},
                       {"theta1", shape_json(perturbation.theta1)},
                       {"zeta0", shape_json(perturbation.zeta0)},
                       {"omega", opt(perturbation.omega)},
                       {"negative_energy", perturbation.negative_energy}};
  j["weights"] = {{"a", weights.a}, {"r1", weights.r1}, {"r2", weights.r2}, {"l1", weights.l1},
                  {"l2", weights.l2}, {"r_frak", weights.r_frak}, {"r3", weights.r3}};
  json init = json::array();
  for (const auto& [p, v] : phase.initial) init.push_back({p, v});
  j["phase"] = {{"delta", phase.delta}, {"initial", init}};
  return j;
}

ValidationResult validate_config(std::string_view raw, std::optional<Scenario> scenario) {
  std::vector<std::string> errors;
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::parse_error& e) {
    return std::vector<std::string>{std::string("config is not valid JSON: ") + e.what()};
  }
  ScenarioConfig c;
  {
    Reader top(doc, "config", errors);
    std::string name;
    top.string("scenario", name);
    if (scenario) {
      c.scenario = *scenario;
    } else if (auto s = scenario_from_string(name)) {
      c.scenario = *s;
    } else {
      errors.push_back("config.scenario: unknown or missing scenario '" + name + "'");
    }
    top.integer("seed", c.seed);
    top.string("out", c.out_dir);
    if (const json* m = top.find("model")) {
      Reader r(*m, "model", errors);
      r.number("delta", c.model.delta);
      r.number("a0", c.model.a0);
      r.number("a1", c.model.a1);
      r.number("K", c.model.K);
      r.number("epsilon", c.model.epsilon);
      r.number("c_nu", c.model.c_nu);
      r.number("mu", c.model.mu);
      r.number("central_density", c.model.central_density);
      r.string("profile", c.model.profile);
    }
    if (const json* g = top.find("grid")) {
      Reader r(*g, "grid", errors);
      r.integer("cells", c.grid.cells);
      r.integer("profile_cells", c.grid.profile_cells);
      r.number("rtol", c.grid.rtol);
      r.number("atol", c.grid.atol);
    }
    if (const json* g = top.find("run")) {
      Reader r(*g, "run", errors);
      r.number("end", c.run.end);
      r.number("emit_every", c.run.emit_every);
      r.number("dt_max", c.run.dt_max);
      r.number("cfl", c.run.cfl);
      r.number("max_rel_change", c.run.max_rel_change);
      r.number("fixed_dt", c.run.fixed_dt);
      r.number("dt_floor", c.run.dt_floor);
      r.number("growth_threshold", c.run.growth_threshold);
    }
    if (const json* p = top.find("perturbation")) {
      Reader r(*p, "perturbation", errors);
      if (const json* s = r.find("theta0")) read_shape(*s, "perturbation.theta0", c.perturbation.theta0, errors);
      if (const json* s = r.find("theta1")) read_shape(*s, "perturbation.theta1", c.perturbation.theta1, errors);
      if (const json* s = r.find("zeta0")) read_shape(*s, "perturbation.zeta0", c.perturbation.zeta0, errors);
      r.number("omega", c.perturbation.omega);
      r.boolean("negative_energy", c.perturbation.negative_energy);
    }
    if (const json* w = top.find("weights")) {
      Reader r(*w, "weights", errors);
      r.number("a", c.weights.a);
      r.number("r1", c.weights.r1);
      r.number("r2", c.weights.r2);
      r.number("l1", c.weights.l1);
      r.number("l2", c.weights.l2);
      r.number("r_frak", c.weights.r_frak);
      r.number("r3", c.weights.r3);
    }
    if (const json* ph = top.find("phase")) {
      Reader r(*ph, "phase", errors);
      r.number("delta", c.phase.delta);
      if (const json* init = r.find("initial")) {
        bool ok = init->is_array();
        if (ok) {
          for (const json& e : *init) {
            if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
              c.phase.initial.emplace_back(e[0].get<double>(), e[1].get<double>());
            } else {
              ok = false;
            }
          }
        }
        if (!ok) errors.push_back("phase.initial: expected an array of [phi, phi_s] pairs");
      }
    }
  }

  // numeric constraints
  const ModelBlock& m = c.model;
  auto finite = [&](double v, const char* name) {
    if (!std::isfinite(v)) errors.push_back(std::string(name) + ": must be finite");
  };
  finite(m.delta, "model.delta");
  finite(m.a0, "model.a0");
  if (!(m.a0 > 0.0)) errors.push_back("model.a0: a0 > 0");
  if (!(m.mu > 0.0)) errors.push_back("model.mu: mu > 0");
  if (!(c.grid.cells >= 4)) errors.push_back("grid.cells: cells >= 4");
  if (!(c.grid.profile_cells >= 10)) errors.push_back("grid.profile_cells: profile_cells >= 10");
  if (!(c.grid.rtol > 0.0) || !(c.grid.atol > 0.0)) errors.push_back("grid: rtol > 0 and atol > 0");
  if (!(c.run.end > 0.0)) errors.push_back("run.end: end > 0");
  if (!(c.run.emit_every > 0.0)) errors.push_back("run.emit_every: emit_every > 0");
  if (!(c.run.dt_max > 0.0)) errors.push_back("run.dt_max: dt_max > 0");
  if (!(c.run.cfl > 0.0)) errors.push_back("run.cfl: cfl > 0");
  if (!(c.run.max_rel_change > 0.0)) errors.push_back("run.max_rel_change: max_rel_change > 0");
  if (c.run.fixed_dt && !(*c.run.fixed_dt > 0.0)) errors.push_back("run.fixed_dt: fixed_dt > 0");
  if (c.run.growth_threshold && !(*c.run.growth_threshold > 0.0)) {
    errors.push_back("run.growth_threshold: growth_threshold > 0");
  }
  if (c.perturbation.omega && !(*c.perturbation.omega >= 0.0)) {
    errors.push_back("perturbation.omega: amplitude >= 0");
  }

  const bool thermo = c.scenario == Scenario::EvolveThermo ||
                      (c.scenario == Scenario::Profile && m.profile == "thermo");
  if (c.scenario == Scenario::Profile && m.profile != "isentropic" && m.profile != "thermo") {
    errors.push_back("model.profile: profile is 'isentropic' or 'thermo'");
  }
  if (thermo) {
    const double ek = m.epsilon * m.K;
    if (!(m.K > 0.0)) errors.push_back("model.K: K > 0");
    if (!(ek > 1.0 / 6.0 && ek < 1.0)) errors.push_back("model: 1/6 < epsilon K < 1");
    if (!(m.central_density > 0.0)) errors.push_back("model.central_density: central_density > 0");
  }
  if (c.scenario == Scenario::EvolveThermo) {
    const double c_nu = m.c_nu.value_or(3.0 * m.K);
    if (!thermo_expansion_gate(m.K, c_nu)) errors.push_back("model: 3K - c_nu = 0");
    if (m.delta != 0.0) errors.push_back("model.delta: delta = 0 for the thermodynamic regime");
    if (!(m.a1.value_or(1.0) > 0.0)) errors.push_back("model.a1: a1 > 0");
  }
  if (c.scenario == Scenario::EvolveSS) {
    if (!(m.delta < 0.0)) errors.push_back("model.delta: delta < 0 for self-similar expansion");
    if (m.a1 && m.delta < 0.0) {
      const double star = std::sqrt(2.0 * std::abs(m.delta) / m.a0);
      if (std::abs(*m.a1 - star) > 1e-12 * star) errors.push_back("model.a1: a1 = sqrt(2|delta|/a0)");
    }
  }
  if (c.scenario == Scenario::EvolveLinear && m.delta <= 0.0) {
    const double a1 = m.a1.value_or(1.0);
    const double star = std::sqrt(2.0 * std::abs(m.delta) / m.a0);
    if (!(a1 > star)) errors.push_back("model.a1: a1 > sqrt(2|delta|/a0) for linear expansion");
  }
  if (c.scenario == Scenario::Phase && !(c.phase.delta < 0.0)) {
    errors.push_back("phase.delta: delta < 0");
  }
  if (c.scenario == Scenario::Phase) {
    for (const auto& [p, v] : c.phase.initial) {
      if (!(1.0 + p > 0.0)) errors.push_back("phase.initial: 1 + phi > 0");
    }
  }
  if (c.perturbation.negative_energy && c.scenario != Scenario::EvolveSS) {
    errors.push_back("perturbation.negative_energy: only for evolve-ss");
  }
  for (const std::string& v : weight_violations(c.weights, false)) errors.push_back("weights: " + v);
  if (c.scenario == Scenario::EvolveThermo) {
    for (const std::string& v : weight_violations(c.weights, true)) errors.push_back("weights: " + v);
  }

  if (!errors.empty()) return errors;
  return c;
}

}  // namespace starlab::cli
