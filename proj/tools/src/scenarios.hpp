#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"

namespace starlab::cli {

inline constexpr const char* kVersion = "starlab 0.3.0";

struct RunReport {
  std::vector<std::string> events;     // growth, collapse, invariant breaks, early stops
  std::vector<std::string> outputs;    // files written, relative to the output directory
  nlohmann::json summary;              // acceptance-relevant numbers
  std::string text;                    // human-readable report
  bool failed = false;                 // verify scenario: some criterion failed
  std::string error;                   // "module: message" when a stage threw
};

// Runs the pipeline for one validated configuration and writes artifacts
// plus manifest.json into out_dir. Library errors are caught and reported
// with the stage that raised them.
RunReport run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir);

}  // namespace starlab::cli
