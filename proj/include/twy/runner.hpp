#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "twy/verify.hpp"

namespace twy {

inline constexpr const char* kToolVersion = "0.3.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GoldenMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Task {
    std::string kind;
    nlohmann::json params = nlohmann::json::object();
};

struct RunConfig {
    ModelSpec<GaussRat> model;
    std::vector<int> m;
    std::optional<Roots<GaussRat>> roots;
    std::vector<Task> tasks;
    SampleConfig sampling;
    Mode mode = Mode::Exact;
    Reading reading = Reading::Amended;
    std::string report;     // empty: stdout
    std::string base_dir;   // golden paths are relative to the config file
    nlohmann::json source;  // the parsed config, echoed into the report
};

struct RunFlags {
    std::optional<uint64_t> seed;
    std::optional<Mode> mode;
    std::optional<Reading> reading;
    std::optional<std::string> report;
    bool regen_golden = false;
};

struct RunOutcome {
    nlohmann::json report;
    bool pass = false;
};

RunConfig parse_config(const nlohmann::json& j, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);
void apply_flags(RunConfig& cfg, const RunFlags& f);
RunOutcome run_config(const RunConfig& cfg, bool regen_golden = false);

// Exact-string golden comparison; throws GoldenMismatch naming the first differing line.
void compare_golden(const std::string& serialized, const std::string& golden_path);

Mode parse_mode(const std::string& s);
Reading parse_reading(const std::string& s);

nlohmann::json to_json(const CheckResult& r);
nlohmann::json to_json(const BetheSolution& s);

}  // namespace twy
