#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace psd::runner {

enum class ScenarioKind { gaussian, scattering, custom_tree, verify };

const char* to_string(ScenarioKind k);
ScenarioKind scenario_from_string(const std::string& s);

struct GridConfig {
    std::size_t n_cells = 4096;
    double box_length = 320.0;
};

struct PacketConfig {
    double p0 = 10.0;
    double sigma_p = 1.0;
    double x0 = 0.0;
    double mass = 1.0;
    double hbar = 1.0;
};

struct TimeConfig {
    double t_max = 10.0;
    std::size_t n_samples = 64;
};

struct Thresholds {
    double branch_threshold = 1e-3;     // t1 = first sample with w_E <= this
    double w_tolerance = 5e-3;          // grid vs analytic w_E
    double asymptote_tolerance = 1e-3;  // w_E(t_max) vs sqrt(erfc(p0/sigma_p))
    double wf_relative = 0.05;          // log-domain w_F vs the published value
    double probability_tolerance = 1e-6;
    double trajectory_cells = 2.0;      // trajectory error in units of dx
    double final_w = 0.05;
    double jitter = 1e-3;
    double control_tolerance = 1e-10;
    double commutation_tolerance = 1e-6;
    double exact_lane_tolerance = 1e-10;
};

struct ScatteringConfig {
    std::string lane = "free";  // free | well
    double V0 = 2.0;
    double a = 1.0;
    double dt = 0.01;
    double commutation_dt = 0.002;
    double commutation_time = 1.0;
    std::size_t window_cells = 1024;
};

struct VerifyConfig {
    std::size_t finite_trials = 1000;
    std::size_t tree_trials = 500;
    std::size_t certificate_trials = 200;
    std::string inject_fault;  // name of a check whose tolerance is flipped
};

struct TreeStage {
    double t = 0.0;
    std::vector<std::vector<std::size_t>> groups;  // packet indices per element
};

struct CustomTreeConfig {
    std::vector<PacketConfig> packets;
    std::vector<TreeStage> stages;
};

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::gaussian;
    std::uint64_t seed = 1;
    std::string out_dir = "psd_out";
    bool fail_fast = false;
    GridConfig grid;
    PacketConfig packet;
    TimeConfig time;
    Thresholds thresholds;
    ScatteringConfig scattering;
    VerifyConfig verify;
    CustomTreeConfig tree;
};

// Defaults per scenario (and per scattering lane).
ScenarioConfig default_config(ScenarioKind kind, const std::string& lane = "free");

// Strict parse: unknown keys, wrong types and non-finite numbers raise ConfigError.
ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig load_config(const std::string& path);

void validate(const ScenarioConfig& c);

nlohmann::json to_json(const ScenarioConfig& c);

std::vector<double> sample_times(const TimeConfig& t);

// Command-line and environment overrides, applied on top of the config file.
struct Overrides {
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> grid_n;
    std::optional<double> t_max;
    std::optional<bool> fail_fast;
    std::optional<std::size_t> trials;  // all verify trial counts
    std::optional<std::string> inject_fault;
};

void apply_overrides(ScenarioConfig& c, const Overrides& o);

}  // namespace psd::runner
