#pragma once

#include "psd_runner/config.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace psd::runner {

enum class CheckStatus { pass, fail, skip };

const char* to_string(CheckStatus s);

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::skip;
    std::string detail;
    nlohmann::json values = nlohmann::json::object();
};

enum ExitCode : int {
    kExitPass = 0,
    kExitCheckFailed = 2,
    kExitConfig = 3,
    kExitResource = 4,
    kExitAllSkipped = 5,
};

struct RunError {
    std::string kind;  // error kind name, see psd::to_string(ErrorKind)
    std::string message;
    int exit_code = kExitPass;
};

// Thrown by RunReport::record under fail-fast once a check fails.
struct FailFastStop {};

class RunReport {
public:
    explicit RunReport(ScenarioConfig cfg);

    const ScenarioConfig& config() const { return cfg_; }

    // Records a check; throws FailFastStop after a failure when fail_fast is set.
    void record(CheckResult c);
    void pass_if(const std::string& name, bool ok, std::string detail, nlohmann::json values = nlohmann::json::object());
    void skip(const std::string& name, std::string detail);
    void warn(std::string w);
    void add_file(std::string name) { files_.push_back(std::move(name)); }
    void set_result(const std::string& key, nlohmann::json v) { results_[key] = std::move(v); }
    void set_error(RunError e) { error_ = std::move(e); }
    void set_meta(const std::string& key, nlohmann::json v) { meta_[key] = std::move(v); }

    const std::vector<CheckResult>& checks() const { return checks_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    const std::vector<std::string>& files() const { return files_; }
    const nlohmann::json& results() const { return results_; }
    const CheckResult* find(const std::string& name) const;

    // Worst status: error > failure > all skipped > pass.
    int exit_code() const;
    nlohmann::json to_json() const;

private:
    ScenarioConfig cfg_;
    std::vector<CheckResult> checks_;
    std::vector<std::string> warnings_;
    std::vector<std::string> files_;
    nlohmann::json results_ = nlohmann::json::object();
    nlohmann::json meta_ = nlohmann::json::object();
    std::optional<RunError> error_;
};

// Creates out_dir when needed and writes content to out_dir/name, recording it in the report.
void write_output(RunReport& rep, const std::string& name, const std::string& content);

// report.json: the only output that carries timestamps.
void write_report(const RunReport& rep);

std::string utc_timestamp();

}  // namespace psd::runner
