#include "psd_runner/report.hpp"

#include <psd/error.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>

namespace psd::runner {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::fail: return "fail";
        case CheckStatus::skip: return "skip";
    }
    return "unknown";
}

RunReport::RunReport(ScenarioConfig cfg) : cfg_(std::move(cfg)) {}

void RunReport::record(CheckResult c) {
    const bool failed = c.status == CheckStatus::fail;
    checks_.push_back(std::move(c));
    if (failed && cfg_.fail_fast) throw FailFastStop{};
}

void RunReport::pass_if(const std::string& name, bool ok, std::string detail, json values) {
    record(CheckResult{name, ok ? CheckStatus::pass : CheckStatus::fail, std::move(detail), std::move(values)});
}

void RunReport::skip(const std::string& name, std::string detail) {
    record(CheckResult{name, CheckStatus::skip, std::move(detail), json::object()});
}

void RunReport::warn(std::string w) {
    for (const auto& x : warnings_)
        if (x == w) return;
    warnings_.push_back(std::move(w));
}

const CheckResult* RunReport::find(const std::string& name) const {
    for (const auto& c : checks_)
        if (c.name == name) return &c;
    return nullptr;
}

int RunReport::exit_code() const {
    if (error_) return error_->exit_code;
    bool any_fail = false, any_pass = false;
    for (const auto& c : checks_) {
        any_fail = any_fail || c.status == CheckStatus::fail;
        any_pass = any_pass || c.status == CheckStatus::pass;
    }
    if (any_fail) return kExitCheckFailed;
    if (!checks_.empty() && !any_pass) return kExitAllSkipped;
    return kExitPass;
}

json RunReport::to_json() const {
    json j;
    j["scenario"] = psd::runner::to_json(cfg_);
    j["files"] = files_;
    json checks = json::array();
    for (const auto& c : checks_)
        checks.push_back({{"name", c.name}, {"status", to_string(c.status)}, {"detail", c.detail}, {"values", c.values}});
    j["checks"] = checks;
    j["warnings"] = warnings_;
    j["results"] = results_;
    if (error_) j["error"] = {{"kind", error_->kind}, {"message", error_->message}};
    j["exit_code"] = exit_code();
    j["metadata"] = meta_;
    return j;
}

void write_output(RunReport& rep, const std::string& name, const std::string& content) {
    const fs::path dir(rep.config().out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (dir / name).string());
    out << content;
    rep.add_file(name);
}

void write_report(const RunReport& rep) {
    const fs::path dir(rep.config().out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) return;
    std::ofstream out(dir / "report.json", std::ios::binary);
    out << rep.to_json().dump(2) << '\n';
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace psd::runner
