#include "psd_runner/config.hpp"

#include <psd/error.hpp>

#include <cmath>
#include <fstream>
#include <set>

namespace psd::runner {

using nlohmann::json;

const char* to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::gaussian: return "gaussian";
        case ScenarioKind::scattering: return "scattering";
        case ScenarioKind::custom_tree: return "custom-tree";
        case ScenarioKind::verify: return "verify";
    }
    return "unknown";
}

ScenarioKind scenario_from_string(const std::string& s) {
    if (s == "gaussian") return ScenarioKind::gaussian;
    if (s == "scattering") return ScenarioKind::scattering;
    if (s == "custom-tree") return ScenarioKind::custom_tree;
    if (s == "verify") return ScenarioKind::verify;
    throw ConfigError("unknown scenario '" + s + "' (expected gaussian, scattering, custom-tree or verify)");
}

ScenarioConfig default_config(ScenarioKind kind, const std::string& lane) {
    ScenarioConfig c;
    c.kind = kind;
    if (kind == ScenarioKind::scattering) {
        c.scattering.lane = lane;
        if (lane == "well") {
            c.grid = {16384, 819.2};
            c.packet = PacketConfig{0.0, 2.0, 0.0, 1.0, 1.0};
            c.time = {60.0, 31};
        } else {
            c.grid = {16384, 2048.0};
            c.packet = PacketConfig{2.0, 1.0, 0.0, 1.0, 1.0};
            c.time = {128.0, 65};
        }
    } else if (kind == ScenarioKind::custom_tree) {
        c.grid = {4096, 400.0};
        c.time = {20.0, 41};
        for (double p0 : {-6.0, -2.0, 2.0, 6.0}) c.tree.packets.push_back(PacketConfig{p0, 0.5, 0.0, 1.0, 1.0});
        c.tree.stages = {TreeStage{2.0, {{0, 1}, {2, 3}}}, TreeStage{4.0, {{0}, {1}, {2}, {3}}}};
    }
    return c;
}

namespace {

// Reads keys of one object, remembering which were consumed.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        read(j_.at(key), out, path_ + "." + key);
    }

    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError("unknown key " + path_ + "." + it.key());
    }

    std::string where() const { return path_.empty() ? "config" : path_; }

    static void require_count(const json& v, const std::string& p) {
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
            throw ConfigError(p + " must be a nonnegative integer");
    }
    static void read(const json& v, double& out, const std::string& p) {
        if (!v.is_number()) throw ConfigError(p + " must be a number");
        out = v.get<double>();
        if (!std::isfinite(out)) throw ConfigError(p + " must be finite");
    }
    static void read(const json& v, std::size_t& out, const std::string& p) {
        require_count(v, p);
        out = v.get<std::size_t>();
    }
    static void read(const json& v, unsigned long long& out, const std::string& p) {
        require_count(v, p);
        out = v.get<unsigned long long>();
    }
    static void read(const json& v, bool& out, const std::string& p) {
        if (!v.is_boolean()) throw ConfigError(p + " must be a boolean");
        out = v.get<bool>();
    }
    static void read(const json& v, std::string& out, const std::string& p) {
        if (!v.is_string()) throw ConfigError(p + " must be a string");
        out = v.get<std::string>();
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_packet(const json& j, const std::string& path, PacketConfig& p) {
    Reader r(j, path);
    r.get("p0", p.p0);
    r.get("sigma_p", p.sigma_p);
    r.get("x0", p.x0);
    r.get("mass", p.mass);
    r.get("hbar", p.hbar);
    r.finish();
}

json packet_json(const PacketConfig& p) {
    return {{"p0", p.p0}, {"sigma_p", p.sigma_p}, {"x0", p.x0}, {"mass", p.mass}, {"hbar", p.hbar}};
}

}  // namespace

ScenarioConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (!j.contains("scenario")) throw ConfigError("config.scenario is required");
    if (!j.at("scenario").is_string()) throw ConfigError("config.scenario must be a string");
    const ScenarioKind kind = scenario_from_string(j.at("scenario").get<std::string>());
    std::string lane = "free";
    if (kind == ScenarioKind::scattering && j.contains("scattering") && j.at("scattering").is_object() &&
        j.at("scattering").contains("lane")) {
        Reader::read(j.at("scattering").at("lane"), lane, "config.scattering.lane");
    }
    ScenarioConfig c = default_config(kind, lane);

    Reader top(j, "config");
    std::string scenario;
    top.get("scenario", scenario);
    unsigned long long seed = c.seed;
    top.get("seed", seed);
    c.seed = seed;
    top.get("out_dir", c.out_dir);
    top.get("fail_fast", c.fail_fast);
    if (const json* g = top.child("grid")) {
        Reader r(*g, "config.grid");
        r.get("n_cells", c.grid.n_cells);
        r.get("box_length", c.grid.box_length);
        r.finish();
    }
    if (const json* p = top.child("packet")) read_packet(*p, "config.packet", c.packet);
    if (const json* t = top.child("time")) {
        Reader r(*t, "config.time");
        r.get("t_max", c.time.t_max);
        r.get("n_samples", c.time.n_samples);
        r.finish();
    }
    if (const json* t = top.child("thresholds")) {
        Reader r(*t, "config.thresholds");
        auto& h = c.thresholds;
        r.get("branch_threshold", h.branch_threshold);
        r.get("w_tolerance", h.w_tolerance);
        r.get("asymptote_tolerance", h.asymptote_tolerance);
        r.get("wf_relative", h.wf_relative);
        r.get("probability_tolerance", h.probability_tolerance);
        r.get("trajectory_cells", h.trajectory_cells);
        r.get("final_w", h.final_w);
        r.get("jitter", h.jitter);
        r.get("control_tolerance", h.control_tolerance);
        r.get("commutation_tolerance", h.commutation_tolerance);
        r.get("exact_lane_tolerance", h.exact_lane_tolerance);
        r.finish();
    }
    if (const json* s = top.child("scattering")) {
        Reader r(*s, "config.scattering");
        auto& sc = c.scattering;
        r.get("lane", sc.lane);
        r.get("V0", sc.V0);
        r.get("a", sc.a);
        r.get("dt", sc.dt);
        r.get("commutation_dt", sc.commutation_dt);
        r.get("commutation_time", sc.commutation_time);
        r.get("window_cells", sc.window_cells);
        r.finish();
    }
    if (const json* v = top.child("verify")) {
        Reader r(*v, "config.verify");
        r.get("finite_trials", c.verify.finite_trials);
        r.get("tree_trials", c.verify.tree_trials);
        r.get("certificate_trials", c.verify.certificate_trials);
        r.get("inject_fault", c.verify.inject_fault);
        r.finish();
    }
    if (const json* t = top.child("tree")) {
        Reader r(*t, "config.tree");
        if (const json* ps = r.child("packets")) {
            if (!ps->is_array()) throw ConfigError("config.tree.packets must be an array");
            c.tree.packets.clear();
            for (std::size_t i = 0; i < ps->size(); ++i) {
                PacketConfig p;
                read_packet(ps->at(i), "config.tree.packets[" + std::to_string(i) + "]", p);
                c.tree.packets.push_back(p);
            }
        }
        if (const json* ss = r.child("stages")) {
            if (!ss->is_array()) throw ConfigError("config.tree.stages must be an array");
            c.tree.stages.clear();
            for (std::size_t i = 0; i < ss->size(); ++i) {
                const std::string path = "config.tree.stages[" + std::to_string(i) + "]";
                Reader sr(ss->at(i), path);
                TreeStage st;
                sr.get("t", st.t);
                const json* groups = sr.child("groups");
                if (!groups || !groups->is_array()) throw ConfigError(path + ".groups must be an array of arrays");
                for (const auto& g : *groups) {
                    if (!g.is_array()) throw ConfigError(path + ".groups must be an array of arrays");
                    std::vector<std::size_t> idx;
                    for (const auto& x : g) {
                        std::size_t k = 0;
                        Reader::read(x, k, path + ".groups[]");
                        idx.push_back(k);
                    }
                    st.groups.push_back(std::move(idx));
                }
                sr.finish();
                c.tree.stages.push_back(std::move(st));
            }
        }
        r.finish();
    }
    top.finish();
    validate(c);
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

void validate(const ScenarioConfig& c) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive and finite");
    };
    if (c.time.n_samples < 2) throw ConfigError("config.time.n_samples must be >= 2");
    positive(c.time.t_max, "config.time.t_max");
    positive(c.grid.box_length, "config.grid.box_length");
    if (c.grid.n_cells < 16 || (c.grid.n_cells & (c.grid.n_cells - 1)) != 0)
        throw ConfigError("config.grid.n_cells must be a power of two >= 16");
    positive(c.packet.sigma_p, "config.packet.sigma_p");
    positive(c.packet.mass, "config.packet.mass");
    positive(c.packet.hbar, "config.packet.hbar");
    if (c.scattering.lane != "free" && c.scattering.lane != "well")
        throw ConfigError("config.scattering.lane must be 'free' or 'well'");
    positive(c.scattering.dt, "config.scattering.dt");
    positive(c.scattering.commutation_dt, "config.scattering.commutation_dt");
    positive(c.scattering.commutation_time, "config.scattering.commutation_time");
    positive(c.scattering.a, "config.scattering.a");
    if (c.out_dir.empty()) throw ConfigError("config.out_dir must not be empty");
    if (c.kind == ScenarioKind::custom_tree) {
        if (c.tree.packets.empty()) throw ConfigError("config.tree.packets must not be empty");
        for (const auto& p : c.tree.packets) {
            positive(p.sigma_p, "config.tree.packets[].sigma_p");
            positive(p.mass, "config.tree.packets[].mass");
            positive(p.hbar, "config.tree.packets[].hbar");
        }
        for (const auto& s : c.tree.stages) {
            std::vector<int> used(c.tree.packets.size(), 0);
            for (const auto& g : s.groups) {
                if (g.empty()) throw ConfigError("config.tree.stages[].groups must not contain empty groups");
                for (auto k : g) {
                    if (k >= used.size()) throw ConfigError("config.tree.stages[].groups references packet " + std::to_string(k) + " which does not exist");
                    ++used[k];
                }
            }
            for (int u : used)
                if (u != 1) throw ConfigError("config.tree.stages[].groups must use every packet exactly once");
        }
    }
}

json to_json(const ScenarioConfig& c) {
    json j;
    j["scenario"] = to_string(c.kind);
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["fail_fast"] = c.fail_fast;
    j["grid"] = {{"n_cells", c.grid.n_cells}, {"box_length", c.grid.box_length}};
    j["packet"] = packet_json(c.packet);
    j["time"] = {{"t_max", c.time.t_max}, {"n_samples", c.time.n_samples}};
    const auto& h = c.thresholds;
    j["thresholds"] = {{"branch_threshold", h.branch_threshold},
                       {"w_tolerance", h.w_tolerance},
                       {"asymptote_tolerance", h.asymptote_tolerance},
                       {"wf_relative", h.wf_relative},
                       {"probability_tolerance", h.probability_tolerance},
                       {"trajectory_cells", h.trajectory_cells},
                       {"final_w", h.final_w},
                       {"jitter", h.jitter},
                       {"control_tolerance", h.control_tolerance},
                       {"commutation_tolerance", h.commutation_tolerance},
                       {"exact_lane_tolerance", h.exact_lane_tolerance}};
    const auto& s = c.scattering;
    j["scattering"] = {{"lane", s.lane},         {"V0", s.V0}, {"a", s.a}, {"dt", s.dt}, {"commutation_dt", s.commutation_dt},
                       {"commutation_time", s.commutation_time}, {"window_cells", s.window_cells}};
    j["verify"] = {{"finite_trials", c.verify.finite_trials},
                   {"tree_trials", c.verify.tree_trials},
                   {"certificate_trials", c.verify.certificate_trials},
                   {"inject_fault", c.verify.inject_fault}};
    json packets = json::array();
    for (const auto& p : c.tree.packets) packets.push_back(packet_json(p));
    json stages = json::array();
    for (const auto& st : c.tree.stages) stages.push_back({{"t", st.t}, {"groups", st.groups}});
    j["tree"] = {{"packets", packets}, {"stages", stages}};
    return j;
}

std::vector<double> sample_times(const TimeConfig& t) {
    std::vector<double> out;
    out.reserve(t.n_samples);
    for (std::size_t i = 0; i < t.n_samples; ++i)
        out.push_back(t.t_max * static_cast<double>(i) / static_cast<double>(t.n_samples - 1));
    return out;
}

void apply_overrides(ScenarioConfig& c, const Overrides& o) {
    if (o.out_dir) c.out_dir = *o.out_dir;
    if (o.seed) c.seed = *o.seed;
    if (o.grid_n) c.grid.n_cells = *o.grid_n;
    if (o.t_max) c.time.t_max = *o.t_max;
    if (o.fail_fast) c.fail_fast = *o.fail_fast;
    if (o.trials) c.verify.finite_trials = c.verify.tree_trials = c.verify.certificate_trials = *o.trials;
    if (o.inject_fault) c.verify.inject_fault = *o.inject_fault;
    validate(c);
}

}  // namespace psd::runner
