#include <doctest.h>

#include <psd_runner/config.hpp>
#include <psd_runner/report.hpp>
#include <psd_runner/scenarios.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace psd::runner;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("psd_test_runner_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string config_error(const json& j) {
    try {
        parse_config(j);
    } catch (const psd::ConfigError& e) {
        return e.what();
    }
    return "";
}

ScenarioConfig small_verify(const std::string& name, std::size_t trials) {
    auto c = default_config(ScenarioKind::verify);
    c.out_dir = scratch(name).string();
    c.verify.finite_trials = c.verify.tree_trials = c.verify.certificate_trials = trials;
    return c;
}

}  // namespace

TEST_CASE("config parsing is strict") {
    CHECK(config_error({{"scenario", "gaussian"}, {"packet", {{"p0", 2.0}, {"sigmap", 1.0}}}}).find("config.packet.sigmap") !=
          std::string::npos);
    CHECK(config_error({{"scenario", "gaussian"}, {"colour", 1}}).find("unknown key config.colour") != std::string::npos);
    CHECK(config_error({{"packet", {{"p0", 2.0}}}}).find("scenario is required") != std::string::npos);
    CHECK(config_error({{"scenario", "gaussain"}}).find("unknown scenario") != std::string::npos);
    CHECK(config_error({{"scenario", "gaussian"}, {"time", {{"n_samples", 1}}}}).find("n_samples") != std::string::npos);
    CHECK(config_error({{"scenario", "gaussian"}, {"grid", {{"n_cells", -4}}}}).find("nonnegative integer") != std::string::npos);
    CHECK(config_error({{"scenario", "gaussian"}, {"grid", {{"n_cells", 1000}}}}).find("power of two") != std::string::npos);
    CHECK(config_error({{"scenario", "gaussian"}, {"packet", {{"p0", "ten"}}}}).find("must be a number") != std::string::npos);
    CHECK(config_error({{"scenario", "scattering"}, {"scattering", {{"lane", "tunnel"}}}}).find("lane") != std::string::npos);
    CHECK(config_error({{"scenario", "custom-tree"}, {"tree", {{"stages", {{{"t", 1.0}, {"groups", {{0, 0}}}}}}}}})
              .find("exactly once") != std::string::npos);
    CHECK_THROWS_AS(load_config("/nonexistent/psd.json"), psd::ConfigError);
}

TEST_CASE("config defaults and round trip") {
    const auto g = parse_config({{"scenario", "gaussian"}, {"packet", {{"p0", 2.0}}}});
    CHECK(g.packet.p0 == 2.0);
    CHECK(g.packet.sigma_p == 1.0);
    CHECK(g.grid.n_cells == 4096);

    const auto w = parse_config({{"scenario", "scattering"}, {"scattering", {{"lane", "well"}}}});
    CHECK(w.grid.box_length == doctest::Approx(819.2));
    CHECK(w.packet.sigma_p == 2.0);

    for (auto kind : {ScenarioKind::gaussian, ScenarioKind::scattering, ScenarioKind::custom_tree, ScenarioKind::verify}) {
        const auto c = default_config(kind);
        CHECK(to_json(parse_config(to_json(c))) == to_json(c));
    }

    const auto t = sample_times({10.0, 5});
    REQUIRE(t.size() == 5);
    CHECK(t.front() == 0.0);
    CHECK(t.back() == 10.0);
    CHECK(t[2] == 5.0);
}

TEST_CASE("overrides take precedence over the config") {
    auto c = parse_config({{"scenario", "gaussian"}, {"seed", 3}, {"time", {{"t_max", 5.0}}}});
    Overrides o;
    o.seed = 9;
    o.grid_n = 8192;
    o.out_dir = "elsewhere";
    apply_overrides(c, o);
    CHECK(c.seed == 9);
    CHECK(c.grid.n_cells == 8192);
    CHECK(c.time.t_max == 5.0);
    CHECK(c.out_dir == "elsewhere");

    Overrides bad;
    bad.grid_n = 1000;
    CHECK_THROWS_AS(apply_overrides(c, bad), psd::ConfigError);
}

TEST_CASE("exit codes") {
    CHECK(run(small_verify("pass", 5)).exit_code() == kExitPass);
    CHECK(run(small_verify("skip", 0)).exit_code() == kExitAllSkipped);

    auto f = small_verify("fault", 5);
    f.verify.inject_fault = "tree.branch_prefix";
    const auto rf = run(f);
    CHECK(rf.exit_code() == kExitCheckFailed);
    for (const auto& c : rf.checks())
        CHECK((c.status == CheckStatus::fail) == (c.name == "tree.branch_prefix"));
    CHECK(fs::exists(fs::path(f.out_dir) / "report.json"));

    auto u = small_verify("unknown_fault", 5);
    u.verify.inject_fault = "no.such.check";
    CHECK(run(u).exit_code() == kExitConfig);

    auto r = default_config(ScenarioKind::gaussian);
    r.out_dir = scratch("resolution").string();
    r.grid.n_cells = 64;  // dx = 5 > sigma_x / 8
    const auto rr = run(r);
    CHECK(rr.exit_code() == kExitConfig);
    CHECK(rr.to_json()["error"]["message"].get<std::string>().find("raise n_cells") != std::string::npos);

    CHECK(exit_code_for(psd::ErrorKind::resource_limit) == kExitResource);
    CHECK(exit_code_for(psd::ErrorKind::not_found) == kExitResource);
}

TEST_CASE("fail fast stops at the first failure") {
    auto c = small_verify("fail_fast", 5);
    c.verify.inject_fault = "finite.exact_iff_zero";
    c.fail_fast = true;
    const auto rep = run(c);
    REQUIRE(!rep.checks().empty());
    CHECK(rep.checks().back().status == CheckStatus::fail);
    CHECK(rep.checks().size() == 1);
    CHECK(rep.exit_code() == kExitCheckFailed);
}

TEST_CASE("gaussian with p0 = 0 never branches") {
    auto c = default_config(ScenarioKind::gaussian);
    c.packet.p0 = 0.0;
    c.time = {10.0, 16};
    c.out_dir = scratch("p0_zero").string();
    const auto rep = run(c);
    CHECK(rep.exit_code() == kExitPass);
    CHECK(rep.results()["t1"].is_null());
    CHECK(rep.find("gaussian.branches")->status == CheckStatus::skip);
    bool said_so = false;
    for (const auto& w : rep.warnings()) said_so = said_so || w.find("no branching time") != std::string::npos;
    CHECK(said_so);

    std::istringstream csv(slurp(fs::path(c.out_dir) / "gaussian_wE.csv"));
    std::string line;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
        const auto a = line.find(','), b = line.find(',', a + 1), e = line.find(',', b + 1);
        CHECK(std::abs(std::stod(line.substr(b + 1, e - b - 1)) - 1.0) <= 1e-3);
    }
}

TEST_CASE("identical config and seed give byte-identical data files") {
    auto a = default_config(ScenarioKind::gaussian);
    a.out_dir = scratch("det_a").string();
    auto b = a;
    b.out_dir = scratch("det_b").string();
    const auto ra = run(a), rb = run(b);
    REQUIRE(ra.files() == rb.files());
    CHECK(ra.files().size() == 3);
    for (const auto& f : ra.files()) CHECK(slurp(fs::path(a.out_dir) / f) == slurp(fs::path(b.out_dir) / f));

    auto va = small_verify("det_va", 20), vb = small_verify("det_vb", 20);
    run(va);
    run(vb);
    CHECK(slurp(fs::path(va.out_dir) / "certificate.json") == slurp(fs::path(vb.out_dir) / "certificate.json"));

    // Timestamps live only in the report metadata.
    const auto ja = json::parse(slurp(fs::path(a.out_dir) / "report.json"));
    CHECK(ja["metadata"].contains("started"));
    CHECK(ja["scenario"]["seed"] == 1);
}

TEST_CASE("momentum w in the log domain") {
    PacketConfig p;
    p.p0 = 10.0;
    const auto w = gaussian_momentum_w(p);
    CHECK(w.value == doctest::Approx(4.5699973564133981422e-23).epsilon(1e-4));
    p.p0 = 40.0;
    const auto deep = gaussian_momentum_w(p);
    CHECK(deep.value == 0.0);
    CHECK(std::isfinite(deep.log_value));
    CHECK(deep.log_value < -700.0);
}
