#include <catch2/catch_amalgamated.hpp>

#include "qlame/verify.hpp"

using namespace qlame;

TEST_CASE("config validation") {
    RunConfig cfg;
    CHECK_NOTHROW(validate_config(cfg));

    RunConfig bad_tau = cfg;
    bad_tau.tau = cplx(0.3, -1.0);
    CHECK_THROWS_AS(validate_config(bad_tau), ConfigError);

    RunConfig bad_m = cfg;
    bad_m.m_list = {-1};
    CHECK_THROWS_AS(validate_config(bad_m), ConfigError);

    RunConfig empty_m = cfg;
    empty_m.m_list = {};
    CHECK_THROWS_AS(validate_config(empty_m), ConfigError);

    RunConfig bad_samples = cfg;
    bad_samples.sample_count = 5;
    CHECK_THROWS_AS(validate_config(bad_samples), ConfigError);

    RunConfig bad_tol = cfg;
    bad_tol.tolerances["no-such-check"] = 1e-6;
    CHECK_THROWS_AS(validate_config(bad_tol), ConfigError);

    RunConfig neg_tol = cfg;
    neg_tol.tolerances["commute"] = -1.0;
    CHECK_THROWS_AS(validate_config(neg_tol), ConfigError);
}

TEST_CASE("tolerance lookup merges overrides over defaults") {
    RunConfig cfg;
    CHECK(tolerance(cfg, "commute") == 1e-8);
    cfg.tolerances["commute"] = 1e-9;
    CHECK(tolerance(cfg, "commute") == 1e-9);
    CHECK_THROWS_AS(tolerance(cfg, "bogus"), ConfigError);
}

TEST_CASE("run_verify: degenerate m=0 suite passes end to end") {
    RunConfig cfg;
    cfg.m_list = {0};
    cfg.sample_count = 20;
    const Report report = run_verify(cfg);
    for (const auto& c : report.checks) {
        INFO(c.name << " " << c.params << " residual=" << c.residual);
        CHECK(c.pass);
    }
    CHECK(report.overall_pass());
    // the degenerate family has no M_{m-1} normalization
    for (const auto& c : report.checks) CHECK(c.name != "family/M_m-1-is-L");
}

TEST_CASE("run_verify: report JSON carries the documented schema") {
    RunConfig cfg;
    cfg.m_list = {0};
    cfg.sample_count = 20;
    const Report report = run_verify(cfg);
    const json j = report.to_json();
    REQUIRE(j.contains("schema_version"));
    CHECK(j["schema_version"] == 1);
    REQUIRE(j.contains("config"));
    CHECK(j["config"]["m_list"][0] == 0);
    CHECK(j["config"].contains("tolerances"));
    REQUIRE(j.contains("checks"));
    for (const auto& c : j["checks"]) {
        REQUIRE(c.contains("name"));
        REQUIRE(c.contains("params"));
        REQUIRE(c.contains("residual"));
        REQUIRE(c.contains("threshold"));
        REQUIRE(c.contains("pass"));
    }
    REQUIRE(j.contains("summary"));
    CHECK(j["summary"]["total"] == report.checks.size());
    CHECK(j["overall_pass"] == report.overall_pass());

    // checks arrive sorted by (name, params)
    std::string prev_name, prev_params;
    for (const auto& c : j["checks"]) {
        const std::string name = c["name"], params = c["params"];
        CHECK((prev_name < name || (prev_name == name && prev_params <= params)));
        prev_name = name;
        prev_params = params;
    }
}

TEST_CASE("run_verify is deterministic for a fixed seed") {
    RunConfig cfg;
    cfg.m_list = {0};
    cfg.sample_count = 20;
    cfg.seed = 77;
    const std::string a = run_verify(cfg).to_json().dump();
    const std::string b = run_verify(cfg).to_json().dump();
    CHECK(a == b);
}

TEST_CASE("an absurd tolerance override flips the overall verdict") {
    RunConfig cfg;
    cfg.m_list = {0};
    cfg.sample_count = 20;
    cfg.tolerances["elliptic"] = 1e-30;  // below double rounding noise
    const Report report = run_verify(cfg);
    CHECK_FALSE(report.overall_pass());
    CHECK(report.failed_count() > 0);
}

TEST_CASE("render_text prints one line per check plus a summary") {
    RunConfig cfg;
    cfg.m_list = {0};
    cfg.sample_count = 20;
    const Report report = run_verify(cfg);
    const std::string text = report.render_text();
    std::size_t lines = 0;
    for (char ch : text)
        if (ch == '\n') ++lines;
    CHECK(lines == report.checks.size() + 1);
    CHECK(text.find("PASS") != std::string::npos);
}
