#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "qlame/bethe.hpp"
#include "qlame/elliptic.hpp"
#include "qlame/spectral.hpp"

namespace qlame {

using json = nlohmann::json;

inline json to_json(cplx v) { return json::array({v.real(), v.imag()}); }

// One verified identity: residual against its threshold.
struct CheckResult {
    std::string name;
    std::string params;
    double residual = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

inline CheckResult make_check(std::string name, std::string params, double residual,
                              double threshold) {
    CheckResult c;
    c.name = std::move(name);
    c.params = std::move(params);
    c.residual = residual;
    c.threshold = threshold;
    c.pass = std::isfinite(residual) && residual < threshold;
    return c;
}

struct Report {
    static constexpr int schema_version = 1;
    static constexpr const char* artifact = "qlame 1.0.0";

    json config_echo;
    std::vector<CheckResult> checks;

    bool overall_pass() const {
        return std::all_of(checks.begin(), checks.end(),
                           [](const CheckResult& c) { return c.pass; });
    }

    int failed_count() const {
        int n = 0;
        for (const auto& c : checks)
            if (!c.pass) ++n;
        return n;
    }

    json to_json() const {
        std::vector<CheckResult> sorted = checks;
        std::sort(sorted.begin(), sorted.end(), [](const CheckResult& a, const CheckResult& b) {
            if (a.name != b.name) return a.name < b.name;
            return a.params < b.params;
        });
        json jchecks = json::array();
        for (const auto& c : sorted) {
            jchecks.push_back({{"name", c.name},
                               {"params", c.params},
                               {"residual", c.residual},
                               {"threshold", c.threshold},
                               {"pass", c.pass}});
        }
        return json{{"schema_version", schema_version},
                    {"artifact", artifact},
                    {"config", config_echo},
                    {"checks", jchecks},
                    {"summary",
                     {{"total", checks.size()},
                      {"passed", checks.size() - failed_count()},
                      {"failed", failed_count()}}},
                    {"overall_pass", overall_pass()}};
    }

    // One line per check, residual in scientific notation with 3 significant
    // digits next to its threshold.
    std::string render_text() const {
        std::vector<CheckResult> sorted = checks;
        std::sort(sorted.begin(), sorted.end(), [](const CheckResult& a, const CheckResult& b) {
            if (a.name != b.name) return a.name < b.name;
            return a.params < b.params;
        });
        std::string out;
        char line[256];
        for (const auto& c : sorted) {
            std::snprintf(line, sizeof(line), "%-6s %-32s %-28s residual=%.2e (tol %.2e)\n",
                          c.pass ? "PASS" : "FAIL", c.name.c_str(), c.params.c_str(), c.residual,
                          c.threshold);
            out += line;
        }
        std::snprintf(line, sizeof(line), "%zu checks, %d failed -> %s\n", checks.size(),
                      failed_count(), overall_pass() ? "PASS" : "FAIL");
        out += line;
        return out;
    }
};

inline json bethe_point_json(const BethePoint& bp, const ModularData& md) {
    json jt = json::array();
    for (const cplx& t : bp.t) jt.push_back(to_json(t));
    return json{{"m", bp.m},        {"gamma", to_json(md.gamma)}, {"tau", to_json(md.tau)},
                {"t", jt},          {"c", to_json(bp.c)},         {"residual", bp.residual}};
}

inline json spectral_fit_json(const SpectralFit& fit, const ModularData& md) {
    json jc = json::array();
    for (const cplx& p : fit.coeffs) jc.push_back(to_json(p));
    return json{{"m", fit.m},
                {"gamma", to_json(md.gamma)},
                {"tau", to_json(md.tau)},
                {"coeffs", jc},
                {"fit_residual", fit.fit_residual},
                {"validation_residual", fit.validation_residual},
                {"cond_estimate", fit.cond_estimate},
                {"normalization", "N = M_{m+1} - M_{-m-1}"}};
}

// CSV rows re(X), im(X), re(Y), im(Y); %.17g keeps round-trips exact and
// output byte-stable across runs.
inline std::string samples_csv(const std::vector<SpectralSample>& samples) {
    std::string out = "re_X,im_X,re_Y,im_Y\n";
    char line[160];
    for (const auto& s : samples) {
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g\n", s.X.real(), s.X.imag(),
                      s.Y.real(), s.Y.imag());
        out += line;
    }
    return out;
}

}  // namespace qlame
