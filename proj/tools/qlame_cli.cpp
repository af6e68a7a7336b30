// Verification CLI: numerically certifies the operator identities, solves the
// Bethe system, and exports spectral-curve data.
//
// Exit codes: 0 all checks pass, 1 at least one check failed,
//             2 usage/config error, 3 numerical failure (no convergence).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qlame/qlame.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
    double gamma_re = std::sqrt(2.0) / 10.0;
    double gamma_im = 0.0;
    double tau_re = 0.0;
    double tau_im = 1.0;
    std::vector<int> m_list = {1};
    std::uint64_t seed = 1;
    int samples = 50;
    std::string out;
    std::map<std::string, double> tol_overrides;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--gamma-re", f.gamma_re, "Re(gamma), the deformation step");
    cmd->add_option("--gamma-im", f.gamma_im, "Im(gamma)");
    cmd->add_option("--tau-re", f.tau_re, "Re(tau)");
    cmd->add_option("--tau-im", f.tau_im, "Im(tau), must be positive");
    cmd->add_option("--m", f.m_list, "coupling index m (repeatable)")->delimiter(',');
    cmd->add_option("--seed", f.seed, "seed for deterministic sampling");
    cmd->add_option("--samples", f.samples, "sample points per operator identity");
    cmd->add_option("--out", f.out, "output path for the JSON report / file prefix");
    for (const auto& [name, defval] : qlame::default_tolerances()) {
        char help[96];
        std::snprintf(help, sizeof(help), "override the '%s' tolerance (default %.0e)",
                      name.c_str(), defval);
        cmd->add_option_function<double>(
            "--tol-" + name, [&f, name = name](double v) { f.tol_overrides[name] = v; }, help);
    }
    cmd->set_config("--config", "", "config file with key=value lines (flags win)");
}

qlame::RunConfig to_config(const CommonFlags& f) {
    qlame::RunConfig cfg;
    cfg.gamma = qlame::cplx(f.gamma_re, f.gamma_im);
    cfg.tau = qlame::cplx(f.tau_re, f.tau_im);
    cfg.m_list = f.m_list;
    cfg.seed = f.seed;
    cfg.sample_count = f.samples;
    cfg.output_path = f.out;
    cfg.tolerances = f.tol_overrides;
    return cfg;
}

int cmd_verify(const CommonFlags& flags) {
    const qlame::RunConfig cfg = to_config(flags);
    const qlame::Report report = qlame::run_verify(cfg);
    std::fputs(report.render_text().c_str(), stdout);
    if (!cfg.output_path.empty()) {
        std::ofstream os(cfg.output_path);
        if (!os) throw qlame::ConfigError("cannot open output path: " + cfg.output_path);
        os << report.to_json().dump(2) << "\n";
        std::printf("report written to %s\n", cfg.output_path.c_str());
    } else {
        std::printf("%s\n", report.to_json().dump(2).c_str());
    }
    return report.overall_pass() ? kExitPass : kExitCheckFail;
}

int cmd_curve(const CommonFlags& flags, double c_lo_re, double c_lo_im, double c_hi_re,
              double c_hi_im, int count) {
    const qlame::RunConfig cfg = to_config(flags);
    qlame::validate_config(cfg);
    const qlame::ModularData md(cfg.gamma, cfg.tau);
    const int m = cfg.m_list.front();

    const auto samples = qlame::collect_samples(m, md, count, qlame::cplx(c_lo_re, c_lo_im),
                                                qlame::cplx(c_hi_re, c_hi_im), {}, cfg.seed);
    const auto fit = qlame::fit_P(samples, m);

    const std::string prefix = cfg.output_path.empty() ? "curve" : cfg.output_path;
    {
        std::ofstream os(prefix + "_samples.csv");
        if (!os) throw qlame::ConfigError("cannot open " + prefix + "_samples.csv");
        os << qlame::samples_csv(samples);
    }
    {
        std::ofstream os(prefix + "_fit.json");
        if (!os) throw qlame::ConfigError("cannot open " + prefix + "_fit.json");
        os << qlame::spectral_fit_json(fit, md).dump(2) << "\n";
    }
    std::printf("m=%d: %zu samples, P degree %d\n", m, samples.size(), 2 * m + 1);
    std::printf("fit residual       %.2e\n", fit.fit_residual);
    std::printf("validation residual %.2e\n", fit.validation_residual);
    std::printf("condition estimate  %.2e\n", fit.cond_estimate);
    std::printf("wrote %s_samples.csv and %s_fit.json\n", prefix.c_str(), prefix.c_str());
    return kExitPass;
}

int cmd_bethe(const CommonFlags& flags, double c_re, double c_im, int starts) {
    const qlame::RunConfig cfg = to_config(flags);
    qlame::validate_config(cfg);
    const qlame::ModularData md(cfg.gamma, cfg.tau);
    const int m = cfg.m_list.front();

    qlame::SolverOptions opt;
    const auto pts = qlame::solve_given_c(qlame::cplx(c_re, c_im), m, md, starts, opt, cfg.seed);
    qlame::json out = qlame::json::array();
    for (const auto& bp : pts) out.push_back(qlame::bethe_point_json(bp, md));
    std::printf("%s\n", out.dump(2).c_str());
    return pts.empty() ? kExitNumerical : kExitPass;
}

}  // namespace

int main(int argc, char** argv) try {
    CLI::App app{"q-Lame commuting-operator verification suite"};
    app.require_subcommand(1);

    CommonFlags vf, cf, bf;

    CLI::App* verify = app.add_subcommand("verify", "run the full identity battery");
    add_common_flags(verify, vf);

    CLI::App* curve = app.add_subcommand("curve", "sample the spectral curve and fit P");
    add_common_flags(curve, cf);
    double c_lo_re = 0.2, c_lo_im = 0.0, c_hi_re = 1.2, c_hi_im = 8.0;
    int count = 40;
    curve->add_option("--c-lo-re", c_lo_re, "window start, real part");
    curve->add_option("--c-lo-im", c_lo_im, "window start, imaginary part");
    curve->add_option("--c-hi-re", c_hi_re, "window end, real part");
    curve->add_option("--c-hi-im", c_hi_im, "window end, imaginary part");
    curve->add_option("--count", count, "number of continuation points");

    CLI::App* bethe = app.add_subcommand("bethe", "solve the Bethe system at one c");
    add_common_flags(bethe, bf);
    double c_re = 0.3, c_im = 0.0;
    int starts = 64;
    bethe->add_option("--c-re", c_re, "Re(c) of the multiplier exponent");
    bethe->add_option("--c-im", c_im, "Im(c)");
    bethe->add_option("--starts", starts, "multistart count for the Newton solver");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitPass : kExitConfig;
    }

    try {
        if (*verify) return cmd_verify(vf);
        if (*curve) return cmd_curve(cf, c_lo_re, c_lo_im, c_hi_re, c_hi_im, count);
        if (*bethe) return cmd_bethe(bf, c_re, c_im, starts);
    } catch (const qlame::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const qlame::NonConvergenceError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const qlame::InsufficientSamplesError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const qlame::RankDeficiencyError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
    return kExitConfig;
} catch (const std::exception& e) {
    std::fprintf(stderr, "fatal: %s\n", e.what());
    return kExitNumerical;
}
