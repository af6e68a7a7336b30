#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "qlame/bethe.hpp"
#include "qlame/difference_op.hpp"
#include "qlame/elliptic.hpp"
#include "qlame/errors.hpp"
#include "qlame/family.hpp"
#include "qlame/report.hpp"
#include "qlame/spectral.hpp"

namespace qlame {

// Everything a verification run needs; flags and config files fill this in.
struct RunConfig {
    cplx gamma = std::sqrt(2.0) / 10.0;
    cplx tau = cplx(0.0, 1.0);
    std::vector<int> m_list = {1};
    std::map<std::string, double> tolerances;  // overrides on top of defaults
    int sample_count = 50;
    std::uint64_t seed = 1;
    std::string output_path;
};

inline const std::map<std::string, double>& default_tolerances() {
    static const std::map<std::string, double> defaults = {
        {"elliptic", 1e-10},      {"lattice-zero", 1e-9},  {"family", 1e-10},
        {"commute", 1e-8},        {"recurrence", 1e-8},    {"omega-shift", 1e-8},
        {"product-rule", 1e-8},   {"phi", 1e-10},          {"bethe", 1e-10},
        {"eigen", 1e-8},          {"transformed", 1e-8},   {"ellipticity", 1e-8},
        {"fit-validation", 1e-6}, {"op-relation", 1e-6},   {"op-relation-deep", 1e-5},
        {"involution-op", 1e-10}, {"involution-curve", 1e-6}, {"window", 1e-5},
    };
    return defaults;
}

inline double tolerance(const RunConfig& cfg, const std::string& name) {
    if (auto it = cfg.tolerances.find(name); it != cfg.tolerances.end()) return it->second;
    const auto& d = default_tolerances();
    if (auto it = d.find(name); it != d.end()) return it->second;
    throw ConfigError("unknown tolerance name: " + name);
}

inline void validate_config(const RunConfig& cfg) {
    if (!(cfg.tau.imag() > 0.0)) throw ConfigError("Im(tau) must be positive");
    for (int m : cfg.m_list)
        if (m < 0) throw ConfigError("m must be nonnegative");
    if (cfg.m_list.empty()) throw ConfigError("m_list must not be empty");
    if (cfg.sample_count < 10) throw ConfigError("sample_count must be at least 10");
    for (const auto& [name, value] : cfg.tolerances) {
        if (default_tolerances().find(name) == default_tolerances().end())
            throw ConfigError("unknown tolerance name: " + name);
        if (!(value > 0.0)) throw ConfigError("tolerance must be positive: " + name);
    }
}

inline json config_echo_json(const RunConfig& cfg) {
    json tol;
    for (const auto& [k, v] : default_tolerances()) tol[k] = v;
    for (const auto& [k, v] : cfg.tolerances) tol[k] = v;
    return json{{"gamma", to_json(cfg.gamma)}, {"tau", to_json(cfg.tau)},
                {"m_list", cfg.m_list},        {"sample_count", cfg.sample_count},
                {"seed", cfg.seed},            {"tolerances", tol}};
}

// Default continuation windows for the spectral fit. Sweeping Im(c) keeps
// |e^{2 gamma c}| fixed while moving eps_L through the complex plane, which
// spreads the fit abscissas and keeps the Vandermonde well conditioned.
inline std::pair<cplx, cplx> default_c_window(int which = 0) {
    if (which == 0) return {cplx(0.2, 0.0), cplx(1.2, 8.0)};
    return {cplx(1.4, 9.0), cplx(0.4, 16.0)};
}

namespace detail {

// Generic family label: rejection-sampled away from zeros of [l] and [l+-m].
inline cplx random_generic_l(std::mt19937_64& rng, int m, const ModularData& md,
                             double guard = 0.05, bool complex_part = true) {
    std::uniform_real_distribution<double> re(0.3, 3.5);
    std::uniform_real_distribution<double> im(-0.5, 0.5);
    for (int tries = 0; tries < 1000; ++tries) {
        cplx l(re(rng), complex_part ? im(rng) : 0.0);
        const double dm = static_cast<double>(m);
        if (std::abs(ell_num(l, md)) < guard) continue;
        if (std::abs(ell_num(l + dm, md)) < guard) continue;
        if (std::abs(ell_num(l - dm, md)) < guard) continue;
        return l;
    }
    throw NonConvergenceError("random_generic_l: rejection sampling stalled");
}

inline std::string m_params(int m) { return "m=" + std::to_string(m); }

inline std::string ml_params(int m, cplx l) {
    return "m=" + std::to_string(m) + " l=" + format_cplx(l);
}

}  // namespace detail

// ---- per-area check runners ------------------------------------------------

inline void run_elliptic_checks(const RunConfig& cfg, const ModularData& md, int m,
                                Report& report) {
    const double tol = tolerance(cfg, "elliptic");
    std::mt19937_64 rng(cfg.seed ^ 0xe111b7ull);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    double odd_res = 0.0, per1_res = 0.0, pertau_res = 0.0;
    for (int i = 0; i < 100; ++i) {
        const cplx z(uni(rng), uni(rng) * md.tau.imag());
        const cplx tp = theta1(z, md.tau, md.series);
        const cplx tn = theta1(-z, md.tau, md.series);
        odd_res = std::max(odd_res, std::abs(tp + tn) / std::max(1.0, std::abs(tp)));

        const cplx t1 = theta1(z + 1.0, md.tau, md.series);
        per1_res = std::max(per1_res,
                            std::abs(t1 + tp) / std::max({1.0, std::abs(t1), std::abs(tp)}));
        const cplx tt = theta1(z + md.tau, md.tau, md.series);
        const cplx rhs = -std::exp(cplx(0.0, -kPi) * md.tau + cplx(0.0, -2.0 * kPi) * z) * tp;
        pertau_res = std::max(pertau_res,
                              std::abs(tt - rhs) / std::max({1.0, std::abs(tt), std::abs(rhs)}));
    }
    report.checks.push_back(make_check("elliptic/theta-odd", detail::m_params(m), odd_res, tol));
    report.checks.push_back(make_check("elliptic/theta-period-1", detail::m_params(m), per1_res, tol));
    report.checks.push_back(
        make_check("elliptic/theta-period-tau", detail::m_params(m), pertau_res, tol));

    double r_om = 0.0, r_omp = 0.0, odd_x = 0.0;
    int used = 0;
    while (used < 100) {
        const cplx x = kSampleOffset + uni(rng) * md.omega + uni(rng) * md.omega_prime;
        const auto sc = ell_num_shift_check(x, md);
        if (sc.skipped) continue;
        ++used;
        r_om = std::max(r_om, sc.r_omega);
        r_omp = std::max(r_omp, sc.r_omega_prime);
        const cplx v = ell_num(x, md);
        odd_x = std::max(odd_x, std::abs(ell_num(-x, md) + v) / std::max(1.0, std::abs(v)));
    }
    report.checks.push_back(make_check("elliptic/ellnum-shift-omega", detail::m_params(m), r_om, tol));
    report.checks.push_back(
        make_check("elliptic/ellnum-shift-omega-prime", detail::m_params(m), r_omp, tol));
    report.checks.push_back(make_check("elliptic/ellnum-odd", detail::m_params(m), odd_x, tol));

    double zero_res = 0.0;
    for (int n = -2; n <= 2; ++n)
        for (int np = -2; np <= 2; ++np)
            zero_res = std::max(zero_res, std::abs(ell_num(static_cast<double>(n) * md.omega +
                                                               static_cast<double>(np) * md.omega_prime,
                                                           md)));
    report.checks.push_back(make_check("elliptic/ellnum-zero-lattice", detail::m_params(m), zero_res,
                                       tolerance(cfg, "lattice-zero")));
}

inline void run_family_checks(const RunConfig& cfg, const ModularData& md, int m, Report& report) {
    std::mt19937_64 rng(cfg.seed ^ 0xfa417ull ^ (static_cast<std::uint64_t>(m) << 32));
    const auto L = make_L(m, md);
    const double ftol = tolerance(cfg, "family");

    {
        const auto Mm = make_M(static_cast<double>(m), m, md);
        const auto rhs = scale(identity_op(), ell_fact(2 * m, md) / ell_fact(m, md));
        auto samples = make_sample_set(md, cfg.sample_count, cfg.seed + 11, 1e-3,
                                       avoid_poles_of({&Mm, &rhs}));
        report.checks.push_back(make_check("family/M_m-scalar", detail::m_params(m),
                                           equal_on(Mm, rhs, samples, ftol).max_residual, ftol));
    }
    if (m >= 1) {
        const auto Mm1 = make_M(static_cast<double>(m - 1), m, md);
        const auto rhs = scale(L, ell_fact(2 * m - 1, md) / ell_fact(m - 1, md));
        auto samples = make_sample_set(md, cfg.sample_count, cfg.seed + 12, 1e-3,
                                       avoid_poles_of({&Mm1, &rhs}));
        report.checks.push_back(make_check("family/M_m-1-is-L", detail::m_params(m),
                                           equal_on(Mm1, rhs, samples, ftol).max_residual, ftol));
    }
    {
        const auto N = make_N(m, md);
        const auto alt = sub(make_M(static_cast<double>(m + 1), m, md),
                             make_M(static_cast<double>(-m - 1), m, md));
        auto samples =
            make_sample_set(md, cfg.sample_count, cfg.seed + 13, 1e-3, avoid_poles_of({&N, &alt}));
        report.checks.push_back(make_check("family/N-difference-form", detail::m_params(m),
                                           equal_on(N, alt, samples, ftol).max_residual, ftol));
        const double dl_res =
            std::abs(degree(N) - (2.0 * m + 1.0)) + std::abs(length(N) - (4.0 * m + 2.0));
        report.checks.push_back(
            make_check("family/N-degree-length", detail::m_params(m), dl_res, 0.5));
    }

    // commutation with L: integer labels -m-1..m+1 plus three generic complex ones
    const double ctol = tolerance(cfg, "commute");
    std::vector<cplx> labels;
    for (int l = -m - 1; l <= m + 1; ++l) labels.push_back(static_cast<double>(l));
    for (int i = 0; i < 3; ++i) labels.push_back(detail::random_generic_l(rng, m, md));
    for (const cplx& l : labels) {
        const auto M = make_M(l, m, md);
        const auto lhs = compose(L, M);
        const auto rhs = compose(M, L);
        auto samples = make_sample_set(md, cfg.sample_count, cfg.seed + 21, 1e-3,
                                       avoid_poles_of({&lhs, &rhs}));
        report.checks.push_back(make_check("commute/L-M_l", detail::ml_params(m, l),
                                           equal_on(lhs, rhs, samples, ctol).max_residual, ctol));
    }
    for (int i = 0; i < 3; ++i) {
        const cplx l = detail::random_generic_l(rng, m, md);
        const cplx k = detail::random_generic_l(rng, m, md);
        const auto Ml = make_M(l, m, md);
        const auto Mk = make_M(k, m, md);
        const auto lhs = compose(Ml, Mk);
        const auto rhs = compose(Mk, Ml);
        auto samples = make_sample_set(md, cfg.sample_count, cfg.seed + 22, 1e-3,
                                       avoid_poles_of({&lhs, &rhs}));
        report.checks.push_back(
            make_check("commute/M_l-M_k", detail::ml_params(m, l) + " k=" + format_cplx(k),
                       equal_on(lhs, rhs, samples, ctol).max_residual, ctol));
    }

    // recurrence and omega-shift, five generic labels each
    for (int i = 0; i < 5; ++i) {
        const cplx l = detail::random_generic_l(rng, m, md);
        auto samples = make_sample_set(md, cfg.sample_count, cfg.seed + 31 + i, 1e-3);
        report.checks.push_back(
            make_check("family/recurrence", detail::ml_params(m, l),
                       verify_recurrence(l, m, md, samples, tolerance(cfg, "recurrence")).max_residual,
                       tolerance(cfg, "recurrence")));
        report.checks.push_back(make_check(
            "family/omega-shift", detail::ml_params(m, l),
            verify_omega_shift(l, m, md, samples, tolerance(cfg, "omega-shift")).max_residual,
            tolerance(cfg, "omega-shift")));
    }
    for (int i = 0; i < 3; ++i) {
        const cplx l = detail::random_generic_l(rng, m, md);
        const cplx k = detail::random_generic_l(rng, m, md);
        auto samples = make_sample_set(md, cfg.sample_count, cfg.seed + 41 + i, 1e-3);
        report.checks.push_back(make_check(
            "family/product-rule", detail::ml_params(m, l) + " k=" + format_cplx(k),
            verify_product_rule(l, k, m, md, samples, tolerance(cfg, "product-rule")).max_residual,
            tolerance(cfg, "product-rule")));
    }
    {
        auto samples = make_sample_set(md, 20, cfg.seed + 51, 1e-2);
        report.checks.push_back(
            make_check("family/phi-factorization", detail::m_params(m),
                       verify_phi_factorization(m, md, samples, tolerance(cfg, "phi")).max_residual,
                       tolerance(cfg, "phi")));
    }
}

inline void run_bethe_checks(const RunConfig& cfg, const ModularData& md, int m, Report& report) {
    std::mt19937_64 rng(cfg.seed ^ 0xbe7eull ^ (static_cast<std::uint64_t>(m) << 24));
    const std::vector<cplx> c_values = {cplx(0.25, 0.0), cplx(0.5, 0.1), cplx(0.8, 0.0)};
    const auto L = make_L(m, md);
    const auto N = make_N(m, md);

    for (const cplx& c : c_values) {
        const std::string params = detail::m_params(m) + " c=" + format_cplx(c);
        std::vector<BethePoint> pts;
        try {
            pts = solve_given_c(c, m, md, 64, {}, cfg.seed);
        } catch (const std::exception&) {
            pts.clear();
        }
        if (pts.empty()) {
            report.checks.push_back(make_check("bethe/solve", params,
                                               std::numeric_limits<double>::infinity(),
                                               tolerance(cfg, "bethe")));
            continue;
        }
        double solve_res = 0.0, eig_res = 0.0, tr_res = 0.0, ell_res = 0.0;
        double epsl_res = 0.0, prod_res = 0.0;
        for (const auto& bp : pts) {
            solve_res = std::max(solve_res, bp.residual);
            const cplx eL = eps_L(bp.t, bp.c, m, md);
            auto samples = make_bethe_sample_set(bp, md, 20, cfg.seed + 61, 1e-3, 2.0);
            eig_res = std::max(eig_res, eigen_residual(L, eL, bp, md, samples));
            for (const cplx& x : samples.points)
                tr_res = std::max(tr_res, residual_transformed_eq(bp.t, bp.c, eL, x, m, md));
            ell_res = std::max(
                ell_res, multiplier_ellipticity_check(bp.t, bp.c, m, md, samples).max_residual);
        }
        report.checks.push_back(make_check("bethe/solve", params, solve_res, tolerance(cfg, "bethe")));
        report.checks.push_back(
            make_check("bethe/eigen-residual", params, eig_res, tolerance(cfg, "eigen")));
        report.checks.push_back(
            make_check("bethe/transformed-eq", params, tr_res, tolerance(cfg, "transformed")));
        report.checks.push_back(
            make_check("bethe/ellipticity", params, ell_res, tolerance(cfg, "ellipticity")));

        // eigenvalue coherence at the first solved point: eps_l against the
        // operator action, and the product rule on eigenvalues
        const auto& bp = pts.front();
        for (int i = 0; i < 2; ++i) {
            const cplx l = detail::random_generic_l(rng, m, md);
            const auto Ml = make_M(l, m, md);
            const cplx el = eps_l(l, bp.t, bp.c, m, md);
            auto samples =
                make_bethe_sample_set(bp, md, 20, cfg.seed + 71 + i, 1e-3, std::abs(l) + m + 1.0);
            epsl_res = std::max(epsl_res, eigen_residual(Ml, el, bp, md, samples));
        }
        {
            const cplx l = detail::random_generic_l(rng, m, md);
            const cplx k = detail::random_generic_l(rng, m, md);
            cplx rhs_sum = 0.0;
            for (int r = 0; r <= m; ++r) {
                const cplx j = l + static_cast<double>(-m + 2 * r);
                rhs_sum += coeff_A_at(l, r, m, md, k) * eps_l(k + j, bp.t, bp.c, m, md);
            }
            const cplx lhs = eps_l(l, bp.t, bp.c, m, md) * eps_l(k, bp.t, bp.c, m, md);
            prod_res = std::abs(lhs - rhs_sum) / std::max(1.0, std::abs(lhs));
        }
        report.checks.push_back(
            make_check("bethe/eps-operator-action", params, epsl_res, tolerance(cfg, "eigen")));
        report.checks.push_back(
            make_check("bethe/eps-product-rule", params, prod_res, tolerance(cfg, "eigen")));

        // eps_N coherence against N and the difference of eps_{m+1}, eps_{-m-1}
        {
            const cplx eN = eps_N(bp.t, bp.c, m, md);
            auto samples = make_bethe_sample_set(bp, md, 20, cfg.seed + 81, 1e-3, 2.0 * m + 1.0);
            const double r1 = eigen_residual(N, eN, bp, md, samples);
            const cplx diff = eps_l(static_cast<double>(m + 1), bp.t, bp.c, m, md) -
                              eps_l(static_cast<double>(-m - 1), bp.t, bp.c, m, md);
            const double r2 = std::abs(eN - diff) / std::max(1.0, std::abs(eN));
            report.checks.push_back(
                make_check("bethe/eps_N-coherence", params, std::max(r1, r2), tolerance(cfg, "eigen")));
        }
    }
}

inline void run_curve_checks(const RunConfig& cfg, const ModularData& md, int m, Report& report) {
    const auto [lo1, hi1] = default_c_window(0);
    const auto [lo2, hi2] = default_c_window(1);
    const int count = std::max(15, 2 * m + 8);

    SpectralFit fit, fit2;
    std::vector<SpectralSample> samples;
    try {
        samples = collect_samples(m, md, count, lo1, hi1);
        fit = fit_P(samples, m);
        auto samples2 = collect_samples(m, md, count, lo2, hi2);
        fit2 = fit_P(samples2, m);
    } catch (const std::exception&) {
        report.checks.push_back(make_check("curve/fit-validation", detail::m_params(m),
                                           std::numeric_limits<double>::infinity(),
                                           tolerance(cfg, "fit-validation")));
        return;
    }

    report.checks.push_back(make_check("curve/fit-validation", detail::m_params(m),
                                       fit.validation_residual, tolerance(cfg, "fit-validation")));
    report.checks.push_back(make_check("curve/degree-exact", detail::m_params(m),
                                       static_cast<double>(fit.coeffs.size() != 2 * m + 2u), 0.5));
    report.checks.push_back(
        make_check("curve/window-stability", detail::m_params(m), compare_fits(fit, fit2),
                   tolerance(cfg, "window")));

    const double op_tol = tolerance(cfg, m >= 2 ? "op-relation-deep" : "op-relation");
    {
        const auto N = make_N(m, md);
        const auto lhs = compose(N, N);
        const auto rhs = poly_in_L_squared(fit.coeffs, m, md);
        auto ss = make_sample_set(md, cfg.sample_count, cfg.seed + 91, 1e-3,
                                  avoid_poles_of({&lhs, &rhs}));
        report.checks.push_back(make_check("curve/operator-relation", detail::m_params(m),
                                           equal_on(lhs, rhs, ss, op_tol).max_residual, op_tol));

        auto inv = verify_involutions(m, md, ss, tolerance(cfg, "involution-op"), &fit, &samples,
                                      tolerance(cfg, "involution-curve"));
        const double inv_op = std::max({inv.s_L.max_residual, inv.s_N.max_residual,
                                        inv.u_L.max_residual, inv.u_N2.max_residual});
        report.checks.push_back(make_check("curve/involution-operators", detail::m_params(m), inv_op,
                                           tolerance(cfg, "involution-op")));
        report.checks.push_back(make_check("curve/involution-partners", detail::m_params(m),
                                           inv.partner_residual,
                                           tolerance(cfg, "involution-curve")));
    }
}

// Runs the whole verification battery. Deterministic for a fixed config.
inline Report run_verify(const RunConfig& cfg) {
    validate_config(cfg);
    Report report;
    report.config_echo = config_echo_json(cfg);
    const ModularData md(cfg.gamma, cfg.tau);
    for (int m : cfg.m_list) {
        run_elliptic_checks(cfg, md, m, report);
        run_family_checks(cfg, md, m, report);
        run_bethe_checks(cfg, md, m, report);
        run_curve_checks(cfg, md, m, report);
    }
    return report;
}

}  // namespace qlame
