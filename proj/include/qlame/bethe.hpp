#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "qlame/difference_op.hpp"
#include "qlame/elliptic.hpp"
#include "qlame/errors.hpp"

namespace qlame {

// A solution (t_1..t_m, c) of the Bethe system b_i(t) = e^{2*gamma*c},
// carrying its residual certificate.
struct BethePoint {
    std::vector<cplx> t;
    cplx c;
    double residual = 0.0;
    int m = 0;
};

// b_i(t) = ([t_i-m]/[t_i+m]) * prod_{j != i} [t_j-t_i-1]/[t_j-t_i+1].
inline cplx bethe_b(int i, const std::vector<cplx>& t, int m, const ModularData& md) {
    if (i < 0 || i >= static_cast<int>(t.size()))
        throw std::domain_error("bethe_b: index out of range");
    const double dm = static_cast<double>(m);
    const cplx num0 = ell_num(t[i] - dm, md);
    const cplx den0 = ell_num(t[i] + dm, md);
    if (std::abs(den0) < 1e-13 * std::max(1.0, std::abs(num0)))
        throw PoleError("bethe_b: denominator [t_i+m] vanishes");
    cplx v = num0 / den0;
    for (std::size_t j = 0; j < t.size(); ++j) {
        if (static_cast<int>(j) == i) continue;
        const cplx d = t[j] - t[i];
        const cplx num = ell_num(d - 1.0, md);
        const cplx den = ell_num(d + 1.0, md);
        if (std::abs(den) < 1e-13 * std::max(1.0, std::abs(num)))
            throw PoleError("bethe_b: denominator [t_j-t_i+1] vanishes");
        v *= num / den;
    }
    return v;
}

// Max relative defect of the Bethe equations at (t, c).
inline double bethe_residual(const std::vector<cplx>& t, cplx c, int m, const ModularData& md) {
    const cplx rhs = std::exp(2.0 * md.gamma * c);
    double worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const cplx f = bethe_b(static_cast<int>(i), t, m, md) - rhs;
        worst = std::max(worst, std::abs(f) / std::abs(rhs));
    }
    return worst;
}

// Normalized Baker-Akhiezer function psi(t,x) = e^{c*gamma*x} prod [x+t_j]/[t_j];
// psi(t,0) = 1 by construction.
inline cplx baker_akhiezer(const std::vector<cplx>& t, cplx c, cplx x, int m,
                           const ModularData& md) {
    if (static_cast<int>(t.size()) != m)
        throw std::domain_error("baker_akhiezer: t must have m entries");
    cplx v = std::exp(c * md.gamma * x);
    for (const cplx& tj : t) {
        const cplx den = ell_num(tj, md);
        if (std::abs(den) < 1e-13)
            throw PoleError("baker_akhiezer: [t_j] vanishes, normalization undefined");
        v *= ell_num(x + tj, md) / den;
    }
    return v;
}

// Eigenvalue of L: e^{-gamma*c} ([2m]/[m]) prod [t_j+m-1]/[t_j+m].
// The m = 0 operator is T_1 + T_{-1} acting on e^{c*gamma*x}, whose
// eigenvalue is e^{gamma*c} + e^{-gamma*c} (the displayed quotient [2m]/[m]
// is 0/0 there).
inline cplx eps_L(const std::vector<cplx>& t, cplx c, int m, const ModularData& md) {
    if (m == 0) return std::exp(md.gamma * c) + std::exp(-md.gamma * c);
    const double dm = static_cast<double>(m);
    cplx v = std::exp(-md.gamma * c) * ell_num(2.0 * dm, md) / ell_num(dm, md);
    for (const cplx& tj : t) {
        const cplx den = ell_num(tj + dm, md);
        if (std::abs(den) < 1e-13) throw PoleError("eps_L: denominator [t_j+m] vanishes");
        v *= ell_num(tj + dm - 1.0, md) / den;
    }
    return v;
}

// Eigenvalue of M_l: [2m]! psi(t,l) / ([m]! psi(t,m)).
inline cplx eps_l(cplx l, const std::vector<cplx>& t, cplx c, int m, const ModularData& md) {
    const cplx denom = baker_akhiezer(t, c, static_cast<double>(m), m, md);
    if (std::abs(denom) < 1e-13) throw PoleError("eps_l: psi(t,m) vanishes");
    return ell_fact(2 * m, md) / ell_fact(m, md) * baker_akhiezer(t, c, l, m, md) / denom;
}

// Eigenvalue of N = M_{m+1} - M_{-m-1}:
//   ([2m]!/[m]!) ( e^{gamma c} prod [m+t_j+1]/[m+t_j]
//                - e^{-gamma c} prod [m-t_j+1]/[m-t_j] ).
// c is the stored multiplier exponent, so no square-root branch is taken.
inline cplx eps_N(const std::vector<cplx>& t, cplx c, int m, const ModularData& md) {
    const double dm = static_cast<double>(m);
    cplx plus = std::exp(md.gamma * c);
    cplx minus = std::exp(-md.gamma * c);
    for (const cplx& tj : t) {
        const cplx dp = ell_num(dm + tj, md);
        const cplx dmn = ell_num(dm - tj, md);
        if (std::abs(dp) < 1e-13 || std::abs(dmn) < 1e-13)
            throw PoleError("eps_N: denominator [m+-t_j] vanishes");
        plus *= ell_num(dm + tj + 1.0, md) / dp;
        minus *= ell_num(dm - tj + 1.0, md) / dmn;
    }
    return ell_fact(2 * m, md) / ell_fact(m, md) * (plus - minus);
}

// ---- Bethe system solver -------------------------------------------------

struct SolverOptions {
    int max_iter = 50;
    double f_tol = 1e-12;       // Newton convergence on max |F_i|
    double fd_step = 1e-6;      // central-difference Jacobian step
    int max_backtrack = 20;
    double accept_residual = 1e-10;
    double separation_guard = 1e-3;   // divisor-D exclusion, |t_i - t_j| mod lattice
    double lattice_guard = 1e-3;      // |[t_j]| != 0 for normalization
};

namespace detail {

inline std::optional<std::vector<cplx>> bethe_vector(const std::vector<cplx>& t, cplx rhs,
                                                     int m, const ModularData& md) {
    std::vector<cplx> f(t.size());
    try {
        for (std::size_t i = 0; i < t.size(); ++i)
            f[i] = bethe_b(static_cast<int>(i), t, m, md) - rhs;
    } catch (const PoleError&) {
        return std::nullopt;
    } catch (const NonConvergenceError&) {
        return std::nullopt;  // iterate wandered out of the series' comfort zone
    }
    for (const cplx& v : f)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return std::nullopt;
    return f;
}

inline double inf_norm(const std::vector<cplx>& v) {
    double n = 0.0;
    for (const cplx& x : v) n = std::max(n, std::abs(x));
    return n;
}

// Damped Newton iteration on F_i(t) = b_i(t) - rhs; the b_i are holomorphic
// off their poles, so a complex-linear Jacobian step is valid.
inline std::optional<std::vector<cplx>> newton_bethe(std::vector<cplx> t, cplx rhs, int m,
                                                     const ModularData& md,
                                                     const SolverOptions& opt) {
    const int n = static_cast<int>(t.size());
    const double target = opt.f_tol * std::max(1.0, std::abs(rhs));
    auto f0 = bethe_vector(t, rhs, m, md);
    if (!f0) return std::nullopt;
    double fnorm = inf_norm(*f0);

    for (int iter = 0; iter < opt.max_iter; ++iter) {
        if (fnorm < target) return t;

        Eigen::MatrixXcd J(n, n);
        for (int j = 0; j < n; ++j) {
            std::vector<cplx> tp = t, tm = t;
            tp[j] += opt.fd_step;
            tm[j] -= opt.fd_step;
            auto fp = bethe_vector(tp, rhs, m, md);
            auto fm = bethe_vector(tm, rhs, m, md);
            if (!fp || !fm) return std::nullopt;
            for (int i = 0; i < n; ++i) J(i, j) = ((*fp)[i] - (*fm)[i]) / (2.0 * opt.fd_step);
        }
        Eigen::VectorXcd F(n);
        for (int i = 0; i < n; ++i) F(i) = (*f0)[i];
        Eigen::VectorXcd step = J.partialPivLu().solve(-F);
        if (!step.allFinite()) return std::nullopt;

        double lambda = 1.0;
        bool improved = false;
        for (int bt = 0; bt <= opt.max_backtrack; ++bt) {
            std::vector<cplx> trial = t;
            for (int i = 0; i < n; ++i) trial[i] += lambda * step(i);
            auto ft = bethe_vector(trial, rhs, m, md);
            if (ft) {
                const double fn = inf_norm(*ft);
                if (fn < fnorm || fn < target) {
                    t = std::move(trial);
                    f0 = std::move(ft);
                    fnorm = fn;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!improved) return std::nullopt;
    }
    return fnorm < target ? std::optional<std::vector<cplx>>(t) : std::nullopt;
}

// Reduce the omega-coordinate of each root to [0,1); this translation leaves
// the Bethe equations at fixed c invariant (omega'-translations do not).
inline std::vector<cplx> canonicalize_roots(std::vector<cplx> t, const ModularData& md) {
    for (cplx& x : t) {
        auto [a, b] = lattice_coords(x, md);
        x -= std::floor(a) * md.omega;
    }
    std::sort(t.begin(), t.end(), shift_less);
    return t;
}

// Solutions are identified mod full-lattice translations of individual roots
// plus permutations.
inline bool same_solution(const std::vector<cplx>& a, const std::vector<cplx>& b,
                          const ModularData& md, double tol = 1e-6) {
    if (a.size() != b.size()) return false;
    std::vector<bool> used(b.size(), false);
    for (const cplx& x : a) {
        bool found = false;
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (used[j]) continue;
            if (lattice_distance(x - b[j], md) < tol) {
                used[j] = true;
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return true;
}

inline bool valid_solution(const std::vector<cplx>& t, const ModularData& md,
                           const SolverOptions& opt) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (lattice_distance(t[i], md) <= opt.lattice_guard) return false;  // [t_j] ~ 0
        for (std::size_t j = i + 1; j < t.size(); ++j)
            if (lattice_distance(t[i] - t[j], md) <= opt.separation_guard) return false;
    }
    return true;
}

}  // namespace detail

// Multistart Newton solve of b_i(t) = e^{2*gamma*c} at fixed c. Returns the
// deduplicated valid solutions, deterministically ordered. The two starts
// derived from the degenerate configurations (-m+1,...,0) and (m-1,...,0)
// are perturbed by 0.05 per coordinate before use.
inline std::vector<BethePoint> solve_given_c(cplx c, int m, const ModularData& md,
                                             int starts = 64,
                                             const SolverOptions& opt = {},
                                             std::uint64_t seed = 0x6c8e944d1f3a5b7ULL) {
    if (m < 0) throw std::domain_error("solve_given_c: m must be nonnegative");
    if (m == 0) return {BethePoint{{}, c, 0.0, 0}};

    const cplx rhs = std::exp(2.0 * md.gamma * c);
    std::vector<std::vector<cplx>> initial;
    const cplx wobble(0.05, 0.05);
    std::vector<cplx> p_plus(m), p_minus(m);
    for (int j = 0; j < m; ++j) {
        p_plus[j] = static_cast<double>(-(m - 1) + j) + wobble;
        p_minus[j] = static_cast<double>((m - 1) - j) + wobble;
    }
    initial.push_back(p_plus);
    initial.push_back(p_minus);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    while (static_cast<int>(initial.size()) < starts) {
        std::vector<cplx> t0(m);
        for (int j = 0; j < m; ++j)
            t0[j] = kSampleOffset + uni(rng) * md.omega + uni(rng) * md.omega_prime;
        initial.push_back(std::move(t0));
    }

    std::vector<BethePoint> found;
    for (const auto& t0 : initial) {
        auto sol = detail::newton_bethe(t0, rhs, m, md, opt);
        if (!sol) continue;
        auto t = detail::canonicalize_roots(std::move(*sol), md);
        if (!detail::valid_solution(t, md, opt)) continue;
        const double res = bethe_residual(t, c, m, md);
        if (res >= opt.accept_residual) continue;
        bool dup = false;
        for (const auto& bp : found)
            if (detail::same_solution(t, bp.t, md)) {
                dup = true;
                break;
            }
        if (!dup) found.push_back(BethePoint{std::move(t), c, res, m});
    }
    std::sort(found.begin(), found.end(), [](const BethePoint& a, const BethePoint& b) {
        for (std::size_t i = 0; i < std::min(a.t.size(), b.t.size()); ++i) {
            if (a.t[i] != b.t[i]) return detail::shift_less(a.t[i], b.t[i]);
        }
        return false;
    });
    return found;
}

// Continuation stalled; carries the last accepted point.
struct ContinuationStallError : NonConvergenceError {
    BethePoint last_good;
    ContinuationStallError(const std::string& msg, BethePoint last)
        : NonConvergenceError(msg), last_good(std::move(last)) {}
};

// Predictor-corrector continuation along a path of c values. Returns one
// BethePoint per path entry, all on the same solution branch. The corrector
// halves the c-step on failure down to min_step.
inline std::vector<BethePoint> trace_curve(const std::vector<cplx>& c_path, int m,
                                           const ModularData& md,
                                           const SolverOptions& opt = {},
                                           double min_step = 1e-4,
                                           int starts = 64,
                                           std::uint64_t seed = 0x6c8e944d1f3a5b7ULL) {
    if (c_path.empty()) return {};
    auto first = solve_given_c(c_path.front(), m, md, starts, opt, seed);
    if (first.empty())
        throw NonConvergenceError("trace_curve: no solution at the initial c");

    std::vector<BethePoint> out;
    out.push_back(first.front());

    auto correct_at = [&](const std::vector<cplx>& guess, cplx c) -> std::optional<BethePoint> {
        if (m == 0) return BethePoint{{}, c, 0.0, 0};
        const cplx rhs = std::exp(2.0 * md.gamma * c);
        auto sol = detail::newton_bethe(guess, rhs, m, md, opt);
        if (!sol) return std::nullopt;
        auto t = detail::canonicalize_roots(std::move(*sol), md);
        if (!detail::valid_solution(t, md, opt)) return std::nullopt;
        const double res = bethe_residual(t, c, m, md);
        if (res >= opt.accept_residual) return std::nullopt;
        return BethePoint{std::move(t), c, res, m};
    };

    for (std::size_t k = 1; k < c_path.size(); ++k) {
        const cplx c_start = out.back().c;
        const cplx c_target = c_path[k];
        const cplx dc = c_target - c_start;
        std::vector<cplx> t_prev = out.back().t;
        // walk the segment in fractional arclength so the endpoint is hit exactly
        double s = 0.0, step = 1.0;
        while (s < 1.0) {
            const double s_next = std::min(1.0, s + step);
            const cplx c_next = (s_next >= 1.0) ? c_target : c_start + s_next * dc;
            auto next = correct_at(t_prev, c_next);
            if (next) {
                t_prev = std::move(next->t);
                s = s_next;
                step = std::min(1.0, step * 2.0);
            } else {
                step *= 0.5;
                if (std::abs(dc) == 0.0 || step * std::abs(dc) < min_step)
                    throw ContinuationStallError("trace_curve: continuation stalled", out.back());
            }
        }
        out.push_back(BethePoint{t_prev, c_target,
                                 m == 0 ? 0.0 : bethe_residual(t_prev, c_target, m, md), m});
    }
    return out;
}

// ---- Checks on solved points ----------------------------------------------

// Relative defect of the transformed equation with elliptic coefficients,
//   u(x+1) + ([x+m][x-m-1]/([x][x-1])) u(x-1) = eps u(x),
// where u(x) = psi(t,x) / prod_{j=1..m} [x-j].
inline double residual_transformed_eq(const std::vector<cplx>& t, cplx c, cplx eps, cplx x,
                                      int m, const ModularData& md) {
    auto u = [&](cplx y) { return baker_akhiezer(t, c, y, m, md) / phi(y, m, md); };
    const cplx den = ell_num(x, md) * ell_num(x - 1.0, md);
    if (std::abs(den) < 1e-13) throw PoleError("residual_transformed_eq: [x][x-1] vanishes");
    const double dm = static_cast<double>(m);
    const cplx B = ell_num(x + dm, md) * ell_num(x - dm - 1.0, md) / den;
    const cplx a0 = u(x + 1.0);
    const cplx a1 = B * u(x - 1.0);
    const cplx a2 = eps * u(x);
    const double scale = std::max({std::abs(a0), std::abs(a1), std::abs(a2), 1e-300});
    return std::abs(a0 + a1 - a2) / scale;
}

// Double periodicity of r(x) = u(x+1)/u(x) and of u(x)u(-x). Both follow
// from the multiplier structure of u alone, so the check passes for any
// (t, c), solved or not.
struct EllipticityReport {
    bool pass = false;
    double max_residual = 0.0;
};

inline EllipticityReport multiplier_ellipticity_check(const std::vector<cplx>& t, cplx c, int m,
                                                      const ModularData& md,
                                                      const SampleSet& samples,
                                                      double tol = 1e-8) {
    auto u = [&](cplx y) { return baker_akhiezer(t, c, y, m, md) / phi(y, m, md); };
    auto ratio = [&](cplx y) { return u(y + 1.0) / u(y); };
    auto pairf = [&](cplx y) { return u(y) * u(-y); };

    EllipticityReport rep;
    for (const cplx& x : samples.points) {
        for (const cplx& period : {md.omega, md.omega_prime}) {
            const cplx r0 = ratio(x), r1 = ratio(x + period);
            const double rr = std::abs(r1 - r0) / std::max({1e-300, std::abs(r0), std::abs(r1)});
            const cplx p0 = pairf(x), p1 = pairf(x + period);
            const double rp = std::abs(p1 - p0) / std::max({1e-300, std::abs(p0), std::abs(p1)});
            rep.max_residual = std::max({rep.max_residual, rr, rp});
        }
    }
    rep.pass = rep.max_residual < tol;
    return rep;
}

// Sample points at which psi and the operator coefficients are all
// well-scaled, for eigen-residual and transformed-equation checks.
inline SampleSet make_bethe_sample_set(const BethePoint& bp, const ModularData& md, int count,
                                       std::uint64_t seed, double guard = 1e-3,
                                       double max_shift = 0.0) {
    // reject x where psi or u blows up / vanishes at any probe offset
    const double reach = std::max(2.0, max_shift);
    auto accept = [&, reach](cplx x) {
        try {
            for (double off = -reach; off <= reach + 0.5; off += 1.0) {
                const cplx y = x + off;
                if (lattice_distance(y, md) <= guard) return false;
                const cplx p = baker_akhiezer(bp.t, bp.c, y, bp.m, md);
                const cplx ph = phi(y, bp.m, md);
                if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) return false;
                if (std::abs(p) < 1e-3 || std::abs(p) > 1e3) return false;
                if (std::abs(ph) < 1e-6) return false;
            }
        } catch (const PoleError&) {
            return false;
        } catch (const NonConvergenceError&) {
            return false;
        }
        return true;
    };
    return make_sample_set(md, count, seed, guard, accept);
}

// max_x |(op psi)(x) - eps psi(x)| / |psi(x)| over the sample set.
inline double eigen_residual(const DifferenceOperator& op, cplx eps, const BethePoint& bp,
                             const ModularData& md, const SampleSet& samples) {
    auto psi = [&](cplx y) { return baker_akhiezer(bp.t, bp.c, y, bp.m, md); };
    double worst = 0.0;
    for (const cplx& x : samples.points) {
        const cplx lhs = apply(op, psi, x);
        const cplx p = psi(x);
        worst = std::max(worst, std::abs(lhs - eps * p) / std::abs(p));
    }
    return worst;
}

}  // namespace qlame
