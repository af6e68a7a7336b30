#pragma once

#include <string>
#include <vector>

#include "qlame/difference_op.hpp"
#include "qlame/elliptic.hpp"

namespace qlame {

// q-Lame operator  L = ([x-m]/[x]) T_1 + ([x+m]/[x]) T_{-1}.
inline DifferenceOperator make_L(int m, const ModularData& md) {
    if (m < 0) throw std::domain_error("make_L: m must be nonnegative");
    const double dm = static_cast<double>(m);
    auto up = CoefficientFn::make(
        [md, dm](cplx x) { return ell_num(x - dm, md) / ell_num(x, md); },
        bracket_expr(-dm) + "/[x]");
    auto down = CoefficientFn::make(
        [md, dm](cplx x) { return ell_num(x + dm, md) / ell_num(x, md); },
        bracket_expr(dm) + "/[x]");
    return make_operator({{cplx(1.0), up}, {cplx(-1.0), down}});
}

// Coefficient A^l_{l-m+2k}(x) of the commuting family, k = 0..m:
//
//   (-1)^k [m;k] prod_{j=0}^{m-k-1} [l+m-j][x+m-j]/[x+l+k-j]
//              * prod_{j=0}^{k-1}   [l-m+j][x-m+j]/[x+l-m+k+j]
//
// The x-independent factors are folded into one precomputed constant.
inline CoefficientFn coeff_A(cplx l, int k, int m, const ModularData& md) {
    if (k < 0 || k > m) throw std::domain_error("coeff_A: k must be in 0..m");

    cplx c = (k % 2 == 0) ? 1.0 : -1.0;
    c *= ell_binom(static_cast<double>(m), k, md);
    std::vector<cplx> num_offsets, den_offsets;
    for (int j = 0; j <= m - k - 1; ++j) {
        c *= ell_num(l + static_cast<double>(m - j), md);
        num_offsets.push_back(static_cast<double>(m - j));
        den_offsets.push_back(l + static_cast<double>(k - j));
    }
    for (int j = 0; j <= k - 1; ++j) {
        c *= ell_num(l - static_cast<double>(m - j), md);
        num_offsets.push_back(static_cast<double>(-m + j));
        den_offsets.push_back(l + static_cast<double>(-m + k + j));
    }

    std::string expr = format_cplx(c);
    for (const cplx& a : num_offsets) expr += bracket_expr(a);
    if (!den_offsets.empty()) {
        expr += "/(";
        for (const cplx& b : den_offsets) expr += bracket_expr(b);
        expr += ")";
    }

    return CoefficientFn::make(
        [md, c, num_offsets, den_offsets](cplx x) {
            cplx v = c;
            for (const cplx& a : num_offsets) v *= ell_num(x + a, md);
            for (const cplx& b : den_offsets) v /= ell_num(x + b, md);
            return v;
        },
        detail::cap_expr(std::move(expr)));
}

// A^l_{l-m+2k} evaluated at a plain number (used by the product rule, where
// the coefficients reappear as structure constants).
inline cplx coeff_A_at(cplx l, int k, int m, const ModularData& md, cplx x) {
    return coeff_A(l, k, m, md).eval(x);
}

// M_l = sum_{k=0..m} A^l_{l-m+2k}(x) T_{l-m+2k}. For integer l in -m..m some
// coefficients carry a vanishing [..] factor; the prune pass removes them.
inline DifferenceOperator make_M(cplx l, int m, const ModularData& md) {
    if (m < 0) throw std::domain_error("make_M: m must be nonnegative");
    std::vector<OpTerm> raw;
    for (int k = 0; k <= m; ++k) {
        const cplx shift = l + static_cast<double>(-m + 2 * k);
        raw.push_back({shift, coeff_A(l, k, m, md)});
    }
    DifferenceOperator op = make_operator(std::move(raw));

    auto samples = make_sample_set(md, 20, 0x9e3779b97f4a7c15ULL, 1e-3,
                                   avoid_poles_of({&op}));
    return prune(op, samples, 1e-12);
}

// N = M_{m+1} - S M_{m+1} S, the antisymmetric generator; equals
// M_{m+1} - M_{-m-1} identically.
inline DifferenceOperator make_N(int m, const ModularData& md) {
    const DifferenceOperator mp = make_M(static_cast<double>(m + 1), m, md);
    return sub(mp, conj_S(mp));
}

// Checks below return an EqualReport; callers decide the tolerance story.

// [L, M_l] = 0.
inline EqualReport verify_commutation(cplx l, int m, const ModularData& md,
                                      const SampleSet& samples, double tol = 1e-8) {
    const auto L = make_L(m, md);
    const auto M = make_M(l, m, md);
    return equal_on(compose(L, M), compose(M, L), samples, tol);
}

// [M_l, M_k] = 0 for two family labels.
inline EqualReport verify_pair_commutation(cplx l, cplx k, int m, const ModularData& md,
                                           const SampleSet& samples, double tol = 1e-8) {
    const auto Ml = make_M(l, m, md);
    const auto Mk = make_M(k, m, md);
    return equal_on(compose(Ml, Mk), compose(Mk, Ml), samples, tol);
}

// L M_l = ([l+m]/[l]) M_{l-1} + ([l-m]/[l]) M_{l+1}.
inline EqualReport verify_recurrence(cplx l, int m, const ModularData& md,
                                     const SampleSet& samples, double tol = 1e-8,
                                     double degenerate_guard = 1e-3) {
    const cplx el = ell_num(l, md);
    if (std::abs(el) < degenerate_guard)
        throw PoleError("verify_recurrence: [l] too close to zero");
    const auto L = make_L(m, md);
    const auto lhs = compose(L, make_M(l, m, md));
    const auto rhs = add(scale(make_M(l - 1.0, m, md), ell_num(l + static_cast<double>(m), md) / el),
                         scale(make_M(l + 1.0, m, md), ell_num(l - static_cast<double>(m), md) / el));
    return equal_on(lhs, rhs, samples, tol);
}

// M_l M_k = sum_j A^l_j(k) M_{k+j}, the structure constants being the family
// coefficients evaluated at the label k.
inline EqualReport verify_product_rule(cplx l, cplx k, int m, const ModularData& md,
                                       const SampleSet& samples, double tol = 1e-8) {
    const auto lhs = compose(make_M(l, m, md), make_M(k, m, md));
    DifferenceOperator rhs = zero_op();
    for (int r = 0; r <= m; ++r) {
        const cplx j = l + static_cast<double>(-m + 2 * r);
        const cplx alk = coeff_A_at(l, r, m, md, k);
        rhs = add(rhs, scale(make_M(k + j, m, md), alk));
    }
    return equal_on(lhs, rhs, samples, tol);
}

// M_{l+omega} = M_l T_omega.
inline EqualReport verify_omega_shift(cplx l, int m, const ModularData& md,
                                      const SampleSet& samples, double tol = 1e-8) {
    const auto lhs = make_M(l + md.omega, m, md);
    const auto rhs = compose(make_M(l, m, md), shift_op(md.omega));
    return equal_on(lhs, rhs, samples, tol);
}

// L = phi(x) T_1 phi(x)^{-1} + phi(-x) T_{-1} phi(-x)^{-1}: both telescoped
// coefficients must match L's.
struct PhiFactorizationReport {
    bool pass = false;
    double max_residual = 0.0;
};

inline PhiFactorizationReport verify_phi_factorization(int m, const ModularData& md,
                                                       const SampleSet& samples,
                                                       double tol = 1e-10) {
    PhiFactorizationReport rep;
    const double dm = static_cast<double>(m);
    for (const cplx& x : samples.points) {
        const cplx up_lhs = phi(x, m, md) / phi(x + 1.0, m, md);
        const cplx up_rhs = ell_num(x - dm, md) / ell_num(x, md);
        const cplx dn_lhs = phi(-x, m, md) / phi(-(x - 1.0), m, md);
        const cplx dn_rhs = ell_num(x + dm, md) / ell_num(x, md);
        const double r1 = std::abs(up_lhs - up_rhs) / std::max({1.0, std::abs(up_lhs), std::abs(up_rhs)});
        const double r2 = std::abs(dn_lhs - dn_rhs) / std::max({1.0, std::abs(dn_lhs), std::abs(dn_rhs)});
        rep.max_residual = std::max({rep.max_residual, r1, r2});
    }
    rep.pass = rep.max_residual < tol;
    return rep;
}

}  // namespace qlame
