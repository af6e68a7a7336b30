#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "qlame/bethe.hpp"
#include "qlame/difference_op.hpp"
#include "qlame/family.hpp"

namespace qlame {

// One point of the eigenvalue map t -> (eps_L, eps_N).
struct SpectralSample {
    cplx X;
    cplx Y;
    BethePoint source;
};

// Least-squares model Y^2 = sum_k p_k (X^2)^k, degree 2m+1 in X^2.
struct SpectralFit {
    int m = 0;
    std::vector<cplx> coeffs;  // constant term first, size 2m+2
    double fit_residual = 0.0;
    double validation_residual = 0.0;
    double cond_estimate = 0.0;

    cplx eval_X2(cplx x2) const {
        cplx acc = 0.0, pw = 1.0;
        for (const cplx& p : coeffs) {
            acc += p * pw;
            pw *= x2;
        }
        return acc;
    }

    // cancellation-aware magnitude of P(X^2), for relative residuals
    double eval_scale(cplx x2) const {
        double acc = 0.0, pw = 1.0;
        for (const cplx& p : coeffs) {
            acc += std::abs(p) * pw;
            pw *= std::abs(x2);
        }
        return acc;
    }
};

// Relative defect |Y^2 - P(X^2)| of one sample against a fit.
inline double curve_residual(const SpectralFit& fit, cplx X, cplx Y) {
    const cplx x2 = X * X;
    const cplx lhs = Y * Y;
    return std::abs(lhs - fit.eval_X2(x2)) /
           std::max({1.0, std::abs(lhs), fit.eval_scale(x2)});
}

// Samples the eigenvalue map along a continuation path of `count` c-values in
// the given window. Every traced point contributes itself and its symmetry
// partner (-t, -c), which lands on (X, -Y).
inline std::vector<SpectralSample> collect_samples(int m, const ModularData& md, int count,
                                                   cplx c_lo, cplx c_hi,
                                                   const SolverOptions& opt = {},
                                                   std::uint64_t seed = 0x6c8e944d1f3a5b7ULL) {
    if (count < 2) throw InsufficientSamplesError("collect_samples: count too small");
    std::vector<cplx> path(count);
    for (int i = 0; i < count; ++i)
        path[i] = c_lo + (c_hi - c_lo) * (static_cast<double>(i) / (count - 1));

    const auto curve = trace_curve(path, m, md, opt, 1e-4, 64, seed);
    std::vector<SpectralSample> out;
    out.reserve(2 * curve.size());
    for (const auto& bp : curve) {
        SpectralSample s;
        s.X = eps_L(bp.t, bp.c, m, md);
        s.Y = eps_N(bp.t, bp.c, m, md);
        s.source = bp;
        out.push_back(s);

        BethePoint partner;
        partner.m = m;
        partner.c = -bp.c;
        for (const cplx& tj : bp.t) partner.t.push_back(-tj);
        partner.residual = (m == 0) ? 0.0 : bethe_residual(partner.t, partner.c, m, md);
        SpectralSample sp;
        sp.X = eps_L(partner.t, partner.c, m, md);
        sp.Y = eps_N(partner.t, partner.c, m, md);
        sp.source = partner;
        out.push_back(sp);
    }

    // the fit needs 2m+4 genuinely different abscissas X^2
    std::vector<cplx> x2;
    for (const auto& s : out) x2.push_back(s.X * s.X);
    double diam = 0.0;
    for (std::size_t i = 0; i < x2.size(); ++i)
        for (std::size_t j = i + 1; j < x2.size(); ++j) diam = std::max(diam, std::abs(x2[i] - x2[j]));
    std::vector<cplx> reps;
    const double radius = 1e-6 * std::max(1.0, diam);
    for (const cplx& z : x2) {
        bool close = false;
        for (const cplx& r : reps)
            if (std::abs(z - r) <= radius) {
                close = true;
                break;
            }
        if (!close) reps.push_back(z);
    }
    if (static_cast<int>(reps.size()) < 2 * m + 4)
        throw InsufficientSamplesError("collect_samples: fewer than 2m+4 distinct X^2 values");
    return out;
}

// Least-squares fit of P through an SVD (no normal equations). Samples with
// |X| above the 95th percentile are dropped to limit pole-dominated leverage;
// every 5th remaining sample is held out for validation.
inline SpectralFit fit_P(const std::vector<SpectralSample>& samples, int m) {
    const int ncoef = 2 * m + 2;
    if (static_cast<int>(samples.size()) < ncoef + 2)
        throw InsufficientSamplesError("fit_P: need at least 2m+4 samples");

    std::vector<double> mags;
    for (const auto& s : samples) mags.push_back(std::abs(s.X));
    std::vector<double> sorted = mags;
    std::sort(sorted.begin(), sorted.end());
    const double cutoff = sorted[static_cast<std::size_t>(0.95 * (sorted.size() - 1))];

    std::vector<const SpectralSample*> kept;
    for (const auto& s : samples)
        if (std::abs(s.X) <= cutoff) kept.push_back(&s);
    if (static_cast<int>(kept.size()) < ncoef + 2)
        throw InsufficientSamplesError("fit_P: too few samples after leverage trim");

    std::vector<const SpectralSample*> train, hold;
    for (std::size_t i = 0; i < kept.size(); ++i)
        (i % 5 == 2 ? hold : train).push_back(kept[i]);
    if (static_cast<int>(train.size()) < ncoef) train = kept;

    Eigen::MatrixXcd A(train.size(), ncoef);
    Eigen::VectorXcd b(train.size());
    for (std::size_t r = 0; r < train.size(); ++r) {
        const cplx x2 = train[r]->X * train[r]->X;
        cplx pw = 1.0;
        for (int k = 0; k < ncoef; ++k) {
            A(r, k) = pw;
            pw *= x2;
        }
        b(r) = train[r]->Y * train[r]->Y;
    }

    // column equilibration keeps the condition estimate about rank, not unit choice
    Eigen::VectorXd colscale(ncoef);
    for (int k = 0; k < ncoef; ++k) {
        colscale(k) = A.col(k).cwiseAbs().maxCoeff();
        if (colscale(k) == 0.0) colscale(k) = 1.0;
        A.col(k) /= colscale(k);
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    const double cond = (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(cond <= 1e10))
        throw RankDeficiencyError("fit_P: Vandermonde system is rank deficient (duplicate X^2?)");

    Eigen::VectorXcd p = svd.solve(b);
    SpectralFit fit;
    fit.m = m;
    fit.cond_estimate = cond;
    fit.coeffs.resize(ncoef);
    for (int k = 0; k < ncoef; ++k) fit.coeffs[k] = p(k) / colscale(k);

    double maxc = 0.0;
    for (const cplx& pc : fit.coeffs) maxc = std::max(maxc, std::abs(pc));
    if (std::abs(fit.coeffs.back()) <= 1e-8 * maxc)
        throw RankDeficiencyError("fit_P: leading coefficient vanished, degree below 2m+1");

    for (const auto* s : train)
        fit.fit_residual = std::max(fit.fit_residual, curve_residual(fit, s->X, s->Y));
    for (const auto* s : hold)
        fit.validation_residual = std::max(fit.validation_residual, curve_residual(fit, s->X, s->Y));
    return fit;
}

// Operator form of the curve equation: N∘N = sum_k p_k (L∘L)^k, evaluated
// by Horner composition and compared coefficient-wise on samples.
inline DifferenceOperator poly_in_L_squared(const std::vector<cplx>& coeffs, int m,
                                            const ModularData& md) {
    const auto L = make_L(m, md);
    const auto L2 = compose(L, L);
    DifferenceOperator acc = scale(identity_op(), coeffs.back());
    for (int k = static_cast<int>(coeffs.size()) - 2; k >= 0; --k)
        acc = add(compose(acc, L2), scale(identity_op(), coeffs[k]));
    return acc;
}

inline EqualReport verify_operator_relation(const SpectralFit& fit, int m, const ModularData& md,
                                            const SampleSet& samples, double tol = 1e-6) {
    const auto N = make_N(m, md);
    const auto lhs = compose(N, N);
    const auto rhs = poly_in_L_squared(fit.coeffs, m, md);
    return equal_on(lhs, rhs, samples, tol);
}

// Operator- and eigenvalue-level involution checks:
//   (X, Y) -> (X, -Y) is S,  (X, Y) -> (-X, -Y) is US.
struct InvolutionReport {
    EqualReport s_L;   // conj_S(L) =  L
    EqualReport s_N;   // conj_S(N) = -N
    EqualReport u_L;   // conj_U(L) = -L
    EqualReport u_N2;  // conj_U(N^2) = N^2
    double partner_residual = 0.0;
    bool pass = false;
};

inline InvolutionReport verify_involutions(int m, const ModularData& md, const SampleSet& samples,
                                           double op_tol = 1e-10,
                                           const SpectralFit* fit = nullptr,
                                           const std::vector<SpectralSample>* curve = nullptr,
                                           double curve_tol = 1e-6) {
    InvolutionReport rep;
    const auto L = make_L(m, md);
    const auto N = make_N(m, md);
    const auto N2 = compose(N, N);
    rep.s_L = equal_on(conj_S(L), L, samples, op_tol);
    rep.s_N = equal_on(conj_S(N), scale(N, -1.0), samples, op_tol);
    rep.u_L = equal_on(conj_U(L), scale(L, -1.0), samples, op_tol);
    rep.u_N2 = equal_on(conj_U(N2), N2, samples, op_tol);
    rep.pass = rep.s_L.pass && rep.s_N.pass && rep.u_L.pass && rep.u_N2.pass;
    if (fit && curve) {
        for (const auto& s : *curve) {
            rep.partner_residual = std::max(rep.partner_residual, curve_residual(*fit, s.X, -s.Y));
            rep.partner_residual = std::max(rep.partner_residual, curve_residual(*fit, -s.X, -s.Y));
        }
        rep.pass = rep.pass && rep.partner_residual < curve_tol;
    }
    return rep;
}

// Max relative disagreement between two fits after normalizing both by their
// leading coefficient (used to cross-validate disjoint c-windows).
inline double compare_fits(const SpectralFit& a, const SpectralFit& b) {
    if (a.coeffs.size() != b.coeffs.size())
        throw std::domain_error("compare_fits: incompatible degrees");
    double worst = 0.0;
    for (std::size_t k = 0; k < a.coeffs.size(); ++k) {
        const cplx pa = a.coeffs[k] / a.coeffs.back();
        const cplx pb = b.coeffs[k] / b.coeffs.back();
        worst = std::max(worst, std::abs(pa - pb) / std::max(1.0, std::abs(pa)));
    }
    return worst;
}

}  // namespace qlame
