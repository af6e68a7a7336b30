// Solves the Bethe system at one value of the multiplier exponent, then
// feeds the resulting eigenfunction through L, M_l and N and prints how well
// the eigenvalue formulas match the operator action.

#include <cstdio>

#include "qlame/qlame.hpp"

using namespace qlame;

int main() {
    const auto md = ModularData::defaults();
    const int m = 2;
    const cplx c(0.4, 0.0);

    const auto points = solve_given_c(c, m, md);
    std::printf("m=%d, c=%.2f: %zu Bethe solutions\n", m, c.real(), points.size());
    if (points.empty()) return 1;

    const auto& bp = points.front();
    std::printf("roots:");
    for (const cplx& t : bp.t) std::printf(" (%.5f, %.5f)", t.real(), t.imag());
    std::printf("   residual %.2e\n\n", bp.residual);

    const auto L = make_L(m, md);
    const auto N = make_N(m, md);
    const cplx eL = eps_L(bp.t, bp.c, m, md);
    const cplx eN = eps_N(bp.t, bp.c, m, md);

    const auto samples = make_bethe_sample_set(bp, md, 20, 7, 1e-3, 2.0 * m + 1.0);
    std::printf("eps_L = (%.6f, %.6f), |L psi - eps_L psi|/|psi| = %.2e\n", eL.real(), eL.imag(),
                eigen_residual(L, eL, bp, md, samples));
    std::printf("eps_N = (%.6f, %.6f), |N psi - eps_N psi|/|psi| = %.2e\n", eN.real(), eN.imag(),
                eigen_residual(N, eN, bp, md, samples));

    const cplx l(1.7, 0.3);
    const cplx el = eps_l(l, bp.t, bp.c, m, md);
    std::printf("eps_l(l=1.7+0.3i) = (%.6f, %.6f), operator defect %.2e\n", el.real(), el.imag(),
                eigen_residual(make_M(l, m, md), el, bp, md, samples));

    std::printf("\ncurve point: Y^2 - P(X^2) with (X, Y) = (eps_L, eps_N)\n");
    const auto curve_samples = collect_samples(m, md, 20, cplx(0.2, 0.0), cplx(1.2, 8.0));
    const auto fit = fit_P(curve_samples, m);
    std::printf("fitted P of degree %d, defect at this point: %.2e\n", 2 * m + 1,
                curve_residual(fit, eL, eN));
    return 0;
}
