#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>

#include "qlame/errors.hpp"

namespace qlame {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

// Truncation control for the theta series.
struct SeriesConfig {
    double rel_tol = 1e-16;
    int max_terms = 64;
};

// Jacobi theta: the odd entire function with simple zeros on Z + tau*Z,
// summed as -sum_{j in Z+1/2} exp(pi*i*j^2*tau + 2*pi*i*j*(z+1/2)).
// Terms are added in symmetric pairs +-j, outward from j = 1/2, and the sum
// stops once the last pair is below rel_tol relative to the largest term
// seen so far (the tail decays like a Gaussian since |q| < 1).
inline cplx theta1(cplx z, cplx tau, const SeriesConfig& cfg = {}) {
    if (!(tau.imag() > 0.0))
        throw std::domain_error("theta1: Im(tau) must be positive");
    if (!(cfg.rel_tol > 0.0) || cfg.max_terms < 4)
        throw std::domain_error("theta1: invalid series config");

    const cplx ipi(0.0, kPi);
    cplx sum = 0.0;
    double max_term = 0.0;
    int terms = 0;
    for (int n = 0;; ++n) {
        const double j = n + 0.5;
        const cplx quad = ipi * (j * j) * tau;
        const cplx lin = 2.0 * ipi * j * (z + 0.5);
        const cplx t_plus = std::exp(quad + lin);
        const cplx t_minus = std::exp(quad - lin);
        sum += t_plus + t_minus;
        terms += 2;
        const double mag = std::max(std::abs(t_plus), std::abs(t_minus));
        max_term = std::max(max_term, mag);
        if (mag < cfg.rel_tol * max_term) break;
        if (terms >= cfg.max_terms)
            throw NonConvergenceError("theta1: series did not converge within max_terms");
    }
    return -sum;
}

// Deformation parameters (gamma, tau) together with the derived x-variable
// periods omega = 1/gamma, omega' = tau/gamma and the nome q = exp(pi*i*tau).
// theta(gamma, tau) is cached since it normalizes every elliptic number.
struct ModularData {
    cplx gamma;
    cplx tau;
    cplx omega;
    cplx omega_prime;
    cplx nome_q;
    SeriesConfig series;
    cplx theta_gamma;

    ModularData(cplx gamma_, cplx tau_, SeriesConfig cfg = {})
        : gamma(gamma_),
          tau(tau_),
          omega(1.0 / gamma_),
          omega_prime(tau_ * (1.0 / gamma_)),
          nome_q(std::exp(cplx(0.0, kPi) * tau_)),
          series(cfg) {
        if (!(tau.imag() > 0.0))
            throw std::domain_error("ModularData: Im(tau) must be positive");
        theta_gamma = theta1(gamma, tau, series);
        if (std::abs(theta_gamma) < 1e-12)
            throw std::domain_error("ModularData: gamma lies on the period lattice Z + tau*Z");
    }

    // Desk-scale defaults: gamma irrational and real, |q| = e^{-pi}.
    static ModularData defaults() { return ModularData(std::sqrt(2.0) / 10.0, cplx(0.0, 1.0)); }
};

// Elliptic number [x] = theta(gamma*x, tau) / theta(gamma, tau).
// Odd in x, [1] = 1, zeros exactly on Z*omega + Z*omega'.
inline cplx ell_num(cplx x, const ModularData& md) {
    return theta1(md.gamma * x, md.tau, md.series) / md.theta_gamma;
}

// Coordinates (a, b) of x in the period lattice: x = a*omega + b*omega'.
inline std::pair<double, double> lattice_coords(cplx x, const ModularData& md) {
    const double m00 = md.omega.real(), m01 = md.omega_prime.real();
    const double m10 = md.omega.imag(), m11 = md.omega_prime.imag();
    const double det = m00 * m11 - m01 * m10;
    const double a = (x.real() * m11 - x.imag() * m01) / det;
    const double b = (x.imag() * m00 - x.real() * m10) / det;
    return {a, b};
}

// Representative of x in the fundamental cell [0,1)^2 in lattice coordinates.
inline cplx lattice_reduce(cplx x, const ModularData& md) {
    auto [a, b] = lattice_coords(x, md);
    const double ar = a - std::floor(a);
    const double br = b - std::floor(b);
    return ar * md.omega + br * md.omega_prime;
}

// Distance from x to the nearest point of Z*omega + Z*omega'.
inline double lattice_distance(cplx x, const ModularData& md) {
    auto [a, b] = lattice_coords(x, md);
    const double ar = a - std::round(a);
    const double br = b - std::round(b);
    // Check the four nearest corners; rounding per coordinate is not always
    // the nearest lattice point for skew lattices.
    double best = std::abs(ar * md.omega + br * md.omega_prime);
    for (int da = -1; da <= 1; ++da)
        for (int db = -1; db <= 1; ++db)
            best = std::min(best, std::abs((ar + da) * md.omega + (br + db) * md.omega_prime));
    return best;
}

// Residuals of the two quasi-periodicity laws
//   [x+omega]  = -[x],
//   [x+omega'] = -exp(-(pi*i/omega)(omega' + 2x)) [x].
// Points on (or too close to) the zero lattice are skipped.
struct ShiftCheckResult {
    bool skipped = false;
    double r_omega = 0.0;
    double r_omega_prime = 0.0;
};

inline ShiftCheckResult ell_num_shift_check(cplx x, const ModularData& md, double guard = 1e-3) {
    ShiftCheckResult res;
    if (lattice_distance(x, md) <= guard) {
        res.skipped = true;
        return res;
    }
    const cplx v = ell_num(x, md);
    const cplx v_om = ell_num(x + md.omega, md);
    res.r_omega = std::abs(v_om + v) / std::max({1.0, std::abs(v_om), std::abs(v)});

    const cplx mult = -std::exp(-(cplx(0.0, kPi) / md.omega) * (md.omega_prime + 2.0 * x));
    const cplx v_omp = ell_num(x + md.omega_prime, md);
    const cplx rhs = mult * v;
    res.r_omega_prime = std::abs(v_omp - rhs) / std::max({1.0, std::abs(v_omp), std::abs(rhs)});
    return res;
}

// Elliptic factorial [n]! = [1][2]...[n], empty product for n = 0.
inline cplx ell_fact(int n, const ModularData& md) {
    if (n < 0) throw std::domain_error("ell_fact: n must be nonnegative");
    cplx p = 1.0;
    for (int k = 1; k <= n; ++k) p *= ell_num(static_cast<double>(k), md);
    return p;
}

// Elliptic binomial [x;n] = [x][x-1]...[x-n+1] / [n]!, with [x;0] = 1.
inline cplx ell_binom(cplx x, int n, const ModularData& md) {
    if (n < 0) throw std::domain_error("ell_binom: n must be nonnegative");
    cplx num = 1.0;
    for (int k = 0; k < n; ++k) num *= ell_num(x - static_cast<double>(k), md);
    return num / ell_fact(n, md);
}

// phi(x) = prod_{k=1..m} [x-k]; identically 1 for m = 0.
inline cplx phi(cplx x, int m, const ModularData& md) {
    if (m < 0) throw std::domain_error("phi: m must be nonnegative");
    cplx p = 1.0;
    for (int k = 1; k <= m; ++k) p *= ell_num(x - static_cast<double>(k), md);
    return p;
}

// Short display form of a complex constant, e.g. "1", "-2.5", "(1.2+0.4i)".
inline std::string format_cplx(cplx v) {
    std::ostringstream os;
    os.precision(6);
    if (v.imag() == 0.0) {
        os << v.real();
        return os.str();
    }
    os << "(" << v.real() << (v.imag() < 0 ? "-" : "+") << std::abs(v.imag()) << "i)";
    return os.str();
}

// "[x]", "[x+2]", "[x-1.3]", ... used when rendering coefficient formulas.
inline std::string bracket_expr(cplx offset) {
    if (offset == cplx(0.0)) return "[x]";
    std::string s = format_cplx(offset);
    if (!s.empty() && (s[0] == '-' || s[0] == '(')) return "[x" + (s[0] == '(' ? "+" + s : s) + "]";
    return "[x+" + s + "]";
}

}  // namespace qlame
