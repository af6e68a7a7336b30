#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

#include "qlame/bethe.hpp"
#include "qlame/family.hpp"

using namespace qlame;

namespace {

const ModularData& md() {
    static const ModularData m = ModularData::defaults();
    return m;
}

// Independent m=1 oracle: dense scan of |b_1(t) - rhs| over the fundamental
// rectangle followed by a local 1-D complex Newton with difference-quotient
// derivative. Never calls the library solver.
std::vector<cplx> scan_roots_m1(cplx rhs) {
    auto b1 = [&](cplx t) {
        return ell_num(t - 1.0, md()) / ell_num(t + 1.0, md());
    };
    auto F = [&](cplx t) { return b1(t) - rhs; };

    const int grid = 60;
    std::vector<cplx> seeds;
    std::vector<std::vector<double>> mag(grid, std::vector<double>(grid, 1e300));
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            const cplx t = (i + 0.5) / grid * md().omega + (j + 0.5) / grid * md().omega_prime;
            const cplx v = F(t);
            if (std::isfinite(v.real()) && std::isfinite(v.imag())) mag[i][j] = std::abs(v);
        }
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            bool is_min = mag[i][j] < 0.5;
            for (int di = -1; di <= 1 && is_min; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    const int ii = (i + di + grid) % grid, jj = (j + dj + grid) % grid;
                    if (mag[ii][jj] < mag[i][j]) {
                        is_min = false;
                        break;
                    }
                }
            if (is_min)
                seeds.push_back((i + 0.5) / grid * md().omega + (j + 0.5) / grid * md().omega_prime);
        }

    std::vector<cplx> roots;
    for (cplx t : seeds) {
        bool ok = false;
        for (int it = 0; it < 60; ++it) {
            const cplx f = F(t);
            if (std::abs(f) < 1e-13) {
                ok = true;
                break;
            }
            const double h = 1e-7;
            const cplx df = (F(t + h) - F(t - h)) / (2.0 * h);
            if (std::abs(df) < 1e-14) break;
            t -= f / df;
        }
        if (!ok) continue;
        bool dup = false;
        for (const cplx& r : roots)
            if (lattice_distance(t - r, md()) < 1e-6) {
                dup = true;
                break;
            }
        if (!dup) roots.push_back(t);
    }
    return roots;
}

}  // namespace

TEST_CASE("bethe_b: m=1 basics") {
    std::vector<cplx> t = {cplx(1.0)};
    CHECK(std::abs(bethe_b(0, t, 1, md())) < 1e-12);  // [t-1] = [0] = 0

    t[0] = cplx(0.5);
    const cplx expected = -ell_num(0.5, md()) / ell_num(1.5, md());
    CHECK(std::abs(bethe_b(0, t, 1, md()) - expected) < 1e-13 * std::abs(expected));
}

TEST_CASE("bethe_b: Gamma-action on the roots") {
    const std::vector<cplx> t = {cplx(0.8, 0.3), cplx(2.1, -0.2)};
    const int m = 2;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const cplx base = bethe_b(j, t, m, md());
            auto t_om = t;
            t_om[i] += md().omega;
            CHECK(std::abs(bethe_b(j, t_om, m, md()) - base) < 1e-10 * std::abs(base));

            auto t_omp = t;
            t_omp[i] += md().omega_prime;
            const cplx factor = std::exp(cplx(0.0, 4.0 * kPi) * md().gamma);
            CHECK(std::abs(bethe_b(j, t_omp, m, md()) - factor * base) <
                  1e-10 * std::abs(base));
        }
    }
}

TEST_CASE("baker_akhiezer: normalization and multiplier") {
    const std::vector<cplx> t = {cplx(0.5)};
    const cplx c(0.2, 0.0);
    CHECK(std::abs(baker_akhiezer(t, c, 0.0, 1, md()) - 1.0) < 1e-14);

    // psi(x+omega)/psi(x) = (-1)^m e^c
    const cplx x(0.7, 0.2);
    const cplx ratio = baker_akhiezer(t, c, x + md().omega, 1, md()) /
                       baker_akhiezer(t, c, x, 1, md());
    const cplx expected = -std::exp(c);
    CHECK(std::abs(ratio - expected) < 1e-12 * std::abs(expected));

    // direct product oracle at m=1
    const cplx val = baker_akhiezer(t, c, 0.7, 1, md());
    const cplx oracle = std::exp(c * md().gamma * 0.7) * ell_num(1.2, md()) / ell_num(0.5, md());
    CHECK(std::abs(val - oracle) < 1e-14 * std::abs(oracle));

    CHECK_THROWS_AS(baker_akhiezer({cplx(0.0)}, c, 0.7, 1, md()), PoleError);
}

TEST_CASE("eps_L: direct value and parity") {
    const std::vector<cplx> t = {cplx(0.5)};
    const cplx direct = ell_num(2.0, md()) * ell_num(0.5, md()) / ell_num(1.5, md());
    CHECK(std::abs(eps_L(t, 0.0, 1, md()) - direct) < 1e-13 * std::abs(direct));

    // eps_N is odd under (t,c) -> (-t,-c) identically; eps_L is invariant
    // only on the Bethe variety, so the parity check runs at solved points
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(0.2, 0.8);
    for (int m : {1, 2}) {
        std::vector<cplx> tt;
        for (int i = 0; i < m; ++i) tt.emplace_back(uni(rng) + i, uni(rng));
        const cplx c(uni(rng), 0.0);
        std::vector<cplx> tn;
        for (const cplx& v : tt) tn.push_back(-v);
        CHECK(std::abs(eps_N(tt, c, m, md()) + eps_N(tn, -c, m, md())) < 1e-12);
    }
    for (int m : {1, 2}) {
        const auto pts = solve_given_c(cplx(0.4, 0.0), m, md());
        REQUIRE_FALSE(pts.empty());
        for (const auto& bp : pts) {
            std::vector<cplx> tn;
            for (const cplx& v : bp.t) tn.push_back(-v);
            const cplx a = eps_L(bp.t, bp.c, m, md());
            CHECK(std::abs(a - eps_L(tn, -bp.c, m, md())) < 1e-10 * std::max(1.0, std::abs(a)));
        }
    }
}

TEST_CASE("solve_given_c at m=1 agrees with the dense-scan oracle") {
    const cplx c(0.3, 0.0);
    const auto lib = solve_given_c(c, 1, md());
    REQUIRE_FALSE(lib.empty());
    for (const auto& bp : lib) CHECK(bp.residual < 1e-12);

    const auto oracle = scan_roots_m1(std::exp(2.0 * md().gamma * c));
    REQUIRE_FALSE(oracle.empty());
    // every oracle root inside the cell must be matched by a library solution
    for (const cplx& r : oracle) {
        bool matched = false;
        for (const auto& bp : lib)
            if (lattice_distance(bp.t[0] - r, md()) < 1e-6) {
                matched = true;
                break;
            }
        INFO("oracle root " << format_cplx(r) << " unmatched");
        CHECK(matched);
    }
}

TEST_CASE("solve_given_c at m=1 with unit multiplier finds the symmetric point") {
    // e^{2 gamma c} = 1 at c = 0; t = omega/2 solves [t-1] = [t+1] by oddness
    const auto lib = solve_given_c(0.0, 1, md());
    REQUIRE_FALSE(lib.empty());
    bool has_symmetric = false;
    for (const auto& bp : lib)
        if (lattice_distance(bp.t[0] - md().omega / 2.0, md()) < 1e-8) has_symmetric = true;
    CHECK(has_symmetric);

    const auto oracle = scan_roots_m1(1.0);
    bool oracle_symmetric = false;
    for (const cplx& r : oracle)
        if (lattice_distance(r - md().omega / 2.0, md()) < 1e-6) oracle_symmetric = true;
    CHECK(oracle_symmetric);
}

TEST_CASE("solve_given_c at m=2 returns separated certified points") {
    const auto pts = solve_given_c(cplx(0.25, 0.0), 2, md());
    REQUIRE_FALSE(pts.empty());
    for (const auto& bp : pts) {
        CHECK(bp.residual < 1e-10);
        REQUIRE(bp.t.size() == 2);
        CHECK(lattice_distance(bp.t[0] - bp.t[1], md()) > 1e-3);
    }
}

TEST_CASE("solve_given_c at m=0 yields the trivial point") {
    const auto pts = solve_given_c(cplx(0.4, 0.0), 0, md());
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].t.empty());
    CHECK(pts[0].residual == 0.0);
}

TEST_CASE("trace_curve: constant path repeats the same point") {
    const std::vector<cplx> path(5, cplx(0.3, 0.0));
    const auto pts = trace_curve(path, 1, md());
    REQUIRE(pts.size() == 5);
    for (const auto& bp : pts) {
        CHECK(lattice_distance(bp.t[0] - pts[0].t[0], md()) < 1e-9);
        CHECK(bp.residual < 1e-10);
    }
}

TEST_CASE("trace_curve: 50 steps with continuous eigenvalue") {
    std::vector<cplx> path;
    for (int i = 0; i <= 50; ++i) path.emplace_back(0.3 + 0.5 * i / 50.0, 0.0);
    const auto pts = trace_curve(path, 1, md());
    REQUIRE(pts.size() == path.size());

    std::vector<double> jumps;
    cplx prev = eps_L(pts[0].t, pts[0].c, 1, md());
    for (std::size_t i = 1; i < pts.size(); ++i) {
        CHECK(pts[i].residual < 1e-10);
        const cplx e = eps_L(pts[i].t, pts[i].c, 1, md());
        jumps.push_back(std::abs(e - prev));
        prev = e;
    }
    std::vector<double> sorted = jumps;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    CHECK(*std::max_element(jumps.begin(), jumps.end()) < 10.0 * std::max(median, 1e-12));

    // negating (t, c) along the path gives valid points with equal eps_L and
    // negated eps_N
    for (std::size_t i = 0; i < pts.size(); i += 10) {
        std::vector<cplx> tn;
        for (const cplx& v : pts[i].t) tn.push_back(-v);
        CHECK(bethe_residual(tn, -pts[i].c, 1, md()) < 1e-10);
        CHECK(std::abs(eps_L(tn, -pts[i].c, 1, md()) - eps_L(pts[i].t, pts[i].c, 1, md())) < 1e-10);
        CHECK(std::abs(eps_N(tn, -pts[i].c, 1, md()) + eps_N(pts[i].t, pts[i].c, 1, md())) < 1e-10);
    }
}

TEST_CASE("trace_curve error paths") {
    // an unreachable residual target leaves the initial solve empty
    SolverOptions opt;
    opt.accept_residual = 1e-300;
    CHECK_THROWS_AS(trace_curve({cplx(0.3, 0.0), cplx(0.4, 0.0)}, 1, md(), opt),
                    NonConvergenceError);

    // the stall error carries the last accepted point
    const BethePoint last{{cplx(1.0, 2.0)}, cplx(0.3, 0.0), 1e-12, 1};
    const ContinuationStallError err("stalled", last);
    CHECK(err.last_good.t == last.t);
    CHECK(err.last_good.c == last.c);
}

TEST_CASE("Z-action: c + pi*i/gamma flips the sign of eps_L") {
    const auto pts = solve_given_c(cplx(0.3, 0.0), 1, md());
    REQUIRE_FALSE(pts.empty());
    const auto& bp = pts.front();
    const cplx c2 = bp.c + cplx(0.0, kPi) / md().gamma;
    CHECK(bethe_residual(bp.t, c2, 1, md()) < 1e-10);
    CHECK(std::abs(eps_L(bp.t, c2, 1, md()) + eps_L(bp.t, bp.c, 1, md())) < 1e-10);
}

TEST_CASE("eigen-residual of solved points") {
    for (int m : {1, 2}) {
        const auto pts = solve_given_c(cplx(0.3, 0.0), m, md());
        REQUIRE_FALSE(pts.empty());
        const auto L = make_L(m, md());
        for (const auto& bp : pts) {
            const auto s = make_bethe_sample_set(bp, md(), 20, 83, 1e-3, 2.0);
            CHECK(eigen_residual(L, eps_L(bp.t, bp.c, m, md()), bp, md(), s) < 1e-8);
        }
    }
}

TEST_CASE("eps_l: special labels and operator action") {
    const auto pts = solve_given_c(cplx(0.35, 0.0), 1, md());
    REQUIRE_FALSE(pts.empty());
    const auto& bp = pts.front();
    const int m = 1;

    const cplx at_m = eps_l(static_cast<double>(m), bp.t, bp.c, m, md());
    const cplx fact = ell_fact(2 * m, md()) / ell_fact(m, md());
    CHECK(std::abs(at_m - fact) < 1e-12 * std::abs(fact));

    const cplx at_m1 = eps_l(static_cast<double>(m - 1), bp.t, bp.c, m, md());
    const cplx expected = ell_fact(2 * m - 1, md()) / ell_fact(m - 1, md()) *
                          eps_L(bp.t, bp.c, m, md());
    CHECK(std::abs(at_m1 - expected) < 1e-8 * std::abs(expected));

    const cplx l(2.4, 0.0);
    const auto Ml = make_M(l, m, md());
    const auto s = make_bethe_sample_set(bp, md(), 20, 89, 1e-3, 3.5);
    CHECK(eigen_residual(Ml, eps_l(l, bp.t, bp.c, m, md()), bp, md(), s) < 1e-8);
}

TEST_CASE("eps_N: operator action and coherence with eps_l") {
    for (int m : {1, 2}) {
        const auto pts = solve_given_c(cplx(0.45, 0.0), m, md());
        REQUIRE_FALSE(pts.empty());
        const auto& bp = pts.front();
        const auto N = make_N(m, md());
        const cplx eN = eps_N(bp.t, bp.c, m, md());
        const auto s = make_bethe_sample_set(bp, md(), 20, 97, 1e-3, 2.0 * m + 1.0);
        CHECK(eigen_residual(N, eN, bp, md(), s) < 1e-8);

        const cplx diff = eps_l(static_cast<double>(m + 1), bp.t, bp.c, m, md()) -
                          eps_l(static_cast<double>(-m - 1), bp.t, bp.c, m, md());
        CHECK(std::abs(eN - diff) < 1e-10 * std::max(1.0, std::abs(eN)));
    }
}

TEST_CASE("eigenvalue product rule at a solved point") {
    const int m = 2;
    const auto pts = solve_given_c(cplx(0.3, 0.0), m, md());
    REQUIRE_FALSE(pts.empty());
    const auto& bp = pts.front();
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> re(0.4, 2.6), im(-0.3, 0.3);
    for (int rep = 0; rep < 5; ++rep) {
        const cplx l(re(rng), im(rng));
        const cplx k(re(rng), im(rng));
        cplx rhs = 0.0;
        for (int r = 0; r <= m; ++r) {
            const cplx j = l + static_cast<double>(-m + 2 * r);
            rhs += coeff_A_at(l, r, m, md(), k) * eps_l(k + j, bp.t, bp.c, m, md());
        }
        const cplx lhs = eps_l(l, bp.t, bp.c, m, md()) * eps_l(k, bp.t, bp.c, m, md());
        CHECK(std::abs(lhs - rhs) < 1e-8 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("transformed equation with elliptic coefficients") {
    // solved point: residual at 20 guarded x
    const auto pts = solve_given_c(cplx(0.3, 0.0), 1, md());
    REQUIRE_FALSE(pts.empty());
    const auto& bp = pts.front();
    const cplx eps = eps_L(bp.t, bp.c, 1, md());
    const auto s = make_bethe_sample_set(bp, md(), 20, 103, 1e-3, 2.0);
    for (const cplx& x : s.points)
        CHECK(residual_transformed_eq(bp.t, bp.c, eps, x, 1, md()) < 1e-8);

    // m = 0: constant coefficients, solved by exponentials
    const cplx c(0.4, 0.0);
    const cplx eps0 = eps_L({}, c, 0, md());
    const auto s0 = make_bethe_sample_set(BethePoint{{}, c, 0.0, 0}, md(), 10, 107, 1e-3, 2.0);
    for (const cplx& x : s0.points)
        CHECK(residual_transformed_eq({}, c, eps0, x, 0, md()) < 1e-12);

    // negative control: a random non-solution leaves an O(1) defect
    const std::vector<cplx> junk = {cplx(0.9, 0.6)};
    double worst = 0.0;
    for (const cplx& x : s.points)
        worst = std::max(worst, residual_transformed_eq(junk, cplx(0.11, 0.0), eps, x, 1, md()));
    CHECK(worst > 1e-3);
}

TEST_CASE("multiplier ellipticity") {
    const auto pts = solve_given_c(cplx(0.3, 0.0), 1, md());
    REQUIRE_FALSE(pts.empty());
    const auto& bp = pts.front();
    const auto s = make_bethe_sample_set(bp, md(), 15, 109, 1e-3, 2.0);
    CHECK(multiplier_ellipticity_check(bp.t, bp.c, 1, md(), s).pass);

    // m = 0: the ratio is the constant e^{c gamma}
    const BethePoint trivial{{}, cplx(0.4, 0.0), 0.0, 0};
    const auto s0 = make_bethe_sample_set(trivial, md(), 10, 113, 1e-3, 2.0);
    CHECK(multiplier_ellipticity_check({}, trivial.c, 0, md(), s0).pass);

    // the multiplier structure of u_+ alone suffices: a non-Bethe (t, c) still
    // has elliptic Tu/u and u(x)u(-x)
    const BethePoint junk{{cplx(0.9, 0.6)}, cplx(0.11, 0.0), 1.0, 1};
    const auto sj = make_bethe_sample_set(junk, md(), 10, 127, 1e-3, 2.0);
    CHECK(multiplier_ellipticity_check(junk.t, junk.c, 1, md(), sj).pass);
}
