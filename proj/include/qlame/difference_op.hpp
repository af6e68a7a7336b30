#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qlame/elliptic.hpp"
#include "qlame/errors.hpp"

namespace qlame {

// An evaluable coefficient of a difference operator. `scale` tracks the sum
// of the magnitudes of the summands a coefficient was assembled from, so a
// value that is small because of cancellation (e.g. inside a commutator) can
// be told apart from a value that is genuinely small.
struct CoefficientFn {
    std::function<cplx(cplx)> eval;
    std::function<double(cplx)> scale;
    std::string expr;

    static CoefficientFn make(std::function<cplx(cplx)> f, std::string expr) {
        CoefficientFn c;
        c.scale = [f](cplx x) { return std::abs(f(x)); };
        c.eval = std::move(f);
        c.expr = std::move(expr);
        return c;
    }

    static CoefficientFn constant(cplx v) {
        CoefficientFn c;
        c.eval = [v](cplx) { return v; };
        c.scale = [av = std::abs(v)](cplx) { return av; };
        c.expr = format_cplx(v);
        return c;
    }
};

namespace detail {

inline std::string cap_expr(std::string s, std::size_t cap = 160) {
    if (s.size() > cap) return s.substr(0, cap - 3) + "...";
    return s;
}

}  // namespace detail

// Finite sum  sum_j A_j(x) T_j,  T_j f(x) = f(x + j), with pairwise distinct
// complex shifts. Terms are kept sorted by shift (real part, then imaginary).
struct OpTerm {
    cplx shift;
    CoefficientFn coeff;
};

struct DifferenceOperator {
    std::vector<OpTerm> terms;
    double shift_tol = 1e-9;

    bool empty() const { return terms.empty(); }

    const OpTerm* find(cplx shift) const {
        for (const auto& t : terms)
            if (std::abs(t.shift - shift) <= shift_tol) return &t;
        return nullptr;
    }
};

namespace detail {

inline bool shift_less(cplx a, cplx b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

inline void sort_terms(DifferenceOperator& op) {
    std::sort(op.terms.begin(), op.terms.end(),
              [](const OpTerm& a, const OpTerm& b) { return shift_less(a.shift, b.shift); });
}

inline CoefficientFn sum_coeffs(std::vector<CoefficientFn> parts) {
    if (parts.size() == 1) return parts[0];
    CoefficientFn c;
    std::string e = parts[0].expr;
    for (std::size_t i = 1; i < parts.size(); ++i) e += " + " + parts[i].expr;
    c.expr = cap_expr(std::move(e));
    c.eval = [parts](cplx x) {
        cplx s = 0.0;
        for (const auto& p : parts) s += p.eval(x);
        return s;
    };
    c.scale = [parts](cplx x) {
        double s = 0.0;
        for (const auto& p : parts) s += p.scale(x);
        return s;
    };
    return c;
}

}  // namespace detail

// Builds an operator from (shift, coefficient) pairs, merging shifts that
// coincide within shift_tol.
inline DifferenceOperator make_operator(std::vector<OpTerm> raw, double shift_tol = 1e-9) {
    DifferenceOperator op;
    op.shift_tol = shift_tol;
    for (auto& t : raw) {
        bool merged = false;
        for (auto& existing : op.terms) {
            if (std::abs(existing.shift - t.shift) <= shift_tol) {
                existing.coeff = detail::sum_coeffs({existing.coeff, t.coeff});
                merged = true;
                break;
            }
        }
        if (!merged) op.terms.push_back(std::move(t));
    }
    detail::sort_terms(op);
    return op;
}

inline DifferenceOperator zero_op() { return {}; }

inline DifferenceOperator shift_op(cplx j) {
    return make_operator({{j, CoefficientFn::constant(1.0)}});
}

inline DifferenceOperator identity_op() { return shift_op(0.0); }

// (op f)(x) = sum_j A_j(x) f(x + j). Coefficients more than 1e12 times the
// median coefficient magnitude at x signal pole proximity.
inline cplx apply(const DifferenceOperator& op, const std::function<cplx(cplx)>& f, cplx x) {
    std::vector<cplx> vals(op.terms.size());
    std::vector<double> mags(op.terms.size());
    for (std::size_t i = 0; i < op.terms.size(); ++i) {
        vals[i] = op.terms[i].coeff.eval(x);
        mags[i] = std::abs(vals[i]);
        if (!std::isfinite(mags[i])) throw PoleError("apply: coefficient not finite at sample point");
    }
    if (op.terms.size() > 1) {
        std::vector<double> sorted = mags;
        std::sort(sorted.begin(), sorted.end());
        const double median = sorted[(sorted.size() - 1) / 2];
        for (double m : mags)
            if (m > 1e12 * std::max(median, 1e-300))
                throw PoleError("apply: coefficient exceeds overflow guard (pole proximity)");
    }
    cplx s = 0.0;
    for (std::size_t i = 0; i < op.terms.size(); ++i) s += vals[i] * f(x + op.terms[i].shift);
    return s;
}

// Composition A∘B: the coefficient at shift j+k evaluates A_j(x) * B_k(x+j).
inline DifferenceOperator compose(const DifferenceOperator& a, const DifferenceOperator& b) {
    std::vector<OpTerm> raw;
    raw.reserve(a.terms.size() * b.terms.size());
    for (const auto& ta : a.terms) {
        for (const auto& tb : b.terms) {
            CoefficientFn c;
            const cplx j = ta.shift;
            auto fa = ta.coeff.eval, fb = tb.coeff.eval;
            auto sa = ta.coeff.scale, sb = tb.coeff.scale;
            c.eval = [fa, fb, j](cplx x) { return fa(x) * fb(x + j); };
            c.scale = [sa, sb, j](cplx x) { return sa(x) * sb(x + j); };
            c.expr = detail::cap_expr("(" + ta.coeff.expr + ")*(" + tb.coeff.expr + " @x+" +
                                      format_cplx(j) + ")");
            raw.push_back({ta.shift + tb.shift, std::move(c)});
        }
    }
    const double tol = std::max(a.shift_tol, b.shift_tol);
    return make_operator(std::move(raw), tol);
}

inline DifferenceOperator add(const DifferenceOperator& a, const DifferenceOperator& b) {
    std::vector<OpTerm> raw = a.terms;
    raw.insert(raw.end(), b.terms.begin(), b.terms.end());
    return make_operator(std::move(raw), std::max(a.shift_tol, b.shift_tol));
}

inline DifferenceOperator scale(const DifferenceOperator& a, cplx lambda) {
    DifferenceOperator out;
    out.shift_tol = a.shift_tol;
    for (const auto& t : a.terms) {
        CoefficientFn c;
        auto f = t.coeff.eval;
        auto s = t.coeff.scale;
        c.eval = [f, lambda](cplx x) { return lambda * f(x); };
        c.scale = [s, al = std::abs(lambda)](cplx x) { return al * s(x); };
        c.expr = detail::cap_expr(format_cplx(lambda) + "*(" + t.coeff.expr + ")");
        out.terms.push_back({t.shift, std::move(c)});
    }
    return out;
}

inline DifferenceOperator sub(const DifferenceOperator& a, const DifferenceOperator& b) {
    return add(a, scale(b, -1.0));
}

// Sample points used for numeric operator identities. All points keep a
// guard distance from the period lattice; callers can add their own
// acceptance predicate to dodge coefficient poles.
struct SampleSet {
    std::vector<cplx> points;
    double guard = 1e-3;
};

// Fixed irrational offset so that deterministic seeds never land on
// rational lattice combinations.
inline constexpr cplx kSampleOffset{0.23606797749978969, 0.26794919243112270};

inline SampleSet make_sample_set(const ModularData& md, int count, std::uint64_t seed,
                                 double guard = 1e-3,
                                 const std::function<bool(cplx)>& accept = {}) {
    SampleSet s;
    s.guard = guard;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    int attempts = 0;
    const int max_attempts = 2000 * std::max(count, 1);
    while (static_cast<int>(s.points.size()) < count) {
        if (++attempts > max_attempts)
            throw NonConvergenceError("make_sample_set: rejection sampling stalled");
        const cplx x = kSampleOffset + uni(rng) * md.omega + uni(rng) * md.omega_prime;
        if (lattice_distance(x, md) <= guard) continue;
        if (accept && !accept(x)) continue;
        s.points.push_back(x);
    }
    return s;
}

// Acceptance predicate rejecting points where any coefficient of any listed
// operator is non-finite or larger than `cap` (pole proximity).
inline std::function<bool(cplx)> avoid_poles_of(std::vector<const DifferenceOperator*> ops,
                                                double cap = 1e8) {
    return [ops, cap](cplx x) {
        try {
            for (const auto* op : ops) {
                for (const auto& t : op->terms) {
                    const cplx v = t.coeff.eval(x);
                    const double sc = t.coeff.scale(x);
                    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) || !std::isfinite(sc))
                        return false;
                    if (std::abs(v) > cap || sc > cap) return false;
                }
            }
        } catch (const std::exception&) {
            return false;
        }
        return true;
    };
}

// Drops terms whose coefficient stays below tol * max(1, scale) at every
// sample point. `scale` is the cancellation-aware magnitude, so genuinely
// small-but-nonzero coefficients survive.
inline DifferenceOperator prune(const DifferenceOperator& op, const SampleSet& samples,
                                double tol = 1e-12) {
    DifferenceOperator out;
    out.shift_tol = op.shift_tol;
    for (const auto& t : op.terms) {
        bool keep = false;
        for (const cplx& x : samples.points) {
            cplx v;
            double sc;
            try {
                v = t.coeff.eval(x);
                sc = t.coeff.scale(x);
            } catch (const std::exception&) {
                keep = true;  // cannot judge at this point, keep the term
                break;
            }
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) || !std::isfinite(sc)) {
                keep = true;  // pole proximity: refuse to judge, keep the term
                break;
            }
            if (std::abs(v) >= tol * std::max(1.0, sc)) {
                keep = true;
                break;
            }
        }
        if (keep) out.terms.push_back(t);
    }
    return out;
}

// Default generic prune points for callers that have no ModularData handy;
// real identities are always judged against a proper SampleSet.
inline const SampleSet& builtin_prune_samples() {
    static const SampleSet s = [] {
        SampleSet set;
        std::mt19937_64 rng(0x5eed5eedULL);
        std::uniform_real_distribution<double> uni(0.05, 0.95);
        for (int i = 0; i < 20; ++i) set.points.emplace_back(uni(rng), uni(rng));
        return set;
    }();
    return s;
}

inline DifferenceOperator commutator(const DifferenceOperator& a, const DifferenceOperator& b,
                                     const SampleSet& samples, double tol = 1e-12) {
    return prune(sub(compose(a, b), compose(b, a)), samples, tol);
}

inline DifferenceOperator commutator(const DifferenceOperator& a, const DifferenceOperator& b) {
    return commutator(a, b, builtin_prune_samples());
}

// Degree = largest real shift, length = largest minus smallest. Only defined
// for operators whose shifts are (numerically) real.
inline double degree(const DifferenceOperator& op) {
    if (op.empty()) throw std::domain_error("degree: empty operator");
    double mx = -1e300;
    for (const auto& t : op.terms) {
        if (std::abs(t.shift.imag()) >= op.shift_tol)
            throw std::domain_error("degree: operator has a genuinely complex shift");
        mx = std::max(mx, t.shift.real());
    }
    return mx;
}

inline double length(const DifferenceOperator& op) {
    if (op.empty()) throw std::domain_error("length: empty operator");
    double mx = -1e300, mn = 1e300;
    for (const auto& t : op.terms) {
        if (std::abs(t.shift.imag()) >= op.shift_tol)
            throw std::domain_error("length: operator has a genuinely complex shift");
        mx = std::max(mx, t.shift.real());
        mn = std::min(mn, t.shift.real());
    }
    return mx - mn;
}

// S M S with S f(x) = f(-x): term (j, A(x)) becomes (-j, A(-x)).
inline DifferenceOperator conj_S(const DifferenceOperator& op) {
    DifferenceOperator out;
    out.shift_tol = op.shift_tol;
    for (const auto& t : op.terms) {
        CoefficientFn c;
        auto f = t.coeff.eval;
        auto s = t.coeff.scale;
        c.eval = [f](cplx x) { return f(-x); };
        c.scale = [s](cplx x) { return s(-x); };
        c.expr = detail::cap_expr("(" + t.coeff.expr + ") @-x");
        out.terms.push_back({-t.shift, std::move(c)});
    }
    detail::sort_terms(out);
    return out;
}

namespace detail {

inline DifferenceOperator conj_phase(const DifferenceOperator& op, double sign) {
    DifferenceOperator out;
    out.shift_tol = op.shift_tol;
    for (const auto& t : op.terms) {
        const cplx phase = std::exp(cplx(0.0, sign * kPi) * t.shift);
        CoefficientFn c;
        auto f = t.coeff.eval;
        auto s = t.coeff.scale;
        c.eval = [f, phase](cplx x) { return phase * f(x); };
        c.scale = [s, ap = std::abs(phase)](cplx x) { return ap * s(x); };
        c.expr = cap_expr(format_cplx(phase) + "*(" + t.coeff.expr + ")");
        out.terms.push_back({t.shift, std::move(c)});
    }
    return out;
}

}  // namespace detail

// U M U^{-1} with U f(x) = e^{pi i x} f(x): term (j, A) becomes (j, e^{-pi i j} A).
inline DifferenceOperator conj_U(const DifferenceOperator& op) {
    return detail::conj_phase(op, -1.0);
}

inline DifferenceOperator conj_U_inv(const DifferenceOperator& op) {
    return detail::conj_phase(op, +1.0);
}

// Sampling-based operator equality. Shifts are aligned within shift_tol
// (a shift present on only one side compares against zero); the residual at
// each point is normalized by the largest coefficient magnitude there.
struct EqualReport {
    bool pass = false;
    double max_residual = 0.0;
    cplx worst_shift = 0.0;
    cplx worst_point = 0.0;
    std::string note;
};

inline EqualReport equal_on(const DifferenceOperator& a, const DifferenceOperator& b,
                            const SampleSet& samples, double tol = 1e-8) {
    const double stol = std::max(a.shift_tol, b.shift_tol);
    std::vector<cplx> shifts;
    auto add_shift = [&](cplx s) {
        for (const cplx& e : shifts)
            if (std::abs(e - s) <= stol) return;
        shifts.push_back(s);
    };
    for (const auto& t : a.terms) add_shift(t.shift);
    for (const auto& t : b.terms) add_shift(t.shift);

    EqualReport rep;
    std::string mismatch;
    for (const cplx& x : samples.points) {
        // per-point scale: largest coefficient magnitude of either operand
        double sc = 1.0;
        std::vector<cplx> va(shifts.size(), 0.0), vb(shifts.size(), 0.0);
        for (std::size_t i = 0; i < shifts.size(); ++i) {
            const OpTerm* ta = a.find(shifts[i]);
            const OpTerm* tb = b.find(shifts[i]);
            if (ta) va[i] = ta->coeff.eval(x);
            if (tb) vb[i] = tb->coeff.eval(x);
            if ((ta == nullptr) != (tb == nullptr) && mismatch.empty())
                mismatch = "shift " + format_cplx(shifts[i]) + " present on one side only";
            sc = std::max({sc, std::abs(va[i]), std::abs(vb[i])});
        }
        for (std::size_t i = 0; i < shifts.size(); ++i) {
            const double r = std::abs(va[i] - vb[i]) / sc;
            if (!std::isfinite(r)) {
                rep.max_residual = std::numeric_limits<double>::infinity();
                rep.worst_shift = shifts[i];
                rep.worst_point = x;
            } else if (r > rep.max_residual) {
                rep.max_residual = r;
                rep.worst_shift = shifts[i];
                rep.worst_point = x;
            }
        }
    }
    rep.pass = rep.max_residual < tol;
    if (!rep.pass && !mismatch.empty()) rep.note = mismatch;
    return rep;
}

}  // namespace qlame
