#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pconcave/geometry.hpp"

namespace pconcave {

struct EvaluationFailure : std::runtime_error {
    explicit EvaluationFailure(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Reaction term f with primitive F (F(0) = 0) and cutoff
// M = inf{t > 0 : f(t) = 0}. Evaluators are pure functions on [0, inf);
// even/odd extensions to the whole line are provided for the solver.
struct ReactionTerm {
    std::string name;
    std::function<double(double)> f;
    std::function<double(double)> F;
    std::function<double(double)> f_prime;  // optional; empty -> central differences
    double M = kInf;

    double f_even(double t) const { return f(std::abs(t)); }
    double F_odd(double t) const { return t < 0.0 ? -F(-t) : F(t); }

    double df(double t) const {
        if (f_prime) return f_prime(t);
        const double dt = 1e-6 * (1.0 + std::abs(t));
        const double lo = std::max(t - dt, 0.0);
        return (f(t + dt) - f(lo)) / (t + dt - lo);
    }
};

inline ReactionTerm constant_reaction() {
    ReactionTerm r;
    r.name = "constant";
    r.f = [](double) { return 1.0; };
    r.F = [](double t) { return t; };
    r.f_prime = [](double) { return 0.0; };
    return r;
}

inline ReactionTerm power_reaction(double q) {
    if (q < 0.0) throw std::invalid_argument("power reaction needs q >= 0");
    ReactionTerm r;
    r.name = "power:" + std::to_string(q);
    r.f = [q](double t) { return std::pow(t, q); };
    r.F = [q](double t) { return std::pow(t, q + 1.0) / (q + 1.0); };
    r.f_prime = [q](double t) { return q == 0.0 ? 0.0 : q * std::pow(t, q - 1.0); };
    return r;
}

inline ReactionTerm eigen_reaction(double lambda, double p) {
    ReactionTerm r;
    r.name = "eigen:" + std::to_string(lambda);
    r.f = [lambda, p](double t) { return lambda * std::pow(t, p - 1.0); };
    r.F = [lambda, p](double t) { return lambda * std::pow(t, p) / p; };
    r.f_prime = [lambda, p](double t) { return lambda * (p - 1.0) * std::pow(t, p - 2.0); };
    return r;
}

// F(t) = t log(1+t)
inline ReactionTerm entropy_a_reaction() {
    ReactionTerm r;
    r.name = "entropy-A";
    r.f = [](double t) { return std::log1p(t) + t / (1.0 + t); };
    r.F = [](double t) { return t * std::log1p(t); };
    r.f_prime = [](double t) { return 1.0 / (1.0 + t) + 1.0 / ((1.0 + t) * (1.0 + t)); };
    return r;
}

// F(t) = (1+t) log(1+t) - t; series branch avoids the cancellation that
// otherwise zeroes F for t below ~1e-16.
inline ReactionTerm entropy_b_reaction() {
    ReactionTerm r;
    r.name = "entropy-B";
    r.f = [](double t) { return std::log1p(t); };
    r.F = [](double t) {
        if (t < 1e-3) {
            // sum of (-1)^k t^k / (k(k-1)), k >= 2
            return t * t * (1.0 / 2.0 + t * (-1.0 / 6.0 + t * (1.0 / 12.0 + t * (-1.0 / 20.0 + t / 30.0))));
        }
        return (1.0 + t) * std::log1p(t) - t;
    };
    r.f_prime = [](double t) { return 1.0 / (1.0 + t); };
    return r;
}

inline ReactionTerm sqrt_shift_reaction() {
    ReactionTerm r;
    r.name = "sqrt-shift";
    r.f = [](double t) { return 1.0 + std::sqrt(t); };
    r.F = [](double t) { return t + 2.0 / 3.0 * t * std::sqrt(t); };
    r.f_prime = [](double t) { return 0.5 / std::sqrt(t); };
    return r;
}

// f(t) = (1-t)_+, M = 1
inline ReactionTerm truncated_linear_reaction() {
    ReactionTerm r;
    r.name = "truncated-linear";
    r.f = [](double t) { return std::max(1.0 - t, 0.0); };
    r.F = [](double t) { return t < 1.0 ? t - 0.5 * t * t : 0.5; };
    r.f_prime = [](double t) { return t < 1.0 ? -1.0 : 0.0; };
    r.M = 1.0;
    return r;
}

// f(t) = 1 - t without truncation; the -Delta u + u = 1 model problem.
inline ReactionTerm linear_reaction() {
    ReactionTerm r;
    r.name = "linear";
    r.f = [](double t) { return 1.0 - t; };
    r.F = [](double t) { return t - 0.5 * t * t; };
    r.f_prime = [](double) { return -1.0; };
    r.M = 1.0;
    return r;
}

// F(t) = sqrt(1+t) + t^2 - 1: f(t)/t is non-increasing yet F^{1/2} is not
// concave, separating the two monotonicity/concavity conditions.
inline ReactionTerm remark_f_reaction() {
    ReactionTerm r;
    r.name = "remark-F";
    r.f = [](double t) { return 0.5 / std::sqrt(1.0 + t) + 2.0 * t; };
    r.F = [](double t) { return t / (std::sqrt(1.0 + t) + 1.0) + t * t; };
    r.f_prime = [](double t) { return -0.25 / std::pow(1.0 + t, 1.5) + 2.0; };
    return r;
}

// Lift a p=2-admissible reaction to exponent p=q: the new primitive is
// F^{q/2}. The map is the identity at q = 2.
inline ReactionTerm lifted_reaction(const ReactionTerm& r, double q) {
    if (!(q >= 1.0)) throw std::invalid_argument("lifted_reaction needs q >= 1");
    ReactionTerm out;
    out.name = r.name + "^(q=" + std::to_string(q) + ")";
    out.M = r.M;
    auto F = r.F;
    auto f = r.f;
    out.F = [F, q](double t) { return std::pow(F(t), 0.5 * q); };
    out.f = [F, f, q](double t) {
        if (t <= 0.0) return q >= 2.0 ? (q > 2.0 ? 0.0 : f(0.0)) : kInf;
        return 0.5 * q * std::pow(F(t), 0.5 * q - 1.0) * f(t);
    };
    return out;
}

inline std::vector<ReactionTerm> builtin_catalog() {
    return {constant_reaction(),       power_reaction(0.5),
            eigen_reaction(1.0, 2.0),  entropy_a_reaction(),
            entropy_b_reaction(),      sqrt_shift_reaction(),
            truncated_linear_reaction(), remark_f_reaction(),
            linear_reaction()};
}

// Resolve a reaction by name. Parametric forms: "power:<q>",
// "eigen:<lambda>" (uses p for the t^{p-1} factor), "scaled:<k>:<name>"
// multiplying f and F by k.
inline ReactionTerm find_reaction(const std::string& name, double p = 2.0) {
    if (name.rfind("power:", 0) == 0) return power_reaction(std::stod(name.substr(6)));
    if (name.rfind("eigen:", 0) == 0) return eigen_reaction(std::stod(name.substr(6)), p);
    if (name.rfind("scaled:", 0) == 0) {
        const auto rest = name.substr(7);
        const auto colon = rest.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("scaled:<k>:<name> expected: " + name);
        const double k = std::stod(rest.substr(0, colon));
        ReactionTerm base = find_reaction(rest.substr(colon + 1), p);
        auto f = base.f;
        auto F = base.F;
        base.name = "scaled:" + std::to_string(k) + ":" + base.name;
        base.f = [f, k](double t) { return k * f(t); };
        base.F = [F, k](double t) { return k * F(t); };
        if (base.f_prime) {
            auto fp = base.f_prime;
            base.f_prime = [fp, k](double t) { return k * fp(t); };
        }
        return base;
    }
    for (auto& r : builtin_catalog()) {
        if (r.name == name) return r;
    }
    throw std::invalid_argument("unknown reaction: " + name);
}

// Bisection-refined first zero of f on (0, t_max], +inf if f stays positive.
inline double detect_M(const ReactionTerm& r, double t_max) {
    if (!(t_max > 0.0)) throw std::invalid_argument("detect_M: t_max must be > 0");
    const int n = 4096;
    double prev = t_max / n;
    if (r.f(prev) <= 0.0) prev = 0.0;
    for (int i = prev == 0.0 ? 1 : 2; i <= n; ++i) {
        const double t = t_max * i / n;
        if (r.f(t) <= 0.0) {
            double lo = prev, hi = t;
            while (hi - lo > 1e-12 * (1.0 + hi)) {
                const double mid = 0.5 * (lo + hi);
                (r.f(mid) > 0.0 ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
        prev = t;
    }
    return kInf;
}

enum class Verdict { Pass, Marginal, Fail };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Marginal: return "marginal";
        default: return "fail";
    }
}

struct ConditionCheck {
    std::string condition;
    Verdict verdict = Verdict::Pass;
    double worst_t = 0.0;   // witness achieving the worst margin
    double margin = 0.0;    // worst violation, scale-normalised
    double tolerance = 0.0;
};

struct GridSpec {
    double t_min = 1e-6;
    double t_max = 1e3;
    int n = 2048;
    double tolerance = 1e-8;
};

struct HypothesisReport {
    double p = 2.0;
    ConditionCheck thm11_monotone;   // f(t)/t^{p-1} non-increasing
    ConditionCheck thm11_convex;     // e^{(p-1)s}/f(e^s) convex, s < log M
    ConditionCheck thm12_concaveF;   // F^{1/p} concave on (0, M)
    ConditionCheck thm12_convexFf;   // F/f convex on (0, M)
    ConditionCheck thm12_concaveF_global;  // same condition on the full grid
    double limit_zero = 0.0;  // estimated lim_{t->0+} f/t^{p-1} (may be +inf)
    double limit_inf = 0.0;   // estimated lim_{t->inf} f/t^{p-1}

    bool thm11_pass() const {
        return thm11_monotone.verdict != Verdict::Fail && thm11_convex.verdict != Verdict::Fail;
    }
    bool thm12_pass() const {
        return thm12_concaveF.verdict != Verdict::Fail && thm12_convexFf.verdict != Verdict::Fail;
    }
};

namespace detail {

inline Verdict classify(double margin, double tol) {
    if (margin <= tol) return Verdict::Pass;
    if (margin <= 10.0 * tol) return Verdict::Marginal;
    return Verdict::Fail;
}

inline std::vector<double> geometric_grid(double lo, double hi, int n) {
    std::vector<double> g(static_cast<std::size_t>(n));
    const double s0 = std::log(lo), s1 = std::log(hi);
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = std::exp(s0 + (s1 - s0) * i / (n - 1));
    return g;
}

// Worst violation of "vals non-increasing along grid".
inline ConditionCheck check_non_increasing(const std::string& name,
                                           const std::vector<double>& grid,
                                           const std::function<double(double)>& g, double tol) {
    ConditionCheck c;
    c.condition = name;
    c.tolerance = tol;
    c.margin = -kInf;
    double prev = g(grid[0]);
    if (!std::isfinite(prev)) throw EvaluationFailure(name + ": non-finite at grid start");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double cur = g(grid[i]);
        if (!std::isfinite(cur))
            throw EvaluationFailure(name + ": non-finite at t=" + std::to_string(grid[i]));
        const double viol = (cur - prev) / (1.0 + std::max(std::abs(cur), std::abs(prev)));
        if (viol > c.margin) {
            c.margin = viol;
            c.worst_t = grid[i];
        }
        prev = cur;
    }
    c.verdict = classify(c.margin, tol);
    return c;
}

// Worst violation of midpoint convexity (sign=+1) or concavity (sign=-1):
// compares g at the arithmetic midpoint of (grid[i], grid[i+2]) with the
// chord value. A non-finite sample throws unless tolerate_nonfinite, in
// which case the condition fails outright (used by the informational
// global-grid check, where F may leave the condition's natural domain).
inline ConditionCheck check_midpoint_convex(const std::string& name,
                                            const std::vector<double>& grid,
                                            const std::function<double(double)>& g, double sign,
                                            double tol, bool tolerate_nonfinite = false) {
    ConditionCheck c;
    c.condition = name;
    c.tolerance = tol;
    c.margin = -kInf;
    const auto bad = [&](double t) -> ConditionCheck& {
        if (!tolerate_nonfinite)
            throw EvaluationFailure(name + ": non-finite at t=" + std::to_string(t));
        c.margin = kInf;
        c.worst_t = t;
        c.verdict = Verdict::Fail;
        return c;
    };
    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        vals[i] = g(grid[i]);
        if (!std::isfinite(vals[i])) return bad(grid[i]);
    }
    for (std::size_t i = 0; i + 2 < grid.size(); ++i) {
        const double m = 0.5 * (grid[i] + grid[i + 2]);
        const double gm = g(m);
        if (!std::isfinite(gm)) return bad(m);
        const double chord = 0.5 * (vals[i] + vals[i + 2]);
        // convex: g(m) <= chord; concave: chord <= g(m)
        const double viol = sign * (gm - chord) / (1.0 + std::abs(gm));
        if (viol > c.margin) {
            c.margin = viol;
            c.worst_t = m;
        }
    }
    c.verdict = classify(c.margin, tol);
    return c;
}

}  // namespace detail

// Numerical verification of the hypotheses of the two concavity theorems on
// a geometric grid. The (0, M) conditions use the grid capped just below M;
// the F^{1/p} concavity is additionally reported on the full grid.
inline HypothesisReport check_hypotheses(const ReactionTerm& r, double p, GridSpec spec = {}) {
    if (!(p > 1.0)) throw std::invalid_argument("check_hypotheses: p must be > 1");
    if (!(spec.t_min > 0.0) || !(spec.t_max > spec.t_min) || spec.n < 16)
        throw std::invalid_argument("check_hypotheses: bad grid spec");

    const double m_cap = std::isfinite(r.M) ? std::min(r.M * (1.0 - 1e-9), spec.t_max) : spec.t_max;
    const auto m_grid = detail::geometric_grid(spec.t_min, m_cap, spec.n);
    const auto full_grid = detail::geometric_grid(spec.t_min, spec.t_max, spec.n);
    const double tol = spec.tolerance;

    HypothesisReport rep;
    rep.p = p;

    const auto ratio = [&](double t) { return r.f(t) / std::pow(t, p - 1.0); };
    rep.thm11_monotone = detail::check_non_increasing("thm11_monotone", m_grid, ratio, tol);

    // s-grid: the geometric t-grid is uniform in s = log t.
    std::vector<double> s_grid(m_grid.size());
    for (std::size_t i = 0; i < m_grid.size(); ++i) s_grid[i] = std::log(m_grid[i]);
    const auto exp_ratio = [&](double s) {
        return std::exp((p - 1.0) * s) / r.f(std::exp(s));
    };
    rep.thm11_convex =
        detail::check_midpoint_convex("thm11_convex", s_grid, exp_ratio, +1.0, tol);

    const auto Fp = [&](double t) { return std::pow(r.F(t), 1.0 / p); };
    rep.thm12_concaveF = detail::check_midpoint_convex("thm12_concaveF", m_grid, Fp, -1.0, tol);
    rep.thm12_concaveF_global =
        detail::check_midpoint_convex("thm12_concaveF_global", full_grid, Fp, -1.0, tol, true);

    const auto Ff = [&](double t) { return r.F(t) / r.f(t); };
    rep.thm12_convexFf = detail::check_midpoint_convex("thm12_convexFf", m_grid, Ff, +1.0, tol);

    // Solvability-window limits from the grid extremes, promoted to +inf
    // when the trend keeps growing strongly toward 0.
    const double g0 = ratio(full_grid[0]);
    const std::size_t dec = full_grid.size() / 9;  // roughly one decade of the grid
    const double g0_in = ratio(full_grid[dec]);
    rep.limit_zero = (g0 > 1e3 && g0 > 4.0 * g0_in) ? kInf : g0;
    rep.limit_inf = ratio(m_grid.back());
    if (std::isfinite(r.M)) rep.limit_inf = 0.0;  // f vanishes beyond M
    return rep;
}

}  // namespace pconcave
