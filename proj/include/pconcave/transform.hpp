#pragma once

#include <memory>

#include "pconcave/quadrature.hpp"
#include "pconcave/reaction.hpp"

namespace pconcave {

struct SingularityNotIntegrable : std::runtime_error {
    explicit SingularityNotIntegrable(const std::string& what) : std::runtime_error(what) {}
};

// The concavity transformation: either phi(t) = int_1^t F(tau)^{-1/p} dtau
// built from a reaction, or the log transform. phi is strictly increasing;
// psi is its inverse. Beyond a finite cutoff M the integrand is frozen at
// F(M)^{-1/p}, which continues phi linearly (flagged as extrapolation).
// All evaluators are pure and safe for concurrent use after construction.
class TransformSpec {
public:
    enum class Kind { PhiF, Log };

    Kind kind() const { return kind_; }
    const std::string& reaction_name() const { return reaction_name_; }
    double p() const { return p_; }
    double cutoff_M() const { return M_; }
    bool singular_at_zero() const { return singular_at_zero_; }
    // phi(0+); -inf when the endpoint singularity is not integrable.
    double phi_zero_limit() const { return phi_zero_limit_; }
    bool extrapolated(double t) const { return kind_ == Kind::PhiF && t > M_; }

    double phi(double t) const {
        if (kind_ == Kind::Log) return std::log(t);
        if (t < 0.0) throw std::domain_error("phi: t < 0");
        if (t == 0.0) {
            if (singular_at_zero_)
                throw SingularityNotIntegrable("phi diverges at 0 for " + reaction_name_);
            return phi_zero_limit_;
        }
        if (std::isfinite(M_) && t >= M_) return phi_at(M_) + (t - M_) * integrand(M_);
        return phi_at(t);
    }

    double phi_prime(double t) const {
        if (kind_ == Kind::Log) return 1.0 / t;
        return integrand(t);
    }

    double phi_second(double t) const {
        if (kind_ == Kind::Log) return -1.0 / (t * t);
        if (std::isfinite(M_) && t >= M_) return 0.0;
        const double F = reaction_.F(t);
        return -reaction_.f(t) / (p_ * std::pow(F, 1.0 + 1.0 / p_));
    }

    double psi(double s) const {
        if (kind_ == Kind::Log) return std::exp(s);
        // bracket from the anchor table, then safeguarded Newton
        if (s >= anchor_phi_.back()) {
            if (std::isfinite(M_)) {
                const double sM = phi_at(std::min(M_, anchor_t_.back()));
                if (s >= sM) return M_ + (s - sM) * std::pow(reaction_.F(M_), 1.0 / p_);
            }
            throw std::domain_error("psi: s above tabulated phi range");
        }
        if (s <= anchor_phi_.front())
            throw std::domain_error("psi: s below tabulated phi range (phi(0+) may exceed s)");
        auto it = std::upper_bound(anchor_phi_.begin(), anchor_phi_.end(), s);
        std::size_t k = static_cast<std::size_t>(it - anchor_phi_.begin());
        double lo = anchor_t_[k - 1], hi = anchor_t_[k];
        double t = 0.5 * (lo + hi);
        for (int iter = 0; iter < 200; ++iter) {
            const double r = phi_at(t) - s;
            if (std::abs(r) <= 1e-13 * (1.0 + std::abs(s))) return t;
            if (r > 0.0) hi = t;
            else lo = t;
            const double step = r / integrand(t);
            double t_next = t - step;
            if (!(t_next > lo && t_next < hi)) t_next = 0.5 * (lo + hi);
            if (hi - lo <= 1e-14 * hi || std::abs(t_next - t) <= 1e-15 * std::max(t, t_next)) {
                return t_next;
            }
            t = t_next;
        }
        return t;
    }

    static TransformSpec log_transform() {
        TransformSpec ts;
        ts.kind_ = Kind::Log;
        ts.reaction_name_ = "log";
        return ts;
    }

    static TransformSpec phi_of(const ReactionTerm& r, double p) {
        if (!(p > 1.0)) throw std::invalid_argument("build_phi: p must be > 1");
        TransformSpec ts;
        ts.kind_ = Kind::PhiF;
        ts.reaction_ = r;
        ts.reaction_name_ = r.name;
        ts.p_ = p;
        ts.M_ = r.M;
        for (double t : {1e-9, 1e-3, 0.5, 1.0}) {
            if (std::isfinite(r.M) && t >= r.M) continue;
            if (!(r.F(t) > 0.0))
                throw std::invalid_argument("build_phi: F must be positive on (0, M); fails at t=" +
                                            std::to_string(t));
        }

        // Anchor ladder t = 2^k around the base point 1; phi accumulates
        // panel integrals once, immutably, so later evaluations only
        // integrate within a single octave.
        const double t_hi = std::isfinite(r.M) ? r.M : 1e12;
        std::vector<double> down_t{1.0}, down_phi{0.0};
        double t = 1.0;
        while (t > 1e-16) {
            const double t2 = 0.5 * t;
            const double piece = integrate([&](double u) { return ts.integrand(u); }, t2, t);
            down_t.push_back(t2);
            down_phi.push_back(down_phi.back() - piece);
            t = t2;
        }
        std::vector<double> up_t{1.0}, up_phi{0.0};
        t = 1.0;
        while (t < t_hi) {
            const double t2 = std::min(2.0 * t, t_hi);
            const double piece = integrate([&](double u) { return ts.integrand(u); }, t, t2);
            up_t.push_back(t2);
            up_phi.push_back(up_phi.back() + piece);
            t = t2;
        }
        ts.anchor_t_.assign(down_t.rbegin(), down_t.rend());
        ts.anchor_phi_.assign(down_phi.rbegin(), down_phi.rend());
        ts.anchor_t_.insert(ts.anchor_t_.end(), up_t.begin() + 1, up_t.end());
        ts.anchor_phi_.insert(ts.anchor_phi_.end(), up_phi.begin() + 1, up_phi.end());

        // Local power fit F ~ C t^alpha near zero decides integrability of
        // the endpoint singularity of F^{-1/p}.
        const double d = 1e-8;
        const double alpha = std::log(r.F(d) / r.F(0.5 * d)) / std::log(2.0);
        if (alpha / p < 1.0 - 1e-9) {
            ts.singular_at_zero_ = false;
            const double tail = std::pow(r.F(d), -1.0 / p) * d / (1.0 - alpha / p);
            ts.phi_zero_limit_ = ts.phi_at(d) - tail;
        } else {
            ts.singular_at_zero_ = true;
            ts.phi_zero_limit_ = -kInf;
        }
        return ts;
    }

private:
    double integrand(double t) const {
        const double tc = std::isfinite(M_) ? std::min(t, M_) : t;
        return std::pow(reaction_.F(tc), -1.0 / p_);
    }

    // phi via the anchor ladder; t must lie within the tabulated range.
    double phi_at(double t) const {
        if (t <= anchor_t_.front()) {
            return anchor_phi_.front() -
                   integrate([&](double u) { return integrand(u); }, t, anchor_t_.front());
        }
        auto it = std::upper_bound(anchor_t_.begin(), anchor_t_.end(), t);
        const std::size_t k = static_cast<std::size_t>(it - anchor_t_.begin()) - 1;
        return anchor_phi_[k] + integrate([&](double u) { return integrand(u); }, anchor_t_[k],
                                          std::min(t, anchor_t_.back()));
    }

    Kind kind_ = Kind::Log;
    ReactionTerm reaction_;
    std::string reaction_name_;
    double p_ = 2.0;
    double M_ = kInf;
    bool singular_at_zero_ = false;
    double phi_zero_limit_ = -kInf;
    std::vector<double> anchor_t_, anchor_phi_;
};

inline TransformSpec build_phi(const ReactionTerm& r, double p) {
    return TransformSpec::phi_of(r, p);
}
inline TransformSpec build_log() { return TransformSpec::log_transform(); }

// Observed behaviour of the Korevaar boundary conditions on the geometric
// grid t = 10^{-k}: sign pattern, the growth of phi', and the two ratio
// limits reported as trends (numerics cannot certify a limit).
struct KorevaarReport {
    struct Sample {
        double t, phi, phi_prime, phi_second, ratio_phi, ratio_prime;
    };
    std::vector<Sample> samples;
    bool signs_ok = true;            // phi'' < 0 < phi' at every sample
    bool phi_prime_growing = true;   // phi' increases as t -> 0+
    bool ratio_phi_trend = true;     // |phi/phi'| decreasing with last value < 1e-3
    bool ratio_prime_trend = true;   // |phi'/phi''| decreasing with last value < 1e-3
    double last_ratio_phi = 0.0;
    double last_ratio_prime = 0.0;

    bool all_ok() const {
        return signs_ok && phi_prime_growing && ratio_phi_trend && ratio_prime_trend;
    }
};

inline KorevaarReport check_korevaar_conditions(const TransformSpec& spec) {
    KorevaarReport rep;
    double prev_prime = 0.0, prev_rphi = kInf, prev_rprime = kInf;
    for (int k = 1; k <= 8; ++k) {
        const double t = std::pow(10.0, -k);
        KorevaarReport::Sample s;
        s.t = t;
        s.phi = spec.phi(t);
        s.phi_prime = spec.phi_prime(t);
        s.phi_second = spec.phi_second(t);
        s.ratio_phi = s.phi / s.phi_prime;
        s.ratio_prime = s.phi_prime / s.phi_second;
        rep.samples.push_back(s);
        if (!(s.phi_second < 0.0 && 0.0 < s.phi_prime)) rep.signs_ok = false;
        if (k > 1) {
            if (!(s.phi_prime > prev_prime)) rep.phi_prime_growing = false;
            if (!(std::abs(s.ratio_phi) < prev_rphi * (1.0 + 1e-9))) rep.ratio_phi_trend = false;
            if (!(std::abs(s.ratio_prime) < prev_rprime * (1.0 + 1e-9)))
                rep.ratio_prime_trend = false;
        }
        prev_prime = s.phi_prime;
        prev_rphi = std::abs(s.ratio_phi);
        prev_rprime = std::abs(s.ratio_prime);
    }
    rep.last_ratio_phi = rep.samples.back().ratio_phi;
    rep.last_ratio_prime = rep.samples.back().ratio_prime;
    if (!(std::abs(rep.last_ratio_phi) < 1e-3)) rep.ratio_phi_trend = false;
    if (!(std::abs(rep.last_ratio_prime) < 1e-3)) rep.ratio_prime_trend = false;
    return rep;
}

// Discrete midpoint-concavity verdict for s -> log psi(s) on a grid inside
// phi((t_min, M)).
inline ConditionCheck check_logpsi_concavity(const TransformSpec& spec, double t_min = 1e-3,
                                             double t_max = 1e3, int n = 256) {
    const double cap = std::isfinite(spec.cutoff_M()) ? spec.cutoff_M() * (1.0 - 1e-9) : t_max;
    const auto t_grid = detail::geometric_grid(t_min, std::min(cap, t_max), n);
    std::vector<double> s_grid(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) s_grid[i] = spec.phi(t_grid[i]);
    return detail::check_midpoint_convex(
        "logpsi_concave", s_grid, [&](double s) { return std::log(spec.psi(s)); }, -1.0, 1e-8);
}

}  // namespace pconcave
