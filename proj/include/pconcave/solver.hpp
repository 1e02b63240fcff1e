#pragma once

#include <deque>
#include <memory>

#include "pconcave/mesh.hpp"
#include "pconcave/reaction.hpp"
#include "pconcave/transform.hpp"

namespace pconcave {

struct TrivialSolutionError : std::runtime_error {
    explicit TrivialSolutionError(const std::string& what) : std::runtime_error(what) {}
};
struct EigenLikeReactionError : std::runtime_error {
    explicit EigenLikeReactionError(const std::string& what) : std::runtime_error(what) {}
};
struct NonConvergenceError : std::runtime_error {
    explicit NonConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

enum class KernelG { F, TPow };

struct SolverConfig {
    double p = 2.0;
    double epsilon = 0.0;          // I_eps regularization; 0 = plain energy
    KernelG G_choice = KernelG::F;
    int max_iters = 50000;
    double grad_tol = 1e-10;       // max-norm of the discrete gradient
    double ls_shrink = 0.5;
    double ls_c1 = 1e-4;
    int lbfgs_memory = 10;
    double trivial_floor = 1e-7;   // max-u below this counts as the trivial solution
};

struct IterationRecord {
    int iter;
    double energy;
    double grad_norm;
};

struct SolveResult {
    std::shared_ptr<const Mesh> mesh;
    std::vector<double> u;         // nodal values, exactly 0 on boundary nodes
    double energy = 0.0;
    int iterations = 0;
    double residual_norm = 0.0;    // final gradient max-norm
    double positivity_floor = 0.0; // min interior nodal value
    bool converged = false;
    double epsilon = 0.0;
    std::vector<IterationRecord> trace;

    ScalarField field() const {
        ScalarField f;
        f.mesh = mesh.get();
        f.values = u;
        return f;
    }
};

inline std::shared_ptr<const Mesh> make_mesh(const ConvexDomain& d, double h) {
    return std::make_shared<const Mesh>(triangulate(d, h));
}

// Discrete energy of I_eps (J at eps = 0) over P1 fields:
//   sum_T meas(T) [ (eps |G(u_bar)|^{2/p} + |grad u|^2)^{p/2} / p - mean F(u_v) ]
// with one-point gradients, vertex-averaged reaction, the even/odd
// extensions of f and F, and G truncated at M. The gradient with respect
// to nodal values is exact (chain rule); at eps = 0 the kernel inside the
// gradient carries a fixed delta^2 = 1e-20 to keep p < 2 finite.
class DiscreteEnergy {
public:
    DiscreteEnergy(const Mesh& mesh, ReactionTerm r, SolverConfig cfg)
        : mesh_(&mesh), r_(std::move(r)), cfg_(cfg) {
        const int ne = mesh.elem_count();
        meas_.resize(ne);
        if (mesh.dim == 2) grads_.resize(ne);
        for (int e = 0; e < ne; ++e) {
            meas_[e] = mesh.elem_measure(e);
            if (mesh.dim == 2) {
                const auto& el = mesh.elems[e];
                const Vec2 a = mesh.nodes[el[0]], b = mesh.nodes[el[1]], c = mesh.nodes[el[2]];
                const double inv2A = 1.0 / (2.0 * meas_[e]);
                // grad of barycentric basis: rotated opposite edges
                grads_[e][0] = {(b.y - c.y) * inv2A, (c.x - b.x) * inv2A};
                grads_[e][1] = {(c.y - a.y) * inv2A, (a.x - c.x) * inv2A};
                grads_[e][2] = {(a.y - b.y) * inv2A, (b.x - a.x) * inv2A};
            }
        }
    }

    const Mesh& mesh() const { return *mesh_; }
    const SolverConfig& config() const { return cfg_; }

    double value(const std::vector<double>& u) const { return eval(u, nullptr); }

    double value_and_grad(const std::vector<double>& u, std::vector<double>& g) const {
        g.assign(u.size(), 0.0);
        return eval(u, &g);
    }

    // |G|^{2/p} of the truncated odd extension at t, and its derivative.
    double G_pow(double t) const {
        const double a = std::min(std::abs(t), r_.M);
        const double G = cfg_.G_choice == KernelG::F ? r_.F(a) : std::pow(a, cfg_.p);
        return std::pow(std::abs(G), 2.0 / cfg_.p);
    }
    double G_pow_prime(double t) const {
        const double at = std::abs(t);
        if (at >= r_.M) return 0.0;
        const double G = cfg_.G_choice == KernelG::F ? r_.F(at) : std::pow(at, cfg_.p);
        if (G == 0.0) return 0.0;
        const double gp = cfg_.G_choice == KernelG::F ? r_.f(at) : cfg_.p * std::pow(at, cfg_.p - 1.0);
        const double d = (2.0 / cfg_.p) * std::pow(std::abs(G), 2.0 / cfg_.p - 1.0) * gp;
        return t < 0.0 ? -d : d;  // |G(odd ext)|^{2/p} is even, derivative odd
    }

private:
    double eval(const std::vector<double>& u, std::vector<double>* g) const {
        const Mesh& m = *mesh_;
        const double p = cfg_.p, eps = cfg_.epsilon;
        const double grad_delta2 = eps == 0.0 ? 1e-20 : 0.0;
        double total = 0.0;
        if (m.dim == 1) {
            for (int e = 0; e < m.elem_count(); ++e) {
                const int i = m.elems[e][0], j = m.elems[e][1];
                const double L = meas_[e];
                const double du = (u[j] - u[i]) / L;
                const double ubar = 0.5 * (u[i] + u[j]);
                const double k = (eps > 0.0 ? eps * G_pow(ubar) : 0.0) + du * du;
                total += L * (std::pow(k, 0.5 * p) / p -
                              0.5 * (r_.F_odd(u[i]) + r_.F_odd(u[j])));
                if (g) {
                    const double kw = 0.5 * std::pow(k + grad_delta2, 0.5 * p - 1.0);
                    const double eterm = eps > 0.0 ? eps * G_pow_prime(ubar) * 0.5 : 0.0;
                    (*g)[i] += L * (kw * (eterm + 2.0 * du * (-1.0 / L)) - 0.5 * r_.f_even(u[i]));
                    (*g)[j] += L * (kw * (eterm + 2.0 * du * (+1.0 / L)) - 0.5 * r_.f_even(u[j]));
                }
            }
            return total;
        }
        for (int e = 0; e < m.elem_count(); ++e) {
            const auto& el = m.elems[e];
            const double A = meas_[e];
            const Vec2 gu = {u[el[0]] * grads_[e][0].x + u[el[1]] * grads_[e][1].x +
                                 u[el[2]] * grads_[e][2].x,
                             u[el[0]] * grads_[e][0].y + u[el[1]] * grads_[e][1].y +
                                 u[el[2]] * grads_[e][2].y};
            const double ubar = (u[el[0]] + u[el[1]] + u[el[2]]) / 3.0;
            const double k = (eps > 0.0 ? eps * G_pow(ubar) : 0.0) + dot(gu, gu);
            total += A * (std::pow(k, 0.5 * p) / p -
                          (r_.F_odd(u[el[0]]) + r_.F_odd(u[el[1]]) + r_.F_odd(u[el[2]])) / 3.0);
            if (g) {
                const double kw = 0.5 * std::pow(k + grad_delta2, 0.5 * p - 1.0);
                const double eterm = eps > 0.0 ? eps * G_pow_prime(ubar) / 3.0 : 0.0;
                for (int kv = 0; kv < 3; ++kv) {
                    (*g)[el[kv]] += A * (kw * (eterm + 2.0 * dot(gu, grads_[e][kv])) -
                                         r_.f_even(u[el[kv]]) / 3.0);
                }
            }
        }
        return total;
    }

    const Mesh* mesh_;
    ReactionTerm r_;
    SolverConfig cfg_;
    std::vector<double> meas_;
    std::vector<std::array<Vec2, 3>> grads_;
};

inline DiscreteEnergy assemble_energy(const Mesh& mesh, const ReactionTerm& r,
                                      const SolverConfig& cfg) {
    return DiscreteEnergy(mesh, r, cfg);
}

namespace detail {

// L-BFGS with Armijo backtracking over the masked (interior) coordinates.
// Returns through `out` and the trace; `project` post-processes an accepted
// iterate (e.g. |u| flip) and reports whether history must be dropped.
struct LbfgsDriver {
    int memory = 10;
    double shrink = 0.5;
    double c1 = 1e-4;
    int max_iters = 50000;
    double grad_tol = 1e-10;

    template <typename Eval, typename Project>
    bool minimize(std::vector<double>& x, const Eval& eval, const Project& project,
                  std::vector<IterationRecord>* trace, int& iters_done,
                  double& final_E, double& final_gnorm) const {
        const std::size_t n = x.size();
        std::deque<std::pair<std::vector<double>, std::vector<double>>> pairs;  // (s, y)
        std::vector<double> g(n), g_new(n), d(n), x_new(n);
        double E = eval(x, g);
        auto gnorm_inf = [&](const std::vector<double>& v) {
            double m = 0.0;
            for (double a : v) m = std::max(m, std::abs(a));
            return m;
        };
        double gn = gnorm_inf(g);
        if (trace) trace->push_back({0, E, gn});
        int it = 0;
        for (; it < max_iters && gn > grad_tol; ++it) {
            // two-loop recursion
            d = g;
            std::vector<double> al(pairs.size());
            std::vector<double> sy_cache(pairs.size());
            for (std::size_t k = pairs.size(); k-- > 0;) {
                const auto& [s, y] = pairs[k];
                double sy = 0.0, sd = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    sy += s[i] * y[i];
                    sd += s[i] * d[i];
                }
                sy_cache[k] = sy;
                al[k] = sd / sy;
                for (std::size_t i = 0; i < n; ++i) d[i] -= al[k] * y[i];
            }
            if (!pairs.empty()) {
                const auto& [s, y] = pairs.back();
                double yy = 0.0;
                for (std::size_t i = 0; i < n; ++i) yy += y[i] * y[i];
                const double gamma = sy_cache.back() / yy;
                for (std::size_t i = 0; i < n; ++i) d[i] *= gamma;
            }
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                const auto& [s, y] = pairs[k];
                double yd = 0.0;
                for (std::size_t i = 0; i < n; ++i) yd += y[i] * d[i];
                const double beta = yd / sy_cache[k];
                for (std::size_t i = 0; i < n; ++i) d[i] += (al[k] - beta) * s[i];
            }
            for (std::size_t i = 0; i < n; ++i) d[i] = -d[i];

            double gd = 0.0;
            for (std::size_t i = 0; i < n; ++i) gd += g[i] * d[i];
            if (!(gd < 0.0)) {  // not a descent direction: steepest descent restart
                pairs.clear();
                for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
                gd = 0.0;
                for (std::size_t i = 0; i < n; ++i) gd -= g[i] * g[i];
                if (gd == 0.0) break;
            }

            double step = 1.0;
            double E_new = 0.0;
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls) {
                for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
                E_new = eval(x_new, g_new);
                if (E_new <= E + c1 * step * gd) {
                    accepted = true;
                    break;
                }
                step *= shrink;
            }
            if (!accepted) break;

            bool drop_history = project(x_new);
            if (drop_history) {
                pairs.clear();
                E_new = eval(x_new, g_new);
            } else {
                std::vector<double> s(n), y(n);
                double sy = 0.0, ss = 0.0, yy = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    s[i] = x_new[i] - x[i];
                    y[i] = g_new[i] - g[i];
                    sy += s[i] * y[i];
                    ss += s[i] * s[i];
                    yy += y[i] * y[i];
                }
                if (sy > 1e-12 * std::sqrt(ss * yy)) {
                    pairs.emplace_back(std::move(s), std::move(y));
                    if (static_cast<int>(pairs.size()) > memory) pairs.pop_front();
                }
            }
            x.swap(x_new);
            g.swap(g_new);
            E = E_new;
            gn = gnorm_inf(g);
            if (trace) trace->push_back({it + 1, E, gn});
        }
        iters_done = it;
        final_E = E;
        final_gnorm = gn;
        return gn <= grad_tol;
    }
};

inline bool looks_eigen_like(const ReactionTerm& r, double p) {
    double lo = kInf, hi = -kInf;
    for (int i = 0; i <= 64; ++i) {
        const double t = std::exp(std::log(1e-3) + i * (std::log(1e3) - std::log(1e-3)) / 64);
        const double v = r.f(t) / std::pow(t, p - 1.0);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo <= 1e-10 * (1.0 + std::abs(hi)) && hi > 0.0;
}

}  // namespace detail

// Minimize J (or I_eps) over P1 fields vanishing on the boundary. Descent
// from a positive initial guess; negative nodal values are flipped to |u|
// whenever that does not increase the energy.
inline SolveResult solve_dirichlet(std::shared_ptr<const Mesh> mesh, const ReactionTerm& r,
                                   SolverConfig cfg,
                                   const std::vector<double>* initial = nullptr) {
    if (detail::looks_eigen_like(r, cfg.p)) {
        throw EigenLikeReactionError(
            "reaction " + r.name +
            " is an eigenvalue nonlinearity; use first_eigenvalue (solutions exist only at "
            "lambda_1 and are a one-parameter family)");
    }
    const Mesh& m = *mesh;
    std::vector<int> interior;
    for (int i = 0; i < m.node_count(); ++i) {
        if (!m.node_on_boundary[i]) interior.push_back(i);
    }
    const std::size_t ni = interior.size();

    const double Mhat = std::min(r.M, 1e3);
    std::vector<double> x(ni, 0.1 * std::min(Mhat, 1.0));
    if (initial) {
        for (std::size_t k = 0; k < ni; ++k) x[k] = (*initial)[interior[k]];
    }

    DiscreteEnergy energy(m, r, cfg);
    std::vector<double> full(m.nodes.size(), 0.0), gfull;
    const auto eval = [&](const std::vector<double>& xi, std::vector<double>& gi) {
        for (std::size_t k = 0; k < ni; ++k) full[interior[k]] = xi[k];
        const double E = energy.value_and_grad(full, gfull);
        gi.resize(ni);
        for (std::size_t k = 0; k < ni; ++k) gi[k] = gfull[interior[k]];
        return E;
    };
    const auto project = [&](std::vector<double>& xi) {
        bool has_negative = false;
        for (double v : xi) {
            if (v < 0.0) {
                has_negative = true;
                break;
            }
        }
        if (!has_negative) return false;
        // flip to |u| only if that does not increase the energy
        std::vector<double> gtmp;
        const double E_before = eval(xi, gtmp);
        std::vector<double> flipped = xi;
        for (double& v : flipped) v = std::abs(v);
        const double E_after = eval(flipped, gtmp);
        if (E_after <= E_before + 1e-14 * (1.0 + std::abs(E_before))) {
            xi = std::move(flipped);
            return true;
        }
        return false;
    };

    detail::LbfgsDriver drv;
    drv.memory = cfg.lbfgs_memory;
    drv.shrink = cfg.ls_shrink;
    drv.c1 = cfg.ls_c1;
    drv.max_iters = cfg.max_iters;
    drv.grad_tol = cfg.grad_tol;

    SolveResult res;
    res.mesh = mesh;
    res.epsilon = cfg.epsilon;
    res.converged = drv.minimize(x, eval, project, &res.trace, res.iterations, res.energy,
                                 res.residual_norm);

    res.u.assign(m.nodes.size(), 0.0);
    for (std::size_t k = 0; k < ni; ++k) res.u[interior[k]] = x[k];
    double umax = 0.0, umin = kInf;
    for (std::size_t k = 0; k < ni; ++k) {
        umax = std::max(umax, x[k]);
        umin = std::min(umin, x[k]);
    }
    res.positivity_floor = ni ? umin : 0.0;
    if (umax < cfg.trivial_floor) {
        throw TrivialSolutionError(
            "minimizer is identically zero: the solvability window (lambda_1 between the "
            "limits of f(t)/t^{p-1}) fails for " + r.name);
    }
    return res;
}

inline SolveResult solve_dirichlet(const ConvexDomain& domain, const ReactionTerm& r,
                                   SolverConfig cfg, double h) {
    return solve_dirichlet(make_mesh(domain, h), r, cfg);
}

// Solve I_eps along a decreasing epsilon ladder with warm starts; a final
// eps = 0 reference solve is appended when the list does not end with 0.
inline std::vector<SolveResult> solve_regularized_family(std::shared_ptr<const Mesh> mesh,
                                                         const ReactionTerm& r, SolverConfig cfg,
                                                         std::vector<double> eps_list) {
    if (eps_list.empty()) throw std::invalid_argument("eps_list must not be empty");
    for (std::size_t i = 1; i < eps_list.size(); ++i) {
        if (!(eps_list[i] < eps_list[i - 1]))
            throw std::invalid_argument("eps_list must be strictly decreasing");
    }
    const double cap = std::pow(cfg.p, 2.0 / cfg.p);
    for (double e : eps_list) {
        if (!(e < cap))
            throw std::invalid_argument("epsilon must stay below p^{2/p} for the transformed "
                                        "equation to keep b > 0");
    }
    if (eps_list.back() != 0.0) eps_list.push_back(0.0);
    std::vector<SolveResult> out;
    const std::vector<double>* warm = nullptr;
    for (double e : eps_list) {
        SolverConfig c = cfg;
        c.epsilon = e;
        out.push_back(solve_dirichlet(mesh, r, c, warm));
        warm = &out.back().u;
    }
    return out;
}

struct EigenResult {
    std::shared_ptr<const Mesh> mesh;
    double lambda = 0.0;
    std::vector<double> v;  // positive, normalized to sum m_i |v_i|^p = 1
    int iterations = 0;
    bool converged = false;
};

// First Dirichlet eigenvalue of the p-Laplacian: minimize the discrete
// Rayleigh quotient (one-point gradient quadrature, lumped |v|^p mass) by
// L-BFGS from a positive start, renormalizing when the denominator drifts.
inline EigenResult first_eigenvalue(std::shared_ptr<const Mesh> mesh, double p,
                                    double grad_tol = 1e-9, int max_iters = 60000) {
    if (!(p > 1.0)) throw std::invalid_argument("first_eigenvalue: p must be > 1");
    const Mesh& m = *mesh;
    std::vector<int> interior;
    for (int i = 0; i < m.node_count(); ++i)
        if (!m.node_on_boundary[i]) interior.push_back(i);
    const std::size_t ni = interior.size();

    // lumped mass and element geometry
    std::vector<double> mass(m.nodes.size(), 0.0);
    const int nv = m.dim == 1 ? 2 : 3;
    for (int e = 0; e < m.elem_count(); ++e) {
        const double w = m.elem_measure(e) / nv;
        for (int k = 0; k < nv; ++k) mass[m.elems[e][k]] += w;
    }
    std::vector<std::array<Vec2, 3>> grads;
    std::vector<double> meas(m.elem_count());
    if (m.dim == 2) grads.resize(m.elem_count());
    for (int e = 0; e < m.elem_count(); ++e) {
        meas[e] = m.elem_measure(e);
        if (m.dim == 2) {
            const auto& el = m.elems[e];
            const Vec2 a = m.nodes[el[0]], b = m.nodes[el[1]], c = m.nodes[el[2]];
            const double inv2A = 1.0 / (2.0 * meas[e]);
            grads[e][0] = {(b.y - c.y) * inv2A, (c.x - b.x) * inv2A};
            grads[e][1] = {(c.y - a.y) * inv2A, (a.x - c.x) * inv2A};
            grads[e][2] = {(a.y - b.y) * inv2A, (b.x - a.x) * inv2A};
        }
    }

    std::vector<double> full(m.nodes.size(), 0.0), gN(m.nodes.size()), gD(m.nodes.size());
    const auto eval = [&](const std::vector<double>& xi, std::vector<double>& gi) {
        for (std::size_t k = 0; k < ni; ++k) full[interior[k]] = xi[k];
        std::fill(gN.begin(), gN.end(), 0.0);
        std::fill(gD.begin(), gD.end(), 0.0);
        double N = 0.0, D = 0.0;
        if (m.dim == 1) {
            for (int e = 0; e < m.elem_count(); ++e) {
                const int i = m.elems[e][0], j = m.elems[e][1];
                const double L = meas[e];
                const double s = (full[j] - full[i]) / L;
                const double w = std::pow(s * s + 1e-30, 0.5 * p - 1.0);
                N += L * w * s * s;
                gN[i] += L * p * w * s * (-1.0 / L);
                gN[j] += L * p * w * s * (+1.0 / L);
            }
        } else {
            for (int e = 0; e < m.elem_count(); ++e) {
                const auto& el = m.elems[e];
                const Vec2 gu = {full[el[0]] * grads[e][0].x + full[el[1]] * grads[e][1].x +
                                     full[el[2]] * grads[e][2].x,
                                 full[el[0]] * grads[e][0].y + full[el[1]] * grads[e][1].y +
                                     full[el[2]] * grads[e][2].y};
                const double g2 = dot(gu, gu);
                const double w = std::pow(g2 + 1e-30, 0.5 * p - 1.0);
                N += meas[e] * w * g2;
                for (int k = 0; k < 3; ++k)
                    gN[el[k]] += meas[e] * p * w * dot(gu, grads[e][k]);
            }
        }
        for (int i = 0; i < m.node_count(); ++i) {
            const double a = std::abs(full[i]);
            D += mass[i] * std::pow(a, p);
            gD[i] = mass[i] * p * std::pow(a, p - 1.0) * (full[i] < 0.0 ? -1.0 : 1.0);
        }
        const double R = N / D;
        gi.resize(ni);
        for (std::size_t k = 0; k < ni; ++k) {
            const int i = interior[k];
            gi[k] = (gN[i] - R * gD[i]) / D;
        }
        return R;
    };

    std::vector<double> x(ni, 1.0);
    // normalize once so D ~ 1
    {
        std::vector<double> gtmp;
        eval(x, gtmp);
        double D = 0.0;
        for (std::size_t k = 0; k < ni; ++k)
            D += mass[interior[k]] * std::pow(std::abs(x[k]), p);
        const double c = std::pow(D, -1.0 / p);
        for (double& v : x) v *= c;
    }

    const auto project = [&](std::vector<double>& xi) {
        double D = 0.0;
        for (std::size_t k = 0; k < ni; ++k)
            D += mass[interior[k]] * std::pow(std::abs(xi[k]), p);
        if (D < 0.25 || D > 4.0) {
            const double c = std::pow(D, -1.0 / p);
            for (double& v : xi) v *= c;
            return true;  // scaling invalidates curvature pairs
        }
        return false;
    };

    detail::LbfgsDriver drv;
    drv.grad_tol = grad_tol;
    drv.max_iters = max_iters;

    EigenResult res;
    res.mesh = mesh;
    double final_gn = 0.0;
    res.converged = drv.minimize(x, eval, project, nullptr, res.iterations, res.lambda, final_gn);
    if (!res.converged && res.iterations >= max_iters)
        throw NonConvergenceError("first_eigenvalue: no convergence after " +
                                  std::to_string(max_iters) + " iterations");

    // normalize to D = 1 and positive orientation
    double D = 0.0, mean = 0.0;
    for (std::size_t k = 0; k < ni; ++k) {
        D += mass[interior[k]] * std::pow(std::abs(x[k]), p);
        mean += x[k];
    }
    const double c = std::pow(D, -1.0 / p) * (mean < 0.0 ? -1.0 : 1.0);
    res.v.assign(m.nodes.size(), 0.0);
    for (std::size_t k = 0; k < ni; ++k) res.v[interior[k]] = std::abs(c * x[k]);
    return res;
}

enum class WindowVerdict { Inside, Outside, EigenLike };

inline const char* to_string(WindowVerdict w) {
    switch (w) {
        case WindowVerdict::Inside: return "inside";
        case WindowVerdict::Outside: return "outside";
        default: return "eigen-like";
    }
}

// Compare the grid-extreme estimates of f(t)/t^{p-1} against lambda_1.
inline WindowVerdict check_solvability_window(const ReactionTerm& r, double p, double lambda1) {
    const auto rep = check_hypotheses(r, p);
    const double mu0 = rep.limit_zero, muinf = rep.limit_inf;
    if (std::isfinite(mu0) && std::abs(mu0 - muinf) <= 1e-8 * (1.0 + std::abs(mu0))) {
        return std::abs(mu0 - lambda1) <= 0.02 * lambda1 ? WindowVerdict::EigenLike
                                                         : WindowVerdict::Outside;
    }
    return (muinf < lambda1 && lambda1 < mu0) ? WindowVerdict::Inside : WindowVerdict::Outside;
}

struct ResidualStats {
    double max_density = 0.0;  // max_i |R_i| / m_i
    double l2_density = 0.0;   // sqrt(sum m_i (R_i/m_i)^2)
    double max_weak = 0.0;     // max_i |R_i|
    int skipped_elements = 0;  // degenerate-gradient elements (eps = 0)
    int tested_nodes = 0;
};

struct DegenerateGradientError : std::runtime_error {
    explicit DegenerateGradientError(const std::string& what) : std::runtime_error(what) {}
};

// Weak residual of the transformed equation
//   -Div((eps+|grad v|^2)^{(p-2)/2} grad v)
//     = f(psi(v))/psi'(v)^{p-1}
//       + (psi''/psi')(v) (eps+|grad v|^2)^{(p-2)/2} ((p-1)|grad v|^2 - eps)
// for v = phi(u) formed nodally, tested against interior P1 hat functions
// with vertex quadrature on the right side. psi', psi''/psi' are evaluated
// through u via psi'(v_i) = F(u_i)^{1/p}. Elements with |grad v| < 1e-12 at
// eps = 0 are skipped and counted.
inline ResidualStats transformed_residual(
    const ScalarField& ufield, const TransformSpec& spec, const ReactionTerm& r, double p,
    double eps, const std::function<double(Vec2)>& extra_source = {}) {
    const Mesh& m = *ufield.mesh;
    const auto& u = ufield.values;
    std::vector<double> v(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        v[i] = spec.kind() == TransformSpec::Kind::Log && u[i] == 0.0 ? -kInf : spec.phi(u[i]);
        if (!std::isfinite(v[i]) && !m.node_on_boundary[i])
            throw EvaluationFailure("transformed_residual: non-finite v at interior node");
    }

    std::vector<double> R(u.size(), 0.0), mass(u.size(), 0.0);
    int skipped = 0;
    const int nv = m.dim == 1 ? 2 : 3;
    for (int e = 0; e < m.elem_count(); ++e) {
        const auto& el = m.elems[e];
        const double A = m.elem_measure(e);
        Vec2 gv{0, 0};
        double g2 = 0.0;
        std::array<Vec2, 3> gb{};
        if (m.dim == 1) {
            const double s = (v[el[1]] - v[el[0]]) / A;
            g2 = s * s;
            gb[0] = {-1.0 / A, 0.0};
            gb[1] = {+1.0 / A, 0.0};
            gv = {s, 0.0};
        } else {
            const Vec2 a = m.nodes[el[0]], b = m.nodes[el[1]], c = m.nodes[el[2]];
            const double inv2A = 1.0 / (2.0 * A);
            gb[0] = {(b.y - c.y) * inv2A, (c.x - b.x) * inv2A};
            gb[1] = {(c.y - a.y) * inv2A, (a.x - c.x) * inv2A};
            gb[2] = {(a.y - b.y) * inv2A, (b.x - a.x) * inv2A};
            gv = {v[el[0]] * gb[0].x + v[el[1]] * gb[1].x + v[el[2]] * gb[2].x,
                  v[el[0]] * gb[0].y + v[el[1]] * gb[1].y + v[el[2]] * gb[2].y};
            g2 = dot(gv, gv);
        }
        if (eps == 0.0 && std::sqrt(g2) < 1e-12) {
            ++skipped;
            continue;
        }
        const double kern = std::pow(eps + g2, 0.5 * p - 1.0);
        for (int k = 0; k < nv; ++k) {
            const int i = el[k];
            mass[i] += A / nv;
            if (m.node_on_boundary[i]) continue;
            // LHS: kernel grad v . grad hat_i
            R[i] += A * kern * dot(gv, gb[k]);
            // RHS by vertex quadrature: hat_i picks out its own vertex
            const double ui = u[i];
            double rhs;
            if (spec.kind() == TransformSpec::Kind::Log) {
                rhs = r.f(ui) / std::pow(ui, p - 1.0) +
                      kern * ((p - 1.0) * g2 - eps);
            } else {
                const double F = r.F(ui);
                const double psi_p = std::pow(F, 1.0 / p);
                const double psi_ratio = r.f(ui) * std::pow(F, 1.0 / p - 1.0) / p;  // psi''/psi'
                rhs = r.f(ui) / std::pow(psi_p, p - 1.0) +
                      psi_ratio * kern * ((p - 1.0) * g2 - eps);
            }
            if (extra_source) rhs += extra_source(m.nodes[i]);
            R[i] -= (A / nv) * rhs;
        }
    }

    ResidualStats st;
    st.skipped_elements = skipped;
    for (int i = 0; i < m.node_count(); ++i) {
        if (m.node_on_boundary[i] || mass[i] == 0.0) continue;
        ++st.tested_nodes;
        const double dens = R[i] / mass[i];
        st.max_density = std::max(st.max_density, std::abs(dens));
        st.max_weak = std::max(st.max_weak, std::abs(R[i]));
        st.l2_density += mass[i] * dens * dens;
    }
    st.l2_density = std::sqrt(st.l2_density);
    return st;
}

}  // namespace pconcave
