#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>

#include "pconcave/solver.hpp"

using namespace pconcave;

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("energy of the zero field vanishes") {
    const auto mesh = make_mesh(ConvexDomain::unit_square(), 0.3);
    DiscreteEnergy E(*mesh, constant_reaction(), {});
    CHECK(E.value(std::vector<double>(mesh->nodes.size(), 0.0)) == 0.0);
}

TEST_CASE("1D energy of the torsion interpolant matches the continuum integral") {
    const auto mesh = make_mesh(make_interval(-1.0, 1.0), 1.0 / 256.0);
    DiscreteEnergy E(*mesh, constant_reaction(), {});
    std::vector<double> u(mesh->nodes.size());
    for (int i = 0; i < mesh->node_count(); ++i) {
        const double x = mesh->nodes[i].x;
        u[i] = 0.5 * (1.0 - x * x);
    }
    // continuum: int 1/2 |u'|^2 - F(u) with u' = -x
    const double oracle =
        simpson([](double x) { return 0.5 * x * x - 0.5 * (1.0 - x * x); }, -1.0, 1.0, 4096);
    CHECK(E.value(u) == Catch::Approx(oracle).margin(1e-4));
}

TEST_CASE("discrete gradient matches central differences") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    const auto mesh2 = make_mesh(ConvexDomain::unit_square(), 0.21);
    const auto mesh1 = make_mesh(make_interval(-1.0, 1.0), 0.05);
    for (const Mesh* m : {mesh2.get(), mesh1.get()}) {
        for (double p : {1.5, 2.0, 3.0}) {
            for (double eps : {0.0, 0.01}) {
                SolverConfig cfg;
                cfg.p = p;
                cfg.epsilon = eps;
                DiscreteEnergy E(*m, entropy_a_reaction(), cfg);
                std::vector<double> u(m->nodes.size());
                for (auto& v : u) v = unif(rng);
                std::vector<double> g;
                E.value_and_grad(u, g);
                std::uniform_int_distribution<int> pick(0, m->node_count() - 1);
                for (int rep = 0; rep < 20; ++rep) {
                    const int i = pick(rng);
                    const double d = 1e-6 * (1.0 + std::abs(u[i]));
                    const double keep = u[i];
                    u[i] = keep + d;
                    const double ep = E.value(u);
                    u[i] = keep - d;
                    const double em = E.value(u);
                    u[i] = keep;
                    const double fd = (ep - em) / (2.0 * d);
                    INFO("dim=" << m->dim << " p=" << p << " eps=" << eps << " node " << i);
                    CHECK(std::abs(fd - g[i]) <= 1e-5 * (1.0 + std::abs(fd)));
                }
            }
        }
    }
}

TEST_CASE("1D torsion solve, p=2") {
    const auto mesh = make_mesh(make_interval(-1.0, 1.0), 2.0 / 512.0);
    const auto res = solve_dirichlet(mesh, constant_reaction(), {});
    REQUIRE(res.converged);
    double err = 0.0;
    for (int i = 0; i < mesh->node_count(); ++i) {
        const double x = mesh->nodes[i].x;
        err = std::max(err, std::abs(res.u[i] - 0.5 * (1.0 - x * x)));
    }
    CHECK(err <= 1e-4);
    for (int i : mesh->boundary_nodes) CHECK(res.u[i] == 0.0);
    CHECK(res.positivity_floor > 0.0);
}

TEST_CASE("1D torsion solve, p=3") {
    const auto mesh = make_mesh(make_interval(-1.0, 1.0), 2.0 / 512.0);
    SolverConfig cfg;
    cfg.p = 3.0;
    const auto res = solve_dirichlet(mesh, constant_reaction(), cfg);
    double err = 0.0;
    for (int i = 0; i < mesh->node_count(); ++i) {
        const double x = mesh->nodes[i].x;
        const double exact = (2.0 / 3.0) * (1.0 - std::pow(std::abs(x), 1.5));
        err = std::max(err, std::abs(res.u[i] - exact));
    }
    CHECK(err <= 5e-3);
}

TEST_CASE("energy trace is non-increasing") {
    const auto mesh = make_mesh(ConvexDomain::unit_square(), 1.0 / 8.0);
    const auto res = solve_dirichlet(mesh, constant_reaction(), {});
    REQUIRE(res.trace.size() > 2);
    for (std::size_t i = 1; i < res.trace.size(); ++i) {
        CHECK(res.trace[i].energy <= res.trace[i - 1].energy + 1e-14);
    }
}

TEST_CASE("square torsion center value (coarse sanity)") {
    const auto mesh = make_mesh(ConvexDomain::unit_square(), 1.0 / 16.0);
    const auto res = solve_dirichlet(mesh, constant_reaction(), {});
    const auto f = res.field();
    // series value for the unit-square torsion maximum
    CHECK(interpolate(f, {0.5, 0.5}) == Catch::Approx(0.0736713).margin(2e-3));
}

TEST_CASE("square torsion solution inherits the dihedral symmetries") {
    const auto mesh = make_mesh(ConvexDomain::unit_square(), 1.0 / 8.0);
    const auto res = solve_dirichlet(mesh, constant_reaction(), {});
    auto key = [](Vec2 p) {
        return std::pair<long long, long long>(std::llround(p.x * 1e10), std::llround(p.y * 1e10));
    };
    std::map<std::pair<long long, long long>, int> index;
    for (int i = 0; i < mesh->node_count(); ++i) index[key(mesh->nodes[i])] = i;
    const auto maps = std::vector<std::function<Vec2(Vec2)>>{
        [](Vec2 p) { return Vec2{p.y, p.x}; },
        [](Vec2 p) { return Vec2{1.0 - p.x, p.y}; },
        [](Vec2 p) { return Vec2{p.y, 1.0 - p.x}; },
    };
    for (const auto& mp : maps) {
        for (int i = 0; i < mesh->node_count(); ++i) {
            const auto it = index.find(key(mp(mesh->nodes[i])));
            REQUIRE(it != index.end());
            CHECK(res.u[i] == Catch::Approx(res.u[it->second]).margin(1e-6));
        }
    }
}

TEST_CASE("entropy reactions on the unit square hit the trivial solution") {
    // lambda_1(unit square) ~ 19.74 exceeds lim_{t->0} f(t)/t = 2, so the
    // only minimizer is u = 0 and the solver must say so.
    const auto mesh = make_mesh(ConvexDomain::unit_square(), 1.0 / 8.0);
    CHECK_THROWS_AS(solve_dirichlet(mesh, entropy_a_reaction(), {}), TrivialSolutionError);
}

TEST_CASE("eigen-like reactions are redirected") {
    const auto mesh = make_mesh(ConvexDomain::unit_square(), 0.25);
    CHECK_THROWS_AS(solve_dirichlet(mesh, eigen_reaction(5.0, 2.0), {}), EigenLikeReactionError);
}

TEST_CASE("first eigenvalue on the interval") {
    const auto mesh = make_mesh(make_interval(-1.0, 1.0), 2.0 / 512.0);
    const auto res = first_eigenvalue(mesh, 2.0);
    CHECK(res.lambda == Catch::Approx(M_PI * M_PI / 4.0).epsilon(0.005));
    for (double v : res.v) CHECK(v >= 0.0);
}

TEST_CASE("first eigenvalue on the square (coarse) and the scaling identity") {
    const auto mesh = make_mesh(ConvexDomain::unit_square(), 1.0 / 16.0);
    const auto res = first_eigenvalue(mesh, 2.0);
    CHECK(res.lambda == Catch::Approx(2.0 * M_PI * M_PI).epsilon(0.02));

    const auto big = make_mesh(make_polygon({{0, 0}, {2, 0}, {2, 2}, {0, 2}}), 2.0 / 16.0);
    const auto res2 = first_eigenvalue(big, 2.0);
    CHECK(res2.lambda == Catch::Approx(res.lambda / 4.0).epsilon(1e-6));
}

TEST_CASE("solvability window verdicts") {
    const double l1 = 2.0 * M_PI * M_PI;
    CHECK(check_solvability_window(constant_reaction(), 2.0, l1) == WindowVerdict::Inside);
    CHECK(check_solvability_window(power_reaction(0.5), 2.0, l1) == WindowVerdict::Inside);
    CHECK(check_solvability_window(eigen_reaction(5.0, 2.0), 2.0, l1) == WindowVerdict::Outside);
    CHECK(check_solvability_window(eigen_reaction(l1, 2.0), 2.0, l1) == WindowVerdict::EigenLike);
    CHECK(check_solvability_window(entropy_a_reaction(), 2.0, l1) == WindowVerdict::Outside);
}

TEST_CASE("regularized family converges monotonically (1D)") {
    const auto mesh = make_mesh(make_interval(-1.0, 1.0), 2.0 / 256.0);
    const auto fam = solve_regularized_family(mesh, constant_reaction(), {}, {0.1, 0.01, 0.001});
    REQUIRE(fam.size() == 4);  // appended eps = 0 reference
    const auto& ref = fam.back();
    CHECK(ref.epsilon == 0.0);
    double prev = kInf;
    for (std::size_t i = 0; i + 1 < fam.size(); ++i) {
        const double gap = sup_diff(fam[i].u, ref.u);
        INFO("eps=" << fam[i].epsilon);
        CHECK(gap < prev);
        prev = gap;
    }
    CHECK(prev <= 1e-3);
}

TEST_CASE("single eps=0 family entry equals solve_dirichlet") {
    const auto mesh = make_mesh(make_interval(-1.0, 1.0), 2.0 / 128.0);
    const auto fam = solve_regularized_family(mesh, constant_reaction(), {}, {0.0});
    REQUIRE(fam.size() == 1);
    const auto direct = solve_dirichlet(mesh, constant_reaction(), {});
    CHECK(sup_diff(fam[0].u, direct.u) <= 1e-12);
}

TEST_CASE("both kernel choices approach the eps=0 solution") {
    const auto mesh = make_mesh(make_interval(-1.0, 1.0), 2.0 / 256.0);
    const auto ref = solve_dirichlet(mesh, constant_reaction(), {});
    for (KernelG g : {KernelG::F, KernelG::TPow}) {
        SolverConfig cfg;
        cfg.epsilon = 1e-4;
        cfg.G_choice = g;
        const auto res = solve_dirichlet(mesh, constant_reaction(), cfg);
        CHECK(sup_diff(res.u, ref.u) <= 1e-3);
    }
}

TEST_CASE("uniqueness regime: two initial guesses agree (1D)") {
    const auto mesh = make_mesh(make_interval(-1.0, 1.0), 2.0 / 256.0);
    const auto a = solve_dirichlet(mesh, constant_reaction(), {});
    std::vector<double> bump(mesh->nodes.size());
    for (int i = 0; i < mesh->node_count(); ++i) {
        bump[i] = mesh->node_on_boundary[i] ? 0.0
                                            : 0.7 * std::cos(0.5 * M_PI * mesh->nodes[i].x);
    }
    const auto b = solve_dirichlet(mesh, constant_reaction(), {}, &bump);
    CHECK(sup_diff(a.u, b.u) <= 1e-4);
}

TEST_CASE("max bound for the truncated-linear reaction (coarse square)") {
    const auto mesh = make_mesh(ConvexDomain::unit_square(), 1.0 / 8.0);
    const auto res = solve_dirichlet(mesh, truncated_linear_reaction(), {});
    double umax = 0.0;
    for (double v : res.u) umax = std::max(umax, v);
    CHECK(umax <= 1.0 + 1e-8);
}

TEST_CASE("transformed residual: manufactured psi(affine) field") {
    const auto mesh = make_mesh(make_interval(-1.0, 1.0), 2.0 / 128.0);
    const auto r = constant_reaction();
    const double p = 2.0;
    const auto ts = build_phi(r, p);
    const double a = 0.3, b = -0.2;
    ScalarField u(*mesh);
    for (int i = 0; i < mesh->node_count(); ++i) {
        u.values[i] = ts.psi(a + b * mesh->nodes[i].x);
    }
    const auto rhs = [&](Vec2 pt) {
        const double ui = ts.psi(a + b * pt.x);
        const double F = r.F(ui);
        const double kern = std::pow(b * b, 0.5 * p - 1.0);
        return -(r.f(ui) / std::pow(F, (p - 1.0) / p) +
                 (r.f(ui) * std::pow(F, 1.0 / p - 1.0) / p) * kern * (p - 1.0) * b * b);
    };
    const auto st = transformed_residual(u, ts, r, p, 0.0, rhs);
    CHECK(st.max_density <= 1e-6);
}

TEST_CASE("transformed residual shrinks under refinement (1D torsion)") {
    const auto r = constant_reaction();
    const auto ts = build_phi(r, 2.0);
    double prev = kInf;
    for (double h : {1.0 / 64.0, 1.0 / 128.0}) {
        const auto mesh = make_mesh(make_interval(-1.0, 1.0), h);
        const auto res = solve_dirichlet(mesh, r, {});
        const auto st = transformed_residual(res.field(), ts, r, 2.0, 0.0);
        CHECK(st.l2_density < prev);
        prev = st.l2_density;
    }
}

TEST_CASE("transformed residual: large vs zero epsilon both finite") {
    const auto r = constant_reaction();
    const auto ts = build_phi(r, 2.0);
    const auto mesh = make_mesh(make_interval(-1.0, 1.0), 2.0 / 128.0);
    const auto res = solve_dirichlet(mesh, r, {});
    const auto s0 = transformed_residual(res.field(), ts, r, 2.0, 0.0);
    const auto s5 = transformed_residual(res.field(), ts, r, 2.0, 0.5);
    CHECK(std::isfinite(s0.l2_density));
    CHECK(std::isfinite(s5.l2_density));
    CHECK(s0.l2_density != s5.l2_density);
}
