#include <catch2/catch_amalgamated.hpp>

#include "pconcave/reaction.hpp"

using namespace pconcave;

namespace {

// Oracle: F' == f by central differences on a sampled grid.
void check_primitive_consistency(const ReactionTerm& r) {
    for (double t : {1e-4, 1e-2, 0.1, 0.5, 1.0, 2.0, 7.0, 50.0}) {
        const double d = 1e-5 * (1.0 + t);
        const double fd = (r.F(t + d) - r.F(t - d)) / (2.0 * d);
        INFO(r.name << " at t=" << t);
        CHECK(std::abs(fd - r.f(t)) <= 1e-5 * (1.0 + std::abs(r.f(t))));
    }
}

}  // namespace

TEST_CASE("catalog reactions have consistent primitives and F(0)=0") {
    for (const auto& r : builtin_catalog()) {
        INFO(r.name);
        CHECK(r.F(0.0) == 0.0);
        check_primitive_consistency(r);
        if (std::isfinite(r.M)) {
            if (r.name != "linear") {  // linear goes negative past M by design
                for (double t : {1.5, 2.0, 10.0}) CHECK(r.f(r.M * t) == 0.0);
            }
        }
    }
}

TEST_CASE("catalog spot values") {
    const auto power0 = power_reaction(0.0);
    CHECK(power0.F(3.0) == Catch::Approx(3.0));

    const auto ea = entropy_a_reaction();
    CHECK(ea.F(1.0) == Catch::Approx(std::log(2.0)));

    const auto tl = truncated_linear_reaction();
    CHECK(tl.M == 1.0);
    CHECK(tl.F(0.5) == Catch::Approx(0.5 - 0.125));
    CHECK(tl.F(3.0) == Catch::Approx(0.5));
}

TEST_CASE("detect_M") {
    CHECK(detect_M(truncated_linear_reaction(), 10.0) == Catch::Approx(1.0).margin(1e-10));
    CHECK(detect_M(constant_reaction(), 10.0) == kInf);

    ReactionTerm bump;
    bump.name = "bump";
    bump.f = [](double t) { return std::max(2.0 - t, 0.0) * t; };
    bump.F = [](double t) {  // unused here
        return t < 2.0 ? t * t - t * t * t / 3.0 : 4.0 / 3.0;
    };
    CHECK(detect_M(bump, 10.0) == Catch::Approx(2.0).margin(1e-10));
}

TEST_CASE("hypothesis checker: power reactions pass everything") {
    for (double q : {0.0, 0.5}) {
        const auto rep = check_hypotheses(power_reaction(q), 2.0);
        INFO("q=" << q);
        CHECK(rep.thm11_monotone.verdict == Verdict::Pass);
        CHECK(rep.thm11_convex.verdict == Verdict::Pass);
        CHECK(rep.thm12_concaveF.verdict == Verdict::Pass);
        CHECK(rep.thm12_convexFf.verdict == Verdict::Pass);
    }
}

TEST_CASE("hypothesis checker: sqrt-shift passes thm 1.1 but fails F/f convexity") {
    const auto rep = check_hypotheses(sqrt_shift_reaction(), 2.0);
    CHECK(rep.thm11_monotone.verdict == Verdict::Pass);
    CHECK(rep.thm11_convex.verdict == Verdict::Pass);
    CHECK(rep.thm12_concaveF.verdict == Verdict::Pass);
    CHECK(rep.thm12_convexFf.verdict == Verdict::Fail);
}

TEST_CASE("hypothesis checker: remark-F separates monotonicity from concavity") {
    const auto rep = check_hypotheses(remark_f_reaction(), 2.0);
    CHECK(rep.thm11_monotone.verdict == Verdict::Pass);
    CHECK(rep.thm12_concaveF.verdict == Verdict::Fail);
}

TEST_CASE("hypothesis checker: entropy reactions pass theorem 1.2 at p=2") {
    for (const auto& r : {entropy_a_reaction(), entropy_b_reaction()}) {
        const auto rep = check_hypotheses(r, 2.0);
        INFO(r.name);
        CHECK(rep.thm12_concaveF.verdict == Verdict::Pass);
        CHECK(rep.thm12_convexFf.verdict == Verdict::Pass);
    }
}

TEST_CASE("hypothesis checker: truncated-linear passes both conditions on (0,1)") {
    const auto rep = check_hypotheses(truncated_linear_reaction(), 2.0);
    CHECK(rep.thm12_concaveF.verdict == Verdict::Pass);
    CHECK(rep.thm12_convexFf.verdict == Verdict::Pass);
    CHECK(rep.thm11_monotone.verdict == Verdict::Pass);
}

TEST_CASE("lifted reaction: algebra and p=q admissibility") {
    const auto lifted = lifted_reaction(constant_reaction(), 3.0);
    CHECK(lifted.F(4.0) == Catch::Approx(8.0));          // t^{3/2}
    CHECK(lifted.f(4.0) == Catch::Approx(1.5 * 2.0));    // (3/2) sqrt(t)

    const auto id = lifted_reaction(constant_reaction(), 2.0);
    for (double t : {0.25, 1.0, 5.0}) CHECK(id.F(t) == Catch::Approx(t));

    // check_hypotheses as oracle: lifted entropy-A is admissible at p=3
    const auto rep = check_hypotheses(lifted_reaction(entropy_a_reaction(), 3.0), 3.0);
    CHECK(rep.thm12_concaveF.verdict == Verdict::Pass);
    CHECK(rep.thm12_convexFf.verdict == Verdict::Pass);
}

TEST_CASE("lemma: F^{1/p} concavity implies f/t^{p-1} monotone on the catalog") {
    for (double p : {2.0, 3.0}) {
        for (const auto& r : builtin_catalog()) {
            if (r.name == "linear") continue;  // f changes sign; outside the lemma scope
            const auto rep = check_hypotheses(r, p);
            if (rep.thm12_concaveF.verdict == Verdict::Pass) {
                INFO(r.name << " p=" << p);
                CHECK(rep.thm11_monotone.verdict != Verdict::Fail);
            }
        }
    }
}

TEST_CASE("growth bound F <= C(1+t^p) when F^{1/p} is concave") {
    const double p = 2.0;
    for (const auto& r : builtin_catalog()) {
        const auto rep = check_hypotheses(r, p);
        if (rep.thm12_concaveF.verdict != Verdict::Pass) continue;
        const double C = 2.0 * std::max(r.F(1.0), 1.0);
        for (int i = 0; i <= 200; ++i) {
            const double t = std::exp(std::log(1e-6) + i * (std::log(1e3) - std::log(1e-6)) / 200);
            INFO(r.name << " t=" << t);
            CHECK(r.F(t) <= C * (1.0 + std::pow(t, p)) + 1e-12);
        }
    }
}

TEST_CASE("thm11 monotonicity strengthens as p grows") {
    for (const auto& r : builtin_catalog()) {
        if (r.name == "linear") continue;
        const auto at2 = check_hypotheses(r, 2.0);
        if (at2.thm11_monotone.verdict != Verdict::Pass) continue;
        for (double p : {2.5, 3.0, 4.0}) {
            INFO(r.name << " p=" << p);
            CHECK(check_hypotheses(r, p).thm11_monotone.verdict == Verdict::Pass);
        }
    }
}

TEST_CASE("solvability limits: torsion straddles, eigen degenerates") {
    const auto torsion = check_hypotheses(constant_reaction(), 2.0);
    CHECK(torsion.limit_zero == kInf);
    CHECK(torsion.limit_inf < 2e-3);

    const auto eig = check_hypotheses(eigen_reaction(5.0, 2.0), 2.0);
    CHECK(eig.limit_zero == Catch::Approx(5.0));
    CHECK(eig.limit_inf == Catch::Approx(5.0));
}

TEST_CASE("evaluation failure surfaces as an error") {
    ReactionTerm bad;
    bad.name = "bad";
    bad.f = [](double t) { return std::sqrt(t - 1.0); };  // NaN on most of the grid
    bad.F = [](double t) { return t; };
    CHECK_THROWS_AS(check_hypotheses(bad, 2.0), EvaluationFailure);
}

TEST_CASE("find_reaction resolves parametric names") {
    CHECK(find_reaction("power:0.5", 2.0).F(1.0) == Catch::Approx(2.0 / 3.0));
    CHECK(find_reaction("eigen:19.7", 3.0).f(2.0) == Catch::Approx(19.7 * 4.0));
    CHECK(find_reaction("scaled:36:entropy-A", 2.0).f(1.0) ==
          Catch::Approx(36.0 * (std::log(2.0) + 0.5)));
    CHECK_THROWS_AS(find_reaction("nope", 2.0), std::invalid_argument);
}
