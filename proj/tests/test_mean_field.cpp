#include <doctest.h>

#include "mmfg/builtins.hpp"
#include "mmfg/mean_field.hpp"
#include "mmfg/minor_solver.hpp"
#include "support/instances.hpp"

using namespace mmfg;

namespace {

/// Two-state major chain with every kernel row equal to `row`.
Scenario coin_scenario(Vec row, int horizon) {
    util::Rng rng(99);
    Scenario s = testsupport::random_scenario(rng, 1, 2, horizon, false, true);
    for (int t = 0; t < horizon; ++t)
        for (int s0 = 0; s0 < 2; ++s0)
            for (int a = 0; a < 2; ++a)
                for (int j = 0; j < 2; ++j)
                    s.major_kernel.base[s.idx_major_kernel(t, s0, a, j)] = row[j];
    s.initial_major = {0.5, 0.5};
    validate(s);
    return s;
}

}  // namespace

TEST_CASE("a deterministic kernel yields a point-mass marginal") {
    Scenario s = coin_scenario({1.0, 0.0}, 2);
    s.initial_major = {1.0, 0.0};
    PathSpace sp = build_path_space(s);
    MajorPolicy a = MajorPolicy::uniform(sp, 2, 2.0);
    MeanFieldFlow m = MeanFieldFlow::uniform(sp, 1, false);
    MajorMarginal p = marginal_law(s, sp, a, m);
    for (int t = 0; t <= 2; ++t) {
        double mass_on_one = 0.0;
        int hits = 0;
        for (std::size_t u = 0; u < sp.slice_size(t); ++u)
            if (p.p[t][u] > 0.0) {
                ++hits;
                mass_on_one = p.p[t][u];
            }
        CHECK(hits == 1);
        CHECK(mass_on_one == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("fair-coin kernel spreads the one-step marginal uniformly") {
    Scenario s = coin_scenario({0.5, 0.5}, 1);
    PathSpace sp = build_path_space(s);
    MajorPolicy a = MajorPolicy::uniform(sp, 2, 2.0);
    MeanFieldFlow m = MeanFieldFlow::uniform(sp, 1, false);
    MajorMarginal p = marginal_law(s, sp, a, m);
    REQUIRE(sp.slice_size(1) == 4);
    for (std::size_t u = 0; u < 4; ++u)
        CHECK(p.p[1][u] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("property: slice sums stay 1 under random scenarios") {
    util::Rng rng(21);
    for (int rep = 0; rep < 10; ++rep) {
        Scenario s = testsupport::random_scenario(rng, 2, 2, 3, true, true);
        PathSpace sp = build_path_space(s);
        MajorPolicy a = testsupport::random_policy(rng, s, sp);
        MeanFieldFlow m = testsupport::random_flow(rng, sp, s.n_minor(), false);
        MajorMarginal p = marginal_law(s, sp, a, m);
        for (int t = 0; t <= sp.horizon; ++t)
            CHECK(util::sum(p.p[t]) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("disintegrating a product measure recovers the factor") {
    Scenario s = make_builtin("decoupled-toy");
    PathSpace sp = build_path_space(s);
    MajorPolicy a = MajorPolicy::uniform(sp, 2, 2.0);
    MeanFieldFlow m = MeanFieldFlow::uniform(sp, 2, false);
    MajorMarginal p = marginal_law(s, sp, a, m);

    Vec nu{0.3, 0.45};  // fixed subprobability factor
    OccupationFlow joint = OccupationFlow::zeros(sp, 2);
    for (int t = 0; t <= sp.horizon; ++t)
        for (std::size_t u = 0; u < sp.slice_size(t); ++u)
            for (int x = 0; x < 2; ++x) joint.mu_tilde[t][u][x] = p.p[t][u] * nu[x];

    MeanFieldFlow fb_mu = MeanFieldFlow::uniform(sp, 2, true);
    MeanFieldFlow fb_m = MeanFieldFlow::uniform(sp, 2, false);
    auto [mu, m2] = disintegrate(sp, joint, p, fb_mu, fb_m);
    for (int t = 0; t <= sp.horizon; ++t)
        for (std::size_t u = 0; u < sp.slice_size(t); ++u)
            if (p.p[t][u] > kSupportEps)
                for (int x = 0; x < 2; ++x)
                    CHECK(mu.at(t, u)[x] == doctest::Approx(nu[x]).epsilon(1e-14));
}

TEST_CASE("unreached nodes copy the fallback") {
    Scenario s = make_builtin("paper-ex-2.1");
    PathSpace sp = build_path_space(s);
    MajorPolicy never = stop_policy_never(s, sp);
    MeanFieldFlow m = MeanFieldFlow::uniform(sp, 1, false);
    MajorMarginal p = marginal_law(s, sp, never, m);

    MeanFieldFlow fb_mu = MeanFieldFlow::uniform(sp, 1, true);
    fb_mu.at(1, 1) = Vec{0.123};  // distinguishable marker
    OccupationFlow joint = OccupationFlow::zeros(sp, 1);
    joint.mu_tilde[0][0][0] = 1.0;
    auto [mu, m2] = disintegrate(sp, joint, p, fb_mu, MeanFieldFlow::uniform(sp, 1, false));

    // under never-stop the exit branch has probability zero
    std::size_t exited = sp.node(1, 0).history.back() == 1 ? 0 : 1;
    CHECK(p.p[1][exited] == 0.0);
    CHECK(mu.at(1, exited)[0] == 0.123);
}

TEST_CASE("property: reconstruction round-trip on random feasible flows") {
    util::Rng rng(22);
    for (int rep = 0; rep < 50; ++rep) {
        Scenario s = testsupport::random_scenario(rng, rng.uniform_int(1, 3),
                                                  rng.uniform_int(1, 2), rng.uniform_int(1, 3),
                                                  false, true);
        PathSpace sp = build_path_space(s);
        MajorPolicy a = testsupport::random_policy(rng, s, sp);
        MeanFieldFlow m = MeanFieldFlow::uniform(sp, s.n_minor(), false);
        OccupationFlow flow =
            flow_from_stop_profile(s, sp, m, a, testsupport::random_stop_profile(rng, sp));
        MajorMarginal p = marginal_law(s, sp, a, m);
        auto [mu, mm] = disintegrate(sp, flow, p, MeanFieldFlow::uniform(sp, s.n_minor(), true),
                                     MeanFieldFlow::uniform(sp, s.n_minor(), false));
        CHECK(consistency_residual(sp, mu, mm, flow, p) <= 1e-10);
    }
}

TEST_CASE("joint mass above the marginal is rejected") {
    Scenario s = make_builtin("paper-ex-2.1");
    PathSpace sp = build_path_space(s);
    MajorPolicy never = stop_policy_never(s, sp);
    MeanFieldFlow m = MeanFieldFlow::uniform(sp, 1, false);
    MajorMarginal p = marginal_law(s, sp, never, m);
    OccupationFlow joint = OccupationFlow::zeros(sp, 1);
    std::size_t exited = sp.node(1, 0).history.back() == 1 ? 0 : 1;
    joint.mu_tilde[1][exited][0] = 0.5;  // exceeds p = 0 there
    CHECK_THROWS_AS(disintegrate(sp, joint, p, MeanFieldFlow::uniform(sp, 1, true),
                                 MeanFieldFlow::uniform(sp, 1, false)),
                    MassMismatch);
}

TEST_CASE("consistency residual measures joint-scale L1 gaps") {
    Scenario s = coin_scenario({0.5, 0.5}, 1);
    PathSpace sp = build_path_space(s);
    MajorPolicy a = MajorPolicy::uniform(sp, 2, 2.0);
    MeanFieldFlow m = MeanFieldFlow::uniform(sp, 1, false);
    MajorMarginal p = marginal_law(s, sp, a, m);
    CHECK(p.p[0][0] == doctest::Approx(0.5));

    OccupationFlow joint = OccupationFlow::zeros(sp, 1);
    MeanFieldFlow mu = MeanFieldFlow::zeros(sp, 1, true);
    MeanFieldFlow mm = MeanFieldFlow::zeros(sp, 1, false);
    // perturb the conditional by +0.1 at a node with p = 0.5
    mu.at(0, 0)[0] = 0.1;
    double resid = consistency_residual(sp, mu, mm, joint, p);
    CHECK(resid == doctest::Approx(0.05).epsilon(1e-14));

    // perturbations on zero-probability nodes are invisible
    MajorMarginal p0 = p;
    p0.p[0][0] = 0.0;
    CHECK(consistency_residual(sp, mu, mm, joint, p0) == 0.0);
}

TEST_CASE("flow distance: identities and the triangle inequality") {
    Scenario s = make_builtin("decoupled-toy");
    PathSpace sp = build_path_space(s);
    MeanFieldFlow a = MeanFieldFlow::uniform(sp, 2, true);
    CHECK(flow_distance(a, a) == 0.0);

    MeanFieldFlow b = a;
    b.at(1, 0)[0] += 0.2;
    CHECK(flow_distance(a, b) == doctest::Approx(0.2).epsilon(1e-15));

    util::Rng rng(23);
    for (int rep = 0; rep < 30; ++rep) {
        MeanFieldFlow x = testsupport::random_flow(rng, sp, 2, true);
        MeanFieldFlow y = testsupport::random_flow(rng, sp, 2, true);
        MeanFieldFlow z = testsupport::random_flow(rng, sp, 2, true);
        CHECK(flow_distance(x, z) <= flow_distance(x, y) + flow_distance(y, z) + 1e-12);
    }

    MeanFieldFlow wrong = MeanFieldFlow::uniform(sp, 2, false);
    CHECK_THROWS_AS(flow_distance(a, wrong), ShapeMismatch);
}

TEST_CASE("aggregate decomposition: active plus stopped mass is 1") {
    util::Rng rng(24);
    Scenario s = testsupport::random_scenario(rng, 2, 2, 3, true, true);
    PathSpace sp = build_path_space(s);
    MajorPolicy a = testsupport::random_policy(rng, s, sp);
    MeanFieldFlow m = MeanFieldFlow::uniform(sp, 2, false);
    OccupationFlow flow =
        flow_from_stop_profile(s, sp, m, a, testsupport::random_stop_profile(rng, sp));
    MajorMarginal p = marginal_law(s, sp, a, m);
    auto [mu, mm] = disintegrate(sp, flow, p, MeanFieldFlow::uniform(sp, 2, true),
                                 MeanFieldFlow::uniform(sp, 2, false));
    double cumulative_stopped = 0.0;
    for (int t = 0; t < sp.horizon; ++t) {
        for (std::size_t u = 0; u < sp.slice_size(t); ++u)
            cumulative_stopped += util::sum(flow.mu_tilde[t][u]);
        double active = 0.0;
        for (std::size_t u = 0; u < sp.slice_size(t); ++u)
            if (p.p[t][u] > kSupportEps) active += p.p[t][u] * util::sum(mm.at(t, u));
        CHECK(active + cumulative_stopped == doctest::Approx(1.0).epsilon(1e-9));
    }
}
