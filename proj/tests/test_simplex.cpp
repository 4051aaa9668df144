#include <doctest.h>

#include <numeric>

#include "mmfg/simplex.hpp"

using namespace mmfg;

namespace {

/// max c'x s.t. Ax <= b, x >= 0 converted to standard form with slacks.
LpSolution solve_inequality(const std::vector<Vec>& a, const Vec& b, const Vec& c) {
    LinearProgram lp;
    lp.rows = a.size();
    lp.cols = c.size() + a.size();
    lp.a.assign(lp.rows, Vec(lp.cols, 0.0));
    lp.b = b;
    lp.c.assign(lp.cols, 0.0);
    for (std::size_t i = 0; i < lp.rows; ++i) {
        for (std::size_t j = 0; j < c.size(); ++j) lp.a[i][j] = a[i][j];
        lp.a[i][c.size() + i] = 1.0;
    }
    for (std::size_t j = 0; j < c.size(); ++j) lp.c[j] = c[j];
    std::vector<int> basis(lp.rows);
    std::iota(basis.begin(), basis.end(), static_cast<int>(c.size()));
    return solve_lp_standard(lp, basis);
}

}  // namespace

TEST_CASE("textbook two-variable program") {
    // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
    auto sol = solve_inequality({{1, 0}, {0, 2}, {3, 2}}, {4, 12, 18}, {3, 5});
    CHECK(sol.value == doctest::Approx(36.0).epsilon(1e-12));
    CHECK(sol.x[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sol.x[1] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("binding equality mix") {
    // max x + y s.t. x + y <= 1, x <= 0.3
    auto sol = solve_inequality({{1, 1}, {1, 0}}, {1, 0.3}, {1, 1});
    CHECK(sol.value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Beale's degenerate program terminates under the Bland fallback") {
    // classic cycling example; the optimum is 1/20
    std::vector<Vec> a{{0.25, -60.0, -1.0 / 25.0, 9.0},
                       {0.5, -90.0, -1.0 / 50.0, 3.0},
                       {0.0, 0.0, 1.0, 0.0}};
    Vec b{0.0, 0.0, 1.0};
    Vec c{0.75, -150.0, 0.02, -6.0};
    auto sol = solve_inequality(a, b, c);
    CHECK(sol.value == doctest::Approx(0.05).epsilon(1e-10));
}

TEST_CASE("fully degenerate objective returns a feasible optimum") {
    // every feasible point is optimal; the solver must stop immediately
    auto sol = solve_inequality({{1, 1}}, {1}, {0, 0});
    CHECK(sol.value == 0.0);
    CHECK(sol.iterations <= 2);
}

TEST_CASE("an unbounded direction is reported") {
    LinearProgram lp;
    lp.rows = 1;
    lp.cols = 3;
    lp.a = {{1.0, -1.0, 1.0}};  // x0 - x1 + s = 1; pushing x1 is unbounded
    lp.b = {1.0};
    lp.c = {0.0, 1.0, 0.0};
    CHECK_THROWS_AS(solve_lp_standard(lp, {2}), NumericalFailure);
}

TEST_CASE("a malformed start basis is rejected") {
    LinearProgram lp;
    lp.rows = 1;
    lp.cols = 2;
    lp.a = {{2.0, 1.0}};
    lp.b = {1.0};
    lp.c = {1.0, 0.0};
    CHECK_THROWS_AS(solve_lp_standard(lp, {0}), DimensionMismatch);
}
