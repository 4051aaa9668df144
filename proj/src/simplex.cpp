#include "mmfg/simplex.hpp"

#include <cmath>

namespace mmfg {

namespace {
constexpr double kReducedCostTol = 1e-9;
constexpr double kPivotTol = 1e-11;
}

LpSolution solve_lp_standard(const LinearProgram& lp, std::vector<int> basis,
                             int dantzig_cap, int max_iterations) {
    const std::size_t m = lp.rows, n = lp.cols;
    if (lp.a.size() != m || lp.b.size() != m || lp.c.size() != n || basis.size() != m)
        throw DimensionMismatch("linear program shape mismatch");
    for (std::size_t i = 0; i < m; ++i) {
        if (lp.b[i] < -1e-12) throw DimensionMismatch("standard form requires b >= 0");
        for (std::size_t r = 0; r < m; ++r) {
            double want = (r == i) ? 1.0 : 0.0;
            if (std::fabs(lp.a[r][basis[i]] - want) > 1e-12)
                throw DimensionMismatch("initial basis columns must form the identity");
        }
    }
    if (dantzig_cap < 0) dantzig_cap = 200 + 50 * static_cast<int>(m);
    if (max_iterations < 0) max_iterations = 20000 + 200 * static_cast<int>(m);

    // basis inverse and basic solution, updated in place on each pivot
    std::vector<Vec> binv(m, Vec(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) binv[i][i] = 1.0;
    Vec xb = lp.b;
    std::vector<char> is_basic(n, 0);
    for (int j : basis) is_basic[j] = 1;

    Vec y(m), col(m);
    int iter = 0;
    while (true) {
        if (++iter > max_iterations)
            throw NumericalFailure("simplex exceeded the iteration cap");
        const bool bland = iter > dantzig_cap;

        // y = c_B' * Binv
        for (std::size_t r = 0; r < m; ++r) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += lp.c[basis[i]] * binv[i][r];
            y[r] = s;
        }
        // pricing
        int enter = -1;
        double best = kReducedCostTol;
        for (std::size_t j = 0; j < n; ++j) {
            if (is_basic[j]) continue;
            double d = lp.c[j];
            for (std::size_t r = 0; r < m; ++r) d -= y[r] * lp.a[r][j];
            if (d > best) {
                enter = static_cast<int>(j);
                if (bland) break;  // smallest improving index
                best = d;
            }
        }
        if (enter < 0) break;  // optimal

        // col = Binv * A_enter
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t r = 0; r < m; ++r) s += binv[i][r] * lp.a[r][enter];
            col[i] = s;
        }
        // ratio test; smallest-index ties keep Bland's rule valid
        int leave = -1;
        double ratio = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (col[i] <= kPivotTol) continue;
            double r = xb[i] / col[i];
            if (leave < 0 || r < ratio - 1e-15 ||
                (std::fabs(r - ratio) <= 1e-15 && basis[i] < basis[leave])) {
                leave = static_cast<int>(i);
                ratio = r;
            }
        }
        if (leave < 0) throw NumericalFailure("unbounded linear program");

        // pivot: eliminate col from every other row
        double piv = col[leave];
        for (std::size_t r = 0; r < m; ++r) binv[leave][r] /= piv;
        xb[leave] /= piv;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == static_cast<std::size_t>(leave) || col[i] == 0.0) continue;
            double f = col[i];
            for (std::size_t r = 0; r < m; ++r) binv[i][r] -= f * binv[leave][r];
            xb[i] -= f * xb[leave];
            if (xb[i] < 0.0 && xb[i] > -1e-12) xb[i] = 0.0;
        }
        is_basic[basis[leave]] = 0;
        is_basic[enter] = 1;
        basis[leave] = enter;
    }

    LpSolution sol;
    sol.x.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) sol.x[basis[i]] = std::max(0.0, xb[i]);
    sol.value = 0.0;
    for (std::size_t j = 0; j < n; ++j) sol.value += lp.c[j] * sol.x[j];
    sol.iterations = iter;
    sol.basis = std::move(basis);
    return sol;
}

}  // namespace mmfg
