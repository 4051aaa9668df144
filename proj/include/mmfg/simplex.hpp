#pragma once

#include <vector>

#include "mmfg/errors.hpp"
#include "mmfg/util.hpp"

namespace mmfg {

/// maximize c'x subject to Ax = b, x >= 0, with b >= 0.
struct LinearProgram {
    std::size_t rows = 0, cols = 0;
    std::vector<Vec> a;  // [row][col], dense
    Vec b;
    Vec c;
};

struct LpSolution {
    Vec x;
    double value = 0.0;
    int iterations = 0;
    std::vector<int> basis;
};

/// Dense revised simplex with an explicit basis inverse. `basis` must list,
/// per row, a column whose constraint coefficients are the unit vector for
/// that row (our occupation LPs and slack-form test LPs both provide one).
/// Runs Dantzig pricing first and falls back to Bland's rule after
/// `dantzig_cap` iterations so degenerate problems cannot cycle. Throws
/// NumericalFailure past `max_iterations`.
LpSolution solve_lp_standard(const LinearProgram& lp, std::vector<int> basis,
                             int dantzig_cap = -1, int max_iterations = -1);

}  // namespace mmfg
