#include "mmfg/minor_solver.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace mmfg {

namespace {

std::size_t cells_up_to(const std::vector<std::size_t>& slice_sizes, int n_minor, int t) {
    std::size_t n = 0;
    for (int k = 0; k < t; ++k) n += slice_sizes[k] * n_minor;
    return n;
}

/// Initial joint law over (x, root node).
double initial_joint(const Scenario& s, const PathSpace& space, int node, int x) {
    return s.initial_minor[x] * s.initial_major[space.node(0, node).history[0]];
}

}  // namespace

std::size_t LinearSystem::mu_var(int t, int node, int x) const {
    return cells_up_to(slice_sizes, n_minor, t) + static_cast<std::size_t>(node) * n_minor + x;
}

std::size_t LinearSystem::m_var(int t, int node, int x) const {
    std::size_t mu_total = cells_up_to(slice_sizes, n_minor, horizon + 1);
    return mu_total + cells_up_to(slice_sizes, n_minor, t) +
           static_cast<std::size_t>(node) * n_minor + x;
}

LinearSystem assemble_constraints(const Scenario& s, const PathSpace& space,
                                  const MeanFieldFlow& m, const MajorPolicy& alpha) {
    check_flow_shape(m, space, s.n_minor(), false);
    check_policy_shape(alpha, space, s.actions.size());

    LinearSystem sys;
    sys.horizon = space.horizon;
    sys.n_minor = s.n_minor();
    sys.slice_sizes.resize(space.horizon + 1);
    for (int t = 0; t <= space.horizon; ++t) sys.slice_sizes[t] = space.slice_size(t);

    const std::size_t n_rows = cells_up_to(sys.slice_sizes, sys.n_minor, space.horizon + 1);
    const std::size_t n_cols = n_rows + cells_up_to(sys.slice_sizes, sys.n_minor, space.horizon);
    sys.lp.rows = n_rows;
    sys.lp.cols = n_cols;
    sys.lp.a.assign(n_rows, Vec(n_cols, 0.0));
    sys.lp.b.assign(n_rows, 0.0);
    sys.lp.c.assign(n_cols, 0.0);

    // t = 0: stopped + active = initial joint law
    for (std::size_t u = 0; u < space.slice_size(0); ++u) {
        for (int x = 0; x < sys.n_minor; ++x) {
            std::size_t r = sys.row_of(0, static_cast<int>(u), x);
            sys.lp.a[r][sys.mu_var(0, u, x)] = 1.0;
            sys.lp.a[r][sys.m_var(0, u, x)] = 1.0;
            sys.lp.b[r] = initial_joint(s, space, static_cast<int>(u), x);
        }
    }
    // arrivals at t+1: stopped + active - transported active mass = 0
    for (int t = 0; t < space.horizon; ++t) {
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            const int cur = space.node(t, u).history.back();
            Vec feats = compute_features(s.features, s.minor_grid, m.at(t, u));
            Vec pi0 = lifted_major_row(s, space, t, static_cast<int>(u), alpha.weights[t][u], feats);
            const auto& kids = space.children[t][u];
            for (int x = 0; x < sys.n_minor; ++x) {
                Vec prow = evaluate_minor_kernel(s, t, x, cur, feats);
                std::size_t col = sys.m_var(t, u, x);
                for (std::size_t c = 0; c < kids.size(); ++c) {
                    if (pi0[c] == 0.0) continue;
                    for (int xn = 0; xn < sys.n_minor; ++xn) {
                        if (prow[xn] == 0.0) continue;
                        std::size_t r = sys.row_of(t + 1, kids[c].first, xn);
                        sys.lp.a[r][col] -= prow[xn] * pi0[c];
                    }
                }
            }
        }
        for (std::size_t u = 0; u < space.slice_size(t + 1); ++u) {
            for (int x = 0; x < sys.n_minor; ++x) {
                std::size_t r = sys.row_of(t + 1, static_cast<int>(u), x);
                sys.lp.a[r][sys.mu_var(t + 1, u, x)] = 1.0;
                if (t + 1 < space.horizon) sys.lp.a[r][sys.m_var(t + 1, u, x)] = 1.0;
            }
        }
    }
    sys.basis.resize(n_rows);
    std::iota(sys.basis.begin(), sys.basis.end(), 0);
    return sys;
}

Vec minor_objective(const Scenario& s, const PathSpace& space, const MeanFieldFlow& mu,
                    const MeanFieldFlow& m, const LinearSystem& sys) {
    check_flow_shape(mu, space, s.n_minor(), true);
    Vec c(sys.lp.cols, 0.0);
    for (int t = 0; t <= space.horizon; ++t) {
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            const int cur = space.node(t, u).history.back();
            Vec gf = compute_features(s.features, s.minor_grid, mu.at(t, u));
            for (int x = 0; x < sys.n_minor; ++x)
                c[sys.mu_var(t, static_cast<int>(u), x)] = minor_stopping_reward(s, t, x, cur, gf);
            if (t < space.horizon) {
                Vec ff = compute_features(s.features, s.minor_grid, m.at(t, u));
                for (int x = 0; x < sys.n_minor; ++x)
                    c[sys.m_var(t, static_cast<int>(u), x)] = minor_running_reward(s, t, x, cur, ff);
            }
        }
    }
    return c;
}

LpFlowSolution solve_lp(const LinearSystem& sys, const Vec& objective, const PathSpace& space) {
    if (objective.size() != sys.lp.cols) throw DimensionMismatch("objective length mismatch");
    LinearProgram lp = sys.lp;
    lp.c = objective;
    LpSolution raw = solve_lp_standard(lp, sys.basis);

    LpFlowSolution out;
    out.value = raw.value;
    out.iterations = raw.iterations;
    out.flow = OccupationFlow::zeros(space, sys.n_minor);
    for (int t = 0; t <= space.horizon; ++t)
        for (std::size_t u = 0; u < space.slice_size(t); ++u)
            for (int x = 0; x < sys.n_minor; ++x)
                out.flow.mu_tilde[t][u][x] = raw.x[sys.mu_var(t, static_cast<int>(u), x)];
    for (int t = 0; t < space.horizon; ++t)
        for (std::size_t u = 0; u < space.slice_size(t); ++u)
            for (int x = 0; x < sys.n_minor; ++x)
                out.flow.m_tilde[t][u][x] = raw.x[sys.m_var(t, static_cast<int>(u), x)];
    return out;
}

DpSolution solve_dp(const Scenario& s, const PathSpace& space, const MeanFieldFlow& mu,
                    const MeanFieldFlow& m, const MajorPolicy& alpha, double tie_q,
                    double tie_tol) {
    check_flow_shape(mu, space, s.n_minor(), true);
    check_flow_shape(m, space, s.n_minor(), false);
    check_policy_shape(alpha, space, s.actions.size());
    if (tie_q < 0.0 || tie_q > 1.0) throw ValidationError("tie parameter must lie in [0,1]");
    const int S = s.n_minor();

    DpSolution sol;
    sol.value.w.resize(space.horizon + 1);
    // stop values and continuation values kept separately for the tie split
    std::vector<std::vector<Vec>> stop_val(space.horizon + 1), cont_val(space.horizon);

    double wmax = 0.0;
    for (int t = space.horizon; t >= 0; --t) {
        sol.value.w[t].assign(space.slice_size(t), Vec(S, 0.0));
        stop_val[t].assign(space.slice_size(t), Vec(S, 0.0));
        if (t < space.horizon) cont_val[t].assign(space.slice_size(t), Vec(S, 0.0));
        util::parallel_for(space.slice_size(t), [&](std::size_t u) {
            const int cur = space.node(t, u).history.back();
            Vec gf = compute_features(s.features, s.minor_grid, mu.at(t, u));
            for (int x = 0; x < S; ++x)
                stop_val[t][u][x] = minor_stopping_reward(s, t, x, cur, gf);
            if (t == space.horizon) {
                sol.value.w[t][u] = stop_val[t][u];
                return;
            }
            Vec ff = compute_features(s.features, s.minor_grid, m.at(t, u));
            Vec pi0 = lifted_major_row(s, space, t, static_cast<int>(u), alpha.weights[t][u], ff);
            const auto& kids = space.children[t][u];
            for (int x = 0; x < S; ++x) {
                double cont = minor_running_reward(s, t, x, cur, ff);
                Vec prow = evaluate_minor_kernel(s, t, x, cur, ff);
                for (std::size_t c = 0; c < kids.size(); ++c) {
                    if (pi0[c] == 0.0) continue;
                    double inner = 0.0;
                    for (int xn = 0; xn < S; ++xn)
                        inner += prow[xn] * sol.value.w[t + 1][kids[c].first][xn];
                    cont += pi0[c] * inner;
                }
                cont_val[t][u][x] = cont;
                sol.value.w[t][u][x] = std::max(stop_val[t][u][x], cont);
            }
        });
        for (const auto& cell : sol.value.w[t])
            for (double v : cell) wmax = std::max(wmax, std::fabs(v));
    }
    const double band = tie_tol >= 0.0 ? tie_tol : 1e-9 * (1.0 + wmax);

    // forward split of the population mass
    sol.flow = OccupationFlow::zeros(space, S);
    std::vector<Vec> arriving(space.slice_size(0), Vec(S, 0.0));
    for (std::size_t u = 0; u < space.slice_size(0); ++u)
        for (int x = 0; x < S; ++x) arriving[u][x] = initial_joint(s, space, static_cast<int>(u), x);

    for (int t = 0; t <= space.horizon; ++t) {
        std::vector<Vec> next;
        if (t < space.horizon) next.assign(space.slice_size(t + 1), Vec(S, 0.0));
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            const int cur = space.node(t, u).history.back();
            Vec ff = t < space.horizon
                         ? compute_features(s.features, s.minor_grid, m.at(t, u))
                         : Vec{};
            Vec pi0 = t < space.horizon
                          ? lifted_major_row(s, space, t, static_cast<int>(u), alpha.weights[t][u], ff)
                          : Vec{};
            for (int x = 0; x < S; ++x) {
                double mass = arriving[u][x];
                double frac;
                if (t == space.horizon) {
                    frac = 1.0;
                } else {
                    double diff = stop_val[t][u][x] - cont_val[t][u][x];
                    frac = diff > band ? 1.0 : (diff < -band ? 0.0 : tie_q);
                }
                sol.flow.mu_tilde[t][u][x] = frac * mass;
                if (t == space.horizon) continue;
                double stay = (1.0 - frac) * mass;
                sol.flow.m_tilde[t][u][x] = stay;
                if (stay == 0.0) continue;
                Vec prow = evaluate_minor_kernel(s, t, x, cur, ff);
                const auto& kids = space.children[t][u];
                for (std::size_t c = 0; c < kids.size(); ++c) {
                    if (pi0[c] == 0.0) continue;
                    for (int xn = 0; xn < S; ++xn)
                        next[kids[c].first][xn] += stay * prow[xn] * pi0[c];
                }
            }
        }
        if (t < space.horizon) arriving = std::move(next);
    }
    return sol;
}

double minor_reward(const Scenario& s, const PathSpace& space, const OccupationFlow& flow,
                    const MeanFieldFlow& mu, const MeanFieldFlow& m) {
    check_occupation_shape(flow, space, s.n_minor());
    double total = 0.0;
    for (int t = 0; t <= space.horizon; ++t) {
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            const int cur = space.node(t, u).history.back();
            Vec gf = compute_features(s.features, s.minor_grid, mu.at(t, u));
            for (int x = 0; x < s.n_minor(); ++x)
                total += flow.mu_tilde[t][u][x] * minor_stopping_reward(s, t, x, cur, gf);
            if (t < space.horizon) {
                Vec ff = compute_features(s.features, s.minor_grid, m.at(t, u));
                for (int x = 0; x < s.n_minor(); ++x)
                    total += flow.m_tilde[t][u][x] * minor_running_reward(s, t, x, cur, ff);
            }
        }
    }
    return total;
}

double constraint_residual(const Scenario& s, const PathSpace& space, const OccupationFlow& flow,
                           const MeanFieldFlow& m, const MajorPolicy& alpha) {
    check_occupation_shape(flow, space, s.n_minor());
    const int S = s.n_minor();
    double worst = 0.0;
    for (std::size_t u = 0; u < space.slice_size(0); ++u)
        for (int x = 0; x < S; ++x)
            worst = std::max(worst, std::fabs(flow.mu_tilde[0][u][x] + flow.m_tilde[0][u][x] -
                                              initial_joint(s, space, static_cast<int>(u), x)));
    for (int t = 0; t < space.horizon; ++t) {
        std::vector<Vec> transported(space.slice_size(t + 1), Vec(S, 0.0));
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            const int cur = space.node(t, u).history.back();
            Vec ff = compute_features(s.features, s.minor_grid, m.at(t, u));
            Vec pi0 = lifted_major_row(s, space, t, static_cast<int>(u), alpha.weights[t][u], ff);
            const auto& kids = space.children[t][u];
            for (int x = 0; x < S; ++x) {
                double mass = flow.m_tilde[t][u][x];
                if (mass == 0.0) continue;
                Vec prow = evaluate_minor_kernel(s, t, x, cur, ff);
                for (std::size_t c = 0; c < kids.size(); ++c)
                    for (int xn = 0; xn < S; ++xn)
                        transported[kids[c].first][xn] += mass * prow[xn] * pi0[c];
            }
        }
        for (std::size_t u = 0; u < space.slice_size(t + 1); ++u) {
            for (int x = 0; x < S; ++x) {
                double lhs = flow.mu_tilde[t + 1][u][x] +
                             (t + 1 < space.horizon ? flow.m_tilde[t + 1][u][x] : 0.0);
                worst = std::max(worst, std::fabs(lhs - transported[u][x]));
            }
        }
    }
    for (const auto& slice : flow.mu_tilde)
        for (const auto& cell : slice)
            for (double v : cell) worst = std::max(worst, std::max(0.0, -v));
    for (const auto& slice : flow.m_tilde)
        for (const auto& cell : slice)
            for (double v : cell) worst = std::max(worst, std::max(0.0, -v));
    return worst;
}

double best_response_gap(const Scenario& s, const PathSpace& space, const OccupationFlow& flow,
                         const MeanFieldFlow& mu, const MeanFieldFlow& m,
                         const MajorPolicy& alpha) {
    double resid = constraint_residual(s, space, flow, m, alpha);
    if (resid > 1e-6) {
        std::ostringstream os;
        os << "candidate flow violates the occupation constraints (residual " << resid << ")";
        throw InfeasibleFlow(os.str());
    }
    LinearSystem sys = assemble_constraints(s, space, m, alpha);
    Vec obj = minor_objective(s, space, mu, m, sys);
    LpFlowSolution best = solve_lp(sys, obj, space);
    return best.value - minor_reward(s, space, flow, mu, m);
}

std::pair<double, double> occupation_invariants(const PathSpace& space, const OccupationFlow& flow) {
    double stopped = 0.0;
    double worst_balance = 0.0;
    double cum = 0.0;
    for (int t = 0; t <= space.horizon; ++t) {
        double mu_t = 0.0;
        for (const auto& cell : flow.mu_tilde[t]) mu_t += util::sum(cell);
        cum += mu_t;
        if (t < space.horizon) {
            double m_t = 0.0;
            for (const auto& cell : flow.m_tilde[t]) m_t += util::sum(cell);
            worst_balance = std::max(worst_balance, std::fabs(m_t + cum - 1.0));
        }
    }
    stopped = cum;
    return {std::fabs(stopped - 1.0), worst_balance};
}

OccupationFlow flow_from_stop_profile(const Scenario& s, const PathSpace& space,
                                      const MeanFieldFlow& m, const MajorPolicy& alpha,
                                      const std::vector<Vec>& sigma) {
    const int S = s.n_minor();
    OccupationFlow flow = OccupationFlow::zeros(space, S);
    std::vector<Vec> arriving(space.slice_size(0), Vec(S, 0.0));
    for (std::size_t u = 0; u < space.slice_size(0); ++u)
        for (int x = 0; x < S; ++x) arriving[u][x] = initial_joint(s, space, static_cast<int>(u), x);
    for (int t = 0; t <= space.horizon; ++t) {
        std::vector<Vec> next;
        if (t < space.horizon) next.assign(space.slice_size(t + 1), Vec(S, 0.0));
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            double frac = t == space.horizon ? 1.0 : sigma[t][u];
            const int cur = space.node(t, u).history.back();
            Vec ff, pi0;
            if (t < space.horizon) {
                ff = compute_features(s.features, s.minor_grid, m.at(t, u));
                pi0 = lifted_major_row(s, space, t, static_cast<int>(u), alpha.weights[t][u], ff);
            }
            for (int x = 0; x < S; ++x) {
                double mass = arriving[u][x];
                flow.mu_tilde[t][u][x] = frac * mass;
                if (t == space.horizon) continue;
                double stay = (1.0 - frac) * mass;
                flow.m_tilde[t][u][x] = stay;
                if (stay == 0.0) continue;
                Vec prow = evaluate_minor_kernel(s, t, x, cur, ff);
                const auto& kids = space.children[t][u];
                for (std::size_t c = 0; c < kids.size(); ++c)
                    for (int xn = 0; xn < S; ++xn)
                        next[kids[c].first][xn] += stay * prow[xn] * pi0[c];
            }
        }
        if (t < space.horizon) arriving = std::move(next);
    }
    return flow;
}

std::string dump_linear_system(const LinearSystem& sys, const Vec& objective) {
    std::ostringstream os;
    os << "ROWS " << sys.lp.rows << " COLS " << sys.lp.cols << "\n";
    auto var_name = [&](std::size_t j) {
        std::ostringstream vn;
        std::size_t mu_total = 0;
        for (int t = 0; t <= sys.horizon; ++t) mu_total += sys.slice_sizes[t] * sys.n_minor;
        if (j < mu_total) {
            std::size_t rem = j;
            for (int t = 0; t <= sys.horizon; ++t) {
                std::size_t n = sys.slice_sizes[t] * sys.n_minor;
                if (rem < n) {
                    vn << "mu[" << t << "][u=" << rem / sys.n_minor << "][x=" << rem % sys.n_minor << "]";
                    return vn.str();
                }
                rem -= n;
            }
        }
        std::size_t rem = j - mu_total;
        for (int t = 0; t < sys.horizon; ++t) {
            std::size_t n = sys.slice_sizes[t] * sys.n_minor;
            if (rem < n) {
                vn << "m[" << t << "][u=" << rem / sys.n_minor << "][x=" << rem % sys.n_minor << "]";
                return vn.str();
            }
            rem -= n;
        }
        return std::string("?");
    };
    os << "MAXIMIZE\n";
    for (std::size_t j = 0; j < sys.lp.cols; ++j)
        if (objective[j] != 0.0)
            os << "  " << util::format_double(objective[j]) << " " << var_name(j) << "\n";
    os << "SUBJECT TO (equalities, vars >= 0)\n";
    for (std::size_t r = 0; r < sys.lp.rows; ++r) {
        os << "  R" << r << ":";
        for (std::size_t j = 0; j < sys.lp.cols; ++j)
            if (sys.lp.a[r][j] != 0.0)
                os << " " << util::format_double(sys.lp.a[r][j]) << "*" << var_name(j);
        os << " = " << util::format_double(sys.lp.b[r]) << "\n";
    }
    return os.str();
}

}  // namespace mmfg
