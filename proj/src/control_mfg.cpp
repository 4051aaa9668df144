#include "mmfg/control_mfg.hpp"

#include <cmath>
#include <sstream>

namespace mmfg {

std::size_t ControlScenario::idx_major_kernel(int t, int s0, int a, int s0n) const {
    std::size_t S0 = major_states.size(), A = major_actions.size();
    return ((static_cast<std::size_t>(t) * S0 + s0) * A + a) * S0 + s0n;
}
std::size_t ControlScenario::idx_minor_kernel(int t, int x, int s0, int a, int xn) const {
    std::size_t S = minor_grid.size(), S0 = major_states.size(), A = minor_actions.size();
    return (((static_cast<std::size_t>(t) * S + x) * S0 + s0) * A + a) * S + xn;
}
std::size_t ControlScenario::idx_major_running(int t, int s0, int a) const {
    std::size_t S0 = major_states.size(), A = major_actions.size();
    return (static_cast<std::size_t>(t) * S0 + s0) * A + a;
}
std::size_t ControlScenario::idx_minor_running(int t, int x, int s0, int a) const {
    std::size_t S = minor_grid.size(), S0 = major_states.size(), A = minor_actions.size();
    return ((static_cast<std::size_t>(t) * S + x) * S0 + s0) * A + a;
}
std::size_t ControlScenario::idx_terminal(int x, int s0) const {
    return static_cast<std::size_t>(x) * major_states.size() + s0;
}

namespace {

constexpr double kRowSumTol = 1e-12;

void check_control_row(const AffineTable& tab, std::size_t offset, std::size_t n,
                       const FeatureSpec& spec, const std::string& name) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += tab.base[offset + j];
    if (std::fabs(s - 1.0) > kRowSumTol)
        throw ValidationError(name + " does not sum to 1 at feature zero");
    for (std::size_t k = 0; k < tab.coef.size(); ++k) {
        double cs = 0.0;
        for (std::size_t j = 0; j < n; ++j) cs += tab.coef[k][offset + j];
        if (std::fabs(cs) > kRowSumTol)
            throw ValidationError(name + ": feature coefficients must sum to 0 per row");
    }
    std::size_t K = spec.box_lo.size();
    std::size_t corners = std::size_t(1) << std::min<std::size_t>(K, 12);
    Vec feats(K);
    for (std::size_t c = 0; c < corners; ++c) {
        for (std::size_t k = 0; k < K; ++k)
            feats[k] = ((c >> k) & 1) ? spec.box_hi[k] : spec.box_lo[k];
        for (std::size_t j = 0; j < n; ++j)
            if (tab.eval(offset + j, feats) < -kRowSumTol)
                throw ValidationError(name + " goes negative inside the feature box");
    }
}

Vec features_sa_of(const ControlScenario& cs, const Vec& sa_mass) {
    // first moment reduces the state marginal
    if (cs.features_sa.kind == FeatureKind::FirstMoment) {
        double m = 0.0;
        for (int x = 0; x < cs.n_minor(); ++x)
            for (int a = 0; a < cs.n_minor_actions(); ++a)
                m += cs.minor_grid[x] * sa_mass[x * cs.n_minor_actions() + a];
        return {m};
    }
    if (cs.features_sa.kind == FeatureKind::TotalMass) return {util::sum(sa_mass)};
    return sa_mass;
}

}  // namespace

void validate(const ControlScenario& cs) {
    if (cs.horizon < 1) throw ValidationError("horizon must be >= 1");
    if (cs.major_states.empty() || cs.minor_grid.empty())
        throw ValidationError("state spaces must be nonempty");
    if (cs.major_actions.size() == 0 || cs.minor_actions.size() == 0)
        throw ValidationError("action spaces must be nonempty");
    const std::size_t S0 = cs.major_states.size(), S = cs.minor_grid.size();
    const std::size_t A0 = cs.major_actions.size(), A1 = cs.minor_actions.size();
    const std::size_t T = static_cast<std::size_t>(cs.horizon);

    int nf_sa = cs.features_sa.dim(S * A1);
    int nf_term = cs.features_term.dim(S);
    if (static_cast<int>(cs.features_sa.box_lo.size()) != nf_sa ||
        static_cast<int>(cs.features_term.box_lo.size()) != nf_term)
        throw ValidationError("feature box dimension mismatch");

    auto expect = [&](const AffineTable& tab, std::size_t flat, const char* what) {
        if (tab.base.size() != flat) throw DimensionMismatch(std::string(what) + " shape mismatch");
        for (const auto& c : tab.coef)
            if (c.size() != flat) throw DimensionMismatch(std::string(what) + " coef shape mismatch");
    };
    expect(cs.major_kernel, T * S0 * A0 * S0, "major_kernel");
    expect(cs.minor_kernel, T * S * S0 * A1 * S, "minor_kernel");
    expect(cs.major_running, T * S0 * A0, "major_running_reward");
    expect(cs.major_terminal, S0, "major_terminal_reward");
    expect(cs.minor_running, T * S * S0 * A1, "minor_running_reward");
    expect(cs.minor_terminal, S * S0, "minor_terminal_reward");

    if (std::fabs(util::sum(cs.initial_major) - 1.0) > kRowSumTol ||
        std::fabs(util::sum(cs.initial_minor) - 1.0) > kRowSumTol)
        throw ValidationError("initial laws must sum to 1");

    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t s0 = 0; s0 < S0; ++s0)
            for (std::size_t a = 0; a < A0; ++a) {
                std::ostringstream os;
                os << "major_kernel[t=" << t << "][s0=" << s0 << "][a=" << a << "]";
                check_control_row(cs.major_kernel, cs.idx_major_kernel(t, s0, a, 0), S0,
                                  cs.features_sa, os.str());
            }
        for (std::size_t x = 0; x < S; ++x)
            for (std::size_t s0 = 0; s0 < S0; ++s0)
                for (std::size_t a = 0; a < A1; ++a) {
                    std::ostringstream os;
                    os << "minor_kernel[t=" << t << "][x=" << x << "][s0=" << s0 << "][a=" << a << "]";
                    check_control_row(cs.minor_kernel, cs.idx_minor_kernel(t, x, s0, a, 0), S,
                                      cs.features_sa, os.str());
                }
    }
}

PathSpace build_control_path_space(const ControlScenario& cs, std::size_t node_budget) {
    return build_path_space_raw(cs.horizon, cs.n_major(), cs.initial_major, false, -1, node_budget);
}

ControlMeanField ControlMeanField::uniform(const ControlScenario& cs, const PathSpace& space) {
    ControlMeanField f;
    f.cells.resize(space.horizon + 1);
    for (int t = 0; t <= space.horizon; ++t) {
        int n = t < space.horizon ? cs.sa_cells() : cs.n_minor();
        f.cells[t].assign(space.slice_size(t), Vec(n, 1.0 / n));
    }
    return f;
}

Vec StateActionFlow::node_marginal(int t) const {
    Vec p(v[t].size(), 0.0);
    for (std::size_t u = 0; u < v[t].size(); ++u) p[u] = util::sum(v[t][u]);
    return p;
}

ControlFieldFeatures features_of(const ControlScenario& cs, const PathSpace& space,
                                 const ControlMeanField& mu) {
    ControlFieldFeatures f;
    f.run.resize(space.horizon);
    for (int t = 0; t < space.horizon; ++t) {
        f.run[t].resize(space.slice_size(t));
        for (std::size_t u = 0; u < space.slice_size(t); ++u)
            f.run[t][u] = features_sa_of(cs, mu.cells[t][u]);
    }
    f.terminal.resize(space.slice_size(space.horizon));
    for (std::size_t u = 0; u < space.slice_size(space.horizon); ++u)
        f.terminal[u] = compute_features(cs.features_term, cs.minor_grid, mu.cells[space.horizon][u]);
    return f;
}

ControlFieldFeatures constant_features(const ControlScenario&, const PathSpace& space,
                                       const Vec& run_phi, const Vec& term_phi) {
    ControlFieldFeatures f;
    f.run.resize(space.horizon);
    for (int t = 0; t < space.horizon; ++t) f.run[t].assign(space.slice_size(t), run_phi);
    f.terminal.assign(space.slice_size(space.horizon), term_phi);
    return f;
}

MajorProblem major_problem_of(const ControlScenario& cs) {
    MajorProblem p;
    p.horizon = cs.horizon;
    p.n_states = cs.n_major();
    p.actions = &cs.major_actions;
    p.initial = cs.initial_major;
    p.f0 = [&cs](int t, int s0, int a, const Vec& f) {
        return cs.major_running.eval(cs.idx_major_running(t, s0, a), f);
    };
    p.p0_row = [&cs](int t, int s0, int a, const Vec& f) {
        Vec row(cs.n_major());
        for (int j = 0; j < cs.n_major(); ++j)
            row[j] = cs.major_kernel.eval(cs.idx_major_kernel(t, s0, a, j), f);
        return row;
    };
    p.g0 = [&cs](int s0, const Vec& f) {
        return cs.major_terminal.eval(static_cast<std::size_t>(s0), f);
    };
    return p;
}

namespace {

Vec pi0_row_control(const ControlScenario& cs, const PathSpace& space, int t, int node,
                    const Vec& alpha_row, const Vec& phi) {
    const auto& kids = space.children[t][node];
    const int cur = space.node(t, node).history.back();
    Vec out(kids.size(), 0.0);
    for (int a = 0; a < static_cast<int>(cs.major_actions.size()); ++a) {
        double w = alpha_row[a] * cs.major_actions.volumes[a];
        if (w == 0.0) continue;
        for (std::size_t c = 0; c < kids.size(); ++c)
            out[c] += w * cs.major_kernel.eval(cs.idx_major_kernel(t, cur, a, kids[c].second), phi);
    }
    return out;
}

Vec minor_row_control(const ControlScenario& cs, int t, int x, int s0, int a, const Vec& phi) {
    Vec row(cs.n_minor());
    for (int j = 0; j < cs.n_minor(); ++j)
        row[j] = cs.minor_kernel.eval(cs.idx_minor_kernel(t, x, s0, a, j), phi);
    return row;
}

}  // namespace

std::vector<Vec> bellman_backup(const ControlScenario& cs, const PathSpace& space,
                                const MajorPolicy& alpha0, const ControlFieldFeatures& feats,
                                int t, const std::vector<Vec>& v_next) {
    std::vector<Vec> out(space.slice_size(t), Vec(cs.n_minor(), 0.0));
    util::parallel_for(space.slice_size(t), [&](std::size_t u) {
        const int cur = space.node(t, u).history.back();
        const Vec& phi = feats.run[t][u];
        Vec pi0 = pi0_row_control(cs, space, t, static_cast<int>(u), alpha0.weights[t][u], phi);
        const auto& kids = space.children[t][u];
        for (int x = 0; x < cs.n_minor(); ++x) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < cs.n_minor_actions(); ++a) {
                double q = cs.minor_running.eval(cs.idx_minor_running(t, x, cur, a), phi);
                Vec prow = minor_row_control(cs, t, x, cur, a, phi);
                for (std::size_t c = 0; c < kids.size(); ++c) {
                    if (pi0[c] == 0.0) continue;
                    double inner = 0.0;
                    for (int xn = 0; xn < cs.n_minor(); ++xn)
                        inner += prow[xn] * v_next[kids[c].first][xn];
                    q += pi0[c] * inner;
                }
                if (!std::isfinite(q)) throw NonFiniteValue("non-finite Bellman backup");
                best = std::max(best, q);
            }
            out[u][x] = best;
        }
    });
    return out;
}

MinorValue control_minor_values(const ControlScenario& cs, const PathSpace& space,
                                const MajorPolicy& alpha0, const ControlFieldFeatures& feats) {
    MinorValue w;
    w.w.resize(space.horizon + 1);
    w.w[space.horizon].assign(space.slice_size(space.horizon), Vec(cs.n_minor(), 0.0));
    for (std::size_t u = 0; u < space.slice_size(space.horizon); ++u) {
        const int cur = space.node(space.horizon, u).history.back();
        for (int x = 0; x < cs.n_minor(); ++x)
            w.w[space.horizon][u][x] = cs.minor_terminal.eval(cs.idx_terminal(x, cur), feats.terminal[u]);
    }
    for (int t = space.horizon - 1; t >= 0; --t)
        w.w[t] = bellman_backup(cs, space, alpha0, feats, t, w.w[t + 1]);
    return w;
}

std::vector<Vec> consistent_flow_step(const ControlScenario& cs, const PathSpace& space,
                                      const MajorPolicy& alpha0, const ControlFieldFeatures& feats,
                                      int t, const std::vector<Vec>& v_t,
                                      const std::vector<std::vector<Vec>>& policy_next) {
    const int S = cs.n_minor(), A1 = cs.n_minor_actions();
    const bool terminal_next = t + 1 == space.horizon;
    std::vector<Vec> state_mass(space.slice_size(t + 1), Vec(S, 0.0));
    for (std::size_t u = 0; u < space.slice_size(t); ++u) {
        const int cur = space.node(t, u).history.back();
        const Vec& phi = feats.run[t][u];
        Vec pi0 = pi0_row_control(cs, space, t, static_cast<int>(u), alpha0.weights[t][u], phi);
        const auto& kids = space.children[t][u];
        for (int x = 0; x < S; ++x) {
            for (int a = 0; a < A1; ++a) {
                double mass = v_t[u][x * A1 + a];
                if (mass == 0.0) continue;
                Vec prow = minor_row_control(cs, t, x, cur, a, phi);
                for (std::size_t c = 0; c < kids.size(); ++c) {
                    if (pi0[c] == 0.0) continue;
                    for (int xn = 0; xn < S; ++xn)
                        state_mass[kids[c].first][xn] += mass * prow[xn] * pi0[c];
                }
            }
        }
    }
    if (terminal_next) return state_mass;
    std::vector<Vec> out(space.slice_size(t + 1), Vec(S * A1, 0.0));
    for (std::size_t u = 0; u < space.slice_size(t + 1); ++u)
        for (int x = 0; x < S; ++x)
            for (int a = 0; a < A1; ++a)
                out[u][x * A1 + a] = state_mass[u][x] * policy_next[u][x][a];
    return out;
}

namespace {

/// Argmax action distribution at (t, node, x) given the backed-up values.
Vec argmax_policy(const ControlScenario& cs, const PathSpace& space, const MajorPolicy& alpha0,
                  const ControlFieldFeatures& feats, const MinorValue& w, int t, int u, int x,
                  double tie_q, double band) {
    const int cur = space.node(t, u).history.back();
    const Vec& phi = feats.run[t][u];
    Vec pi0 = pi0_row_control(cs, space, t, u, alpha0.weights[t][u], phi);
    const auto& kids = space.children[t][u];
    const int A1 = cs.n_minor_actions();
    Vec q(A1);
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < A1; ++a) {
        double val = cs.minor_running.eval(cs.idx_minor_running(t, x, cur, a), phi);
        Vec prow = minor_row_control(cs, t, x, cur, a, phi);
        for (std::size_t c = 0; c < kids.size(); ++c) {
            if (pi0[c] == 0.0) continue;
            double inner = 0.0;
            for (int xn = 0; xn < cs.n_minor(); ++xn)
                inner += prow[xn] * w.w[t + 1][kids[c].first][xn];
            val += pi0[c] * inner;
        }
        q[a] = val;
        best = std::max(best, val);
    }
    std::vector<int> arg;
    for (int a = 0; a < A1; ++a)
        if (q[a] >= best - band) arg.push_back(a);
    Vec dist(A1, 0.0);
    if (arg.size() == 2) {
        // two-way ties follow the configured split, like the stopping solver
        dist[arg[0]] = 1.0 - tie_q;
        dist[arg[1]] = tie_q;
    } else {
        for (int a : arg) dist[a] = 1.0 / arg.size();
    }
    return dist;
}

double value_scale(const MinorValue& w) {
    double m = 0.0;
    for (const auto& slice : w.w)
        for (const auto& cell : slice)
            for (double v : cell) m = std::max(m, std::fabs(v));
    return m;
}

}  // namespace

StateActionFlow minor_control_best_response(const ControlScenario& cs, const PathSpace& space,
                                            const MajorPolicy& alpha0,
                                            const ControlFieldFeatures& feats, double tie_q,
                                            double eta) {
    MinorValue w = control_minor_values(cs, space, alpha0, feats);
    const double band = eta >= 0.0 ? eta : 1e-9 * (1.0 + value_scale(w));
    const int S = cs.n_minor(), A1 = cs.n_minor_actions();

    StateActionFlow flow;
    flow.v.resize(space.horizon + 1);

    // initial state mass, then extend by the argmax policy at each t
    std::vector<Vec> state_mass(space.slice_size(0), Vec(S, 0.0));
    for (std::size_t u = 0; u < space.slice_size(0); ++u)
        for (int x = 0; x < S; ++x)
            state_mass[u][x] = cs.initial_minor[x] * cs.initial_major[space.node(0, u).history[0]];

    for (int t = 0; t < space.horizon; ++t) {
        flow.v[t].assign(space.slice_size(t), Vec(S * A1, 0.0));
        std::vector<std::vector<Vec>> policy(space.slice_size(t),
                                             std::vector<Vec>(S, Vec(A1, 0.0)));
        for (std::size_t u = 0; u < space.slice_size(t); ++u)
            for (int x = 0; x < S; ++x) {
                policy[u][x] = argmax_policy(cs, space, alpha0, feats, w, t, static_cast<int>(u),
                                             x, tie_q, band);
                for (int a = 0; a < A1; ++a)
                    flow.v[t][u][x * A1 + a] = state_mass[u][x] * policy[u][x][a];
            }
        // transport to t+1 (policy_next is applied when that slice is reached)
        std::vector<Vec> next(space.slice_size(t + 1), Vec(S, 0.0));
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            const int cur = space.node(t, u).history.back();
            const Vec& phi = feats.run[t][u];
            Vec pi0 = pi0_row_control(cs, space, t, static_cast<int>(u), alpha0.weights[t][u], phi);
            const auto& kids = space.children[t][u];
            for (int x = 0; x < S; ++x)
                for (int a = 0; a < A1; ++a) {
                    double mass = flow.v[t][u][x * A1 + a];
                    if (mass == 0.0) continue;
                    Vec prow = minor_row_control(cs, t, x, cur, a, phi);
                    for (std::size_t c = 0; c < kids.size(); ++c) {
                        if (pi0[c] == 0.0) continue;
                        for (int xn = 0; xn < S; ++xn)
                            next[kids[c].first][xn] += mass * prow[xn] * pi0[c];
                    }
                }
        }
        state_mass = std::move(next);
    }
    flow.v[space.horizon] = std::move(state_mass);
    return flow;
}

double control_c_residual(const ControlScenario& cs, const PathSpace& space,
                          const MajorPolicy& alpha0, const ControlFieldFeatures& feats,
                          const StateActionFlow& v) {
    const int S = cs.n_minor(), A1 = cs.n_minor_actions();
    double worst = 0.0;
    for (std::size_t u = 0; u < space.slice_size(0); ++u)
        for (int x = 0; x < S; ++x) {
            double have = 0.0;
            for (int a = 0; a < A1; ++a) have += v.v[0][u][x * A1 + a];
            double want = cs.initial_minor[x] * cs.initial_major[space.node(0, u).history[0]];
            worst = std::max(worst, std::fabs(have - want));
        }
    for (int t = 0; t < space.horizon; ++t) {
        std::vector<Vec> transported(space.slice_size(t + 1), Vec(S, 0.0));
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            const int cur = space.node(t, u).history.back();
            const Vec& phi = feats.run[t][u];
            Vec pi0 = pi0_row_control(cs, space, t, static_cast<int>(u), alpha0.weights[t][u], phi);
            const auto& kids = space.children[t][u];
            for (int x = 0; x < S; ++x)
                for (int a = 0; a < A1; ++a) {
                    double mass = v.v[t][u][x * A1 + a];
                    if (mass == 0.0) continue;
                    Vec prow = minor_row_control(cs, t, x, cur, a, phi);
                    for (std::size_t c = 0; c < kids.size(); ++c) {
                        if (pi0[c] == 0.0) continue;
                        for (int xn = 0; xn < S; ++xn)
                            transported[kids[c].first][xn] += mass * prow[xn] * pi0[c];
                    }
                }
        }
        for (std::size_t u = 0; u < space.slice_size(t + 1); ++u) {
            for (int x = 0; x < S; ++x) {
                double have;
                if (t + 1 == space.horizon) {
                    have = v.v[t + 1][u][x];
                } else {
                    have = 0.0;
                    for (int a = 0; a < A1; ++a) have += v.v[t + 1][u][x * A1 + a];
                }
                worst = std::max(worst, std::fabs(have - transported[u][x]));
            }
        }
    }
    return worst;
}

double control_b_residual(const ControlScenario& cs, const PathSpace& space,
                          const MajorPolicy& alpha0, const ControlFieldFeatures& feats,
                          const StateActionFlow& v, double eta) {
    MinorValue w = control_minor_values(cs, space, alpha0, feats);
    const double band = eta >= 0.0 ? eta : 1e-9 * (1.0 + value_scale(w));
    const int S = cs.n_minor(), A1 = cs.n_minor_actions();
    double off_mass = 0.0;
    for (int t = 0; t < space.horizon; ++t) {
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            const int cur = space.node(t, u).history.back();
            const Vec& phi = feats.run[t][u];
            Vec pi0 = pi0_row_control(cs, space, t, static_cast<int>(u), alpha0.weights[t][u], phi);
            const auto& kids = space.children[t][u];
            for (int x = 0; x < S; ++x) {
                for (int a = 0; a < A1; ++a) {
                    double mass = v.v[t][u][x * A1 + a];
                    if (mass == 0.0) continue;
                    double q = cs.minor_running.eval(cs.idx_minor_running(t, x, cur, a), phi);
                    Vec prow = minor_row_control(cs, t, x, cur, a, phi);
                    for (std::size_t c = 0; c < kids.size(); ++c) {
                        if (pi0[c] == 0.0) continue;
                        double inner = 0.0;
                        for (int xn = 0; xn < S; ++xn)
                            inner += prow[xn] * w.w[t + 1][kids[c].first][xn];
                        q += pi0[c] * inner;
                    }
                    double slack = w.w[t][u][x] - q;
                    if (slack > band) off_mass += mass;
                }
            }
        }
    }
    return off_mass;
}

ControlMeanField disintegrate_control(const PathSpace& space, const StateActionFlow& v,
                                      const ControlMeanField& fallback, double eps) {
    ControlMeanField mu = fallback;
    for (int t = 0; t <= space.horizon; ++t) {
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            double marg = util::sum(v.v[t][u]);
            if (marg > eps) {
                Vec cell = v.v[t][u];
                for (auto& x : cell) x /= marg;
                mu.cells[t][u] = std::move(cell);
            }
        }
    }
    return mu;
}

double control_consistency_residual(const PathSpace& space, const ControlMeanField& mu,
                                    const StateActionFlow& v, double eps) {
    double worst = 0.0;
    for (int t = 0; t <= space.horizon; ++t) {
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            double marg = util::sum(v.v[t][u]);
            if (marg <= eps) continue;
            double d = 0.0;
            for (std::size_t i = 0; i < v.v[t][u].size(); ++i)
                d += std::fabs(v.v[t][u][i] - mu.cells[t][u][i] * marg);
            worst = std::max(worst, d);
        }
    }
    return worst;
}

double control_major_reward(const ControlScenario& cs, const PathSpace& space,
                            const MajorPolicy& alpha0, const ControlFieldFeatures& feats,
                            double lambda) {
    return major_reward_core(major_problem_of(cs), space, alpha0, feats, lambda);
}

double control_minor_reward(const ControlScenario& cs, const PathSpace& space,
                            const ControlFieldFeatures& feats, const StateActionFlow& v) {
    const int A1 = cs.n_minor_actions();
    double total = 0.0;
    for (int t = 0; t < space.horizon; ++t)
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            const int cur = space.node(t, u).history.back();
            for (int x = 0; x < cs.n_minor(); ++x)
                for (int a = 0; a < A1; ++a)
                    total += v.v[t][u][x * A1 + a] *
                             cs.minor_running.eval(cs.idx_minor_running(t, x, cur, a),
                                                   feats.run[t][u]);
        }
    for (std::size_t u = 0; u < space.slice_size(space.horizon); ++u) {
        const int cur = space.node(space.horizon, u).history.back();
        for (int x = 0; x < cs.n_minor(); ++x)
            total += v.v[space.horizon][u][x] *
                     cs.minor_terminal.eval(cs.idx_terminal(x, cur), feats.terminal[u]);
    }
    return total;
}

namespace {

ControlEquilibriumReport solve_control_fixed(const ControlScenario& cs, const PathSpace& space,
                                             const SolveConfig& cfg, const ControlMeanField& mu0) {
    if (cfg.lambda <= 0.0)
        throw ValidationError("regularized solve requires lambda > 0; anneal to reach lambda = 0");
    ControlEquilibriumReport rep;
    rep.scenario_name = cs.name;
    rep.lambda = cfg.lambda;
    rep.mu = mu0;

    MajorProblem prob = major_problem_of(cs);
    double delta = 0.0, cons = 0.0;
    bool settled = false;
    int iter = 0;
    while (iter < cfg.max_iters) {
        ++iter;
        ControlFieldFeatures feats = features_of(cs, space, rep.mu);
        RegularizedSolution major = solve_regularized_core(prob, space, feats, cfg.lambda);
        StateActionFlow flow =
            minor_control_best_response(cs, space, major.policy, feats, cfg.tie_q);
        ControlMeanField next = disintegrate_control(space, flow, rep.mu);
        delta = 0.0;
        for (std::size_t t = 0; t < rep.mu.cells.size(); ++t)
            for (std::size_t u = 0; u < rep.mu.cells[t].size(); ++u) {
                Vec& cur = rep.mu.cells[t][u];
                const Vec& nxt = next.cells[t][u];
                double d = 0.0;
                for (std::size_t i = 0; i < cur.size(); ++i) {
                    double updated = (1.0 - cfg.damping) * cur[i] + cfg.damping * nxt[i];
                    d += std::fabs(updated - cur[i]);
                    cur[i] = updated;
                }
                delta = std::max(delta, d);
            }
        cons = control_consistency_residual(space, rep.mu, flow);
        if (cfg.on_iteration) cfg.on_iteration(cfg.lambda, iter, delta, cons);
        if (delta <= cfg.tol && cons <= cfg.tol) {
            settled = true;
            break;
        }
    }
    rep.iterations = iter;

    // rebuild the responses against the final field, as in the stopping case
    ControlFieldFeatures final_feats = features_of(cs, space, rep.mu);
    RegularizedSolution major = solve_regularized_core(prob, space, final_feats, cfg.lambda);
    rep.alpha0 = std::move(major.policy);
    rep.v = minor_control_best_response(cs, space, rep.alpha0, final_feats, cfg.tie_q);

    rep.major_value = control_major_reward(cs, space, rep.alpha0, final_feats, cfg.lambda);
    double v0 = 0.0;
    for (std::size_t u = 0; u < space.slice_size(0); ++u)
        v0 += cs.initial_major[space.node(0, u).history[0]] * major.value.v[0][u];
    rep.minor_value = control_minor_reward(cs, space, final_feats, rep.v);
    rep.residuals.major_gap = std::fabs(v0 - rep.major_value);
    rep.residuals.minor_gap = control_b_residual(cs, space, rep.alpha0, final_feats, rep.v);
    rep.residuals.consistency = control_consistency_residual(space, rep.mu, rep.v);
    rep.residuals.iteration_delta = delta;
    rep.converged = settled && rep.residuals.major_gap <= cfg.tol &&
                    rep.residuals.minor_gap <= cfg.tol && rep.residuals.consistency <= cfg.tol;
    return rep;
}

}  // namespace

ControlEquilibriumReport solve_control_equilibrium(const ControlScenario& cs,
                                                   const PathSpace& space, const SolveConfig& cfg) {
    cfg.check();
    ControlMeanField mu = ControlMeanField::uniform(cs, space);
    if (!cfg.anneal) return solve_control_fixed(cs, space, cfg, mu);

    const AnnealSchedule sched = *cfg.anneal;
    ControlEquilibriumReport rep;
    rep.scenario_name = cs.name;
    rep.annealed = true;
    bool all_converged = true;
    double lam = sched.start;
    ControlEquilibriumReport stage;
    while (true) {
        SolveConfig scfg = cfg;
        scfg.lambda = lam;
        scfg.anneal.reset();
        stage = solve_control_fixed(cs, space, scfg, mu);
        rep.lambda_trace.push_back({lam, stage.iterations, stage.converged, stage.residuals});
        rep.iterations += stage.iterations;
        mu = stage.mu;
        if (!stage.converged) {
            all_converged = false;
            rep.stalled_lambda = lam;
            break;
        }
        if (lam <= sched.min * (1.0 + 1e-12)) break;
        lam *= sched.factor;
        if (lam < sched.min) lam = sched.min;
    }
    rep.lambda = rep.lambda_trace.back().lambda;
    rep.mu = std::move(stage.mu);
    rep.alpha0 = std::move(stage.alpha0);
    rep.v = std::move(stage.v);

    ControlFieldFeatures feats = features_of(cs, space, rep.mu);
    auto [value, sets] = solve_unregularized_core(major_problem_of(cs), space, feats);
    rep.major_value = control_major_reward(cs, space, rep.alpha0, feats, 0.0);
    rep.minor_value = control_minor_reward(cs, space, feats, rep.v);
    double v0 = 0.0;
    for (std::size_t u = 0; u < space.slice_size(0); ++u)
        v0 += cs.initial_major[space.node(0, u).history[0]] * value.v[0][u];
    rep.residuals.major_gap = v0 - rep.major_value;
    rep.residuals.minor_gap = control_b_residual(cs, space, rep.alpha0, feats, rep.v);
    rep.residuals.consistency = control_consistency_residual(space, rep.mu, rep.v);
    rep.residuals.support_outside = mass_outside_argmax(rep.alpha0, sets, cs.major_actions);
    rep.residuals.iteration_delta = rep.lambda_trace.back().residuals.iteration_delta;
    rep.converged = all_converged && rep.residuals.major_gap <= cfg.eps_final &&
                    rep.residuals.minor_gap <= cfg.eps_final &&
                    rep.residuals.consistency <= cfg.eps_final &&
                    rep.residuals.support_outside <= cfg.eps_support;
    return rep;
}

ControlCertificate verify_control(const ControlEquilibriumReport& report,
                                  const ControlScenario& cs, const PathSpace& space, double eps) {
    ControlCertificate cert;
    ControlFieldFeatures feats = features_of(cs, space, report.mu);
    auto [value, sets] = solve_unregularized_core(major_problem_of(cs), space, feats);
    double v0 = 0.0;
    for (std::size_t u = 0; u < space.slice_size(0); ++u)
        v0 += cs.initial_major[space.node(0, u).history[0]] * value.v[0][u];
    cert.major.slack = v0 - control_major_reward(cs, space, report.alpha0, feats, 0.0);
    cert.major.ok = cert.major.slack <= eps;
    double b = control_b_residual(cs, space, report.alpha0, feats, report.v);
    double c = control_c_residual(cs, space, report.alpha0, feats, report.v);
    cert.minor.slack = std::max(b, c);
    cert.minor.ok = cert.minor.slack <= eps;
    cert.consistency.slack = control_consistency_residual(space, report.mu, report.v);
    cert.consistency.ok = cert.consistency.slack <= eps;
    return cert;
}

}  // namespace mmfg
