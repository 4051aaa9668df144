#include "mmfg/oracle.hpp"

#include <cmath>
#include <sstream>

namespace mmfg {
namespace oracle {

namespace {

/// Decision points are the (t < T, node, x) cells, ordered by (t, node, x).
std::size_t decision_points(const Scenario& s, const PathSpace& space) {
    std::size_t n = 0;
    for (int t = 0; t < space.horizon; ++t) n += space.slice_size(t) * s.n_minor();
    return n;
}

}  // namespace

std::uint64_t stopping_rule_count(const Scenario& s, const PathSpace& space) {
    std::size_t pts = decision_points(s, space);
    if (pts >= 63) return std::numeric_limits<std::uint64_t>::max();
    return std::uint64_t(1) << pts;
}

double stopping_rule_value(const Scenario& s, const PathSpace& space, const MeanFieldFlow& mu,
                           const MeanFieldFlow& m, const MajorPolicy& alpha, std::uint64_t rule) {
    const int S = s.n_minor();
    double total = 0.0;
    std::vector<Vec> arriving(space.slice_size(0), Vec(S, 0.0));
    for (std::size_t u = 0; u < space.slice_size(0); ++u)
        for (int x = 0; x < S; ++x)
            arriving[u][x] = s.initial_minor[x] * s.initial_major[space.node(0, u).history[0]];

    std::size_t bit = 0;
    for (int t = 0; t <= space.horizon; ++t) {
        std::vector<Vec> next;
        if (t < space.horizon) next.assign(space.slice_size(t + 1), Vec(S, 0.0));
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            const int cur = space.node(t, u).history.back();
            Vec gf = compute_features(s.features, s.minor_grid, mu.at(t, u));
            Vec ff, pi0;
            if (t < space.horizon) {
                ff = compute_features(s.features, s.minor_grid, m.at(t, u));
                pi0 = lifted_major_row(s, space, t, static_cast<int>(u), alpha.weights[t][u], ff);
            }
            for (int x = 0; x < S; ++x) {
                double mass = arriving[u][x];
                bool stop = t == space.horizon || ((rule >> bit) & 1);
                if (t < space.horizon) ++bit;
                if (mass == 0.0) continue;
                if (stop) {
                    total += mass * minor_stopping_reward(s, t, x, cur, gf);
                    continue;
                }
                total += mass * minor_running_reward(s, t, x, cur, ff);
                Vec prow = evaluate_minor_kernel(s, t, x, cur, ff);
                const auto& kids = space.children[t][u];
                for (std::size_t c = 0; c < kids.size(); ++c) {
                    if (pi0[c] == 0.0) continue;
                    for (int xn = 0; xn < S; ++xn)
                        next[kids[c].first][xn] += mass * prow[xn] * pi0[c];
                }
            }
        }
        if (t < space.horizon) arriving = std::move(next);
    }
    return total;
}

StoppingSearch enumerate_stopping_rules(const Scenario& s, const PathSpace& space,
                                        const MeanFieldFlow& mu, const MeanFieldFlow& m,
                                        const MajorPolicy& alpha, std::uint64_t max_rules) {
    std::size_t pts = decision_points(s, space);
    std::uint64_t rules = stopping_rule_count(s, space);
    if (pts >= 63 || rules > max_rules) {
        std::ostringstream os;
        os << "rule enumeration needs 2^" << pts << " evaluations, budget is " << max_rules;
        throw CapacityError(os.str());
    }
    StoppingSearch out;
    out.rules = rules;
    out.value = -std::numeric_limits<double>::infinity();
    for (std::uint64_t r = 0; r < rules; ++r) {
        double v = stopping_rule_value(s, space, mu, m, alpha, r);
        if (v > out.value) {
            out.value = v;
            out.best_rule = r;
        }
    }
    return out;
}

ControlSearch control_grid_search(const ControlScenario& cs, const PathSpace& space,
                                  int grid_points, std::uint64_t max_evals) {
    if (cs.features_sa.dim(cs.sa_cells()) != 1 || cs.features_term.dim(cs.n_minor()) != 1)
        throw CapacityError("control grid search handles one-feature scenarios only");
    if (grid_points < 2 || static_cast<std::uint64_t>(grid_points) > max_evals)
        throw CapacityError("control grid search budget exceeded");

    const double lo = cs.features_sa.box_lo[0], hi = cs.features_sa.box_hi[0];
    MajorProblem prob = major_problem_of(cs);

    ControlSearch best;
    best.residual = std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid_points; ++k) {
        double phi = lo + (hi - lo) * k / (grid_points - 1);
        ControlFieldFeatures feats = constant_features(cs, space, {phi}, {phi});
        auto [value, sets] = solve_unregularized_core(prob, space, feats);
        // argmax policy, ties spread uniformly
        MajorPolicy a0 = MajorPolicy::uniform(space, cs.major_actions.size(),
                                              cs.major_actions.total_volume());
        for (int t = 0; t < space.horizon; ++t)
            for (std::size_t u = 0; u < space.slice_size(t); ++u) {
                Vec w(cs.major_actions.size(), 0.0);
                const auto& arg = sets.actions[t][u];
                for (int a : arg) w[a] = 1.0 / (arg.size() * cs.major_actions.volumes[a]);
                a0.weights[t][u] = std::move(w);
            }
        StateActionFlow v = minor_control_best_response(cs, space, a0, feats);

        // feature inconsistency of the induced flow at reachable nodes
        double resid = 0.0;
        ControlMeanField cond = disintegrate_control(space, v, ControlMeanField::uniform(cs, space));
        ControlFieldFeatures induced = features_of(cs, space, cond);
        for (int t = 0; t < space.horizon; ++t) {
            Vec marg = v.node_marginal(t);
            for (std::size_t u = 0; u < space.slice_size(t); ++u)
                if (marg[u] > kSupportEps)
                    resid = std::max(resid, std::fabs(induced.run[t][u][0] - phi));
        }
        Vec margT = v.node_marginal(space.horizon);
        for (std::size_t u = 0; u < space.slice_size(space.horizon); ++u)
            if (margT[u] > kSupportEps)
                resid = std::max(resid, std::fabs(induced.terminal[u][0] - phi));

        if (resid < best.residual) {
            best.residual = resid;
            best.phi = phi;
            best.major_value = control_major_reward(cs, space, a0, feats, 0.0);
            best.minor_value = control_minor_reward(cs, space, feats, v);
        }
    }
    return best;
}

}  // namespace oracle
}  // namespace mmfg
