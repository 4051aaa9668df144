#include "mmfg/major_solver.hpp"

#include <cmath>

namespace mmfg {

double entropy(const Vec& weights, const ActionSpace& actions) {
    double h = 0.0;
    for (std::size_t a = 0; a < weights.size(); ++a) {
        double w = weights[a];
        if (w <= 0.0) continue;
        h -= w * actions.volumes[a] * std::log(w);
    }
    return h;
}

MajorProblem major_problem_of(const Scenario& s) {
    MajorProblem p;
    p.horizon = s.horizon;
    p.n_states = s.n_major();
    p.actions = &s.actions;
    p.initial = s.initial_major;
    p.f0 = [&s](int t, int s0, int a, const Vec& f) { return major_running_reward(s, t, s0, a, f); };
    p.p0_row = [&s](int t, int s0, int a, const Vec& f) { return evaluate_major_kernel(s, t, s0, a, f); };
    p.g0 = [&s](int s0, const Vec& f) { return major_terminal_reward(s, s0, f); };
    return p;
}

MajorFieldFeatures features_from_flows(const Scenario& s, const PathSpace& space,
                                       const MeanFieldFlow& mu, const MeanFieldFlow& m) {
    check_flow_shape(mu, space, s.n_minor(), true);
    check_flow_shape(m, space, s.n_minor(), false);
    MajorFieldFeatures f;
    f.run.resize(space.horizon);
    for (int t = 0; t < space.horizon; ++t) {
        f.run[t].resize(space.slice_size(t));
        for (std::size_t u = 0; u < space.slice_size(t); ++u)
            f.run[t][u] = compute_features(s.features, s.minor_grid, m.at(t, u));
    }
    f.terminal.resize(space.slice_size(space.horizon));
    for (std::size_t u = 0; u < space.slice_size(space.horizon); ++u)
        f.terminal[u] = compute_features(s.features, s.minor_grid, mu.at(space.horizon, u));
    return f;
}

namespace {

/// Per-action advantage at (t, node): running reward plus expected
/// continuation value over the children.
Vec advantages(const MajorProblem& prob, const PathSpace& space, const MajorFieldFeatures& feats,
               const Vec& v_next, int t, int node) {
    const auto& kids = space.children[t][node];
    const int cur = space.node(t, node).history.back();
    const Vec& phi = feats.run[t][node];
    Vec adv(prob.actions->size());
    for (std::size_t a = 0; a < prob.actions->size(); ++a) {
        double g = prob.f0(t, cur, static_cast<int>(a), phi);
        Vec row = prob.p0_row(t, cur, static_cast<int>(a), phi);
        for (const auto& [child, s0] : kids) g += v_next[child] * row[s0];
        if (!std::isfinite(g)) throw NonFiniteValue("non-finite advantage in the major DP");
        adv[a] = g;
    }
    return adv;
}

Vec terminal_values(const MajorProblem& prob, const PathSpace& space,
                    const MajorFieldFeatures& feats) {
    Vec vT(space.slice_size(space.horizon));
    for (std::size_t u = 0; u < space.slice_size(space.horizon); ++u) {
        vT[u] = prob.g0(space.node(space.horizon, u).history.back(), feats.terminal[u]);
        if (!std::isfinite(vT[u])) throw NonFiniteValue("non-finite terminal reward");
    }
    return vT;
}

}  // namespace

RegularizedSolution solve_regularized_core(const MajorProblem& prob, const PathSpace& space,
                                           const MajorFieldFeatures& feats, double lambda) {
    if (lambda <= 0.0) throw ValidationError("solve_regularized requires lambda > 0");
    const auto& actions = *prob.actions;
    RegularizedSolution sol;
    sol.value.v.resize(space.horizon + 1);
    sol.policy.weights.resize(space.horizon);
    sol.value.v[space.horizon] = terminal_values(prob, space, feats);

    for (int t = space.horizon - 1; t >= 0; --t) {
        sol.value.v[t].assign(space.slice_size(t), 0.0);
        sol.policy.weights[t].assign(space.slice_size(t), Vec(actions.size(), 0.0));
        util::parallel_for(space.slice_size(t), [&](std::size_t u) {
            Vec adv = advantages(prob, space, feats, sol.value.v[t + 1], t, static_cast<int>(u));
            double shift = *std::max_element(adv.begin(), adv.end());
            double z = 0.0;
            Vec& w = sol.policy.weights[t][u];
            for (std::size_t a = 0; a < adv.size(); ++a) {
                w[a] = std::exp((adv[a] - shift) / lambda);
                z += w[a] * actions.volumes[a];
            }
            for (auto& x : w) x /= z;
            // V = lambda * log integral exp(adv / lambda)
            sol.value.v[t][u] = shift + lambda * std::log(z);
        });
    }
    return sol;
}

std::pair<MajorValue, ArgmaxSets> solve_unregularized_core(const MajorProblem& prob,
                                                           const PathSpace& space,
                                                           const MajorFieldFeatures& feats,
                                                           double eta) {
    MajorValue value;
    ArgmaxSets sets;
    value.v.resize(space.horizon + 1);
    sets.actions.resize(space.horizon);
    value.v[space.horizon] = terminal_values(prob, space, feats);

    std::vector<std::vector<Vec>> all_adv(space.horizon);
    double vmax = 0.0;
    for (const auto& v : value.v[space.horizon]) vmax = std::max(vmax, std::fabs(v));
    for (int t = space.horizon - 1; t >= 0; --t) {
        value.v[t].assign(space.slice_size(t), 0.0);
        all_adv[t].resize(space.slice_size(t));
        util::parallel_for(space.slice_size(t), [&](std::size_t u) {
            Vec adv = advantages(prob, space, feats, value.v[t + 1], t, static_cast<int>(u));
            value.v[t][u] = *std::max_element(adv.begin(), adv.end());
            all_adv[t][u] = std::move(adv);
        });
        for (const auto& v : value.v[t]) vmax = std::max(vmax, std::fabs(v));
    }
    double band = eta >= 0.0 ? eta : 1e-9 * (1.0 + vmax);
    for (int t = 0; t < space.horizon; ++t) {
        sets.actions[t].resize(space.slice_size(t));
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            double best = value.v[t][u];
            for (std::size_t a = 0; a < all_adv[t][u].size(); ++a)
                if (all_adv[t][u][a] >= best - band)
                    sets.actions[t][u].push_back(static_cast<int>(a));
        }
    }
    return {std::move(value), std::move(sets)};
}

double major_reward_core(const MajorProblem& prob, const PathSpace& space, const MajorPolicy& alpha,
                         const MajorFieldFeatures& feats, double lambda) {
    const auto& actions = *prob.actions;
    Vec p(space.slice_size(0), 0.0);
    for (std::size_t u = 0; u < space.slice_size(0); ++u)
        p[u] = prob.initial[space.node(0, u).history[0]];

    double total = 0.0;
    for (int t = 0; t < space.horizon; ++t) {
        Vec next(space.slice_size(t + 1), 0.0);
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            if (p[u] == 0.0) continue;
            const int cur = space.node(t, u).history.back();
            const Vec& phi = feats.run[t][u];
            const Vec& w = alpha.weights[t][u];
            double stage = 0.0;
            for (std::size_t a = 0; a < actions.size(); ++a)
                stage += w[a] * actions.volumes[a] * prob.f0(t, cur, static_cast<int>(a), phi);
            if (lambda > 0.0) stage += lambda * entropy(w, actions);
            total += p[u] * stage;
            const auto& kids = space.children[t][u];
            for (std::size_t a = 0; a < actions.size(); ++a) {
                double aw = w[a] * actions.volumes[a];
                if (aw == 0.0) continue;
                Vec row = prob.p0_row(t, cur, static_cast<int>(a), phi);
                for (const auto& [child, s0] : kids) next[child] += p[u] * aw * row[s0];
            }
        }
        p = std::move(next);
    }
    for (std::size_t u = 0; u < space.slice_size(space.horizon); ++u) {
        if (p[u] == 0.0) continue;
        total += p[u] * prob.g0(space.node(space.horizon, u).history.back(), feats.terminal[u]);
    }
    return total;
}

RegularizedSolution solve_regularized(const Scenario& s, const PathSpace& space,
                                      const MeanFieldFlow& mu, const MeanFieldFlow& m,
                                      double lambda) {
    return solve_regularized_core(major_problem_of(s), space, features_from_flows(s, space, mu, m),
                                  lambda);
}

std::pair<MajorValue, ArgmaxSets> solve_unregularized(const Scenario& s, const PathSpace& space,
                                                      const MeanFieldFlow& mu,
                                                      const MeanFieldFlow& m, double eta) {
    return solve_unregularized_core(major_problem_of(s), space, features_from_flows(s, space, mu, m),
                                    eta);
}

double major_reward(const Scenario& s, const PathSpace& space, const MajorPolicy& alpha,
                    const MeanFieldFlow& mu, const MeanFieldFlow& m, double lambda) {
    check_policy_shape(alpha, space, s.actions.size());
    return major_reward_core(major_problem_of(s), space, alpha, features_from_flows(s, space, mu, m),
                             lambda);
}

double mass_outside_argmax(const MajorPolicy& alpha, const ArgmaxSets& sets,
                           const ActionSpace& actions) {
    double worst = 0.0;
    for (std::size_t t = 0; t < alpha.weights.size(); ++t) {
        for (std::size_t u = 0; u < alpha.weights[t].size(); ++u) {
            std::vector<char> in(actions.size(), 0);
            for (int a : sets.actions[t][u]) in[a] = 1;
            double outside = 0.0;
            for (std::size_t a = 0; a < actions.size(); ++a)
                if (!in[a]) outside += alpha.weights[t][u][a] * actions.volumes[a];
            worst = std::max(worst, outside);
        }
    }
    return worst;
}

}  // namespace mmfg
