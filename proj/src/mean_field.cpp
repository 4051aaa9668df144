#include "mmfg/mean_field.hpp"

#include <cmath>

namespace mmfg {

Vec lifted_major_row(const Scenario& s, const PathSpace& space, int t, int node,
                     const Vec& alpha_row, const Vec& feats) {
    const auto& kids = space.children[t][node];
    const int cur = space.node(t, node).history.back();
    Vec out(kids.size(), 0.0);
    for (int a = 0; a < s.n_actions(); ++a) {
        double w = alpha_row[a] * s.actions.volumes[a];
        if (w == 0.0) continue;
        Vec row = evaluate_major_kernel(s, t, cur, a, feats);
        for (std::size_t c = 0; c < kids.size(); ++c) out[c] += w * row[kids[c].second];
    }
    return out;
}

MajorMarginal marginal_law(const Scenario& s, const PathSpace& space, const MajorPolicy& alpha,
                           const MeanFieldFlow& m) {
    check_policy_shape(alpha, space, s.actions.size());
    check_flow_shape(m, space, s.n_minor(), false);
    MajorMarginal out;
    out.p.resize(space.horizon + 1);
    out.p[0].assign(space.slice_size(0), 0.0);
    for (std::size_t i = 0; i < space.slice_size(0); ++i)
        out.p[0][i] = s.initial_major[space.node(0, i).history[0]];
    for (int t = 0; t < space.horizon; ++t) {
        out.p[t + 1].assign(space.slice_size(t + 1), 0.0);
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            double pu = out.p[t][u];
            if (pu == 0.0) continue;
            Vec feats = compute_features(s.features, s.minor_grid, m.at(t, u));
            Vec row = lifted_major_row(s, space, t, static_cast<int>(u), alpha.weights[t][u], feats);
            const auto& kids = space.children[t][u];
            for (std::size_t c = 0; c < kids.size(); ++c)
                out.p[t + 1][kids[c].first] += pu * row[c];
        }
    }
    return out;
}

std::pair<MeanFieldFlow, MeanFieldFlow> disintegrate(const PathSpace& space,
                                                     const OccupationFlow& flow,
                                                     const MajorMarginal& p,
                                                     const MeanFieldFlow& fallback_mu,
                                                     const MeanFieldFlow& fallback_m,
                                                     double eps) {
    const int n_minor = flow.mu_tilde.empty() || flow.mu_tilde[0].empty()
                            ? 0
                            : static_cast<int>(flow.mu_tilde[0][0].size());
    check_occupation_shape(flow, space, n_minor);
    MeanFieldFlow mu = MeanFieldFlow::zeros(space, n_minor, true);
    MeanFieldFlow m = MeanFieldFlow::zeros(space, n_minor, false);

    auto split = [&](const std::vector<std::vector<Vec>>& joint, MeanFieldFlow& out,
                     const MeanFieldFlow& fb, int last) {
        for (int t = 0; t <= last; ++t) {
            for (std::size_t u = 0; u < space.slice_size(t); ++u) {
                double pu = p.p[t][u];
                double mass = util::sum(joint[t][u]);
                if (mass > pu + 1e-9)
                    throw MassMismatch("joint mass exceeds the major marginal at a node");
                if (pu > eps) {
                    Vec& cell = out.at(t, u);
                    for (int x = 0; x < n_minor; ++x) cell[x] = joint[t][u][x] / pu;
                } else {
                    out.at(t, u) = fb.at(t, u);
                }
            }
        }
    };
    split(flow.mu_tilde, mu, fallback_mu, space.horizon);
    split(flow.m_tilde, m, fallback_m, space.horizon - 1);
    return {std::move(mu), std::move(m)};
}

double consistency_residual(const PathSpace& space, const MeanFieldFlow& mu,
                            const MeanFieldFlow& m, const OccupationFlow& flow,
                            const MajorMarginal& p, double eps) {
    double worst = 0.0;
    auto scan = [&](const MeanFieldFlow& cond, const std::vector<std::vector<Vec>>& joint, int last) {
        for (int t = 0; t <= last; ++t) {
            for (std::size_t u = 0; u < space.slice_size(t); ++u) {
                double pu = p.p[t][u];
                if (pu <= eps) continue;
                double d = 0.0;
                const Vec& c = cond.at(t, u);
                for (std::size_t x = 0; x < c.size(); ++x)
                    d += std::fabs(joint[t][u][x] - c[x] * pu);
                if (d > worst) worst = d;
            }
        }
    };
    scan(mu, flow.mu_tilde, space.horizon);
    scan(m, flow.m_tilde, space.horizon - 1);
    return worst;
}

double flow_distance(const MeanFieldFlow& a, const MeanFieldFlow& b) {
    check_same_shape(a, b);
    double worst = 0.0;
    for (std::size_t t = 0; t < a.cells.size(); ++t)
        for (std::size_t u = 0; u < a.cells[t].size(); ++u)
            worst = std::max(worst, util::l1_distance(a.cells[t][u], b.cells[t][u]));
    return worst;
}

}  // namespace mmfg
