#include "mmfg/path_space.hpp"

#include <algorithm>
#include <sstream>

namespace mmfg {

std::size_t PathSpace::total_nodes() const {
    std::size_t n = 0;
    for (const auto& s : slices) n += s.size();
    return n;
}

PathSpace build_path_space(const Scenario& scenario, std::size_t node_budget) {
    return build_path_space_raw(scenario.horizon, scenario.n_major(), scenario.initial_major,
                                scenario.stopping_mode, scenario.absorbing_state, node_budget);
}

PathSpace build_path_space_raw(int horizon, int n_major_states, const Vec& initial_major,
                               bool stopping_mode, int absorbing_state, std::size_t node_budget) {
    PathSpace space;
    space.horizon = horizon;
    space.n_major_states = n_major_states;
    space.absorbing_state = absorbing_state;

    space.slices.resize(horizon + 1);
    space.children.resize(horizon);

    // roots: support of the initial law, in state order (lexicographic)
    for (int s0 = 0; s0 < n_major_states; ++s0) {
        if (initial_major[s0] > 0.0) {
            PathNode n;
            n.t = 0;
            n.history = {s0};
            n.parent = -1;
            n.index = static_cast<int>(space.slices[0].size());
            space.slices[0].push_back(std::move(n));
        }
    }

    std::size_t total = space.slices[0].size();
    for (int t = 0; t < horizon; ++t) {
        space.children[t].resize(space.slices[t].size());
        for (std::size_t i = 0; i < space.slices[t].size(); ++i) {
            const PathNode& u = space.slices[t][i];
            const int cur = u.history.back();
            const bool absorbed = stopping_mode && cur == absorbing_state;
            for (int s0 = 0; s0 < n_major_states; ++s0) {
                if (absorbed && s0 != absorbing_state) continue;
                PathNode child;
                child.t = t + 1;
                child.history = u.history;
                child.history.push_back(s0);
                child.parent = static_cast<int>(i);
                child.index = static_cast<int>(space.slices[t + 1].size());
                space.children[t][i].emplace_back(child.index, s0);
                space.slices[t + 1].push_back(std::move(child));
                if (++total > node_budget) {
                    std::ostringstream os;
                    os << "path space exceeds the node budget of " << node_budget;
                    throw CapacityError(os.str());
                }
            }
        }
    }
    // parents iterate in history order, so slices come out lexicographic
    return space;
}

int psi(const PathNode& node, int s) {
    if (s < 0 || s > node.t) throw ShapeMismatch("psi: time index outside the node's history");
    return node.history[s];
}

std::vector<std::vector<int>> encode_matrix(const PathNode& node, int horizon, int n_major_states) {
    std::vector<std::vector<int>> m(horizon + 1, std::vector<int>(n_major_states, 0));
    for (int s = 0; s <= node.t; ++s) m[s][node.history[s]] = 1;
    return m;
}

PathNode decode_matrix(const std::vector<std::vector<int>>& matrix) {
    PathNode n;
    n.parent = -1;
    n.index = -1;
    bool ended = false;
    for (std::size_t r = 0; r < matrix.size(); ++r) {
        int hot = -1;
        for (std::size_t j = 0; j < matrix[r].size(); ++j) {
            if (matrix[r][j] == 1) {
                if (hot >= 0) throw ParseError("path matrix row has multiple set bits");
                hot = static_cast<int>(j);
            } else if (matrix[r][j] != 0) {
                throw ParseError("path matrix entries must be 0 or 1");
            }
        }
        if (hot < 0) {
            ended = true;
        } else {
            if (ended) throw ParseError("path matrix has a gap before a set row");
            n.history.push_back(hot);
        }
    }
    if (n.history.empty()) throw ParseError("path matrix encodes an empty history");
    n.t = static_cast<int>(n.history.size()) - 1;
    return n;
}

std::vector<std::pair<int, int>> children_of(const PathSpace& space, int t, int node_index) {
    if (t < 0 || t >= space.horizon) throw ShapeMismatch("children_of: node is terminal");
    return space.children[t][node_index];
}

std::string export_nodes_csv(const PathSpace& space, const std::vector<std::string>& state_labels) {
    std::ostringstream os;
    os << "t,node_id,parent_id,history\n";
    for (int t = 0; t <= space.horizon; ++t) {
        for (const auto& n : space.slices[t]) {
            os << t << "," << n.index << "," << n.parent << ",";
            for (std::size_t s = 0; s < n.history.size(); ++s) {
                if (s) os << ";";
                os << state_labels[n.history[s]];
            }
            os << "\n";
        }
    }
    return os.str();
}

}  // namespace mmfg
