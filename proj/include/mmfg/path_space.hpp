#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mmfg/errors.hpp"
#include "mmfg/scenario.hpp"

namespace mmfg {

/// One reachable major trajectory prefix. `history` is the state sequence
/// (x0_0, ..., x0_t); `parent` indexes the t-1 prefix in the previous slice.
struct PathNode {
    int t = 0;
    std::vector<int> history;
    int parent = -1;
    int index = 0;  // dense id within the slice
};

/// The major player's trajectory tree: per-time reachable slices plus the
/// child adjacency u -> (u', appended state). Immutable after construction.
struct PathSpace {
    int horizon = 0;
    int n_major_states = 0;
    int absorbing_state = -1;
    std::vector<std::vector<PathNode>> slices;  // [t][node]
    // children[t][node] = list of (child index in slice t+1, appended s0)
    std::vector<std::vector<std::vector<std::pair<int, int>>>> children;

    std::size_t slice_size(int t) const { return slices[t].size(); }
    const PathNode& node(int t, int i) const { return slices[t][i]; }
    std::size_t total_nodes() const;
};

inline constexpr std::size_t kDefaultNodeBudget = 1000000;

/// Materializes every structurally possible history. Roots are the support
/// of the initial major law; in stopping mode the absorbing state has a
/// single self-extension. Node ordering is lexicographic in the history, so
/// construction is deterministic. Throws CapacityError past the budget.
PathSpace build_path_space(const Scenario& scenario, std::size_t node_budget = kDefaultNodeBudget);

/// Shared builder for both scenario kinds.
PathSpace build_path_space_raw(int horizon, int n_major_states, const Vec& initial_major,
                               bool stopping_mode, int absorbing_state,
                               std::size_t node_budget = kDefaultNodeBudget);

/// The state at time s along the node's history (s <= node.t).
int psi(const PathNode& node, int s);

/// Binary matrix encoding: (T+1) x |S0|, row s+1 one-hot at history[s] for
/// s <= t, zero rows afterwards.
std::vector<std::vector<int>> encode_matrix(const PathNode& node, int horizon, int n_major_states);

/// Inverse of encode_matrix; throws ParseError on a malformed matrix.
PathNode decode_matrix(const std::vector<std::vector<int>>& matrix);

/// Children of a node with the appended state, per the adjacency.
std::vector<std::pair<int, int>> children_of(const PathSpace& space, int t, int node_index);

/// CSV export: t,node_id,parent_id,history (semicolon-joined state labels).
std::string export_nodes_csv(const PathSpace& space, const std::vector<std::string>& state_labels);

}  // namespace mmfg
