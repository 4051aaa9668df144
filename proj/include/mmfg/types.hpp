#pragma once

#include <vector>

#include "mmfg/errors.hpp"
#include "mmfg/path_space.hpp"
#include "mmfg/util.hpp"

namespace mmfg {

/// Conditional subprobability vectors over the minor grid, one per (t, path
/// node). The stopped flavor has slices 0..T, the active flavor 0..T-1; the
/// factories below size them accordingly.
struct MeanFieldFlow {
    std::vector<std::vector<Vec>> cells;  // [t][node][x]

    int slices() const { return static_cast<int>(cells.size()); }
    Vec& at(int t, int node) { return cells[t][node]; }
    const Vec& at(int t, int node) const { return cells[t][node]; }

    static MeanFieldFlow zeros(const PathSpace& space, int n_minor, bool with_terminal);
    static MeanFieldFlow uniform(const PathSpace& space, int n_minor, bool with_terminal);
};

/// Joint occupation measures over (minor state, path node): mu_tilde[t] for
/// t in 0..T holds the mass stopped exactly at t, m_tilde[t] for t < T the
/// mass still active at t. Entries are joint masses, not conditionals.
struct OccupationFlow {
    std::vector<std::vector<Vec>> mu_tilde;  // [t][node][x], t in 0..T
    std::vector<std::vector<Vec>> m_tilde;   // [t][node][x], t in 0..T-1

    double stopped_mass() const {
        double s = 0.0;
        for (const auto& slice : mu_tilde)
            for (const auto& cell : slice) s += util::sum(cell);
        return s;
    }
    static OccupationFlow zeros(const PathSpace& space, int n_minor);
};

/// Per (t, node) action weights. Finite action sets store probabilities;
/// action grids store density values whose volume-weighted sum is 1.
struct MajorPolicy {
    std::vector<std::vector<Vec>> weights;  // [t][node][action], t in 0..T-1

    static MajorPolicy uniform(const PathSpace& space, std::size_t n_actions, double total_volume);
};

struct MajorValue {
    std::vector<Vec> v;  // [t][node], t in 0..T
};

/// Per-slice distribution of the major's path node.
struct MajorMarginal {
    std::vector<Vec> p;  // [t][node]
};

/// Optimal remaining reward of an active minor player at (t, x, node).
struct MinorValue {
    std::vector<std::vector<Vec>> w;  // [t][node][x]
};

/// Per-(t, node) actions within the argmax band.
struct ArgmaxSets {
    std::vector<std::vector<std::vector<int>>> actions;  // [t][node] -> indices
};

void check_same_shape(const MeanFieldFlow& a, const MeanFieldFlow& b);

/// Shape checks against a path space (throws ShapeMismatch).
void check_flow_shape(const MeanFieldFlow& f, const PathSpace& space, int n_minor, bool with_terminal);
void check_occupation_shape(const OccupationFlow& f, const PathSpace& space, int n_minor);
void check_policy_shape(const MajorPolicy& a, const PathSpace& space, std::size_t n_actions);

}  // namespace mmfg
