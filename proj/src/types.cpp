#include "mmfg/types.hpp"

namespace mmfg {

MeanFieldFlow MeanFieldFlow::zeros(const PathSpace& space, int n_minor, bool with_terminal) {
    MeanFieldFlow f;
    int last = with_terminal ? space.horizon : space.horizon - 1;
    f.cells.resize(last + 1);
    for (int t = 0; t <= last; ++t)
        f.cells[t].assign(space.slice_size(t), Vec(n_minor, 0.0));
    return f;
}

MeanFieldFlow MeanFieldFlow::uniform(const PathSpace& space, int n_minor, bool with_terminal) {
    MeanFieldFlow f = zeros(space, n_minor, with_terminal);
    double w = 1.0 / n_minor;
    for (auto& slice : f.cells)
        for (auto& cell : slice) cell.assign(n_minor, w);
    return f;
}

OccupationFlow OccupationFlow::zeros(const PathSpace& space, int n_minor) {
    OccupationFlow f;
    f.mu_tilde.resize(space.horizon + 1);
    f.m_tilde.resize(space.horizon);
    for (int t = 0; t <= space.horizon; ++t)
        f.mu_tilde[t].assign(space.slice_size(t), Vec(n_minor, 0.0));
    for (int t = 0; t < space.horizon; ++t)
        f.m_tilde[t].assign(space.slice_size(t), Vec(n_minor, 0.0));
    return f;
}

MajorPolicy MajorPolicy::uniform(const PathSpace& space, std::size_t n_actions, double total_volume) {
    MajorPolicy a;
    a.weights.resize(space.horizon);
    double w = 1.0 / total_volume;
    for (int t = 0; t < space.horizon; ++t)
        a.weights[t].assign(space.slice_size(t), Vec(n_actions, w));
    return a;
}

void check_same_shape(const MeanFieldFlow& a, const MeanFieldFlow& b) {
    if (a.cells.size() != b.cells.size()) throw ShapeMismatch("mean-field flows differ in slice count");
    for (std::size_t t = 0; t < a.cells.size(); ++t) {
        if (a.cells[t].size() != b.cells[t].size())
            throw ShapeMismatch("mean-field flows differ in node count");
        for (std::size_t u = 0; u < a.cells[t].size(); ++u)
            if (a.cells[t][u].size() != b.cells[t][u].size())
                throw ShapeMismatch("mean-field flows differ in grid size");
    }
}

void check_flow_shape(const MeanFieldFlow& f, const PathSpace& space, int n_minor, bool with_terminal) {
    int last = with_terminal ? space.horizon : space.horizon - 1;
    if (static_cast<int>(f.cells.size()) != last + 1)
        throw ShapeMismatch("mean-field flow has the wrong slice count");
    for (int t = 0; t <= last; ++t) {
        if (f.cells[t].size() != space.slice_size(t))
            throw ShapeMismatch("mean-field flow node count mismatch");
        for (const auto& cell : f.cells[t])
            if (static_cast<int>(cell.size()) != n_minor)
                throw ShapeMismatch("mean-field flow grid size mismatch");
    }
}

void check_occupation_shape(const OccupationFlow& f, const PathSpace& space, int n_minor) {
    if (static_cast<int>(f.mu_tilde.size()) != space.horizon + 1 ||
        static_cast<int>(f.m_tilde.size()) != space.horizon)
        throw ShapeMismatch("occupation flow has the wrong slice count");
    for (int t = 0; t <= space.horizon; ++t) {
        if (f.mu_tilde[t].size() != space.slice_size(t))
            throw ShapeMismatch("occupation flow node count mismatch");
        for (const auto& cell : f.mu_tilde[t])
            if (static_cast<int>(cell.size()) != n_minor)
                throw ShapeMismatch("occupation flow grid size mismatch");
    }
    for (int t = 0; t < space.horizon; ++t)
        if (f.m_tilde[t].size() != space.slice_size(t))
            throw ShapeMismatch("occupation flow node count mismatch");
}

void check_policy_shape(const MajorPolicy& a, const PathSpace& space, std::size_t n_actions) {
    if (static_cast<int>(a.weights.size()) != space.horizon)
        throw ShapeMismatch("major policy has the wrong slice count");
    for (int t = 0; t < space.horizon; ++t) {
        if (a.weights[t].size() != space.slice_size(t))
            throw ShapeMismatch("major policy node count mismatch");
        for (const auto& w : a.weights[t])
            if (w.size() != n_actions) throw ShapeMismatch("major policy action count mismatch");
    }
}

}  // namespace mmfg
