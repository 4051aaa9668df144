#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mmfg/errors.hpp"
#include "mmfg/util.hpp"

namespace mmfg {

enum class ActionSpaceKind { Finite, Grid };

/// Major (or minor, in the control variant) action set. A finite set carries
/// unit reference weights; a grid discretizes a box in R^dim with uniform
/// cells, and `volumes` holds the per-cell volume so densities integrate
/// correctly.
struct ActionSpace {
    ActionSpaceKind kind = ActionSpaceKind::Finite;
    std::vector<std::string> labels;       // finite case
    std::vector<Vec> points;               // grid case: coordinates per action
    Vec lo, hi;                            // grid box
    int points_per_dim = 0;
    int dim = 0;
    Vec volumes;                           // reference weight per action

    std::size_t size() const { return volumes.size(); }
    bool continuous() const { return kind == ActionSpaceKind::Grid; }
    double total_volume() const { return util::sum(volumes); }

    static ActionSpace finite(std::vector<std::string> names);
    static ActionSpace grid(Vec lo, Vec hi, int points_per_dim);
};

enum class FeatureKind { TotalMass, CellMasses, FirstMoment };

/// Declares how a subprobability vector over the minor grid (or over
/// state-action cells in the control variant) is reduced to the finite
/// feature vector that kernels and rewards depend on.
struct FeatureSpec {
    FeatureKind kind = FeatureKind::TotalMass;
    Vec box_lo, box_hi;  // declared bounds per feature

    int dim(std::size_t cells) const {
        return kind == FeatureKind::CellMasses ? static_cast<int>(cells) : 1;
    }
};

/// Tabulated values with affine feature dependence:
///   value(idx, phi) = base[idx] + sum_k coef[k][idx] * phi[k].
struct AffineTable {
    Vec base;
    std::vector<Vec> coef;  // [feature][idx], may be empty

    double eval(std::size_t idx, const Vec& feats) const {
        double v = base[idx];
        for (std::size_t k = 0; k < coef.size(); ++k) v += coef[k][idx] * feats[k];
        return v;
    }
    bool trivial() const {
        for (const auto& c : coef)
            for (double v : c)
                if (v != 0.0) return false;
        return true;
    }
};

/// Optional programmatic overrides for embedded use. When set they replace
/// the corresponding table; such scenarios are not serializable.
struct ScenarioHooks {
    std::function<Vec(int t, int s0, int a, const Vec& feats)> major_kernel;
    std::function<Vec(int t, int x, int s0, const Vec& feats)> minor_kernel;
    std::function<double(int t, int s0, int a, const Vec& feats)> major_running;
    std::function<double(int s0, const Vec& feats)> major_terminal;
    std::function<double(int t, int x, int s0, const Vec& feats)> minor_running;
    std::function<double(int t, int x, int s0, const Vec& feats)> minor_stopping;
};

/// Complete problem data for the stopping variant. Kernels and rewards are
/// tabulated over (time, own state, current major state, action) with affine
/// feature coefficients; flat index layouts are documented next to each
/// accessor in scenario.cpp.
struct Scenario {
    std::string name;
    int horizon = 1;  // T; the time set is {0, ..., T}
    std::vector<std::string> major_states;
    int absorbing_state = -1;  // index of the exit state, -1 if none
    bool stopping_mode = false;
    Vec minor_grid;
    ActionSpace actions;
    FeatureSpec features;

    AffineTable major_kernel;     // [t][s0][a][s0']
    AffineTable minor_kernel;     // [t][x][s0][x']
    AffineTable major_running;    // [t][s0][a]
    AffineTable major_terminal;   // [s0]
    AffineTable minor_running;    // [t][x][s0], t in 0..T-1
    AffineTable minor_stopping;   // [t][x][s0], t in 0..T

    Vec initial_major;  // over major_states
    Vec initial_minor;  // over minor_grid

    ScenarioHooks hooks;

    int n_major() const { return static_cast<int>(major_states.size()); }
    int n_minor() const { return static_cast<int>(minor_grid.size()); }
    int n_actions() const { return static_cast<int>(actions.size()); }
    int n_features() const { return features.dim(minor_grid.size()); }

    // flat indexers
    std::size_t idx_major_kernel(int t, int s0, int a, int s0n) const;
    std::size_t idx_minor_kernel(int t, int x, int s0, int xn) const;
    std::size_t idx_major_running(int t, int s0, int a) const;
    std::size_t idx_minor(int t, int x, int s0) const;
};

/// Reduces a mass vector over the minor grid to the declared feature vector.
Vec compute_features(const FeatureSpec& spec, const Vec& grid_points, const Vec& mass);

/// Throws FeatureOutOfRange if feats is outside the declared box (with a
/// small tolerance for roundoff at the boundary).
void check_feature_box(const FeatureSpec& spec, const Vec& feats);

/// Row of P0_{t+1}(s0, a, feats) over major states.
Vec evaluate_major_kernel(const Scenario& s, int t, int s0, int a, const Vec& feats);
/// Row of P_{t+1}(x, s0, feats) over the minor grid.
Vec evaluate_minor_kernel(const Scenario& s, int t, int x, int s0, const Vec& feats);

double major_running_reward(const Scenario& s, int t, int s0, int a, const Vec& feats);
double major_terminal_reward(const Scenario& s, int s0, const Vec& feats);
double minor_running_reward(const Scenario& s, int t, int x, int s0, const Vec& feats);
double minor_stopping_reward(const Scenario& s, int t, int x, int s0, const Vec& feats);

/// Checks every invariant (row sums at feature zero, probability rows over
/// the whole feature box, initial laws, stopping-mode structure). Throws
/// ValidationError naming the offending table and row.
void validate(const Scenario& s);

}  // namespace mmfg
