#include "mmfg/scenario.hpp"

#include <cmath>
#include <sstream>

namespace mmfg {

namespace {
constexpr double kRowSumTol = 1e-12;
constexpr double kEntryTol = 1e-12;

std::string row_name(const char* table, int t, int a_or_x, int s0) {
    std::ostringstream os;
    os << table << "[t=" << t << "]";
    if (a_or_x >= 0) os << "[" << a_or_x << "]";
    if (s0 >= 0) os << "[s0=" << s0 << "]";
    return os.str();
}
}  // namespace

ActionSpace ActionSpace::finite(std::vector<std::string> names) {
    ActionSpace a;
    a.kind = ActionSpaceKind::Finite;
    a.labels = std::move(names);
    a.volumes.assign(a.labels.size(), 1.0);
    a.dim = 0;
    return a;
}

ActionSpace ActionSpace::grid(Vec lo, Vec hi, int points_per_dim) {
    if (lo.size() != hi.size() || lo.empty())
        throw ValidationError("action_space: lo/hi dimension mismatch");
    if (points_per_dim < 1) throw ValidationError("action_space: points_per_dim must be >= 1");
    ActionSpace a;
    a.kind = ActionSpaceKind::Grid;
    a.dim = static_cast<int>(lo.size());
    a.lo = std::move(lo);
    a.hi = std::move(hi);
    a.points_per_dim = points_per_dim;
    // uniform grid of cell centers; cell volume = prod(step)
    double cell = 1.0;
    std::vector<Vec> axes(a.dim);
    for (int d = 0; d < a.dim; ++d) {
        double step = (a.hi[d] - a.lo[d]) / points_per_dim;
        cell *= step;
        for (int i = 0; i < points_per_dim; ++i)
            axes[d].push_back(a.lo[d] + (i + 0.5) * step);
    }
    std::size_t total = 1;
    for (int d = 0; d < a.dim; ++d) total *= axes[d].size();
    a.points.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        Vec p(a.dim);
        std::size_t r = i;
        for (int d = a.dim - 1; d >= 0; --d) {
            p[d] = axes[d][r % axes[d].size()];
            r /= axes[d].size();
        }
        a.points[i] = std::move(p);
    }
    a.volumes.assign(total, cell);
    return a;
}

Vec compute_features(const FeatureSpec& spec, const Vec& grid_points, const Vec& mass) {
    switch (spec.kind) {
        case FeatureKind::TotalMass:
            return {util::sum(mass)};
        case FeatureKind::CellMasses:
            return mass;
        case FeatureKind::FirstMoment: {
            double m = 0.0;
            for (std::size_t i = 0; i < mass.size(); ++i) m += grid_points[i] * mass[i];
            return {m};
        }
    }
    return {};
}

void check_feature_box(const FeatureSpec& spec, const Vec& feats) {
    if (feats.size() != spec.box_lo.size())
        throw DimensionMismatch("feature vector has wrong dimension");
    for (std::size_t k = 0; k < feats.size(); ++k) {
        if (feats[k] < spec.box_lo[k] - 1e-9 || feats[k] > spec.box_hi[k] + 1e-9) {
            std::ostringstream os;
            os << "feature " << k << " = " << feats[k] << " outside box ["
               << spec.box_lo[k] << ", " << spec.box_hi[k] << "]";
            throw FeatureOutOfRange(os.str());
        }
    }
}

std::size_t Scenario::idx_major_kernel(int t, int s0, int a, int s0n) const {
    std::size_t S0 = major_states.size(), A = actions.size();
    return ((static_cast<std::size_t>(t) * S0 + s0) * A + a) * S0 + s0n;
}
std::size_t Scenario::idx_minor_kernel(int t, int x, int s0, int xn) const {
    std::size_t S = minor_grid.size(), S0 = major_states.size();
    return ((static_cast<std::size_t>(t) * S + x) * S0 + s0) * S + xn;
}
std::size_t Scenario::idx_major_running(int t, int s0, int a) const {
    std::size_t S0 = major_states.size(), A = actions.size();
    return (static_cast<std::size_t>(t) * S0 + s0) * A + a;
}
std::size_t Scenario::idx_minor(int t, int x, int s0) const {
    std::size_t S = minor_grid.size(), S0 = major_states.size();
    return (static_cast<std::size_t>(t) * S + x) * S0 + s0;
}

Vec evaluate_major_kernel(const Scenario& s, int t, int s0, int a, const Vec& feats) {
    check_feature_box(s.features, feats);
    if (s.hooks.major_kernel) return s.hooks.major_kernel(t, s0, a, feats);
    Vec row(s.n_major());
    for (int j = 0; j < s.n_major(); ++j)
        row[j] = s.major_kernel.eval(s.idx_major_kernel(t, s0, a, j), feats);
    return row;
}

Vec evaluate_minor_kernel(const Scenario& s, int t, int x, int s0, const Vec& feats) {
    check_feature_box(s.features, feats);
    if (s.hooks.minor_kernel) return s.hooks.minor_kernel(t, x, s0, feats);
    Vec row(s.n_minor());
    for (int j = 0; j < s.n_minor(); ++j)
        row[j] = s.minor_kernel.eval(s.idx_minor_kernel(t, x, s0, j), feats);
    return row;
}

double major_running_reward(const Scenario& s, int t, int s0, int a, const Vec& feats) {
    if (s.hooks.major_running) return s.hooks.major_running(t, s0, a, feats);
    return s.major_running.eval(s.idx_major_running(t, s0, a), feats);
}
double major_terminal_reward(const Scenario& s, int s0, const Vec& feats) {
    if (s.hooks.major_terminal) return s.hooks.major_terminal(s0, feats);
    return s.major_terminal.eval(static_cast<std::size_t>(s0), feats);
}
double minor_running_reward(const Scenario& s, int t, int x, int s0, const Vec& feats) {
    if (s.hooks.minor_running) return s.hooks.minor_running(t, x, s0, feats);
    return s.minor_running.eval(s.idx_minor(t, x, s0), feats);
}
double minor_stopping_reward(const Scenario& s, int t, int x, int s0, const Vec& feats) {
    if (s.hooks.minor_stopping) return s.hooks.minor_stopping(t, x, s0, feats);
    return s.minor_stopping.eval(s.idx_minor(t, x, s0), feats);
}

namespace {

void check_law(const Vec& law, const char* what) {
    double sum = util::sum(law);
    if (std::fabs(sum - 1.0) > kRowSumTol) {
        std::ostringstream os;
        os << what << " sums to " << sum << ", expected 1";
        throw ValidationError(os.str());
    }
    for (double v : law)
        if (v < -kEntryTol) throw ValidationError(std::string(what) + " has a negative entry");
}

/// A kernel row base+coef stays a probability vector over the whole box iff
/// (i) base sums to 1, (ii) each coefficient row sums to 0, and (iii) every
/// entry is >= 0 at every box corner (entries are affine, so corners are the
/// extremes). For large feature dimension the corners are sampled.
void check_affine_row(const AffineTable& tab, std::size_t offset, std::size_t n,
                      const FeatureSpec& spec, const std::string& name) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += tab.base[offset + j];
    if (std::fabs(s - 1.0) > kRowSumTol) {
        std::ostringstream os;
        os << name << " sums to " << s << " at feature zero, expected 1";
        throw ValidationError(os.str());
    }
    for (std::size_t k = 0; k < tab.coef.size(); ++k) {
        double cs = 0.0;
        for (std::size_t j = 0; j < n; ++j) cs += tab.coef[k][offset + j];
        if (std::fabs(cs) > kRowSumTol) {
            std::ostringstream os;
            os << name << " feature " << k << " coefficients sum to " << cs
               << "; rows would not stay probability vectors";
            throw ValidationError(os.str());
        }
    }
    std::size_t K = spec.box_lo.size();
    bool exhaustive = K <= 12;
    std::size_t corners = exhaustive ? (std::size_t(1) << K) : 4096;
    util::Rng rng(12345);
    Vec feats(K);
    for (std::size_t c = 0; c < corners; ++c) {
        for (std::size_t k = 0; k < K; ++k) {
            bool hi = exhaustive ? ((c >> k) & 1) : (rng.uniform() < 0.5);
            feats[k] = hi ? spec.box_hi[k] : spec.box_lo[k];
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (tab.eval(offset + j, feats) < -kEntryTol) {
                std::ostringstream os;
                os << name << " entry " << j << " goes negative inside the feature box";
                throw ValidationError(os.str());
            }
        }
    }
}

}  // namespace

void validate(const Scenario& s) {
    if (s.horizon < 1) throw ValidationError("horizon must be >= 1");
    if (s.major_states.empty()) throw ValidationError("major_states is empty");
    if (s.minor_grid.empty()) throw ValidationError("minor_grid is empty");
    if (s.actions.size() == 0) throw ValidationError("action_space is empty");
    int nf = s.n_features();
    if (static_cast<int>(s.features.box_lo.size()) != nf ||
        static_cast<int>(s.features.box_hi.size()) != nf)
        throw ValidationError("feature box dimension does not match the declared feature kind");
    for (int k = 0; k < nf; ++k)
        if (s.features.box_lo[k] > s.features.box_hi[k])
            throw ValidationError("feature box is empty");

    const std::size_t S0 = s.major_states.size(), S = s.minor_grid.size(), A = s.actions.size();
    const std::size_t T = static_cast<std::size_t>(s.horizon);

    auto check_table = [&](const AffineTable& tab, std::size_t flat, const char* what) {
        if (tab.base.size() != flat) {
            std::ostringstream os;
            os << what << " has " << tab.base.size() << " entries, expected " << flat;
            throw DimensionMismatch(os.str());
        }
        if (!tab.coef.empty() && static_cast<int>(tab.coef.size()) != nf)
            throw DimensionMismatch(std::string(what) + ": coefficient tables do not match feature count");
        for (const auto& c : tab.coef)
            if (c.size() != flat)
                throw DimensionMismatch(std::string(what) + ": coefficient table shape mismatch");
        for (double v : tab.base)
            if (!std::isfinite(v)) throw ValidationError(std::string(what) + " has a non-finite entry");
    };
    check_table(s.major_kernel, T * S0 * A * S0, "major_kernel");
    check_table(s.minor_kernel, T * S * S0 * S, "minor_kernel");
    check_table(s.major_running, T * S0 * A, "major_running_reward");
    check_table(s.major_terminal, S0, "major_terminal_reward");
    check_table(s.minor_running, T * S * S0, "minor_continuation_reward");
    check_table(s.minor_stopping, (T + 1) * S * S0, "minor_stopping_reward");

    check_law(s.initial_major, "initial_major_law");
    check_law(s.initial_minor, "initial_minor_law");
    if (s.initial_major.size() != S0 || s.initial_minor.size() != S)
        throw DimensionMismatch("initial law dimension mismatch");

    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t s0 = 0; s0 < S0; ++s0)
            for (std::size_t a = 0; a < A; ++a)
                check_affine_row(s.major_kernel, s.idx_major_kernel(t, s0, a, 0), S0,
                                 s.features, row_name("major_kernel", t, a, s0));
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t x = 0; x < S; ++x)
            for (std::size_t s0 = 0; s0 < S0; ++s0)
                check_affine_row(s.minor_kernel, s.idx_minor_kernel(t, x, s0, 0), S,
                                 s.features, row_name("minor_kernel", t, x, s0));

    if (s.stopping_mode) {
        if (s.absorbing_state < 0 || s.absorbing_state >= static_cast<int>(S0))
            throw ValidationError("stopping_mode requires a designated absorbing state");
        if (A != 2) throw ValidationError("stopping_mode requires the binary action set {0,1}");
        const int d = s.absorbing_state;
        auto is_delta_row = [&](std::size_t off) {
            for (std::size_t j = 0; j < S0; ++j) {
                double want = (static_cast<int>(j) == d) ? 1.0 : 0.0;
                if (std::fabs(s.major_kernel.base[off + j] - want) > kRowSumTol) return false;
                for (const auto& c : s.major_kernel.coef)
                    if (std::fabs(c[off + j]) > kRowSumTol) return false;
            }
            return true;
        };
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t s0 = 0; s0 < S0; ++s0) {
                if (!is_delta_row(s.idx_major_kernel(t, s0, 1, 0)))
                    throw ValidationError(row_name("major_kernel (stop action)", t, 1, s0) +
                                          " must be the point mass at the absorbing state");
            }
            if (!is_delta_row(s.idx_major_kernel(t, d, 0, 0)))
                throw ValidationError(row_name("major_kernel (absorbing state)", t, 0, d) +
                                      " must stay at the absorbing state");
            // stop must weakly dominate once absorbed, at every box corner
            std::size_t i1 = s.idx_major_running(t, d, 1), i0 = s.idx_major_running(t, d, 0);
            std::size_t K = s.features.box_lo.size();
            std::size_t corners = std::size_t(1) << std::min<std::size_t>(K, 12);
            Vec feats(K);
            for (std::size_t c = 0; c < corners; ++c) {
                for (std::size_t k = 0; k < K; ++k)
                    feats[k] = ((c >> k) & 1) ? s.features.box_hi[k] : s.features.box_lo[k];
                if (s.major_running.eval(i1, feats) < s.major_running.eval(i0, feats) - kEntryTol)
                    throw ValidationError(row_name("major_running_reward (absorbed)", t, -1, d) +
                                          ": stopping must not be worse than continuing at the exit state");
            }
        }
    }
}

}  // namespace mmfg
