#include "mmfg/builtins.hpp"

#include <algorithm>

namespace mmfg {

namespace {

AffineTable flat(Vec base) {
    AffineTable t;
    t.base = std::move(base);
    return t;
}

AffineTable zeros(std::size_t n) { return flat(Vec(n, 0.0)); }

/// The worked two-branch stopping example: the major either exits now (worth
/// 0 at t=0, 1 at t=1) or holds to the end (worth 1); the minor chooses
/// between 1/2 now, a bet paying 1 at t=1 if the major has exited, and 1/3
/// at the end.
Scenario make_paper_example() {
    Scenario s;
    s.name = "paper-ex-2.1";
    s.horizon = 2;
    s.major_states = {"active", "stopped"};
    s.absorbing_state = 1;
    s.stopping_mode = true;
    s.minor_grid = {0.0};
    s.actions = ActionSpace::finite({"continue", "stop"});
    s.features = {FeatureKind::TotalMass, {0.0}, {1.0}};
    s.initial_major = {1.0, 0.0};
    s.initial_minor = {1.0};

    // [t][s0][a][s0'], t in {0,1}
    Vec pk;
    for (int t = 0; t < 2; ++t) {
        // active: continue stays, stop exits
        pk.insert(pk.end(), {1.0, 0.0, 0.0, 1.0});
        // stopped: absorbed under both actions
        pk.insert(pk.end(), {0.0, 1.0, 0.0, 1.0});
    }
    s.major_kernel = flat(pk);

    // exit pays 0 at t=0 and 1 at t=1; holding to the end pays 1
    s.major_running = flat({0.0, 0.0, 0.0, 0.0,    // t=0: active (cont, stop), stopped
                            0.0, 1.0, 0.0, 0.0});  // t=1
    s.major_terminal = flat({1.0, 0.0});

    s.minor_kernel = flat({1.0, 1.0, 1.0, 1.0});  // single grid point, both s0, both t
    s.minor_running = zeros(2 * 2);
    // [t][x][s0]: 1/2 now; 1 on the exited branch at t=1; 1/3 at the end
    s.minor_stopping = flat({0.5, 0.5, 0.0, 1.0, 1.0 / 3.0, 1.0 / 3.0});
    validate(s);
    return s;
}

Scenario make_decoupled_toy() {
    Scenario s;
    s.name = "decoupled-toy";
    s.horizon = 2;
    s.major_states = {"lo", "hi"};
    s.stopping_mode = false;
    s.minor_grid = {0.0, 1.0};
    s.actions = ActionSpace::finite({"a0", "a1"});
    s.features = {FeatureKind::TotalMass, {0.0}, {1.0}};
    s.initial_major = {1.0, 0.0};
    s.initial_minor = {0.6, 0.4};

    Vec pk;
    for (int t = 0; t < 2; ++t) {
        pk.insert(pk.end(), {0.7, 0.3, 0.4, 0.6});  // lo: a0, a1
        pk.insert(pk.end(), {0.3, 0.7, 0.6, 0.4});  // hi
    }
    s.major_kernel = flat(pk);
    s.major_running = flat({0.2, 0.6, 0.5, 0.1, 0.2, 0.6, 0.5, 0.1});
    s.major_terminal = flat({0.0, 0.4});

    Vec mk;
    for (int t = 0; t < 2; ++t) {
        mk.insert(mk.end(), {0.8, 0.2, 0.5, 0.5});  // x=0: lo, hi
        mk.insert(mk.end(), {0.3, 0.7, 0.6, 0.4});  // x=1
    }
    s.minor_kernel = flat(mk);
    s.minor_running = flat(Vec(2 * 2 * 2, 0.05));
    s.minor_stopping = flat({0.3, 0.3, 0.5, 0.5,     // t=0
                             0.2, 0.4, 0.6, 0.3,     // t=1
                             0.45, 0.45, 0.45, 0.45});  // t=2
    validate(s);
    return s;
}

/// Bank-run flavor: the solvent bank improves with effort a and with the
/// active depositor mass, P(stay solvent) = a/2 + mass/2; depositors earn
/// interest while active and recover only a fraction after default.
Scenario make_bankrun_toy() {
    Scenario s;
    s.name = "bankrun-toy";
    s.horizon = 3;
    s.major_states = {"default", "solvent"};
    s.stopping_mode = false;
    s.minor_grid = {0.5, 1.0};
    s.actions = ActionSpace::grid({0.0}, {1.0}, 5);
    s.features = {FeatureKind::TotalMass, {0.0}, {1.0}};
    s.initial_major = {0.0, 1.0};
    s.initial_minor = {0.5, 0.5};

    const int T = 3, A = 5;
    const std::size_t kflat = T * 2 * A * 2;
    AffineTable mk;
    mk.base.assign(kflat, 0.0);
    mk.coef.assign(1, Vec(kflat, 0.0));
    for (int t = 0; t < T; ++t)
        for (int a = 0; a < A; ++a) {
            double act = s.actions.points[a][0];
            std::size_t d0 = s.idx_major_kernel(t, 0, a, 0);
            mk.base[d0] = 1.0;  // default is absorbing
            std::size_t s0 = s.idx_major_kernel(t, 1, a, 0);
            std::size_t s1 = s.idx_major_kernel(t, 1, a, 1);
            mk.base[s1] = act / 2.0;
            mk.base[s0] = 1.0 - act / 2.0;
            mk.coef[0][s1] = 0.5;
            mk.coef[0][s0] = -0.5;
        }
    s.major_kernel = std::move(mk);

    AffineTable fr;
    fr.base.assign(T * 2 * A, 0.0);
    fr.coef.assign(1, Vec(T * 2 * A, 0.0));
    for (int t = 0; t < T; ++t)
        for (int a = 0; a < A; ++a) {
            std::size_t i = s.idx_major_running(t, 1, a);
            fr.base[i] = -0.1 * s.actions.points[a][0];
            fr.coef[0][i] = 0.3;
        }
    s.major_running = std::move(fr);

    AffineTable gt;
    gt.base = {0.0, 0.2};
    gt.coef = {{0.0, -0.2}};
    s.major_terminal = std::move(gt);

    Vec mnk;
    for (int t = 0; t < T; ++t) {
        mnk.insert(mnk.end(), {1.0, 0.0, 0.6, 0.4});  // x=0.5: default, solvent
        mnk.insert(mnk.end(), {0.0, 1.0, 0.2, 0.8});  // x=1.0
    }
    s.minor_kernel = flat(mnk);

    Vec fr1;
    for (int t = 0; t < T; ++t) fr1.insert(fr1.end(), {0.0, 0.01, 0.0, 0.02});
    s.minor_running = flat(fr1);

    Vec gt1;
    for (int t = 0; t <= T; ++t) gt1.insert(gt1.end(), {0.2, 0.5, 0.4, 1.0});
    s.minor_stopping = flat(gt1);
    validate(s);
    return s;
}

ControlScenario make_control_toy(bool coupled) {
    ControlScenario cs;
    cs.name = coupled ? "control-toy-coupled" : "control-toy";
    cs.horizon = 2;
    cs.major_states = {"L", "H"};
    cs.minor_grid = {0.0, 1.0};
    cs.major_actions = ActionSpace::finite({"keep", "push"});
    cs.minor_actions = ActionSpace::finite({"idle", "engage"});
    cs.features_sa = {FeatureKind::FirstMoment, {0.0}, {1.0}};
    cs.features_term = {FeatureKind::FirstMoment, {0.0}, {1.0}};
    cs.initial_major = {1.0, 0.0};
    cs.initial_minor = {0.25, 0.75};

    Vec pk;
    for (int t = 0; t < 2; ++t) {
        pk.insert(pk.end(), {0.8, 0.2, 0.3, 0.7});  // L: keep, push
        pk.insert(pk.end(), {0.6, 0.4, 0.2, 0.8});  // H
    }
    cs.major_kernel = flat(pk);

    AffineTable fr;
    fr.base = {0.0, 0.15, 0.1, 0.2, 0.0, 0.15, 0.1, 0.2};
    if (coupled) {
        fr.coef.assign(1, Vec(8, 0.0));
        for (int t = 0; t < 2; ++t)
            for (int s0 = 0; s0 < 2; ++s0) fr.coef[0][cs.idx_major_running(t, s0, 1)] = 0.05;
    }
    cs.major_running = std::move(fr);

    AffineTable gt;
    gt.base = {0.0, 0.3};
    if (coupled) gt.coef = {{0.1, 0.1}};
    cs.major_terminal = std::move(gt);

    // minor transitions depend on the minor's action only
    Vec mk;
    for (int t = 0; t < 2; ++t)
        for (int x = 0; x < 2; ++x)
            for (int s0 = 0; s0 < 2; ++s0)
                mk.insert(mk.end(), {0.7, 0.3, 0.25, 0.75});  // idle row, engage row
    cs.minor_kernel = flat(mk);

    Vec f1;
    for (int t = 0; t < 2; ++t)
        for (int x = 0; x < 2; ++x)
            for (int s0 = 0; s0 < 2; ++s0) f1.insert(f1.end(), {0.1 * x, 0.1 * x + 0.5});
    cs.minor_running = flat(f1);
    cs.minor_terminal = flat({0.0, 0.0, 1.0, 1.0});  // [x][s0]
    validate(cs);
    return cs;
}

}  // namespace

std::vector<std::string> builtin_names() {
    return {"paper-ex-2.1", "decoupled-toy", "bankrun-toy", "control-toy", "control-toy-coupled"};
}

bool builtin_is_control(const std::string& name) {
    return name == "control-toy" || name == "control-toy-coupled";
}

Scenario make_builtin(const std::string& name) {
    if (name == "paper-ex-2.1") return make_paper_example();
    if (name == "decoupled-toy") return make_decoupled_toy();
    if (name == "bankrun-toy") return make_bankrun_toy();
    if (builtin_is_control(name))
        throw ValidationError("builtin \"" + name + "\" is a control scenario");
    throw ValidationError("unknown builtin scenario \"" + name + "\"");
}

ControlScenario make_builtin_control(const std::string& name) {
    if (name == "control-toy") return make_control_toy(false);
    if (name == "control-toy-coupled") return make_control_toy(true);
    throw ValidationError("unknown builtin control scenario \"" + name + "\"");
}

MajorPolicy stop_policy_never(const Scenario& s, const PathSpace& space) {
    MajorPolicy a = MajorPolicy::uniform(space, s.actions.size(), s.actions.total_volume());
    for (auto& slice : a.weights)
        for (auto& w : slice) {
            w.assign(s.actions.size(), 0.0);
            w[0] = 1.0;
        }
    return a;
}

MajorPolicy stop_policy_at(const Scenario& s, const PathSpace& space, int k) {
    if (!s.stopping_mode) throw ValidationError("stop policies require stopping_mode");
    MajorPolicy a = stop_policy_never(s, space);
    for (int t = 0; t < space.horizon; ++t)
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            bool absorbed = space.node(t, u).history.back() == s.absorbing_state;
            if (t == k && !absorbed) a.weights[t][u] = Vec{0.0, 1.0};
        }
    return a;
}

MajorPolicy paper_family_policy(const Scenario& s, const PathSpace& space, double p) {
    if (!s.stopping_mode) throw ValidationError("the example family requires stopping_mode");
    MajorPolicy a = stop_policy_never(s, space);
    for (int t = 0; t < space.horizon; ++t)
        for (std::size_t u = 0; u < space.slice_size(t); ++u) {
            bool absorbed = space.node(t, u).history.back() == s.absorbing_state;
            if (absorbed) continue;
            double ps = t == 0 ? p : 1.0;
            a.weights[t][u] = Vec{1.0 - ps, ps};
        }
    return a;
}

}  // namespace mmfg
