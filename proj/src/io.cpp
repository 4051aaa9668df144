#include "mmfg/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mmfg {

using nlohmann::json;

namespace {

json table_to_json(const AffineTable& t) {
    json j;
    j["base"] = t.base;
    if (!t.coef.empty()) j["coef"] = t.coef;
    return j;
}

AffineTable table_from_json(const json& j, const char* what) {
    if (!j.contains("base")) throw ParseError(std::string(what) + ": missing \"base\"");
    AffineTable t;
    t.base = j.at("base").get<Vec>();
    if (j.contains("coef")) t.coef = j.at("coef").get<std::vector<Vec>>();
    return t;
}

json actions_to_json(const ActionSpace& a) {
    json j;
    if (a.kind == ActionSpaceKind::Finite) {
        j["kind"] = "finite";
        j["labels"] = a.labels;
    } else {
        j["kind"] = "grid";
        j["lo"] = a.lo;
        j["hi"] = a.hi;
        j["points_per_dim"] = a.points_per_dim;
    }
    return j;
}

ActionSpace actions_from_json(const json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "finite") return ActionSpace::finite(j.at("labels").get<std::vector<std::string>>());
    if (kind == "grid")
        return ActionSpace::grid(j.at("lo").get<Vec>(), j.at("hi").get<Vec>(),
                                 j.at("points_per_dim").get<int>());
    throw ParseError("action_space kind must be \"finite\" or \"grid\"");
}

json features_to_json(const FeatureSpec& f) {
    json j;
    j["kind"] = f.kind == FeatureKind::TotalMass
                    ? "total_mass"
                    : (f.kind == FeatureKind::CellMasses ? "cell_masses" : "first_moment");
    j["box_lo"] = f.box_lo;
    j["box_hi"] = f.box_hi;
    return j;
}

FeatureSpec features_from_json(const json& j) {
    FeatureSpec f;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "total_mass")
        f.kind = FeatureKind::TotalMass;
    else if (kind == "cell_masses")
        f.kind = FeatureKind::CellMasses;
    else if (kind == "first_moment")
        f.kind = FeatureKind::FirstMoment;
    else
        throw ParseError("feature kind must be total_mass, cell_masses or first_moment");
    f.box_lo = j.at("box_lo").get<Vec>();
    f.box_hi = j.at("box_hi").get<Vec>();
    return f;
}

json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
}

template <typename T>
T get_or_throw(const json& j, const char* key) {
    if (!j.contains(key)) throw ParseError(std::string("missing field \"") + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("field \"") + key + "\": " + e.what());
    }
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
    json j;
    j["format_version"] = 1;
    j["kind"] = "stopping";
    j["name"] = s.name;
    j["horizon"] = s.horizon;
    j["major_states"] = s.major_states;
    if (s.absorbing_state >= 0) j["absorbing_state"] = s.major_states[s.absorbing_state];
    j["stopping_mode"] = s.stopping_mode;
    j["minor_grid"] = s.minor_grid;
    j["action_space"] = actions_to_json(s.actions);
    j["features"] = features_to_json(s.features);
    j["initial_major_law"] = s.initial_major;
    j["initial_minor_law"] = s.initial_minor;
    j["major_kernel"] = table_to_json(s.major_kernel);
    j["minor_kernel"] = table_to_json(s.minor_kernel);
    j["major_running_reward"] = table_to_json(s.major_running);
    j["major_terminal_reward"] = table_to_json(s.major_terminal);
    j["minor_continuation_reward"] = table_to_json(s.minor_running);
    j["minor_stopping_reward"] = table_to_json(s.minor_stopping);
    return j.dump(2) + "\n";
}

std::string scenario_to_json(const ControlScenario& cs) {
    json j;
    j["format_version"] = 1;
    j["kind"] = "control";
    j["name"] = cs.name;
    j["horizon"] = cs.horizon;
    j["major_states"] = cs.major_states;
    j["minor_grid"] = cs.minor_grid;
    j["major_action_space"] = actions_to_json(cs.major_actions);
    j["minor_action_space"] = actions_to_json(cs.minor_actions);
    j["features_state_action"] = features_to_json(cs.features_sa);
    j["features_terminal"] = features_to_json(cs.features_term);
    j["initial_major_law"] = cs.initial_major;
    j["initial_minor_law"] = cs.initial_minor;
    j["major_kernel"] = table_to_json(cs.major_kernel);
    j["minor_kernel"] = table_to_json(cs.minor_kernel);
    j["major_running_reward"] = table_to_json(cs.major_running);
    j["major_terminal_reward"] = table_to_json(cs.major_terminal);
    j["minor_running_reward"] = table_to_json(cs.minor_running);
    j["minor_terminal_reward"] = table_to_json(cs.minor_terminal);
    return j.dump(2) + "\n";
}

AnyScenario scenario_from_json(const std::string& text) {
    json j = parse(text);
    int version = get_or_throw<int>(j, "format_version");
    if (version != 1) throw ParseError("unsupported format_version");
    std::string kind = j.contains("kind") ? j.at("kind").get<std::string>() : "stopping";

    if (kind == "stopping") {
        Scenario s;
        s.name = j.value("name", "");
        s.horizon = get_or_throw<int>(j, "horizon");
        s.major_states = get_or_throw<std::vector<std::string>>(j, "major_states");
        s.stopping_mode = j.value("stopping_mode", false);
        if (j.contains("absorbing_state")) {
            std::string lbl = j.at("absorbing_state").get<std::string>();
            for (std::size_t i = 0; i < s.major_states.size(); ++i)
                if (s.major_states[i] == lbl) s.absorbing_state = static_cast<int>(i);
            if (s.absorbing_state < 0)
                throw ParseError("absorbing_state \"" + lbl + "\" is not a major state");
        }
        s.minor_grid = get_or_throw<Vec>(j, "minor_grid");
        s.actions = actions_from_json(j.at("action_space"));
        s.features = features_from_json(j.at("features"));
        s.initial_major = get_or_throw<Vec>(j, "initial_major_law");
        s.initial_minor = get_or_throw<Vec>(j, "initial_minor_law");
        s.major_kernel = table_from_json(j.at("major_kernel"), "major_kernel");
        s.minor_kernel = table_from_json(j.at("minor_kernel"), "minor_kernel");
        s.major_running = table_from_json(j.at("major_running_reward"), "major_running_reward");
        s.major_terminal = table_from_json(j.at("major_terminal_reward"), "major_terminal_reward");
        s.minor_running =
            table_from_json(j.at("minor_continuation_reward"), "minor_continuation_reward");
        s.minor_stopping = table_from_json(j.at("minor_stopping_reward"), "minor_stopping_reward");
        validate(s);
        return s;
    }
    if (kind == "control") {
        ControlScenario cs;
        cs.name = j.value("name", "");
        cs.horizon = get_or_throw<int>(j, "horizon");
        cs.major_states = get_or_throw<std::vector<std::string>>(j, "major_states");
        cs.minor_grid = get_or_throw<Vec>(j, "minor_grid");
        cs.major_actions = actions_from_json(j.at("major_action_space"));
        cs.minor_actions = actions_from_json(j.at("minor_action_space"));
        cs.features_sa = features_from_json(j.at("features_state_action"));
        cs.features_term = features_from_json(j.at("features_terminal"));
        cs.initial_major = get_or_throw<Vec>(j, "initial_major_law");
        cs.initial_minor = get_or_throw<Vec>(j, "initial_minor_law");
        cs.major_kernel = table_from_json(j.at("major_kernel"), "major_kernel");
        cs.minor_kernel = table_from_json(j.at("minor_kernel"), "minor_kernel");
        cs.major_running = table_from_json(j.at("major_running_reward"), "major_running_reward");
        cs.major_terminal = table_from_json(j.at("major_terminal_reward"), "major_terminal_reward");
        cs.minor_running = table_from_json(j.at("minor_running_reward"), "minor_running_reward");
        cs.minor_terminal = table_from_json(j.at("minor_terminal_reward"), "minor_terminal_reward");
        validate(cs);
        return cs;
    }
    throw ParseError("kind must be \"stopping\" or \"control\"");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << text;
}

AnyScenario load_scenario_file(const std::string& path) {
    return scenario_from_json(read_text_file(path));
}

Scenario load_scenario(const std::string& path) {
    AnyScenario any = load_scenario_file(path);
    if (std::holds_alternative<ControlScenario>(any))
        throw ParseError("expected a stopping scenario, found kind \"control\": " + path);
    return std::get<Scenario>(std::move(any));
}

void save_scenario_file(const AnyScenario& s, const std::string& path) {
    if (std::holds_alternative<Scenario>(s))
        write_text_file(path, scenario_to_json(std::get<Scenario>(s)));
    else
        write_text_file(path, scenario_to_json(std::get<ControlScenario>(s)));
}

namespace {

json residuals_to_json(const Residuals& r) {
    return json{{"major_gap", r.major_gap},
                {"minor_gap", r.minor_gap},
                {"consistency", r.consistency},
                {"iteration_delta", r.iteration_delta},
                {"support_outside", r.support_outside}};
}

Residuals residuals_from_json(const json& j) {
    Residuals r;
    r.major_gap = j.value("major_gap", 0.0);
    r.minor_gap = j.value("minor_gap", 0.0);
    r.consistency = j.value("consistency", 0.0);
    r.iteration_delta = j.value("iteration_delta", 0.0);
    r.support_outside = j.value("support_outside", 0.0);
    return r;
}

json trace_to_json(const std::vector<AnnealStage>& trace) {
    json arr = json::array();
    for (const auto& st : trace)
        arr.push_back(json{{"lambda", st.lambda},
                           {"iterations", st.iterations},
                           {"converged", st.converged},
                           {"residuals", residuals_to_json(st.residuals)}});
    return arr;
}

std::vector<AnnealStage> trace_from_json(const json& arr) {
    std::vector<AnnealStage> out;
    for (const auto& j : arr) {
        AnnealStage st;
        st.lambda = j.value("lambda", 0.0);
        st.iterations = j.value("iterations", 0);
        st.converged = j.value("converged", false);
        if (j.contains("residuals")) st.residuals = residuals_from_json(j.at("residuals"));
        out.push_back(st);
    }
    return out;
}

json common_report_fields(const std::string& name, const std::string& kind, double lambda,
                          bool annealed, double major_value, double minor_value,
                          const Residuals& residuals, const std::vector<AnnealStage>& trace,
                          int iterations, bool converged, double stalled_lambda) {
    json j;
    j["format_version"] = 1;
    j["scenario_name"] = name;
    j["kind"] = kind;
    j["lambda"] = lambda;
    j["annealed"] = annealed;
    j["major_value"] = major_value;
    j["minor_value"] = minor_value;
    j["residuals"] = residuals_to_json(residuals);
    j["lambda_trace"] = trace_to_json(trace);
    j["iterations"] = iterations;
    j["converged"] = converged;
    if (stalled_lambda >= 0.0) j["stalled_lambda"] = stalled_lambda;
    return j;
}

}  // namespace

std::string report_to_json(const EquilibriumReport& rep) {
    json j = common_report_fields(rep.scenario_name, "stopping", rep.lambda, rep.annealed,
                                  rep.major_value, rep.minor_value, rep.residuals,
                                  rep.lambda_trace, rep.iterations, rep.converged,
                                  rep.stalled_lambda);
    j["mu"] = rep.mu.cells;
    j["m"] = rep.m.cells;
    j["alpha"] = rep.alpha.weights;
    j["mu_tilde"] = rep.flow.mu_tilde;
    j["m_tilde"] = rep.flow.m_tilde;
    j["p"] = rep.p.p;
    return j.dump(2) + "\n";
}

std::string report_to_json(const ControlEquilibriumReport& rep) {
    json j = common_report_fields(rep.scenario_name, "control", rep.lambda, rep.annealed,
                                  rep.major_value, rep.minor_value, rep.residuals,
                                  rep.lambda_trace, rep.iterations, rep.converged,
                                  rep.stalled_lambda);
    j["mu"] = rep.mu.cells;
    j["alpha0"] = rep.alpha0.weights;
    j["v"] = rep.v.v;
    return j.dump(2) + "\n";
}

bool json_report_is_control(const std::string& text) {
    return parse(text).value("kind", "stopping") == "control";
}

EquilibriumReport report_from_json(const std::string& text) {
    json j = parse(text);
    if (j.value("kind", "stopping") != "stopping")
        throw ParseError("report kind is not \"stopping\"");
    EquilibriumReport rep;
    rep.scenario_name = j.value("scenario_name", "");
    rep.lambda = j.value("lambda", 0.0);
    rep.annealed = j.value("annealed", false);
    rep.major_value = j.value("major_value", 0.0);
    rep.minor_value = j.value("minor_value", 0.0);
    if (j.contains("residuals")) rep.residuals = residuals_from_json(j.at("residuals"));
    if (j.contains("lambda_trace")) rep.lambda_trace = trace_from_json(j.at("lambda_trace"));
    rep.iterations = j.value("iterations", 0);
    rep.converged = j.value("converged", false);
    rep.stalled_lambda = j.value("stalled_lambda", -1.0);
    rep.mu.cells = get_or_throw<std::vector<std::vector<Vec>>>(j, "mu");
    rep.m.cells = get_or_throw<std::vector<std::vector<Vec>>>(j, "m");
    rep.alpha.weights = get_or_throw<std::vector<std::vector<Vec>>>(j, "alpha");
    rep.flow.mu_tilde = get_or_throw<std::vector<std::vector<Vec>>>(j, "mu_tilde");
    rep.flow.m_tilde = get_or_throw<std::vector<std::vector<Vec>>>(j, "m_tilde");
    rep.p.p = get_or_throw<std::vector<Vec>>(j, "p");
    return rep;
}

ControlEquilibriumReport control_report_from_json(const std::string& text) {
    json j = parse(text);
    if (j.value("kind", "stopping") != "control") throw ParseError("report kind is not \"control\"");
    ControlEquilibriumReport rep;
    rep.scenario_name = j.value("scenario_name", "");
    rep.lambda = j.value("lambda", 0.0);
    rep.annealed = j.value("annealed", false);
    rep.major_value = j.value("major_value", 0.0);
    rep.minor_value = j.value("minor_value", 0.0);
    if (j.contains("residuals")) rep.residuals = residuals_from_json(j.at("residuals"));
    if (j.contains("lambda_trace")) rep.lambda_trace = trace_from_json(j.at("lambda_trace"));
    rep.iterations = j.value("iterations", 0);
    rep.converged = j.value("converged", false);
    rep.stalled_lambda = j.value("stalled_lambda", -1.0);
    rep.mu.cells = get_or_throw<std::vector<std::vector<Vec>>>(j, "mu");
    rep.alpha0.weights = get_or_throw<std::vector<std::vector<Vec>>>(j, "alpha0");
    rep.v.v = get_or_throw<std::vector<std::vector<Vec>>>(j, "v");
    return rep;
}

namespace {
std::string fd(double v) { return util::format_double(v); }
}

std::string export_policy_csv(const MajorPolicy& alpha) {
    std::ostringstream os;
    os << "t,node_id,action_index,weight\n";
    for (std::size_t t = 0; t < alpha.weights.size(); ++t)
        for (std::size_t u = 0; u < alpha.weights[t].size(); ++u)
            for (std::size_t a = 0; a < alpha.weights[t][u].size(); ++a)
                os << t << "," << u << "," << a << "," << fd(alpha.weights[t][u][a]) << "\n";
    return os.str();
}

std::string export_values_csv(const MajorValue& value) {
    std::ostringstream os;
    os << "t,node_id,value\n";
    for (std::size_t t = 0; t < value.v.size(); ++t)
        for (std::size_t u = 0; u < value.v[t].size(); ++u)
            os << t << "," << u << "," << fd(value.v[t][u]) << "\n";
    return os.str();
}

std::string export_marginal_csv(const MajorMarginal& p) {
    std::ostringstream os;
    os << "t,node_id,p\n";
    for (std::size_t t = 0; t < p.p.size(); ++t)
        for (std::size_t u = 0; u < p.p[t].size(); ++u)
            os << t << "," << u << "," << fd(p.p[t][u]) << "\n";
    return os.str();
}

std::string export_mean_field_csv(const MeanFieldFlow& flow) {
    std::ostringstream os;
    os << "t,node_id,x_index,mass\n";
    for (std::size_t t = 0; t < flow.cells.size(); ++t)
        for (std::size_t u = 0; u < flow.cells[t].size(); ++u)
            for (std::size_t x = 0; x < flow.cells[t][u].size(); ++x)
                os << t << "," << u << "," << x << "," << fd(flow.cells[t][u][x]) << "\n";
    return os.str();
}

std::string export_occupation_csv(const OccupationFlow& flow) {
    std::ostringstream os;
    os << "t,x_index,node_id,mu_tilde,m_tilde\n";
    for (std::size_t t = 0; t < flow.mu_tilde.size(); ++t)
        for (std::size_t u = 0; u < flow.mu_tilde[t].size(); ++u)
            for (std::size_t x = 0; x < flow.mu_tilde[t][u].size(); ++x) {
                double m = t < flow.m_tilde.size() ? flow.m_tilde[t][u][x] : 0.0;
                os << t << "," << x << "," << u << "," << fd(flow.mu_tilde[t][u][x]) << ","
                   << fd(m) << "\n";
            }
    return os.str();
}

std::string export_state_action_csv(const StateActionFlow& v, int n_minor, int n_minor_actions) {
    std::ostringstream os;
    os << "t,x_index,node_id,action_index,mass\n";
    const std::size_t T = v.v.size() - 1;
    for (std::size_t t = 0; t < v.v.size(); ++t)
        for (std::size_t u = 0; u < v.v[t].size(); ++u) {
            if (t < T) {
                for (int x = 0; x < n_minor; ++x)
                    for (int a = 0; a < n_minor_actions; ++a)
                        os << t << "," << x << "," << u << "," << a << ","
                           << fd(v.v[t][u][x * n_minor_actions + a]) << "\n";
            } else {
                for (int x = 0; x < n_minor; ++x)
                    os << t << "," << x << "," << u << ",-1," << fd(v.v[t][u][x]) << "\n";
            }
        }
    return os.str();
}

}  // namespace mmfg
