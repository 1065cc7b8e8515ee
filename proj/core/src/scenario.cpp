#include "invar/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

namespace invar {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

using Section = std::map<std::string, std::string>;

struct RawConfig {
    std::map<std::string, Section> sections;
    std::map<std::string, std::map<std::string, int>> lines;  // for error reporting
};

RawConfig parse_raw(std::istream& is) {
    RawConfig raw;
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("unterminated section header", line_no);
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ParseError("empty section name", line_no);
            raw.sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
        if (section.empty()) throw ParseError("key outside any section", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", line_no);
        if (raw.sections[section].count(key)) throw ParseError("duplicate key '" + key + "'", line_no);
        raw.sections[section][key] = value;
        raw.lines[section][key] = line_no;
    }
    return raw;
}

double to_double(const std::string& v, const std::string& where, int line) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ParseError(where + ": cannot parse number '" + v + "'", line);
    return d;
}

std::vector<double> to_list(const std::string& v, const std::string& where, int line) {
    std::vector<double> out;
    std::string item;
    std::istringstream ss(v);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ParseError(where + ": empty list element", line);
        out.push_back(to_double(item, where, line));
    }
    return out;
}

// Tracks key consumption so typos are rejected.
class SectionReader {
public:
    SectionReader(RawConfig& raw, std::string section)
        : raw_(raw), section_(std::move(section)) {}

    bool present() const { return raw_.sections.count(section_) > 0; }

    std::string* find(const std::string& key) {
        auto sec = raw_.sections.find(section_);
        if (sec == raw_.sections.end()) return nullptr;
        auto it = sec->second.find(key);
        if (it == sec->second.end()) return nullptr;
        consumed_[key] = true;
        return &it->second;
    }
    int line(const std::string& key) const {
        auto sec = raw_.lines.find(section_);
        if (sec == raw_.lines.end()) return -1;
        auto it = sec->second.find(key);
        return it == sec->second.end() ? -1 : it->second;
    }

    double number(const std::string& key, double fallback) {
        auto* v = find(key);
        return v ? to_double(*v, section_ + "." + key, line(key)) : fallback;
    }
    double required_number(const std::string& key) {
        auto* v = find(key);
        if (!v) throw ParseError("missing required key " + section_ + "." + key);
        return to_double(*v, section_ + "." + key, line(key));
    }
    std::string text(const std::string& key, const std::string& fallback) {
        auto* v = find(key);
        return v ? *v : fallback;
    }
    std::vector<double> list(const std::string& key) {
        auto* v = find(key);
        if (!v) return {};
        return to_list(*v, section_ + "." + key, line(key));
    }

    void finish() {
        auto sec = raw_.sections.find(section_);
        if (sec == raw_.sections.end()) return;
        for (const auto& [key, value] : sec->second)
            if (!consumed_.count(key))
                throw ParseError("unknown key '" + key + "' in section [" + section_ + "]",
                                 line(key));
    }

    // Remaining keys as a numeric map (used by [nominal]).
    std::map<std::string, double> rest_numbers() {
        std::map<std::string, double> out;
        auto sec = raw_.sections.find(section_);
        if (sec == raw_.sections.end()) return out;
        for (const auto& [key, value] : sec->second) {
            if (consumed_.count(key)) continue;
            out[key] = to_double(value, section_ + "." + key, line(key));
            consumed_[key] = true;
        }
        return out;
    }

private:
    RawConfig& raw_;
    std::string section_;
    std::map<std::string, bool> consumed_;
};

BetaKind parse_beta(const std::string& v) {
    if (v == "inverse") return BetaKind::inverse;
    if (v == "log_ratio") return BetaKind::log_ratio;
    throw ParseError("unknown reciprocal barrier kind '" + v + "'");
}
std::string beta_name(BetaKind k) { return k == BetaKind::inverse ? "inverse" : "log_ratio"; }

RampKind parse_ramp(const std::string& v) {
    if (v == "linear") return RampKind::linear;
    if (v == "cosine") return RampKind::cosine;
    throw ParseError("unknown ramp kind '" + v + "'");
}
std::string ramp_name(RampKind k) { return k == RampKind::linear ? "linear" : "cosine"; }

ControlLaw parse_law(const std::string& v) {
    if (v == "adaptive") return ControlLaw::adaptive;
    if (v == "local") return ControlLaw::local;
    if (v == "square") return ControlLaw::square;
    throw ParseError("unknown control law '" + v + "'");
}
std::string law_name(ControlLaw l) {
    switch (l) {
    case ControlLaw::adaptive: return "adaptive";
    case ControlLaw::local: return "local";
    case ControlLaw::square: return "square";
    }
    return "adaptive";
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

} // namespace

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
    auto veq = [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        return x.size() == y.size() && x == y;
    };
    return a.plant_type == b.plant_type && a.quad.mass == b.quad.mass &&
           a.quad.inertia == b.quad.inertia && a.quad.arm == b.quad.arm &&
           a.quad.drag_v == b.quad.drag_v && a.quad.drag_phi == b.quad.drag_phi &&
           a.quad.gravity == b.quad.gravity && veq(a.box_bounds, b.box_bounds) && a.r2 == b.r2 &&
           a.selector == b.selector && a.mu_x == b.mu_x && a.nu_h == b.nu_h && a.eps_h == b.eps_h &&
           a.beta_x == b.beta_x && a.radius2 == b.radius2 && a.mu_v == b.mu_v && a.nu_v == b.nu_v &&
           a.eps_v == b.eps_v && a.beta_v == b.beta_v && a.kappa_x == b.kappa_x &&
           a.kappa_v == b.kappa_v && a.eps_lo == b.eps_lo && a.eps_hi == b.eps_hi &&
           a.theta == b.theta && a.gamma == b.gamma && a.ramp == b.ramp &&
           a.prior_magnitude == b.prior_magnitude && a.fix_tol == b.fix_tol &&
           a.max_sweeps == b.max_sweeps && a.dt_sim == b.dt_sim &&
           a.measurement_period == b.measurement_period && a.horizon == b.horizon &&
           veq(a.x0, b.x0) && a.nominal_type == b.nominal_type &&
           a.nominal_params == b.nominal_params && a.law == b.law &&
           a.search_budget == b.search_budget && a.seed == b.seed &&
           a.output_dir == b.output_dir;
}

ScenarioConfig parse_scenario(std::istream& is, const std::string& name) {
    RawConfig raw = parse_raw(is);
    ScenarioConfig cfg;
    cfg.name = name;

    {
        SectionReader s(raw, "plant");
        cfg.plant_type = s.text("type", "quadrotor");
        cfg.quad.mass = s.number("mass", cfg.quad.mass);
        cfg.quad.inertia = s.number("inertia", cfg.quad.inertia);
        cfg.quad.arm = s.number("arm", cfg.quad.arm);
        cfg.quad.drag_v = s.number("drag_v", cfg.quad.drag_v);
        cfg.quad.drag_phi = s.number("drag_phi", cfg.quad.drag_phi);
        cfg.quad.gravity = s.number("gravity", cfg.quad.gravity);
        s.finish();
    }
    {
        SectionReader s(raw, "operating_box");
        cfg.box_bounds = to_vector(s.list("bounds"));
        s.finish();
    }
    {
        SectionReader s(raw, "safe_set");
        cfg.r2 = s.required_number("r2");
        for (double v : s.list("selector")) cfg.selector.push_back(static_cast<int>(v));
        cfg.mu_x = s.number("mu_x", cfg.mu_x);
        cfg.nu_h = s.number("nu_h", cfg.nu_h);
        cfg.eps_h = s.number("eps_h", cfg.eps_h);
        cfg.beta_x = parse_beta(s.text("beta", "inverse"));
        s.finish();
    }
    {
        SectionReader s(raw, "velocity_bound");
        cfg.radius2 = s.required_number("radius2");
        cfg.mu_v = s.number("mu_v", cfg.mu_v);
        cfg.nu_v = s.number("nu_v", cfg.nu_v);
        cfg.eps_v = s.number("eps_v", cfg.eps_v);
        cfg.beta_v = parse_beta(s.text("beta", "inverse"));
        s.finish();
    }
    {
        SectionReader s(raw, "gains");
        cfg.kappa_x = s.number("kappa_x", cfg.kappa_x);
        cfg.kappa_v = s.number("kappa_v", cfg.kappa_v);
        cfg.eps_lo = s.number("eps_lo", cfg.eps_lo);
        cfg.eps_hi = s.number("eps_hi", cfg.eps_hi);
        cfg.theta = s.number("theta", cfg.theta);
        cfg.gamma = s.list("gamma");
        cfg.ramp = parse_ramp(s.text("ramp", "linear"));
        s.finish();
    }
    {
        SectionReader s(raw, "estimator");
        cfg.prior_magnitude = s.number("prior_magnitude", cfg.prior_magnitude);
        cfg.fix_tol = s.number("fix_tol", cfg.fix_tol);
        cfg.max_sweeps = static_cast<int>(s.number("max_sweeps", cfg.max_sweeps));
        s.finish();
    }
    {
        SectionReader s(raw, "schedule");
        cfg.dt_sim = s.number("dt_sim", cfg.dt_sim);
        cfg.measurement_period = s.number("measurement_period", cfg.measurement_period);
        cfg.horizon = s.required_number("horizon");
        s.finish();
    }
    {
        SectionReader s(raw, "initial");
        cfg.x0 = to_vector(s.list("state"));
        s.finish();
    }
    {
        SectionReader s(raw, "nominal");
        cfg.nominal_type = s.text("type", "zero");
        cfg.nominal_params = s.rest_numbers();
        s.finish();
    }
    {
        SectionReader s(raw, "controller");
        cfg.law = parse_law(s.text("law", "adaptive"));
        cfg.search_budget = static_cast<int>(s.number("search_budget", cfg.search_budget));
        s.finish();
    }
    {
        SectionReader s(raw, "run");
        cfg.seed = static_cast<std::uint64_t>(s.number("seed", 1));
        cfg.output_dir = s.text("output_dir", "");
        s.finish();
    }

    static const char* known[] = {"plant",     "operating_box", "safe_set", "velocity_bound",
                                  "gains",     "estimator",     "schedule", "initial",
                                  "nominal",   "controller",    "run"};
    for (const auto& [sec, kv] : raw.sections) {
        if (std::find_if(std::begin(known), std::end(known),
                         [&](const char* k) { return sec == k; }) == std::end(known))
            throw ParseError("unknown section [" + sec + "]");
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open scenario file '" + path + "'");
    std::string name = path;
    const auto slash = name.find_last_of('/');
    if (slash != std::string::npos) name = name.substr(slash + 1);
    const auto dot = name.find_last_of('.');
    if (dot != std::string::npos) name = name.substr(0, dot);
    try {
        return parse_scenario(f, name);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), e.line_number);
    }
}

void save_scenario(std::ostream& os, const ScenarioConfig& cfg) {
    auto list = [](const std::vector<double>& v) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ", ";
            out += fmt(v[i]);
        }
        return out;
    };
    auto vec = [&](const Eigen::VectorXd& v) {
        std::vector<double> tmp(static_cast<std::size_t>(v.size()));
        for (Eigen::Index i = 0; i < v.size(); ++i) tmp[static_cast<std::size_t>(i)] = v(i);
        return list(tmp);
    };

    os << "[plant]\n";
    os << "type = " << cfg.plant_type << "\n";
    os << "mass = " << fmt(cfg.quad.mass) << "\n";
    os << "inertia = " << fmt(cfg.quad.inertia) << "\n";
    os << "arm = " << fmt(cfg.quad.arm) << "\n";
    os << "drag_v = " << fmt(cfg.quad.drag_v) << "\n";
    os << "drag_phi = " << fmt(cfg.quad.drag_phi) << "\n";
    os << "gravity = " << fmt(cfg.quad.gravity) << "\n\n";

    os << "[operating_box]\n";
    os << "bounds = " << vec(cfg.box_bounds) << "\n\n";

    os << "[safe_set]\n";
    os << "r2 = " << fmt(cfg.r2) << "\n";
    {
        std::string sel;
        for (std::size_t i = 0; i < cfg.selector.size(); ++i) {
            if (i) sel += ", ";
            sel += std::to_string(cfg.selector[i]);
        }
        os << "selector = " << sel << "\n";
    }
    os << "mu_x = " << fmt(cfg.mu_x) << "\n";
    os << "nu_h = " << fmt(cfg.nu_h) << "\n";
    os << "eps_h = " << fmt(cfg.eps_h) << "\n";
    os << "beta = " << beta_name(cfg.beta_x) << "\n\n";

    os << "[velocity_bound]\n";
    os << "radius2 = " << fmt(cfg.radius2) << "\n";
    os << "mu_v = " << fmt(cfg.mu_v) << "\n";
    os << "nu_v = " << fmt(cfg.nu_v) << "\n";
    os << "eps_v = " << fmt(cfg.eps_v) << "\n";
    os << "beta = " << beta_name(cfg.beta_v) << "\n\n";

    os << "[gains]\n";
    os << "kappa_x = " << fmt(cfg.kappa_x) << "\n";
    os << "kappa_v = " << fmt(cfg.kappa_v) << "\n";
    os << "eps_lo = " << fmt(cfg.eps_lo) << "\n";
    os << "eps_hi = " << fmt(cfg.eps_hi) << "\n";
    os << "theta = " << fmt(cfg.theta) << "\n";
    if (!cfg.gamma.empty()) os << "gamma = " << list(cfg.gamma) << "\n";
    os << "ramp = " << ramp_name(cfg.ramp) << "\n\n";

    os << "[estimator]\n";
    os << "prior_magnitude = " << fmt(cfg.prior_magnitude) << "\n";
    os << "fix_tol = " << fmt(cfg.fix_tol) << "\n";
    os << "max_sweeps = " << cfg.max_sweeps << "\n\n";

    os << "[schedule]\n";
    os << "dt_sim = " << fmt(cfg.dt_sim) << "\n";
    os << "measurement_period = " << fmt(cfg.measurement_period) << "\n";
    os << "horizon = " << fmt(cfg.horizon) << "\n\n";

    os << "[initial]\n";
    os << "state = " << vec(cfg.x0) << "\n\n";

    os << "[nominal]\n";
    os << "type = " << cfg.nominal_type << "\n";
    for (const auto& [k, v] : cfg.nominal_params) os << k << " = " << fmt(v) << "\n";
    os << "\n";

    os << "[controller]\n";
    os << "law = " << law_name(cfg.law) << "\n";
    os << "search_budget = " << cfg.search_budget << "\n\n";

    os << "[run]\n";
    os << "seed = " << cfg.seed << "\n";
    if (!cfg.output_dir.empty()) os << "output_dir = " << cfg.output_dir << "\n";
}

Plant make_square_g_plant() {
    Plant plant;
    plant.n = 2;
    plant.m = 2;
    plant.label = "square_g";
    plant.drift = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd f(2);
        f(0) = -0.3 * x(2) + 0.1 * x(1);
        f(1) = -0.4 * x(3) - 0.1 * x(0);
        return f;
    };
    plant.input_matrix = [](const Eigen::VectorXd&) {
        Eigen::MatrixXd g(2, 2);
        g << 2.0, 0.5, -0.5, 1.0;
        return g;
    };
    plant.declared_bounds.f_bar = Eigen::VectorXd(2);
    plant.declared_bounds.f_bar << 0.34, 0.45;
    plant.declared_bounds.g_bar = Eigen::MatrixXd::Constant(2, 2, 1e-6);
    return plant;
}

namespace {

Plant make_plant(const ScenarioConfig& cfg) {
    if (cfg.plant_type == "quadrotor") return make_quadrotor(cfg.quad);
    if (cfg.plant_type == "square_g") return make_square_g_plant();
    throw ValidationError("unknown plant type '" + cfg.plant_type + "'");
}

double param(const ScenarioConfig& cfg, const std::string& key, double fallback) {
    auto it = cfg.nominal_params.find(key);
    return it == cfg.nominal_params.end() ? fallback : it->second;
}

double wrap_angle(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a < -M_PI) a += 2.0 * M_PI;
    return a;
}

std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)> make_nominal(
    const ScenarioConfig& cfg, const Plant& plant) {
    if (cfg.nominal_type == "zero") {
        const int m = plant.m;
        return [m](const Eigen::VectorXd&, double) { return Eigen::VectorXd::Zero(m); };
    }
    if (cfg.nominal_type == "quadrotor_pd") {
        if (cfg.plant_type != "quadrotor")
            throw ValidationError("nominal 'quadrotor_pd' requires the quadrotor plant");
        const QuadrotorParams p = cfg.quad;
        const double kp_pos = param(cfg, "kp_pos", 8.0);
        const double kd_pos = param(cfg, "kd_pos", 4.5);
        const double kp_att = param(cfg, "kp_att", 60.0);
        const double kd_att = param(cfg, "kd_att", 15.0);
        const double amp_x = param(cfg, "ref_amp_x", 0.5);
        const double amp_y = param(cfg, "ref_amp_y", 0.5);
        const double freq_x = param(cfg, "ref_freq_x", 1.5);
        const double freq_y = param(cfg, "ref_freq_y", 0.75);
        return [=](const Eigen::VectorXd& x, double t) {
            const ReferencePoint ref = make_reference(t, amp_x, amp_y, freq_x, freq_y);
            const Eigen::Vector2d pos(x(0), x(1));
            const Eigen::Vector2d vel(x(3), x(4));
            const Eigen::Vector2d a_des =
                ref.acc + kp_pos * (ref.pos - pos) + kd_pos * (ref.vel - vel);
            // Force the thrust axis must supply, gravity included.
            Eigen::Vector2d force = p.mass * (a_des + Eigen::Vector2d(0.0, p.gravity));
            double thrust = force.norm();
            double phi_des = 0.0;
            if (thrust > 1e-9) phi_des = std::atan2(-force(0), force(1));
            const double torque =
                kp_att * wrap_angle(phi_des - x(2)) + kd_att * (0.0 - x(5));
            // 2 I omega_dot = -c omega - l u1 + l u2  =>  u2 - u1 = (2 I tau + c omega)/l
            const double diff = (2.0 * p.inertia * torque + p.drag_phi * x(5)) / p.arm;
            Eigen::VectorXd u(2);
            u(0) = 0.5 * (thrust - diff);
            u(1) = 0.5 * (thrust + diff);
            return u;
        };
    }
    if (cfg.nominal_type == "outward") {
        // Adversarial push away from the origin, growing with distance.
        const double k_out = param(cfg, "k_out", 2.0);
        const int n = plant.n;
        if (plant.m != n)
            throw ValidationError("nominal 'outward' expects m = n");
        return [k_out, n](const Eigen::VectorXd& x, double) -> Eigen::VectorXd {
            return k_out * x.head(n);
        };
    }
    if (cfg.nominal_type == "pd_origin") {
        const double kp = param(cfg, "kp", 1.0);
        const double kd = param(cfg, "kd", 1.0);
        const int n = plant.n;
        if (plant.m != n)
            throw ValidationError("nominal 'pd_origin' expects m = n");
        return [kp, kd, n](const Eigen::VectorXd& x, double) -> Eigen::VectorXd {
            return -kp * x.head(n) - kd * x.tail(n);
        };
    }
    throw ValidationError("unknown nominal controller type '" + cfg.nominal_type + "'");
}

} // namespace

RunSpec build_run_spec(const ScenarioConfig& cfg) {
    auto checks = validate_scenario(cfg);
    std::string failures;
    for (const auto& c : checks)
        if (!c.pass) failures += (failures.empty() ? "" : "; ") + c.name + ": " + c.detail;
    if (!failures.empty()) throw ValidationError("scenario '" + cfg.name + "' invalid: " + failures);

    RunSpec spec;
    spec.name = cfg.name;
    spec.plant = make_plant(cfg);
    const int n = spec.plant.n;

    ControllerGains gains;
    gains.kappa_x = cfg.kappa_x;
    gains.kappa_v = cfg.kappa_v;
    gains.mu_x = cfg.mu_x;
    gains.mu_v = cfg.mu_v;
    gains.eps_lo = cfg.eps_lo;
    gains.eps_hi = cfg.eps_hi;
    gains.theta = cfg.theta;
    gains.gamma = cfg.gamma;
    gains.ramp = cfg.ramp;

    PositionBarrier h = make_sphere_barrier(cfg.r2, cfg.selector);
    ReciprocalBarrier beta_x{cfg.beta_x};
    ReciprocalBarrier beta_v{cfg.beta_v};

    // The reference is undefined past the position boundary; clamping it to
    // zero there keeps postmortem logging alive after a violation.
    auto x2_ref = [gains, h, beta_x](const Eigen::VectorXd& x1) -> Eigen::VectorXd {
        if (h.value(x1) <= 0.0) return Eigen::VectorXd::Zero(x1.size());
        return x2_reference(x1, gains, h, beta_x);
    };
    VelocityBarrier h_v = make_velocity_barrier(n, cfg.radius2, x2_ref);

    SafetyControllerConfig ctrl;
    ctrl.gains = gains;
    ctrl.h = h;
    ctrl.beta_x = beta_x;
    ctrl.h_v = h_v;
    ctrl.beta_v = beta_v;
    ctrl.u_nom = make_nominal(cfg, spec.plant);
    ctrl.law = cfg.law;
    ctrl.synthesis_budget = cfg.search_budget;
    ctrl.seed = cfg.seed;
    ctrl.bounds = spec.plant.declared_bounds;
    ctrl.prior_magnitude = cfg.prior_magnitude;
    ctrl.prior_anchor = cfg.x0;
    ctrl.approx.fix_tol = cfg.fix_tol;
    ctrl.approx.max_sweeps = cfg.max_sweeps;

    spec.controller = std::move(ctrl);
    spec.dt_sim = cfg.dt_sim;
    spec.measurement_period = cfg.measurement_period;
    spec.horizon = cfg.horizon;
    spec.x0 = cfg.x0;
    return spec;
}

std::vector<CheckResult> validate_scenario(const ScenarioConfig& cfg) {
    std::vector<CheckResult> out;
    auto add = [&](const std::string& name, bool pass, const std::string& detail) {
        out.push_back({name, pass, detail});
    };

    Plant plant;
    try {
        plant = make_plant(cfg);
        add("plant", true, plant.label);
    } catch (const Error& e) {
        add("plant", false, e.what());
        return out;
    }
    const int n = plant.n;
    const int dim = 2 * n;

    const bool dims_ok = cfg.x0.size() == dim && cfg.box_bounds.size() == dim;
    add("dimensions", dims_ok,
        "state dim " + std::to_string(dim) + ", x0 has " + std::to_string(cfg.x0.size()) +
            ", box has " + std::to_string(cfg.box_bounds.size()));
    if (!dims_ok) return out;

    bool sel_ok = !cfg.selector.empty();
    for (int i : cfg.selector) sel_ok = sel_ok && i >= 0 && i < n;
    add("safe_set.selector", sel_ok, "selected coordinates must be a nonempty subset of x1");
    add("safe_set.compact", cfg.r2 > 0.0 && sel_ok,
        "r2 = " + fmt(cfg.r2) + (cfg.r2 > 0.0 ? "" : " (empty interior)"));
    add("velocity_bound.compact", cfg.radius2 > 0.0, "radius2 = " + fmt(cfg.radius2));
    if (!sel_ok || cfg.r2 <= 0.0 || cfg.radius2 <= 0.0) return out;

    try {
        ControllerGains gains;
        gains.kappa_x = cfg.kappa_x;
        gains.kappa_v = cfg.kappa_v;
        gains.mu_x = cfg.mu_x;
        gains.mu_v = cfg.mu_v;
        gains.eps_lo = cfg.eps_lo;
        gains.eps_hi = cfg.eps_hi;
        gains.theta = cfg.theta;
        gains.gamma = cfg.gamma;
        gains.validate();
        add("gains", true,
            "hysteresis band (" + fmt(cfg.eps_lo) + ", " + fmt(cfg.eps_hi) + "]");
    } catch (const Error& e) {
        add("gains", false, e.what());
    }

    add("safe_set.mu_x_band", cfg.mu_x < cfg.nu_h,
        "mu_x = " + fmt(cfg.mu_x) + " must stay below nu_h = " + fmt(cfg.nu_h));

    if (cfg.law == ControlLaw::square) {
        add("square_law.dimensions", plant.m == n,
            "data-free law needs m = n, got m = " + std::to_string(plant.m));
        add("square_law.mu_v_band", cfg.mu_v < cfg.nu_v,
            "mu_v = " + fmt(cfg.mu_v) + " must stay below nu_v = " + fmt(cfg.nu_v));
        Eigen::VectorXd probe = cfg.x0;
        const Eigen::MatrixXd g = plant.input_matrix(probe);
        const Eigen::MatrixXd sym = g + g.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
        add("square_law.positive_definite", es.eigenvalues().minCoeff() > 0.0,
            "lambda_min(g + g') = " + fmt(es.eigenvalues().minCoeff()));
    }

    const double sched_ratio = cfg.measurement_period / cfg.dt_sim;
    const bool sched_ok = cfg.dt_sim > 0.0 && cfg.measurement_period > 0.0 &&
                          cfg.horizon >= 0.0 &&
                          std::abs(sched_ratio - std::round(sched_ratio)) < 1e-9 &&
                          std::round(sched_ratio) >= 1.0;
    add("schedule", sched_ok,
        "period/dt = " + fmt(sched_ratio) + " must be a positive integer");

    PositionBarrier h = make_sphere_barrier(cfg.r2, cfg.selector);
    const double h0 = h.value(cfg.x0.head(n));
    add("initial.h_positive", h0 > 0.0, "h(x1(0)) = " + fmt(h0));

    std::mt19937_64 rng(0x5eed);
    IntervalVector box(static_cast<std::size_t>(dim));
    bool box_ok = true;
    for (int i = 0; i < dim; ++i) {
        const double b = cfg.box_bounds(i);
        box_ok = box_ok && b > 0.0;
        box[static_cast<std::size_t>(i)] = Interval(-b, b);
    }
    add("operating_box", box_ok && box.contains(cfg.x0),
        box_ok ? "initial state inside the declared box" : "box bounds must be positive");
    if (!box_ok) return out;

    {
        const LipschitzCheck lc = validate_lipschitz_bounds(plant, box, 10000, rng);
        add("lipschitz_bounds", lc.ok,
            "max sampled slope f " + fmt(lc.max_f_slope) + ", g " + fmt(lc.max_g_slope) +
                "; worst ratio f " + fmt(lc.worst_f_ratio) + ", g " + fmt(lc.worst_g_ratio));
    }

    {
        // Sampled surrogate for the gradient floor near the boundary of C.
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        double min_grad = std::numeric_limits<double>::infinity();
        int accepted = 0;
        for (int it = 0; it < 200000 && accepted < 1000; ++it) {
            Eigen::VectorXd x1(n);
            for (int i = 0; i < n; ++i) x1(i) = cfg.box_bounds(i) * unif(rng);
            const double hv = h.value(x1);
            if (hv <= 0.0 || hv > cfg.nu_h) continue;
            ++accepted;
            min_grad = std::min(min_grad, h.grad(x1).norm());
        }
        const bool pass = accepted > 0 && min_grad >= cfg.eps_h;
        add("assumption.grad_h_floor", pass,
            "sampled min ||grad h|| = " + (accepted ? fmt(min_grad) : std::string("n/a")) +
                " over " + std::to_string(accepted) + " band points, declared eps_h = " +
                fmt(cfg.eps_h));
    }

    {
        // Same for the velocity barrier: the band 0 < h_v <= nu_v pins
        // ||e_2|| away from zero, hence a positive gradient norm.
        const double lo2 = cfg.radius2 - cfg.nu_v;
        if (lo2 < 0.0) {
            add("assumption.grad_hv_floor", false,
                "nu_v = " + fmt(cfg.nu_v) + " exceeds radius2 = " + fmt(cfg.radius2));
        } else {
            const double min_grad = 2.0 * std::sqrt(lo2);
            add("assumption.grad_hv_floor", min_grad >= cfg.eps_v,
                "band floor ||grad_x2 h_v|| = " + fmt(min_grad) + ", declared eps_v = " +
                    fmt(cfg.eps_v));
        }
    }

    {
        // Prior magnitude must dominate the true dynamics over the box.
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        double max_f = 0.0, max_g = 0.0;
        for (int it = 0; it < 2000; ++it) {
            Eigen::VectorXd x(dim);
            for (int i = 0; i < dim; ++i) x(i) = cfg.box_bounds(i) * unif(rng);
            max_f = std::max(max_f, plant.drift(x).cwiseAbs().maxCoeff());
            max_g = std::max(max_g, plant.input_matrix(x).cwiseAbs().maxCoeff());
        }
        add("estimator.prior_dominates", max_f < cfg.prior_magnitude && max_g < cfg.prior_magnitude,
            "sampled max |f| = " + fmt(max_f) + ", max |g| = " + fmt(max_g) + ", M = " +
                fmt(cfg.prior_magnitude));
    }

    try {
        ReciprocalBarrier beta_x{cfg.beta_x};
        ControllerGains gains;
        gains.kappa_x = cfg.kappa_x;
        gains.mu_x = cfg.mu_x;
        gains.ramp = cfg.ramp;
        auto x2_ref = [&](const Eigen::VectorXd& x1) -> Eigen::VectorXd {
            if (h.value(x1) <= 0.0) return Eigen::VectorXd::Zero(x1.size());
            return x2_reference(x1, gains, h, beta_x);
        };
        VelocityBarrier h_v = make_velocity_barrier(n, cfg.radius2, x2_ref);
        const double hv0 = h_v.value(cfg.x0);
        add("initial.h_v_positive", hv0 > 0.0, "h_v(x(0)) = " + fmt(hv0));
    } catch (const Error& e) {
        add("initial.h_v_positive", false, e.what());
    }

    try {
        make_nominal(cfg, plant);
        add("nominal", true, cfg.nominal_type);
    } catch (const Error& e) {
        add("nominal", false, e.what());
    }

    return out;
}

} // namespace invar
