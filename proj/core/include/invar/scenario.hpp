#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "invar/sim.hpp"

namespace invar {

// One scenario file, parsed but not yet validated. Plain key/value sections;
// see docs/formats.md for the exact layout.
struct ScenarioConfig {
    std::string name;

    // [plant]
    std::string plant_type = "quadrotor";
    QuadrotorParams quad;

    // [operating_box] symmetric per-coordinate bounds |x_i| <= bound_i
    Eigen::VectorXd box_bounds;

    // [safe_set]
    double r2 = 0.36;
    std::vector<int> selector;
    double mu_x = 0.1;
    double nu_h = 0.2;
    double eps_h = 0.5;
    BetaKind beta_x = BetaKind::inverse;

    // [velocity_bound]
    double radius2 = 100.0;
    double mu_v = 100.0;
    double nu_v = 99.0;
    double eps_v = 1.0;
    BetaKind beta_v = BetaKind::inverse;

    // [gains]
    double kappa_x = 1.0;
    double kappa_v = 100.0;
    double eps_lo = 0.05;
    double eps_hi = 5.0;
    double theta = 0.5;
    std::vector<double> gamma;
    RampKind ramp = RampKind::linear;

    // [estimator]
    double prior_magnitude = 1e3;
    double fix_tol = 1e-9;
    int max_sweeps = 100;

    // [schedule]
    double dt_sim = 1e-3;
    double measurement_period = 0.1;
    double horizon = 1.0;

    // [initial]
    Eigen::VectorXd x0;

    // [nominal]
    std::string nominal_type = "zero";
    std::map<std::string, double> nominal_params;

    // [controller]
    ControlLaw law = ControlLaw::adaptive;
    int search_budget = 500;

    // [run]
    std::uint64_t seed = 1;
    std::string output_dir;
};

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

ScenarioConfig parse_scenario(std::istream& is, const std::string& name);
ScenarioConfig load_scenario(const std::string& path);
void save_scenario(std::ostream& os, const ScenarioConfig& cfg);

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Every load-time assumption check, with measured constants in the detail
// strings. The scenario is runnable iff all pass.
std::vector<CheckResult> validate_scenario(const ScenarioConfig& cfg);

// Assembles plant, barriers, nominal law and controller configuration.
// Throws ValidationError when any validation check fails.
RunSpec build_run_spec(const ScenarioConfig& cfg);

// Named test plant with square input matrix and g + g' positive definite.
Plant make_square_g_plant();

} // namespace invar
