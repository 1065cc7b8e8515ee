#pragma once

#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "invar/controller.hpp"
#include "invar/overapprox.hpp"

namespace invar {

// Ground-truth plant. The drift and input matrix are hidden from the
// controller; the simulator evaluates them to integrate and to score the
// estimator against the truth.
struct Plant {
    int n = 1;
    int m = 1;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> drift;         // f: R^{2n} -> R^n
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> input_matrix;  // g: R^{2n} -> R^{n x m}
    LipschitzBounds declared_bounds;
    std::string label;

    // [x_2; f(x) + g(x) u]
    Eigen::VectorXd derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
};

// Classical fixed-step RK4 with u held constant over the step.
Eigen::VectorXd rk4_step(const Plant& plant, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         double dt);

struct QuadrotorParams {
    double mass = 1.25;
    double inertia = 0.03;
    double arm = 0.5;
    double drag_v = 0.25;
    double drag_phi = 0.02255;
    double gravity = 9.81;
};

// Planar quadrotor with state (p_x, p_y, phi, v_x, v_y, omega) and two rotor
// thrusts.
Plant make_quadrotor(const QuadrotorParams& params = {});

struct ReferencePoint {
    Eigen::Vector2d pos;
    Eigen::Vector2d vel;
    Eigen::Vector2d acc;
};

// Sinusoidal position reference and its exact derivatives.
ReferencePoint make_reference(double t, double amp_x = 0.5, double amp_y = 0.5,
                              double freq_x = 1.5, double freq_y = 0.75);

// Sampled surrogate for the declared-Lipschitz-bounds assumption.
struct LipschitzCheck {
    bool ok = true;
    double worst_f_ratio = 0.0;  // max |f_k(x)-f_k(y)| / (f_bar_k ||x-y||)
    double worst_g_ratio = 0.0;
    double max_f_slope = 0.0;    // max |f_k(x)-f_k(y)| / ||x-y|| observed
    double max_g_slope = 0.0;
};

LipschitzCheck validate_lipschitz_bounds(const Plant& plant, const IntervalVector& operating_box,
                                         int samples, std::mt19937_64& rng);

struct MeasurementSchedule {
    double period = 0.1;
    // v1 keeps a jitter-free clock; the period must be an integer multiple of
    // the integration step.
};

struct LogRow {
    double t = 0.0;
    Eigen::VectorXd x;
    Eigen::VectorXd u;
    double h = 0.0;
    double h_v = 0.0;
    double e2_norm = 0.0;
    double sigma_value = 0.0;
    int j = 1;
    std::string rho;
    double active_norm = 0.0;
    double wf_max = 0.0;
    double wg_max = 0.0;
    double ghat_err = 0.0;
    double suff_margin = 0.0;
};

struct TrajectoryLog {
    int n = 0;
    int m = 0;
    std::vector<LogRow> rows;
};

std::string trajectory_csv_header(int n, int m);
void write_trajectory_csv(std::ostream& os, const TrajectoryLog& log);
void write_events_csv(std::ostream& os, const std::vector<ControlEvent>& events);

// Snapshot taken at each measurement instant; the input hull and successor
// state are filled in at the following measurement.
struct MeasurementCheckpoint {
    int index = 0;
    double t = 0.0;
    Eigen::VectorXd x;
    EvidenceSet evidence;
    IntervalVector u_hull;
    Eigen::VectorXd x_next;
    bool complete = false;
};

struct RunSpec {
    std::string name;
    Plant plant;
    SafetyControllerConfig controller;
    double dt_sim = 1e-3;
    double measurement_period = 0.1;
    double horizon = 1.0;
    Eigen::VectorXd x0;
    bool safety_enabled = true;
    bool capture_checkpoints = false;
};

struct RunSummary {
    std::string scenario;
    bool violation = false;
    bool aborted = false;
    std::string abort_reason;
    double min_h = 0.0;
    double min_h_v = 0.0;
    double max_e2 = 0.0;
    int max_j = 1;
    std::vector<int> drop_counts;     // per flag iota
    std::vector<int> restore_counts;  // per flag iota
    double mean_ghat_err = 0.0;
    double final_ghat_err = 0.0;
    int estimator_violations = 0;     // ground-truth cover misses (should stay 0)
    std::size_t rows = 0;
    double wall_ms = 0.0;
};

struct RunResult {
    TrajectoryLog log;
    std::vector<ControlEvent> events;
    std::vector<MeasurementCheckpoint> checkpoints;
    RunSummary summary;
};

// Deterministic closed loop: integrate at dt_sim, tick the controller every
// step, feed a measurement every period. Safety violations are recorded and
// the run continues to the horizon for postmortem inspection.
RunResult run_closed_loop(const RunSpec& spec);

} // namespace invar
