#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "invar/barrier.hpp"
#include "invar/errors.hpp"
#include "invar/overapprox.hpp"

namespace invar {

struct ControllerGains {
    double kappa_x = 1.0;
    double kappa_v = 1.0;
    double mu_x = 0.1;
    double mu_v = 1.0;
    double eps_lo = 0.05;   // lower hysteresis threshold
    double eps_hi = 5.0;    // upper hysteresis threshold
    double theta = 0.5;     // estimate weight between cover endpoints
    std::vector<double> gamma;  // synthesis thresholds for j >= 2; empty = eps_hi
    RampKind ramp = RampKind::linear;

    double gamma_for(int j) const;  // j >= 2
    void validate() const;          // throws ValidationError
};

// {e : (e - center)' shape (e - center) <= 1} with shape SPD.
struct Ellipsoid {
    Eigen::VectorXd center;
    Eigen::MatrixXd shape;

    double membership(const Eigen::VectorXd& e) const {
        const Eigen::VectorXd d = e - center;
        return d.dot(shape * d);
    }
    bool contains(const Eigen::VectorXd& e) const { return membership(e) <= 1.0; }
};

// Quadratic barrier over the velocity-error variable: h(e) = e'Qe + b'e + c
// with Q negative definite, so {h >= 0} is a bounded ellipsoid.
struct EllipsoidBarrier {
    Eigen::MatrixXd q;
    Eigen::VectorXd b;
    double c = 0.0;

    double value(const Eigen::VectorXd& e) const { return e.dot(q * e) + b.dot(e) + c; }
    Eigen::VectorXd grad(const Eigen::VectorXd& e) const { return 2.0 * (q * e) + b; }
    // Normalized description of {h >= 0}; throws ValidationError if empty.
    Ellipsoid level_set() const;
};

// Velocity reference induced by the position barrier:
//   x2_ref = -kappa_x sigma_mu_x(h(x1)) beta'(h(x1)) grad h(x1).
// Since beta' < 0, the reference pushes toward increasing h near the boundary.
Eigen::VectorXd x2_reference(const Eigen::VectorXd& x1, const ControllerGains& gains,
                             const PositionBarrier& h, const ReciprocalBarrier& beta);

struct ControlDiag {
    double h_v = 0.0;
    double sigma_value = 0.0;
    double direction_norm = 0.0;  // ||ghat' grad_x2 h_v||
};

// Local law: u_nom - kappa_v sigma(h_v) beta_v' (ghat' grad_x2 h_v) / ||.||^2.
// Exactly u_nom when the switch is off. Raises ControllabilityLossError when
// the direction norm falls to eps_lo while the switch is active.
Eigen::VectorXd control_local(const Eigen::VectorXd& x, const Eigen::MatrixXd& g_hat,
                              const Eigen::VectorXd& u_nom, const ControllerGains& gains,
                              const VelocityBarrier& h_v, const ReciprocalBarrier& beta_v,
                              ControlDiag* diag = nullptr);

// Data-free law for square g with g + g' positive definite:
//   u_nom - kappa_v sigma(h_v) beta_v' grad_x2 h_v.
Eigen::VectorXd control_square(const Eigen::VectorXd& x, const Eigen::VectorXd& u_nom,
                               const ControllerGains& gains, const VelocityBarrier& h_v,
                               const ReciprocalBarrier& beta_v);

// Randomized multistart search for a replacement barrier at the switch point:
// a shrunken, shifted ellipsoid contained in the parent set, positive at e_c,
// whose gradient direction scores ||g_hat' grad h(e_c)|| >= gamma_next.
EllipsoidBarrier find_next_barrier(const Eigen::VectorXd& e_c, const Eigen::MatrixXd& g_hat,
                                   const Ellipsoid& parent, double gamma_next, int budget,
                                   std::mt19937_64& rng);

struct ReplacementCheck {
    bool contained = false;
    bool positive_at_point = false;
    double score = 0.0;
    bool ok(double gamma) const { return contained && positive_at_point && score >= gamma; }
};

ReplacementCheck verify_replacement(const EllipsoidBarrier& candidate, const Ellipsoid& parent,
                                    const Eigen::VectorXd& e_c, const Eigen::MatrixXd& g_hat);

// State of the switching machine: active index j, hysteresis flags rho, and
// the stack of synthesized barriers (level j >= 2 lives at stack[j - 2]).
struct AdaptationState {
    int j = 1;
    std::vector<int> rho;
    std::vector<EllipsoidBarrier> stack;
    Eigen::VectorXd x_c;
    int max_index = 0;  // 2n + 1

    explicit AdaptationState(int n = 1) : max_index(2 * n + 1) { reset(); }
    void reset() {
        j = 1;
        rho.assign(static_cast<std::size_t>(max_index), 1);
        stack.clear();
        x_c.resize(0);
    }
};

struct ControlEvent {
    double t = 0.0;
    std::string kind;
    std::string payload;
};

// One pass of the switching machine: hysteresis flag updates, replacement
// synthesis on controllability loss, and the barrier term of the general law
// for the active index. The caller composes u = u_nom - kappa_v sigma(h_v) u_b.
Eigen::VectorXd adaptation_step(const Eigen::VectorXd& x, const Eigen::MatrixXd& g_hat,
                                AdaptationState& st, const ControllerGains& gains,
                                const VelocityBarrier& h_v, const ReciprocalBarrier& beta,
                                int synthesis_budget, std::mt19937_64& rng, double t,
                                std::vector<ControlEvent>* events = nullptr);

enum class ControlLaw { adaptive, local, square };

struct SafetyControllerConfig {
    ControllerGains gains;
    PositionBarrier h;
    ReciprocalBarrier beta_x;
    VelocityBarrier h_v;
    ReciprocalBarrier beta_v;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)> u_nom;
    ControlLaw law = ControlLaw::adaptive;
    int synthesis_budget = 500;
    std::uint64_t seed = 1;
    LipschitzBounds bounds;
    double prior_magnitude = 1e3;
    Eigen::VectorXd prior_anchor;       // x0 of the magnitude prior
    ApproximateOptions approx;
};

struct TickDiag {
    double h = 0.0;
    double h_v = 0.0;
    double sigma_value = 0.0;
    double e2_norm = 0.0;
    int j = 1;
    std::vector<int> rho;
    double active_norm = 0.0;           // ||ghat' grad_x2 h_active||
    Eigen::MatrixXd ghat;
    bool used_nominal_only = false;     // u == u_nom exactly this tick
};

// Owns the persistent state of one closed loop: evidence set, adaptation
// machine, RNG, and the randomly seeded pre-data estimate. Library errors are
// converted into events and a nominal-only tick; nothing escapes except
// dimension errors from misuse.
class SafetyController {
public:
    SafetyController(SafetyControllerConfig cfg, int n, int m);

    Eigen::VectorXd tick(const Eigen::VectorXd& x, double t);

    // Measurement boundary: assimilate the datapoint and reset the machine.
    void ingest(const DataPoint& dp);

    Eigen::MatrixXd ghat(const Eigen::VectorXd& x) const;

    const EvidenceSet& evidence() const { return evidence_; }
    const AdaptationState& adaptation() const { return adaptation_; }
    const TickDiag& last_diag() const { return diag_; }
    const ControllerGains& gains() const { return cfg_.gains; }
    ControlLaw law() const { return cfg_.law; }
    bool uses_estimator() const { return cfg_.law != ControlLaw::square; }

    std::vector<ControlEvent> drain_events();

private:
    SafetyControllerConfig cfg_;
    int n_;
    int m_;
    std::mt19937_64 rng_;
    Eigen::MatrixXd g0_;                // pre-data estimate, "set randomly"
    EvidenceSet evidence_;
    std::vector<DataPoint> dataset_;
    AdaptationState adaptation_;
    TickDiag diag_;
    std::vector<ControlEvent> events_;
};

} // namespace invar
