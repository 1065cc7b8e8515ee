#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "invar/errors.hpp"

namespace invar {

// Reciprocal barrier over a positive barrier value: blows up as h -> 0+, so
// boundedness of beta certifies h > 0.
enum class BetaKind { inverse, log_ratio };

struct BetaValues {
    double value;
    double d1;
    double d2;
};

struct ReciprocalBarrier {
    BetaKind kind = BetaKind::inverse;

    double value(double h) const;
    double d1(double h) const;
    double d2(double h) const;
};

// Throws NonPositiveBarrierError when h <= 0.
BetaValues beta_eval(double h, const ReciprocalBarrier& b);

enum class RampKind { linear, cosine };

// Continuous switch: 1 below zero, 0 above mu, decreasing ramp in between.
struct SwitchFunction {
    double mu = 1.0;
    RampKind ramp = RampKind::linear;
};

double sigma(double s, const SwitchFunction& sw);

// Scalar barrier over the position-like block x_1 defining the safe set
// {h(x_1) >= 0}.
struct PositionBarrier {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
    std::string description;
};

// h(x_1) = r2 - sum_{i in selector} x_1i^2.
PositionBarrier make_sphere_barrier(double r2, std::vector<int> selector);

// Barrier over the full state through the velocity tracking error
// e_2 = x_2 - x2_ref(x_1): h_v(x) = level - e_2' A e_2.
struct VelocityBarrier {
    std::function<double(const Eigen::VectorXd&)> value;        // h_v(x)
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_x2;  // -2 A e_2
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_x1;  // chain-rule part
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> e2;       // tracking error
    Eigen::MatrixXd weight;   // A
    double level = 1.0;
    std::string description;
};

// Throws NotPositiveDefiniteError when the quadratic form is not SPD.
VelocityBarrier make_velocity_barrier(const Eigen::MatrixXd& a_v, double level,
                                      std::function<Eigen::VectorXd(const Eigen::VectorXd&)> x2_ref);
// Isotropic form: h_v = radius2 - ||e_2||^2.
VelocityBarrier make_velocity_barrier(int n, double radius2,
                                      std::function<Eigen::VectorXd(const Eigen::VectorXd&)> x2_ref);

} // namespace invar
