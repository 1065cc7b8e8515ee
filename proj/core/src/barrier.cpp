#include "invar/barrier.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace invar {

double ReciprocalBarrier::value(double h) const {
    return kind == BetaKind::inverse ? 1.0 / h : -std::log(h / (1.0 + h));
}

double ReciprocalBarrier::d1(double h) const {
    return kind == BetaKind::inverse ? -1.0 / (h * h) : -1.0 / (h * (1.0 + h));
}

double ReciprocalBarrier::d2(double h) const {
    if (kind == BetaKind::inverse) return 2.0 / (h * h * h);
    const double hp = h * (1.0 + h);
    return (1.0 + 2.0 * h) / (hp * hp);
}

BetaValues beta_eval(double h, const ReciprocalBarrier& b) {
    if (h <= 0.0)
        throw NonPositiveBarrierError("beta_eval: barrier value " + std::to_string(h) +
                                          " is not positive",
                                      h);
    return {b.value(h), b.d1(h), b.d2(h)};
}

double sigma(double s, const SwitchFunction& sw) {
    if (s >= sw.mu) return 0.0;
    if (s <= 0.0) return 1.0;
    switch (sw.ramp) {
    case RampKind::linear:
        return 1.0 - s / sw.mu;
    case RampKind::cosine:
        return 0.5 * (1.0 + std::cos(M_PI * s / sw.mu));
    }
    return 0.0;
}

PositionBarrier make_sphere_barrier(double r2, std::vector<int> selector) {
    PositionBarrier b;
    b.description = "sphere r2=" + std::to_string(r2);
    b.value = [r2, selector](const Eigen::VectorXd& x1) {
        double s = 0.0;
        for (int i : selector) s += x1(i) * x1(i);
        return r2 - s;
    };
    b.grad = [selector](const Eigen::VectorXd& x1) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(x1.size());
        for (int i : selector) g(i) = -2.0 * x1(i);
        return g;
    };
    return b;
}

VelocityBarrier make_velocity_barrier(const Eigen::MatrixXd& a_v, double level,
                                      std::function<Eigen::VectorXd(const Eigen::VectorXd&)> x2_ref) {
    if (a_v.rows() != a_v.cols())
        throw NotPositiveDefiniteError("velocity barrier: weight matrix must be square");
    if (!a_v.isApprox(a_v.transpose(), 1e-12))
        throw NotPositiveDefiniteError("velocity barrier: weight matrix must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(a_v);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefiniteError("velocity barrier: weight matrix must be positive definite");
    if (level <= 0.0)
        throw NotPositiveDefiniteError("velocity barrier: level must be positive");

    const Eigen::Index n = a_v.rows();
    VelocityBarrier b;
    b.weight = a_v;
    b.level = level;
    b.description = "velocity ellipsoid level=" + std::to_string(level);

    auto e2 = [n, x2_ref](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return x.tail(n) - x2_ref(x.head(n));
    };
    b.e2 = e2;
    b.value = [a_v, level, e2](const Eigen::VectorXd& x) {
        const Eigen::VectorXd e = e2(x);
        return level - e.dot(a_v * e);
    };
    b.grad_x2 = [a_v, e2](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return -2.0 * (a_v * e2(x));
    };
    // The reference map is only piecewise smooth (it carries the switch), so
    // the x_1 part is taken by central differences on the scalar value.
    b.grad_x1 = [n, value = b.value](const Eigen::VectorXd& x) {
        Eigen::VectorXd g(n);
        const double step = 1e-6;
        Eigen::VectorXd xp = x;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double save = xp(i);
            xp(i) = save + step;
            const double fp = value(xp);
            xp(i) = save - step;
            const double fm = value(xp);
            xp(i) = save;
            g(i) = (fp - fm) / (2.0 * step);
        }
        return g;
    };
    return b;
}

VelocityBarrier make_velocity_barrier(int n, double radius2,
                                      std::function<Eigen::VectorXd(const Eigen::VectorXd&)> x2_ref) {
    return make_velocity_barrier(Eigen::MatrixXd::Identity(n, n), radius2, std::move(x2_ref));
}

} // namespace invar
