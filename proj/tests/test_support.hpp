#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "invar/overapprox.hpp"
#include "invar/sim.hpp"

namespace testsupport {

using namespace invar;

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int dim, double scale) {
    std::uniform_real_distribution<double> unif(-scale, scale);
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = unif(rng);
    return v;
}

// Plant with quadratic drift and affine input matrix, plus Lipschitz bounds
// that provably dominate the gradients on the box |x_i| <= box_r.
struct PolyPlant {
    Plant plant;
    double box_r = 1.5;

    IntervalVector box() const {
        IntervalVector b(static_cast<std::size_t>(2 * plant.n));
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = Interval(-box_r, box_r);
        return b;
    }
    bool inside(const Eigen::VectorXd& x) const {
        return x.cwiseAbs().maxCoeff() <= box_r;
    }
    Eigen::VectorXd random_state(std::mt19937_64& rng, double fill = 1.0) const {
        return random_vector(rng, 2 * plant.n, box_r * fill);
    }
};

inline PolyPlant make_poly_plant(std::mt19937_64& rng, int n, int m, double box_r = 1.5) {
    const int dim = 2 * n;
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    std::vector<double> f_const(n);
    std::vector<Eigen::VectorXd> f_lin(n);
    std::vector<Eigen::MatrixXd> f_quad(n);
    for (int k = 0; k < n; ++k) {
        f_const[k] = unif(rng);
        f_lin[k] = random_vector(rng, dim, 0.4);
        f_quad[k] = Eigen::MatrixXd(dim, dim);
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c) f_quad[k](r, c) = 0.15 * unif(rng);
    }
    Eigen::MatrixXd g_const(n, m);
    std::vector<Eigen::VectorXd> g_lin(static_cast<std::size_t>(n) * m);
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < m; ++l) {
            g_const(k, l) = 1.5 * unif(rng);
            g_lin[static_cast<std::size_t>(k) * m + l] = random_vector(rng, dim, 0.4);
        }

    PolyPlant out;
    out.box_r = box_r;
    out.plant.n = n;
    out.plant.m = m;
    out.plant.label = "poly";
    out.plant.drift = [n, f_const, f_lin, f_quad](const Eigen::VectorXd& x) {
        Eigen::VectorXd f(n);
        for (int k = 0; k < n; ++k)
            f(k) = f_const[static_cast<std::size_t>(k)] +
                   f_lin[static_cast<std::size_t>(k)].dot(x) +
                   x.dot(f_quad[static_cast<std::size_t>(k)] * x);
        return f;
    };
    out.plant.input_matrix = [n, m, g_const, g_lin](const Eigen::VectorXd& x) {
        Eigen::MatrixXd g(n, m);
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < m; ++l)
                g(k, l) = g_const(k, l) + g_lin[static_cast<std::size_t>(k) * m + l].dot(x);
        return g;
    };

    // sup ||grad f_k|| <= ||b|| + ||C + C'||_2 * R over the box.
    const double radius = box_r * std::sqrt(static_cast<double>(dim));
    out.plant.declared_bounds.f_bar = Eigen::VectorXd(n);
    for (int k = 0; k < n; ++k) {
        const Eigen::MatrixXd sym = f_quad[static_cast<std::size_t>(k)] +
                                    f_quad[static_cast<std::size_t>(k)].transpose();
        const double spectral = sym.jacobiSvd().singularValues()(0);
        out.plant.declared_bounds.f_bar(k) =
            1.05 * (f_lin[static_cast<std::size_t>(k)].norm() + spectral * radius);
    }
    out.plant.declared_bounds.g_bar = Eigen::MatrixXd(n, m);
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < m; ++l)
            out.plant.declared_bounds.g_bar(k, l) =
                1.05 * g_lin[static_cast<std::size_t>(k) * m + l].norm() + 1e-9;
    return out;
}

// Short simulated trajectory sampled as measurement triples; stops if the
// state leaves the validity box.
inline std::vector<DataPoint> sample_trajectory(const PolyPlant& pp, std::mt19937_64& rng,
                                                int points, double dt = 0.02) {
    std::vector<DataPoint> data;
    Eigen::VectorXd x = pp.random_state(rng, 0.4);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int i = 0; i < points; ++i) {
        Eigen::VectorXd u = random_vector(rng, pp.plant.m, 1.0);
        if (!pp.inside(x)) break;
        data.push_back({x, pp.plant.derivative(x, u), u, static_cast<double>(i) * dt});
        for (int s = 0; s < 3; ++s) x = rk4_step(pp.plant, x, u, dt);
    }
    return data;
}

inline EvidenceSet evidence_from(const PolyPlant& pp, const std::vector<DataPoint>& data) {
    EvidenceSet ev(pp.plant.declared_bounds, 1e3, Eigen::VectorXd::Zero(2 * pp.plant.n));
    return approximate(data, std::move(ev));
}

// Brute-force oracle for the scalar contraction: grid the drift prior, pin
// the input coefficient through the measurement, and collect the attainable
// values of both unknowns.
struct ScalarContractOracle {
    Interval c_f;
    Interval c_g;
    double cell_f;
    double cell_g;
};

inline ScalarContractOracle scalar_contract_bruteforce(Interval f_prior, Interval g_prior,
                                                       double u, double xdot, int grid = 10000) {
    double f_lo = std::numeric_limits<double>::infinity();
    double f_hi = -f_lo;
    double g_lo = std::numeric_limits<double>::infinity();
    double g_hi = -g_lo;
    const double cell_f = f_prior.width() / (grid - 1);
    const double cell_g = g_prior.width() / (grid - 1);
    for (int i = 0; i < grid; ++i) {
        const double f = f_prior.lo + f_prior.width() * i / (grid - 1);
        const double g = (xdot - f) / u;
        if (g >= g_prior.lo && g <= g_prior.hi) {
            f_lo = std::min(f_lo, f);
            f_hi = std::max(f_hi, f);
            g_lo = std::min(g_lo, g);
            g_hi = std::max(g_hi, g);
        }
    }
    for (int i = 0; i < grid; ++i) {
        const double g = g_prior.lo + g_prior.width() * i / (grid - 1);
        const double f = xdot - g * u;
        if (f >= f_prior.lo && f <= f_prior.hi) {
            f_lo = std::min(f_lo, f);
            f_hi = std::max(f_hi, f);
            g_lo = std::min(g_lo, g);
            g_hi = std::max(g_hi, g);
        }
    }
    return {Interval(f_lo, f_hi), Interval(g_lo, g_hi), cell_f, cell_g};
}

} // namespace testsupport
