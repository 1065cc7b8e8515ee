#include "invar/sim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

namespace invar {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void append_value(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

} // namespace

Eigen::VectorXd Plant::derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    Eigen::VectorXd dx(2 * n);
    dx.head(n) = x.tail(n);
    dx.tail(n) = drift(x) + input_matrix(x) * u;
    return dx;
}

Eigen::VectorXd rk4_step(const Plant& plant, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         double dt) {
    if (dt <= 0.0) throw ValidationError("rk4_step: dt must be positive");
    const Eigen::VectorXd k1 = plant.derivative(x, u);
    const Eigen::VectorXd k2 = plant.derivative(x + 0.5 * dt * k1, u);
    const Eigen::VectorXd k3 = plant.derivative(x + 0.5 * dt * k2, u);
    const Eigen::VectorXd k4 = plant.derivative(x + dt * k3, u);
    Eigen::VectorXd next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite())
        throw NonFiniteStateError("rk4_step: state became non-finite");
    return next;
}

Plant make_quadrotor(const QuadrotorParams& p) {
    Plant plant;
    plant.n = 3;
    plant.m = 2;
    plant.label = "quadrotor";
    plant.drift = [p](const Eigen::VectorXd& x) {
        Eigen::VectorXd f(3);
        f(0) = -p.drag_v * x(3) / p.mass;
        f(1) = -p.gravity - p.drag_v * x(4) / p.mass;
        f(2) = -p.drag_phi * x(5) / (2.0 * p.inertia);
        return f;
    };
    plant.input_matrix = [p](const Eigen::VectorXd& x) {
        const double s = std::sin(x(2));
        const double c = std::cos(x(2));
        Eigen::MatrixXd g(3, 2);
        g(0, 0) = -s / p.mass;
        g(0, 1) = -s / p.mass;
        g(1, 0) = c / p.mass;
        g(1, 1) = c / p.mass;
        g(2, 0) = -p.arm / (2.0 * p.inertia);
        g(2, 1) = p.arm / (2.0 * p.inertia);
        return g;
    };
    // True slopes on any box: drag rows drag_v/mass, attitude row
    // drag_phi/(2 I); thrust entries cos/sin with slope 1/mass; the rotor-arm
    // column is constant (a hair of slack keeps repeated exact certificates
    // from colliding at machine precision).
    plant.declared_bounds.f_bar = Eigen::VectorXd(3);
    plant.declared_bounds.f_bar << 1.05 * p.drag_v / p.mass, 1.05 * p.drag_v / p.mass,
        1.05 * p.drag_phi / (2.0 * p.inertia);
    plant.declared_bounds.g_bar = Eigen::MatrixXd(3, 2);
    const double thrust_slope = 1.05 / p.mass;
    plant.declared_bounds.g_bar << thrust_slope, thrust_slope, thrust_slope, thrust_slope, 1e-6,
        1e-6;
    return plant;
}

ReferencePoint make_reference(double t, double amp_x, double amp_y, double freq_x, double freq_y) {
    ReferencePoint r;
    r.pos << amp_x * std::sin(freq_x * t), amp_y * std::sin(freq_y * t);
    r.vel << amp_x * freq_x * std::cos(freq_x * t), amp_y * freq_y * std::cos(freq_y * t);
    r.acc << -amp_x * freq_x * freq_x * std::sin(freq_x * t),
        -amp_y * freq_y * freq_y * std::sin(freq_y * t);
    return r;
}

LipschitzCheck validate_lipschitz_bounds(const Plant& plant, const IntervalVector& operating_box,
                                         int samples, std::mt19937_64& rng) {
    const int dim = static_cast<int>(operating_box.size());
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto draw = [&]() {
        Eigen::VectorXd x(dim);
        for (int i = 0; i < dim; ++i) {
            const Interval& iv = operating_box[static_cast<std::size_t>(i)];
            x(i) = iv.lo + (iv.hi - iv.lo) * unif(rng);
        }
        return x;
    };

    LipschitzCheck out;
    const auto& b = plant.declared_bounds;
    for (int s = 0; s < samples; ++s) {
        const Eigen::VectorXd x = draw();
        const Eigen::VectorXd y = draw();
        const double d = (x - y).norm();
        if (d < 1e-12) continue;
        const Eigen::VectorXd fx = plant.drift(x);
        const Eigen::VectorXd fy = plant.drift(y);
        const Eigen::MatrixXd gx = plant.input_matrix(x);
        const Eigen::MatrixXd gy = plant.input_matrix(y);
        for (int k = 0; k < plant.n; ++k) {
            const double df = std::abs(fx(k) - fy(k));
            out.max_f_slope = std::max(out.max_f_slope, df / d);
            const double ratio = df <= 1e-12 ? 0.0
                                 : b.f_bar(k) > 0.0 ? df / (b.f_bar(k) * d)
                                                    : std::numeric_limits<double>::infinity();
            out.worst_f_ratio = std::max(out.worst_f_ratio, ratio);
        }
        for (int k = 0; k < plant.n; ++k)
            for (int l = 0; l < plant.m; ++l) {
                const double dg = std::abs(gx(k, l) - gy(k, l));
                out.max_g_slope = std::max(out.max_g_slope, dg / d);
                const double ratio = dg <= 1e-12 ? 0.0
                                     : b.g_bar(k, l) > 0.0
                                         ? dg / (b.g_bar(k, l) * d)
                                         : std::numeric_limits<double>::infinity();
                out.worst_g_ratio = std::max(out.worst_g_ratio, ratio);
            }
    }
    out.ok = out.worst_f_ratio <= 1.0 + 1e-9 && out.worst_g_ratio <= 1.0 + 1e-9;
    return out;
}

std::string trajectory_csv_header(int n, int m) {
    std::string h = "t";
    for (int i = 1; i <= n; ++i) h += ",x1_" + std::to_string(i);
    for (int i = 1; i <= n; ++i) h += ",x2_" + std::to_string(i);
    for (int i = 1; i <= m; ++i) h += ",u_" + std::to_string(i);
    h += ",h,h_v,e2_norm,sigma,j,rho,active_norm,wf_max,wg_max,ghat_err,suff_margin";
    return h;
}

void write_trajectory_csv(std::ostream& os, const TrajectoryLog& log) {
    os << trajectory_csv_header(log.n, log.m) << '\n';
    std::string line;
    for (const auto& r : log.rows) {
        line.clear();
        append_value(line, r.t);
        for (Eigen::Index i = 0; i < r.x.size(); ++i) {
            line += ',';
            append_value(line, r.x(i));
        }
        for (Eigen::Index i = 0; i < r.u.size(); ++i) {
            line += ',';
            append_value(line, r.u(i));
        }
        for (double v : {r.h, r.h_v, r.e2_norm, r.sigma_value}) {
            line += ',';
            append_value(line, v);
        }
        line += ',' + std::to_string(r.j);
        line += ',' + r.rho;
        for (double v : {r.active_norm, r.wf_max, r.wg_max, r.ghat_err, r.suff_margin}) {
            line += ',';
            append_value(line, v);
        }
        os << line << '\n';
    }
}

void write_events_csv(std::ostream& os, const std::vector<ControlEvent>& events) {
    os << "t,kind,payload\n";
    std::string line;
    for (const auto& e : events) {
        line.clear();
        append_value(line, e.t);
        line += ',' + e.kind + ',' + e.payload;
        os << line << '\n';
    }
}

namespace {

std::string rho_string(const std::vector<int>& rho) {
    std::string s;
    s.reserve(rho.size());
    for (int r : rho) s += r ? '1' : '0';
    return s;
}

} // namespace

RunResult run_closed_loop(const RunSpec& spec) {
    const auto t_start = std::chrono::steady_clock::now();

    const int n = spec.plant.n;
    const int m = spec.plant.m;
    if (spec.x0.size() != 2 * n)
        throw ValidationError("run_closed_loop: initial state has wrong dimension");
    if (spec.dt_sim <= 0.0 || spec.horizon < 0.0)
        throw ValidationError("run_closed_loop: bad schedule");
    const double ratio = spec.measurement_period / spec.dt_sim;
    const long meas_every = std::lround(ratio);
    if (meas_every <= 0 || std::abs(ratio - static_cast<double>(meas_every)) > 1e-9)
        throw ValidationError("run_closed_loop: measurement period must be an integer multiple "
                              "of the integration step");

    const long steps = std::lround(spec.horizon / spec.dt_sim);

    SafetyController controller(spec.controller, n, m);
    const bool estimating = spec.safety_enabled && controller.uses_estimator();

    RunResult out;
    out.log.n = n;
    out.log.m = m;
    out.log.rows.reserve(static_cast<std::size_t>(steps + 1));
    out.summary.scenario = spec.name;
    out.summary.min_h = std::numeric_limits<double>::infinity();
    out.summary.min_h_v = std::numeric_limits<double>::infinity();
    out.summary.drop_counts.assign(static_cast<std::size_t>(2 * n + 1), 0);
    out.summary.restore_counts.assign(static_cast<std::size_t>(2 * n + 1), 0);

    Eigen::VectorXd x = spec.x0;
    Eigen::VectorXd u_last = Eigen::VectorXd::Zero(m);
    bool have_input = false;

    Eigen::VectorXd hull_lo = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd hull_hi = Eigen::VectorXd::Zero(m);
    bool hull_open = false;

    double ghat_err_sum = 0.0;
    std::size_t ghat_err_count = 0;
    double last_suff_margin = kNaN;
    bool was_violating = false;

    for (long step = 0; step <= steps; ++step) {
        const double t = static_cast<double>(step) * spec.dt_sim;

        if (estimating && step > 0 && step % meas_every == 0 && have_input) {
            // Close the bookkeeping of the previous measurement interval.
            if (!out.checkpoints.empty() && !out.checkpoints.back().complete) {
                auto& prev = out.checkpoints.back();
                prev.x_next = x;
                prev.u_hull = IntervalVector(static_cast<std::size_t>(m));
                for (int i = 0; i < m; ++i)
                    prev.u_hull[static_cast<std::size_t>(i)] = Interval(hull_lo(i), hull_hi(i));
                prev.complete = true;
            }
            hull_open = false;

            DataPoint dp{x, spec.plant.derivative(x, u_last), u_last, t};
            controller.ingest(dp);

            if (controller.evidence().data_count() > 0) {
                // Ground-truth soundness audit of the refreshed cover.
                try {
                    const Cover c = cover(x, controller.evidence());
                    const Eigen::VectorXd f_true = spec.plant.drift(x);
                    const Eigen::MatrixXd g_true = spec.plant.input_matrix(x);
                    bool sound = true;
                    for (int k = 0; k < n && sound; ++k)
                        sound = c.f[static_cast<std::size_t>(k)].contains(f_true(k), 1e-9);
                    if (sound) sound = c.g.contains(g_true, 1e-9);
                    if (!sound) {
                        ++out.summary.estimator_violations;
                        out.events.push_back({t, "estimator_unsound", "cover missed ground truth"});
                    }
                } catch (const Error& e) {
                    ++out.summary.estimator_violations;
                    out.events.push_back({t, "estimator_unsound", e.what()});
                }

                if (spec.capture_checkpoints) {
                    MeasurementCheckpoint cp;
                    cp.index = static_cast<int>(step / meas_every);
                    cp.t = t;
                    cp.x = x;
                    cp.evidence = controller.evidence();
                    out.checkpoints.push_back(std::move(cp));
                }

                // Sufficient-condition indicator for the local theorem: the
                // one-interval estimation-error bound against the hysteresis
                // floor. Informational only.
                try {
                    IntervalVector u_hull(static_cast<std::size_t>(m));
                    for (int i = 0; i < m; ++i)
                        u_hull[static_cast<std::size_t>(i)] = Interval(hull_lo(i), hull_hi(i));
                    const Eigen::MatrixXd bound = estimation_error_bound(
                        controller.evidence().entries().back(), u_hull, spec.measurement_period,
                        controller.evidence());
                    const double sig =
                        sigma(spec.controller.h_v.value(x),
                              SwitchFunction{spec.controller.gains.mu_v, spec.controller.gains.ramp});
                    last_suff_margin = spec.controller.gains.eps_lo * sig -
                                       bound.norm() * spec.controller.h_v.grad_x2(x).norm();
                } catch (const Error&) {
                    last_suff_margin = kNaN;
                }
            }
        }

        Eigen::VectorXd u;
        LogRow row;
        row.t = t;
        row.x = x;

        if (spec.safety_enabled) {
            u = controller.tick(x, t);
            const TickDiag& d = controller.last_diag();
            row.h = d.h;
            row.h_v = d.h_v;
            row.e2_norm = d.e2_norm;
            row.sigma_value = d.sigma_value;
            row.j = d.j;
            row.rho = rho_string(d.rho);
            row.active_norm = d.active_norm;
            if (controller.uses_estimator()) {
                const Eigen::MatrixXd g_true = spec.plant.input_matrix(x);
                row.ghat_err = (d.ghat - g_true).norm();
                ghat_err_sum += row.ghat_err;
                ++ghat_err_count;
            } else {
                row.ghat_err = kNaN;
            }
        } else {
            u = spec.controller.u_nom(x, t);
            row.h = spec.controller.h.value(x.head(n));
            row.h_v = spec.controller.h_v.value(x);
            row.e2_norm = spec.controller.h_v.e2(x).norm();
            row.sigma_value =
                sigma(row.h_v, SwitchFunction{spec.controller.gains.mu_v, spec.controller.gains.ramp});
            row.j = 1;
            row.rho = rho_string(std::vector<int>(static_cast<std::size_t>(2 * n + 1), 1));
            row.active_norm = kNaN;
            row.ghat_err = kNaN;
        }
        row.u = u;

        if (estimating && controller.evidence().data_count() > 0) {
            try {
                const Cover c = cover(x, controller.evidence());
                double wf = 0.0, wg = 0.0;
                for (const auto& iv : c.f.entries) wf = std::max(wf, iv.width());
                for (const auto& iv : c.g.entries) wg = std::max(wg, iv.width());
                row.wf_max = wf;
                row.wg_max = wg;
            } catch (const Error&) {
                row.wf_max = row.wg_max = kNaN;
            }
        } else {
            row.wf_max = row.wg_max = kNaN;
        }
        row.suff_margin = last_suff_margin;

        for (const auto& e : controller.drain_events()) {
            if (e.kind == "rho_drop" || e.kind == "rho_restore") {
                const auto pos = e.payload.find("iota=");
                if (pos != std::string::npos) {
                    const int iota = std::atoi(e.payload.c_str() + pos + 5);
                    auto& counts =
                        e.kind == "rho_drop" ? out.summary.drop_counts : out.summary.restore_counts;
                    if (iota >= 1 && iota <= static_cast<int>(counts.size()))
                        ++counts[static_cast<std::size_t>(iota - 1)];
                }
            }
            out.events.push_back(e);
        }

        const bool violating = row.h <= 0.0 || row.h_v <= 0.0;
        if (violating && !was_violating)
            out.events.push_back({t, "safety_violation",
                                  "h=" + std::to_string(row.h) + ";h_v=" + std::to_string(row.h_v)});
        was_violating = violating;
        out.summary.violation = out.summary.violation || violating;
        out.summary.min_h = std::min(out.summary.min_h, row.h);
        out.summary.min_h_v = std::min(out.summary.min_h_v, row.h_v);
        out.summary.max_e2 = std::max(out.summary.max_e2, row.e2_norm);
        out.summary.max_j = std::max(out.summary.max_j, row.j);

        out.log.rows.push_back(std::move(row));

        if (!hull_open) {
            hull_lo = u;
            hull_hi = u;
            hull_open = true;
        } else {
            hull_lo = hull_lo.cwiseMin(u);
            hull_hi = hull_hi.cwiseMax(u);
        }

        if (step < steps) {
            try {
                x = rk4_step(spec.plant, x, u, spec.dt_sim);
            } catch (const NonFiniteStateError& e) {
                out.summary.aborted = true;
                out.summary.abort_reason = e.what();
                out.events.push_back({t, "aborted", e.what()});
                break;
            }
            u_last = u;
            have_input = true;
        }
    }

    if (ghat_err_count > 0) {
        out.summary.mean_ghat_err = ghat_err_sum / static_cast<double>(ghat_err_count);
        for (auto it = out.log.rows.rbegin(); it != out.log.rows.rend(); ++it)
            if (std::isfinite(it->ghat_err)) {
                out.summary.final_ghat_err = it->ghat_err;
                break;
            }
    } else {
        out.summary.mean_ghat_err = kNaN;
        out.summary.final_ghat_err = kNaN;
    }
    out.summary.rows = out.log.rows.size();
    out.summary.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t_start)
                              .count();
    return out;
}

} // namespace invar
