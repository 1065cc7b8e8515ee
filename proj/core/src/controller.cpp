#include "invar/controller.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace invar {

double ControllerGains::gamma_for(int j) const {
    if (j < 2) throw ValidationError("gamma_for: synthesis thresholds start at j = 2");
    const std::size_t idx = static_cast<std::size_t>(j - 2);
    if (idx < gamma.size()) return gamma[idx];
    return eps_hi;
}

void ControllerGains::validate() const {
    if (kappa_x <= 0.0 || kappa_v <= 0.0) throw ValidationError("gains: kappa must be positive");
    if (mu_x <= 0.0 || mu_v <= 0.0) throw ValidationError("gains: mu must be positive");
    if (eps_lo <= 0.0) throw ValidationError("gains: eps_lo must be positive");
    if (!(eps_lo < eps_hi)) throw ValidationError("gains: hysteresis band empty (eps_lo >= eps_hi)");
    if (theta < 0.0 || theta > 1.0) throw ValidationError("gains: theta must lie in [0,1]");
    for (double g : gamma)
        if (!(g > eps_lo))
            throw ValidationError("gains: every gamma_j must exceed eps_lo to rule out chattering");
}

Ellipsoid EllipsoidBarrier::level_set() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-q);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
        throw ValidationError("ellipsoid barrier: quadratic part is not negative definite");
    const Eigen::VectorXd center = 0.5 * (-q).ldlt().solve(b);
    const double peak = value(center);
    if (peak <= 0.0) throw ValidationError("ellipsoid barrier: level set is empty");
    return {center, (-q) / peak};
}

Eigen::VectorXd x2_reference(const Eigen::VectorXd& x1, const ControllerGains& gains,
                             const PositionBarrier& h, const ReciprocalBarrier& beta) {
    const double hv = h.value(x1);
    if (hv <= 0.0)
        throw NonPositiveBarrierError("x2_reference: position barrier not positive", hv);
    const double s = sigma(hv, SwitchFunction{gains.mu_x, gains.ramp});
    if (s == 0.0) return Eigen::VectorXd::Zero(x1.size());
    const double beta_d = beta_eval(hv, beta).d1;
    return -gains.kappa_x * s * beta_d * h.grad(x1);
}

Eigen::VectorXd control_local(const Eigen::VectorXd& x, const Eigen::MatrixXd& g_hat,
                              const Eigen::VectorXd& u_nom, const ControllerGains& gains,
                              const VelocityBarrier& h_v, const ReciprocalBarrier& beta_v,
                              ControlDiag* diag) {
    const double hv = h_v.value(x);
    if (hv <= 0.0)
        throw NonPositiveBarrierError("control_local: velocity barrier not positive", hv);
    const double s = sigma(hv, SwitchFunction{gains.mu_v, gains.ramp});
    const Eigen::VectorXd w = g_hat.transpose() * h_v.grad_x2(x);
    const double norm = w.norm();
    if (diag) *diag = {hv, s, norm};
    if (s == 0.0) return u_nom;
    if (norm <= gains.eps_lo)
        throw ControllabilityLossError("control_local: estimated direction degenerate, ||g' grad h_v|| = " +
                                           std::to_string(norm),
                                       norm);
    const double beta_d = beta_eval(hv, beta_v).d1;
    return u_nom - gains.kappa_v * s * beta_d * w / (norm * norm);
}

Eigen::VectorXd control_square(const Eigen::VectorXd& x, const Eigen::VectorXd& u_nom,
                               const ControllerGains& gains, const VelocityBarrier& h_v,
                               const ReciprocalBarrier& beta_v) {
    const Eigen::VectorXd grad = h_v.grad_x2(x);
    if (grad.size() != u_nom.size())
        throw DimensionMismatchError("control_square: requires square g (m = n)");
    const double hv = h_v.value(x);
    if (hv <= 0.0)
        throw NonPositiveBarrierError("control_square: velocity barrier not positive", hv);
    const double s = sigma(hv, SwitchFunction{gains.mu_v, gains.ramp});
    if (s == 0.0) return u_nom;
    const double beta_d = beta_eval(hv, beta_v).d1;
    return u_nom - gains.kappa_v * s * beta_d * grad;
}

namespace {

struct EllipsoidGeometry {
    Eigen::MatrixXd sqrt_shape;
    Eigen::MatrixXd inv_sqrt_shape;
};

EllipsoidGeometry decompose(const Eigen::MatrixXd& shape) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(shape);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
        throw ValidationError("ellipsoid: shape matrix is not positive definite");
    const Eigen::VectorXd lam = es.eigenvalues();
    EllipsoidGeometry g;
    g.sqrt_shape = es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    g.inv_sqrt_shape =
        es.eigenvectors() * lam.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    return g;
}

// Sufficient containment certificate: map the parent to the unit ball; the
// candidate is inside iff its (mapped) center norm plus largest semi-axis
// stays below one.
double containment_margin(const Ellipsoid& candidate, const Ellipsoid& parent,
                          const EllipsoidGeometry& parent_geo) {
    const Eigen::VectorXd y0 = parent_geo.sqrt_shape * (candidate.center - parent.center);
    const Eigen::MatrixXd inv_cand = candidate.shape.ldlt().solve(
        Eigen::MatrixXd::Identity(candidate.shape.rows(), candidate.shape.cols()));
    const Eigen::MatrixXd b = parent_geo.sqrt_shape * inv_cand * parent_geo.sqrt_shape;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
    const double sigma_max = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    return y0.norm() + sigma_max;
}

} // namespace

ReplacementCheck verify_replacement(const EllipsoidBarrier& candidate, const Ellipsoid& parent,
                                    const Eigen::VectorXd& e_c, const Eigen::MatrixXd& g_hat) {
    ReplacementCheck out;
    out.positive_at_point = candidate.value(e_c) > 0.0;
    out.score = (g_hat.transpose() * candidate.grad(e_c)).norm();
    try {
        const Ellipsoid set = candidate.level_set();
        out.contained = containment_margin(set, parent, decompose(parent.shape)) < 1.0;
    } catch (const ValidationError&) {
        out.contained = false;
    }
    return out;
}

EllipsoidBarrier find_next_barrier(const Eigen::VectorXd& e_c, const Eigen::MatrixXd& g_hat,
                                   const Ellipsoid& parent, double gamma_next, int budget,
                                   std::mt19937_64& rng) {
    const int dim = static_cast<int>(e_c.size());
    if (parent.center.size() != dim || parent.shape.rows() != dim)
        throw DimensionMismatchError("find_next_barrier: parent set dimension mismatch");
    if (!parent.contains(e_c))
        throw ValidationError("find_next_barrier: switch point lies outside the active set");

    const EllipsoidGeometry parent_geo = decompose(parent.shape);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g_hat, Eigen::ComputeThinU);
    const double top_gain = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
    if (top_gain <= 0.0)
        throw BarrierSynthesisError("find_next_barrier: estimate is zero, no gradient direction "
                                    "can reach the required score",
                                    0.0, 3);
    const Eigen::VectorXd top_dir = svd.matrixU().col(0);

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    double best_score = -1.0;
    Eigen::MatrixXd best_p;
    Eigen::VectorXd best_center;
    double best_infeasible_score = 0.0;
    bool saw_contained = false;

    for (int it = 0; it < budget; ++it) {
        // Gradient direction of the candidate at e_c, biased to the most
        // controllable direction of the estimate.
        Eigen::VectorXd w(dim);
        if (unif(rng) < 0.75) {
            for (int i = 0; i < dim; ++i) w(i) = top_dir(i) + 0.3 * gauss(rng);
        } else {
            for (int i = 0; i < dim; ++i) w(i) = gauss(rng);
        }
        if (w.norm() < 1e-12) continue;
        w.normalize();
        if (unif(rng) < 0.5) w = -w;

        // Orthonormal frame with the first axis along w.
        Eigen::MatrixXd frame;
        {
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(w);
            frame = qr.householderQ();
            if (frame.col(0).dot(w) < 0.0) frame = -frame;
        }

        // Axis lengths as fractions of the parent's radius along each axis.
        Eigen::MatrixXd p_cand = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::MatrixXd p_inv = Eigen::MatrixXd::Zero(dim, dim);
        for (int i = 0; i < dim; ++i) {
            const Eigen::VectorXd qi = frame.col(i);
            const double parent_radius = 1.0 / std::sqrt(qi.dot(parent.shape * qi));
            const double a = (0.15 + 0.45 * unif(rng)) * parent_radius;
            p_cand += qi * qi.transpose() / (a * a);
            p_inv += qi * qi.transpose() * (a * a);
        }

        // Offset the center against w so the gradient at e_c is -2 t w, and
        // e_c sits strictly inside the candidate.
        const double tau = 0.2 + 0.5 * unif(rng);
        const Eigen::VectorXd pinv_w = p_inv * w;
        const double denom = std::sqrt(w.dot(pinv_w));
        if (!(denom > 0.0)) continue;
        const double t = tau / denom;
        const Eigen::VectorXd center = e_c - t * pinv_w;

        const double score = 2.0 * t * (g_hat.transpose() * w).norm();

        const double margin = containment_margin({center, p_cand}, parent, parent_geo);
        if (margin >= 1.0 - 1e-9) {
            best_infeasible_score = std::max(best_infeasible_score, score);
            continue;
        }
        saw_contained = true;
        if (score > best_score) {
            best_score = score;
            best_p = p_cand;
            best_center = center;
        }
    }

    if (best_score < gamma_next) {
        const int failed = saw_contained ? 3 : 1;
        std::ostringstream msg;
        msg << "find_next_barrier: budget exhausted; best ";
        if (saw_contained)
            msg << "contained candidate scored " << best_score << " < gamma " << gamma_next;
        else
            msg << "candidate (score " << best_infeasible_score << ") failed containment";
        throw BarrierSynthesisError(msg.str(), std::max(best_score, best_infeasible_score), failed);
    }

    EllipsoidBarrier out;
    out.q = -best_p;
    out.b = 2.0 * (best_p * best_center);
    out.c = 1.0 - best_center.dot(best_p * best_center);
    const ReplacementCheck check = verify_replacement(out, parent, e_c, g_hat);
    if (!check.ok(gamma_next))
        throw BarrierSynthesisError("find_next_barrier: winning candidate failed verification",
                                    check.score, check.contained ? (check.positive_at_point ? 3 : 2) : 1);
    return out;
}

namespace {

double level_value(const AdaptationState& st, const VelocityBarrier& h_v,
                   const Eigen::VectorXd& x, int level) {
    if (level == 1) return h_v.value(x);
    return st.stack[static_cast<std::size_t>(level - 2)].value(h_v.e2(x));
}

Eigen::VectorXd level_grad_x2(const AdaptationState& st, const VelocityBarrier& h_v,
                              const Eigen::VectorXd& x, int level) {
    if (level == 1) return h_v.grad_x2(x);
    return st.stack[static_cast<std::size_t>(level - 2)].grad(h_v.e2(x));
}

Ellipsoid level_set_of(const AdaptationState& st, const VelocityBarrier& h_v, int level) {
    if (level == 1) return {Eigen::VectorXd::Zero(h_v.weight.rows()), h_v.weight / h_v.level};
    return st.stack[static_cast<std::size_t>(level - 2)].level_set();
}

void push_event(std::vector<ControlEvent>* events, double t, std::string kind, std::string payload) {
    if (events) events->push_back({t, std::move(kind), std::move(payload)});
}

std::string dump_state(const AdaptationState& st, double norm) {
    std::ostringstream os;
    os << "j=" << st.j << " norm=" << norm << " rho=";
    for (int r : st.rho) os << r;
    return os.str();
}

} // namespace

Eigen::VectorXd adaptation_step(const Eigen::VectorXd& x, const Eigen::MatrixXd& g_hat,
                                AdaptationState& st, const ControllerGains& gains,
                                const VelocityBarrier& h_v, const ReciprocalBarrier& beta,
                                int synthesis_budget, std::mt19937_64& rng, double t,
                                std::vector<ControlEvent>* events) {
    // Drop synthesized barriers the state has drifted out of; they can no
    // longer back a reciprocal term. The level below regains its flag so the
    // machine can immediately re-synthesize at the current state if needed.
    while (st.j >= 2 && level_value(st, h_v, x, st.j) <= 0.0) {
        st.stack.resize(static_cast<std::size_t>(st.j - 2));
        st.rho[static_cast<std::size_t>(st.j - 1)] = 1;
        st.j -= 1;
        st.rho[static_cast<std::size_t>(st.j - 1)] = 1;
        push_event(events, t, "barrier_exit", "fell_back_to_j=" + std::to_string(st.j));
    }

    // Controllability-loss guard at the active level.
    {
        const Eigen::VectorXd w = g_hat.transpose() * level_grad_x2(st, h_v, x, st.j);
        const double norm = w.norm();
        if (norm <= gains.eps_lo && st.rho[static_cast<std::size_t>(st.j - 1)] == 1) {
            if (st.j >= st.max_index)
                throw AdaptationOverflowError("adaptation: iterator would exceed " +
                                              std::to_string(st.max_index) + " [" +
                                              dump_state(st, norm) + "]");
            st.x_c = x;
            st.rho[static_cast<std::size_t>(st.j - 1)] = 0;
            push_event(events, t, "rho_drop",
                       "iota=" + std::to_string(st.j) + ";norm=" + std::to_string(norm));
            EllipsoidBarrier next;
            try {
                next = find_next_barrier(h_v.e2(st.x_c), g_hat, level_set_of(st, h_v, st.j),
                                         gains.gamma_for(st.j + 1), synthesis_budget, rng);
            } catch (...) {
                st.rho[static_cast<std::size_t>(st.j - 1)] = 1;  // undo, retry next tick
                throw;
            }
            st.stack.resize(static_cast<std::size_t>(st.j - 1));
            st.stack.push_back(std::move(next));
            // Flags above the new level belong to discarded barriers.
            for (std::size_t i = static_cast<std::size_t>(st.j); i < st.rho.size(); ++i) st.rho[i] = 1;
            st.j += 1;
            const double score =
                (g_hat.transpose() * level_grad_x2(st, h_v, x, st.j)).norm();
            push_event(events, t, "synthesize",
                       "j=" + std::to_string(st.j) + ";score=" + std::to_string(score));
        }
    }

    // Recovery scan: fall back to the lowest dropped level whose direction
    // norm has climbed past the upper threshold.
    for (int iota = 1; iota < st.j; ++iota) {
        const double norm = (g_hat.transpose() * level_grad_x2(st, h_v, x, iota)).norm();
        if (norm > gains.eps_hi && st.rho[static_cast<std::size_t>(iota - 1)] == 0) {
            st.rho[static_cast<std::size_t>(iota - 1)] = 1;
            st.j = iota;
            push_event(events, t, "rho_restore",
                       "iota=" + std::to_string(iota) + ";norm=" + std::to_string(norm));
            break;
        }
    }

    // Barrier term of the general law; the rho products reduce to the active
    // level, whose flag is up and whose direction norm exceeds eps_lo.
    const double hj = level_value(st, h_v, x, st.j);
    if (hj <= 0.0)
        throw NonPositiveBarrierError("adaptation: active barrier not positive at level " +
                                          std::to_string(st.j),
                                      hj);
    const Eigen::VectorXd w = g_hat.transpose() * level_grad_x2(st, h_v, x, st.j);
    const double norm = w.norm();
    const double beta_d = beta_eval(hj, beta).d1;
    return beta_d * w / (norm * norm);
}

SafetyController::SafetyController(SafetyControllerConfig cfg, int n, int m)
    : cfg_(std::move(cfg)), n_(n), m_(m), rng_(cfg_.seed), adaptation_(n) {
    cfg_.gains.validate();
    if (cfg_.prior_anchor.size() == 0) cfg_.prior_anchor = Eigen::VectorXd::Zero(2 * n);
    evidence_ = EvidenceSet(cfg_.bounds, cfg_.prior_magnitude, cfg_.prior_anchor);
    std::normal_distribution<double> gauss(0.0, 1.0);
    g0_ = Eigen::MatrixXd(n_, m_);
    for (int r = 0; r < n_; ++r)
        for (int c = 0; c < m_; ++c) g0_(r, c) = gauss(rng_);
}

Eigen::MatrixXd SafetyController::ghat(const Eigen::VectorXd& x) const {
    if (evidence_.data_count() == 0) return g0_;
    return estimate_g(x, evidence_, cfg_.gains.theta);
}

void SafetyController::ingest(const DataPoint& dp) {
    dataset_.push_back(dp);
    try {
        EvidenceSet next = approximate(dataset_, evidence_, cfg_.approx);
        evidence_ = std::move(next);
    } catch (const Error& e) {
        dataset_.pop_back();
        events_.push_back({dp.t, "estimator_error", e.what()});
    }
    const std::size_t discarded = adaptation_.stack.size();
    adaptation_.reset();
    events_.push_back({dp.t, "measurement_reset",
                       "data_count=" + std::to_string(evidence_.data_count()) +
                           ";discarded_barriers=" + std::to_string(discarded)});
}

Eigen::VectorXd SafetyController::tick(const Eigen::VectorXd& x, double t) {
    const Eigen::VectorXd x1 = x.head(n_);
    const Eigen::VectorXd u_nom = cfg_.u_nom(x, t);

    diag_ = TickDiag{};
    diag_.h = cfg_.h.value(x1);
    diag_.h_v = cfg_.h_v.value(x);
    diag_.e2_norm = cfg_.h_v.e2(x).norm();
    diag_.j = adaptation_.j;
    diag_.rho = adaptation_.rho;
    diag_.ghat = cfg_.law == ControlLaw::square ? Eigen::MatrixXd::Zero(n_, m_) : ghat(x);
    diag_.sigma_value = sigma(diag_.h_v, SwitchFunction{cfg_.gains.mu_v, cfg_.gains.ramp});

    if (diag_.h <= 0.0 || diag_.h_v <= 0.0) {
        // Past a zero level set the reciprocal terms are undefined; run the
        // nominal input and let the caller record the violation.
        diag_.used_nominal_only = true;
        events_.push_back({t, "barrier_nonpositive",
                           "h=" + std::to_string(diag_.h) + ";h_v=" + std::to_string(diag_.h_v)});
        return u_nom;
    }

    try {
        switch (cfg_.law) {
        case ControlLaw::square: {
            Eigen::VectorXd u = control_square(x, u_nom, cfg_.gains, cfg_.h_v, cfg_.beta_v);
            diag_.used_nominal_only = diag_.sigma_value == 0.0;
            return u;
        }
        case ControlLaw::local: {
            ControlDiag cd;
            Eigen::VectorXd u =
                control_local(x, diag_.ghat, u_nom, cfg_.gains, cfg_.h_v, cfg_.beta_v, &cd);
            diag_.active_norm = cd.direction_norm;
            diag_.used_nominal_only = cd.sigma_value == 0.0;
            return u;
        }
        case ControlLaw::adaptive: {
            const Eigen::VectorXd u_b =
                adaptation_step(x, diag_.ghat, adaptation_, cfg_.gains, cfg_.h_v, cfg_.beta_v,
                                cfg_.synthesis_budget, rng_, t, &events_);
            diag_.j = adaptation_.j;
            diag_.rho = adaptation_.rho;
            diag_.active_norm =
                (diag_.ghat.transpose() *
                 (adaptation_.j == 1
                      ? cfg_.h_v.grad_x2(x)
                      : adaptation_.stack[static_cast<std::size_t>(adaptation_.j - 2)].grad(
                            cfg_.h_v.e2(x))))
                    .norm();
            if (diag_.sigma_value == 0.0) {
                diag_.used_nominal_only = true;
                return u_nom;
            }
            return u_nom - cfg_.gains.kappa_v * diag_.sigma_value * u_b;
        }
        }
    } catch (const Error& e) {
        diag_.j = adaptation_.j;
        diag_.rho = adaptation_.rho;
        diag_.used_nominal_only = true;
        events_.push_back({t, "control_error", e.what()});
        return u_nom;
    }
    return u_nom;
}

std::vector<ControlEvent> SafetyController::drain_events() {
    std::vector<ControlEvent> out;
    out.swap(events_);
    return out;
}

} // namespace invar
