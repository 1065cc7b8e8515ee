#include "invar/overapprox.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace invar {

namespace {

void write_value(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

// Running intersection that remembers which evidence entries pin the current
// endpoints, so an empty result can name the conflicting pair.
struct TrackedIntersection {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    int lo_src = -1;
    int hi_src = -1;

    void meet(Interval term, int src) {
        if (term.lo > lo) { lo = term.lo; lo_src = src; }
        if (term.hi < hi) { hi = term.hi; hi_src = src; }
    }
    bool empty() const { return lo > hi; }
    Interval get() const { return {lo, hi}; }
};

} // namespace

bool kinematically_consistent(const DataPoint& d, double tol) {
    const Eigen::Index dim = d.x.size();
    if (dim % 2 != 0 || d.x_dot.size() != dim) return false;
    const Eigen::Index n = dim / 2;
    for (Eigen::Index k = 0; k < n; ++k)
        if (std::abs(d.x_dot(k) - d.x(n + k)) > tol) return false;
    return true;
}

EvidenceSet::EvidenceSet(LipschitzBounds bounds, double prior_magnitude, Eigen::VectorXd x0)
    : bounds_(std::move(bounds)), prior_magnitude_(prior_magnitude) {
    const int n = static_cast<int>(bounds_.f_bar.size());
    const int m = static_cast<int>(bounds_.g_bar.cols());
    if (bounds_.g_bar.rows() != n)
        throw DimensionMismatchError("EvidenceSet: g_bar must have one row per dynamic state");
    if (x0.size() != 2 * n)
        throw DimensionMismatchError("EvidenceSet: x0 must have dimension 2n");
    if (prior_magnitude_ <= 0.0)
        throw ValidationError("EvidenceSet: prior magnitude must be positive");
    for (Eigen::Index k = 0; k < bounds_.f_bar.size(); ++k)
        if (bounds_.f_bar(k) < 0.0) throw ValidationError("EvidenceSet: negative f_bar entry");
    if ((bounds_.g_bar.array() < 0.0).any())
        throw ValidationError("EvidenceSet: negative g_bar entry");

    EvidenceEntry prior;
    prior.x = std::move(x0);
    prior.c_f = IntervalVector(static_cast<std::size_t>(n));
    for (auto& e : prior.c_f.entries) e = Interval::symmetric(prior_magnitude_);
    prior.c_g = IntervalMatrix::constant(n, m, Interval::symmetric(prior_magnitude_));
    entries_.push_back(std::move(prior));
}

void EvidenceSet::append(const DataPoint& d, EvidenceEntry entry) {
    data_.push_back(d);
    entries_.push_back(std::move(entry));
}

void EvidenceSet::replace(std::size_t data_index, EvidenceEntry entry) {
    entries_.at(data_index + 1) = std::move(entry);
}

void EvidenceSet::append_entry_only(EvidenceEntry entry) {
    entries_.push_back(std::move(entry));
}

namespace {

Cover cover_impl(const EvidenceSet& ev,
                 const std::function<double(const Eigen::VectorXd&)>& distance_to) {
    const int n = ev.n();
    const int m = ev.m();
    const auto& entries = ev.entries();
    const auto& b = ev.bounds();

    std::vector<double> dist(entries.size());
    for (std::size_t j = 0; j < entries.size(); ++j) dist[j] = distance_to(entries[j].x);

    Cover out;
    out.f = IntervalVector(static_cast<std::size_t>(n));
    out.g = IntervalMatrix(n, m);
    for (int k = 0; k < n; ++k) {
        TrackedIntersection acc;
        for (std::size_t j = 0; j < entries.size(); ++j)
            acc.meet(entries[j].c_f[static_cast<std::size_t>(k)] + Interval::symmetric(b.f_bar(k) * dist[j]),
                     static_cast<int>(j));
        if (acc.empty())
            throw EmptyIntersectionError(
                "cover: evidence entries " + std::to_string(acc.lo_src) + " and " +
                    std::to_string(acc.hi_src) + " conflict on f row " + std::to_string(k) +
                    " (data violates the declared Lipschitz bounds)",
                -1, k, -1);
        out.f[static_cast<std::size_t>(k)] = acc.get();
    }
    for (int k = 0; k < n; ++k) {
        for (int l = 0; l < m; ++l) {
            TrackedIntersection acc;
            for (std::size_t j = 0; j < entries.size(); ++j)
                acc.meet(entries[j].c_g.at(k, l) + Interval::symmetric(b.g_bar(k, l) * dist[j]),
                         static_cast<int>(j));
            if (acc.empty())
                throw EmptyIntersectionError(
                    "cover: evidence entries " + std::to_string(acc.lo_src) + " and " +
                        std::to_string(acc.hi_src) + " conflict on g entry (" + std::to_string(k) +
                        "," + std::to_string(l) + ") (data violates the declared Lipschitz bounds)",
                    -1, k, l);
            out.g.at(k, l) = acc.get();
        }
    }
    return out;
}

} // namespace

Cover cover(const Eigen::VectorXd& x, const EvidenceSet& ev) {
    if (x.size() != ev.state_dim())
        throw DimensionMismatchError("cover: query point has wrong dimension");
    return cover_impl(ev, [&x](const Eigen::VectorXd& xj) { return (x - xj).norm(); });
}

Cover cover(const IntervalVector& box, const EvidenceSet& ev) {
    if (box.size() != static_cast<std::size_t>(ev.state_dim()))
        throw DimensionMismatchError("cover: query box has wrong dimension");
    return cover_impl(ev, [&box](const Eigen::VectorXd& xj) {
        return euclidean_norm(box - xj).hi;
    });
}

std::pair<IntervalVector, IntervalMatrix> contract(const DataPoint& d,
                                                   const IntervalVector& f_prior,
                                                   const IntervalMatrix& g_prior) {
    const int n = static_cast<int>(f_prior.size());
    const int m = g_prior.cols;
    if (g_prior.rows != n)
        throw DimensionMismatchError("contract: prior dimensions disagree");
    if (d.x.size() != 2 * n || d.x_dot.size() != 2 * n || d.u.size() != m)
        throw DimensionMismatchError("contract: datapoint dimensions disagree with priors");

    IntervalVector c_f(static_cast<std::size_t>(n));
    IntervalMatrix c_g(n, m);
    const IntervalVector y = mat_vec(g_prior, d.u);

    for (int k = 0; k < n; ++k) {
        const double xdot_k = d.x_dot(n + k);
        const Interval yk = y[static_cast<std::size_t>(k)];

        auto cf = intersect(f_prior[static_cast<std::size_t>(k)], xdot_k - yk);
        if (!cf)
            throw EmptyIntersectionError("contract: drift prior inconsistent with datapoint on row " +
                                             std::to_string(k),
                                         -1, k, -1);
        c_f[static_cast<std::size_t>(k)] = *cf;

        auto s = intersect(xdot_k - *cf, yk);
        if (!s)
            throw EmptyIntersectionError("contract: residual empty on row " + std::to_string(k), -1, k, -1);

        for (int l = 0; l < m; ++l) {
            // Tail of the row sum, over the remaining (prior) columns.
            Interval tail(0.0);
            for (int p = l + 1; p < m; ++p) tail = tail + g_prior.at(k, p) * d.u(p);

            const double ul = d.u(l);
            if (ul != 0.0) {
                auto pinned = intersect(*s - tail, g_prior.at(k, l) * ul);
                if (!pinned)
                    throw EmptyIntersectionError("contract: input-column intersection empty at (" +
                                                     std::to_string(k) + "," + std::to_string(l) + ")",
                                                 -1, k, l);
                c_g.at(k, l) = *pinned * (1.0 / ul);
            } else {
                c_g.at(k, l) = g_prior.at(k, l);
            }

            s = intersect(*s - c_g.at(k, l) * ul, tail);
            if (!s)
                throw EmptyIntersectionError("contract: residual empty after column " +
                                                 std::to_string(l) + " on row " + std::to_string(k),
                                             -1, k, l);
        }
    }
    return {std::move(c_f), std::move(c_g)};
}

namespace {

double endpoint_movement(const EvidenceEntry& a, const EvidenceEntry& b) {
    double mv = 0.0;
    for (std::size_t k = 0; k < a.c_f.size(); ++k) {
        mv = std::max(mv, std::abs(a.c_f[k].lo - b.c_f[k].lo));
        mv = std::max(mv, std::abs(a.c_f[k].hi - b.c_f[k].hi));
    }
    for (std::size_t i = 0; i < a.c_g.entries.size(); ++i) {
        mv = std::max(mv, std::abs(a.c_g.entries[i].lo - b.c_g.entries[i].lo));
        mv = std::max(mv, std::abs(a.c_g.entries[i].hi - b.c_g.entries[i].hi));
    }
    return mv;
}

} // namespace

EvidenceSet approximate(std::span<const DataPoint> dataset, EvidenceSet ev,
                        const ApproximateOptions& opts) {
    if (ev.entries().empty())
        throw ValidationError("approximate: evidence set must carry the prior entry");
    if (ev.entries().size() != ev.data_count() + 1)
        throw ValidationError("approximate: evidence set has entries without datapoints "
                              "(loaded sets support queries only)");
    if (dataset.size() < ev.data_count())
        throw ValidationError("approximate: dataset is shorter than the assimilated prefix");

    // Append the new suffix, one cover+contract per point.
    for (std::size_t i = ev.data_count(); i < dataset.size(); ++i) {
        const DataPoint& d = dataset[i];
        if (d.x.size() != ev.state_dim() || d.x_dot.size() != ev.state_dim() ||
            d.u.size() != ev.m())
            throw DimensionMismatchError("approximate: datapoint " + std::to_string(i) +
                                         " has wrong dimensions");
        if (!kinematically_consistent(d))
            throw ValidationError("approximate: datapoint " + std::to_string(i) +
                                  " breaks the kinematic chain x_dot_1 = x_2");
        if (i > 0 && d.t < dataset[i - 1].t)
            throw ValidationError("approximate: dataset is not time-ordered at index " +
                                  std::to_string(i));
        try {
            Cover c = cover(d.x, ev);
            auto [cf, cg] = contract(d, c.f, c.g);
            ev.append(d, EvidenceEntry{d.x, std::move(cf), std::move(cg)});
        } catch (EmptyIntersectionError& e) {
            throw EmptyIntersectionError(std::string(e.what()) + " [datapoint " + std::to_string(i) + "]",
                                         static_cast<int>(i), e.row_index, e.col_index);
        }
    }

    // Sweep to the fixpoint: re-cover and re-contract every entry against the
    // full evidence set until endpoints stop moving.
    double residual = 0.0;
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        residual = 0.0;
        for (std::size_t i = 0; i < ev.data_count(); ++i) {
            const DataPoint& d = ev.data()[i];
            try {
                Cover c = cover(d.x, ev);
                auto [cf, cg] = contract(d, c.f, c.g);
                EvidenceEntry next{d.x, std::move(cf), std::move(cg)};
                residual = std::max(residual, endpoint_movement(ev.entries()[i + 1], next));
                ev.replace(i, std::move(next));
            } catch (EmptyIntersectionError& e) {
                throw EmptyIntersectionError(std::string(e.what()) + " [datapoint " + std::to_string(i) +
                                                 ", sweep " + std::to_string(sweep) + "]",
                                             static_cast<int>(i), e.row_index, e.col_index);
            }
        }
        if (residual <= opts.fix_tol) return ev;
    }
    throw NonTerminationError("approximate: fixpoint sweep budget of " +
                                  std::to_string(opts.max_sweeps) +
                                  " exhausted, residual " + std::to_string(residual),
                              residual);
}

Eigen::MatrixXd estimate_g(const Eigen::VectorXd& x, const EvidenceSet& ev, double theta) {
    if (theta < 0.0 || theta > 1.0)
        throw ValidationError("estimate_g: theta must lie in [0,1]");
    const Cover c = cover(x, ev);
    Eigen::MatrixXd ghat(ev.n(), ev.m());
    for (int k = 0; k < ev.n(); ++k)
        for (int l = 0; l < ev.m(); ++l)
            ghat(k, l) = theta * c.g.at(k, l).lo + (1.0 - theta) * c.g.at(k, l).hi;
    return ghat;
}

Eigen::VectorXd lifted_row_lipschitz(const IntervalVector& u_set, const LipschitzBounds& b) {
    const int n = static_cast<int>(b.f_bar.size());
    const int m = static_cast<int>(b.g_bar.cols());
    if (u_set.size() != static_cast<std::size_t>(m))
        throw DimensionMismatchError("lifted_row_lipschitz: input set has wrong dimension");
    Eigen::VectorXd rows(2 * n);
    // Kinematic rows x_dot_1 = x_2 are exact selectors with unit slope.
    for (int k = 0; k < n; ++k) rows(k) = 1.0;
    for (int k = 0; k < n; ++k) {
        double c = b.f_bar(k);
        for (int l = 0; l < m; ++l) c += b.g_bar(k, l) * u_set[static_cast<std::size_t>(l)].magnitude();
        rows(n + k) = c;
    }
    return rows;
}

double lifted_beta(const IntervalVector& u_set, const LipschitzBounds& b) {
    return lifted_row_lipschitz(u_set, b).norm();
}

namespace {

// Enclosure of the lifted vector field [x_2; f + g u] at a point.
IntervalVector lifted_h(const Eigen::VectorXd& x, const IntervalVector& u_set,
                        const EvidenceSet& ev) {
    const int n = ev.n();
    IntervalVector h(static_cast<std::size_t>(2 * n));
    for (int k = 0; k < n; ++k) h[static_cast<std::size_t>(k)] = Interval(x(n + k));
    const Cover c = cover(x, ev);
    const IntervalVector gu = mat_vec(c.g, u_set);
    for (int k = 0; k < n; ++k)
        h[static_cast<std::size_t>(n + k)] = c.f[static_cast<std::size_t>(k)] + gu[static_cast<std::size_t>(k)];
    return h;
}

// Same over a whole state box.
IntervalVector lifted_h(const IntervalVector& box, const IntervalVector& u_set,
                        const EvidenceSet& ev) {
    const int n = ev.n();
    IntervalVector h(static_cast<std::size_t>(2 * n));
    for (int k = 0; k < n; ++k) h[static_cast<std::size_t>(k)] = box[static_cast<std::size_t>(n + k)];
    const Cover c = cover(box, ev);
    const IntervalVector gu = mat_vec(c.g, u_set);
    for (int k = 0; k < n; ++k)
        h[static_cast<std::size_t>(n + k)] = c.f[static_cast<std::size_t>(k)] + gu[static_cast<std::size_t>(k)];
    return h;
}

// Product of the lifted Jacobian enclosure with an interval vector. Kinematic
// rows select the dynamic block exactly; dynamic rows contribute the symmetric
// Lipschitz ball across all 2n columns.
IntervalVector lifted_jacobian_product(const IntervalVector& v, const Eigen::VectorXd& row_lip, int n) {
    IntervalVector out(static_cast<std::size_t>(2 * n));
    double abs_sum = 0.0;
    for (const auto& e : v.entries) abs_sum += e.magnitude();
    for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = v[static_cast<std::size_t>(n + k)];
    for (int k = 0; k < n; ++k)
        out[static_cast<std::size_t>(n + k)] = Interval::symmetric(row_lip(n + k) * abs_sum);
    return out;
}

double check_step_size(const Eigen::VectorXd& row_lip, double dt, int state_dim) {
    const double beta = row_lip.norm();
    const double coef = std::sqrt(static_cast<double>(state_dim)) * beta * dt;
    if (coef >= 1.0) {
        const double max_dt = 1.0 / (std::sqrt(static_cast<double>(state_dim)) * beta);
        throw StepTooLargeError("step size " + std::to_string(dt) +
                                    " violates the enclosure precondition; maximal admissible dt is " +
                                    std::to_string(max_dt),
                                max_dt);
    }
    return coef;
}

} // namespace

StateEnclosure predict_next_state(const Eigen::VectorXd& x, const IntervalVector& u_set,
                                  double dt, const EvidenceSet& ev) {
    const int n = ev.n();
    const int dim = 2 * n;
    if (x.size() != dim)
        throw DimensionMismatchError("predict_next_state: state has wrong dimension");
    if (dt <= 0.0) throw ValidationError("predict_next_state: dt must be positive");

    const Eigen::VectorXd row_lip = lifted_row_lipschitz(u_set, ev.bounds());
    const double coef = check_step_size(row_lip, dt, dim);

    const IntervalVector h0 = lifted_h(x, u_set, ev);
    const double radius = dt * inf_norm(h0) / (1.0 - coef);
    IntervalVector rough = IntervalVector::ball(x, radius);

    const IntervalVector h_rough = lifted_h(rough, u_set, ev);
    const IntervalVector second = lifted_jacobian_product(h_rough, row_lip, n);

    IntervalVector box(static_cast<std::size_t>(dim));
    for (int k = 0; k < dim; ++k) {
        const auto sk = static_cast<std::size_t>(k);
        box[sk] = x(k) + h0[sk] * dt + second[sk] * (dt * dt / 2.0);
        // The rough set also encloses the endpoint state; meet keeps the
        // advertised box-inside-rough relation without losing soundness.
        if (auto met = intersect(box[sk], rough[sk])) box[sk] = *met;
    }
    return {std::move(box), std::move(rough)};
}

Eigen::MatrixXd estimation_error_bound(const EvidenceEntry& entry, const IntervalVector& u_set,
                                       double dt, const EvidenceSet& ev) {
    const int n = ev.n();
    const int m = ev.m();
    const int dim = 2 * n;
    if (entry.x.size() != dim)
        throw DimensionMismatchError("estimation_error_bound: entry state has wrong dimension");
    if (dt <= 0.0) throw ValidationError("estimation_error_bound: dt must be positive");

    const Eigen::VectorXd row_lip = lifted_row_lipschitz(u_set, ev.bounds());
    const double coef = check_step_size(row_lip, dt, dim);

    const IntervalVector h0 = lifted_h(entry.x, u_set, ev);
    const double radius = dt * inf_norm(h0) / (1.0 - coef);

    // Variation of the lifted field over the rough set, scaled per row.
    const double spread = std::sqrt(static_cast<double>(dim)) * radius;
    IntervalVector inner(static_cast<std::size_t>(dim));
    for (int k = 0; k < dim; ++k)
        inner[static_cast<std::size_t>(k)] =
            h0[static_cast<std::size_t>(k)] + Interval::symmetric(row_lip(k) * spread);

    const IntervalVector kappa = lifted_jacobian_product(inner, row_lip, n);

    const double h_norm_ub = euclidean_norm(h0).hi;
    const double kappa_norm_ub = euclidean_norm(kappa).hi;
    const double travel = h_norm_ub * dt + kappa_norm_ub * dt * dt / 2.0;

    Eigen::MatrixXd bound(n, m);
    const auto& g_bar = ev.bounds().g_bar;
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < m; ++l)
            bound(k, l) = entry.c_g.at(k, l).width() + 2.0 * g_bar(k, l) * travel;
    return bound;
}

void save_evidence(std::ostream& os, const EvidenceSet& ev) {
    const int n = ev.n();
    const int m = ev.m();
    os << "# invar evidence v1\n";
    os << "# n " << n << " m " << m << " prior_magnitude ";
    write_value(os, ev.prior_magnitude());
    os << "\n# f_bar";
    for (int k = 0; k < n; ++k) {
        os << ' ';
        write_value(os, ev.bounds().f_bar(k));
    }
    os << "\n# g_bar";
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < m; ++l) {
            os << ' ';
            write_value(os, ev.bounds().g_bar(k, l));
        }
    os << '\n';
    for (const auto& e : ev.entries()) {
        bool first = true;
        auto emit = [&](double v) {
            if (!first) os << ' ';
            first = false;
            write_value(os, v);
        };
        for (Eigen::Index i = 0; i < e.x.size(); ++i) emit(e.x(i));
        for (const auto& iv : e.c_f.entries) {
            emit(iv.lo);
            emit(iv.hi);
        }
        for (const auto& iv : e.c_g.entries) {
            emit(iv.lo);
            emit(iv.hi);
        }
        os << '\n';
    }
}

EvidenceSet load_evidence(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# invar evidence v1", 0) != 0)
        throw ParseError("evidence: missing header line", 1);

    int n = 0, m = 0;
    double prior = 0.0;
    if (!std::getline(is, line)) throw ParseError("evidence: truncated header", 2);
    {
        std::istringstream ss(line);
        std::string hash, kn, km, kp;
        if (!(ss >> hash >> kn >> n >> km >> m >> kp >> prior) || hash != "#")
            throw ParseError("evidence: malformed dimension line", 2);
    }
    LipschitzBounds b;
    b.f_bar = Eigen::VectorXd(n);
    b.g_bar = Eigen::MatrixXd(n, m);
    if (!std::getline(is, line)) throw ParseError("evidence: truncated f_bar line", 3);
    {
        std::istringstream ss(line);
        std::string hash, key;
        ss >> hash >> key;
        for (int k = 0; k < n; ++k)
            if (!(ss >> b.f_bar(k))) throw ParseError("evidence: short f_bar line", 3);
    }
    if (!std::getline(is, line)) throw ParseError("evidence: truncated g_bar line", 4);
    {
        std::istringstream ss(line);
        std::string hash, key;
        ss >> hash >> key;
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < m; ++l)
                if (!(ss >> b.g_bar(k, l))) throw ParseError("evidence: short g_bar line", 4);
    }

    std::vector<EvidenceEntry> parsed;
    int line_no = 4;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        EvidenceEntry e;
        e.x = Eigen::VectorXd(2 * n);
        for (int i = 0; i < 2 * n; ++i)
            if (!(ss >> e.x(i))) throw ParseError("evidence: short entry line", line_no);
        e.c_f = IntervalVector(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            double lo, hi;
            if (!(ss >> lo >> hi)) throw ParseError("evidence: short entry line", line_no);
            if (lo > hi) throw ParseError("evidence: inverted interval", line_no);
            e.c_f[static_cast<std::size_t>(k)] = Interval(lo, hi);
        }
        e.c_g = IntervalMatrix(n, m);
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < m; ++l) {
                double lo, hi;
                if (!(ss >> lo >> hi)) throw ParseError("evidence: short entry line", line_no);
                if (lo > hi) throw ParseError("evidence: inverted interval", line_no);
                e.c_g.at(k, l) = Interval(lo, hi);
            }
        parsed.push_back(std::move(e));
    }
    if (parsed.empty()) throw ParseError("evidence: no entries", line_no);

    // Rebuild around the prior entry; the remaining certificates are loaded as
    // query-only evidence (the originating datapoints are not serialized).
    EvidenceSet ev(std::move(b), prior, parsed.front().x);
    for (std::size_t j = 1; j < parsed.size(); ++j) ev.append_entry_only(std::move(parsed[j]));
    return ev;
}

} // namespace invar
