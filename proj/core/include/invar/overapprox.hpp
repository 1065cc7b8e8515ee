#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "invar/errors.hpp"
#include "invar/interval.hpp"

namespace invar {

// One measurement of the second-order system: state x in R^{2n}, its exact
// derivative, and the input held at that instant. The first n derivative
// components must equal the last n state components (kinematic chain).
struct DataPoint {
    Eigen::VectorXd x;
    Eigen::VectorXd x_dot;
    Eigen::VectorXd u;
    double t = 0.0;
};

// Tolerance for the kinematic-chain consistency check on DataPoint.
inline constexpr double kKinematicTol = 1e-9;

bool kinematically_consistent(const DataPoint& d, double tol = kKinematicTol);

// Known upper bounds on the Lipschitz constants of the n dynamic rows.
struct LipschitzBounds {
    Eigen::VectorXd f_bar;   // length n, entries >= 0
    Eigen::MatrixXd g_bar;   // n x m, entries >= 0
};

// Interval certificate for one visited state: f(x) in c_f, g(x) in c_g.
struct EvidenceEntry {
    Eigen::VectorXd x;       // full state, length 2n
    IntervalVector c_f;      // length n
    IntervalMatrix c_g;      // n x m
};

// Interval-valued enclosure of (f, g) at a query point.
struct Cover {
    IntervalVector f;        // length n
    IntervalMatrix g;        // n x m
};

// The growing set of per-datapoint certificates, seeded with a single
// magnitude-M prior entry so that covers are defined before any data arrives.
// Appending data and contracting entries only ever shrinks covers.
class EvidenceSet {
public:
    EvidenceSet() = default;
    EvidenceSet(LipschitzBounds bounds, double prior_magnitude, Eigen::VectorXd x0);

    const std::vector<EvidenceEntry>& entries() const { return entries_; }
    const std::vector<DataPoint>& data() const { return data_; }
    const LipschitzBounds& bounds() const { return bounds_; }
    double prior_magnitude() const { return prior_magnitude_; }

    int n() const { return static_cast<int>(bounds_.f_bar.size()); }
    int m() const { return static_cast<int>(bounds_.g_bar.cols()); }
    int state_dim() const { return 2 * n(); }
    std::size_t data_count() const { return data_.size(); }

    // Used by approximate(); entry index i+1 corresponds to datapoint i.
    void append(const DataPoint& d, EvidenceEntry entry);
    void replace(std::size_t data_index, EvidenceEntry entry);
    // Deserialization path: certificate without its datapoint (query-only).
    void append_entry_only(EvidenceEntry entry);

private:
    std::vector<EvidenceEntry> entries_;
    std::vector<DataPoint> data_;
    LipschitzBounds bounds_;
    double prior_magnitude_ = 0.0;
};

// Intersection of Lipschitz cones around all evidence points, evaluated at a
// point or over a whole box (the box form backs the one-step enclosure).
Cover cover(const Eigen::VectorXd& x, const EvidenceSet& ev);
Cover cover(const IntervalVector& box, const EvidenceSet& ev);

// Sequential interval constraint propagation at one datapoint: returns the
// smallest intervals enclosing f(x^j) and g(x^j) given the priors and the
// measured (x, x_dot, u). Only the n dynamic rows participate.
std::pair<IntervalVector, IntervalMatrix> contract(const DataPoint& d,
                                                   const IntervalVector& f_prior,
                                                   const IntervalMatrix& g_prior);

struct ApproximateOptions {
    double fix_tol = 1e-9;   // max endpoint movement treated as "invariant"
    int max_sweeps = 100;
};

// Assimilates the time-ordered dataset into the evidence set: cover+contract
// for each new point, then repeated full sweeps until no endpoint moves more
// than fix_tol. Incremental: points already assimilated are not re-appended,
// so feeding one new datapoint costs one append plus the fixpoint sweep.
EvidenceSet approximate(std::span<const DataPoint> dataset, EvidenceSet ev,
                        const ApproximateOptions& opts = {});

// Convex combination of the cover endpoints: theta * lower + (1-theta) * upper.
// Lipschitz in x with entrywise constant g_bar.
Eigen::MatrixXd estimate_g(const Eigen::VectorXd& x, const EvidenceSet& ev, double theta);

// One-step enclosure of the future state under any input signal valued in u_set.
struct StateEnclosure {
    IntervalVector box;      // second-order enclosure of x(t + dt)
    IntervalVector rough;    // a priori enclosure of x(s) for s in [t, t + dt]
};

StateEnclosure predict_next_state(const Eigen::VectorXd& x, const IntervalVector& u_set,
                                  double dt, const EvidenceSet& ev);

// Entrywise bound on |ghat_{kl}(x_next) - g_{kl}(x_next)| one measurement
// ahead of the given evidence entry, for inputs valued in u_set.
Eigen::MatrixXd estimation_error_bound(const EvidenceEntry& entry, const IntervalVector& u_set,
                                       double dt, const EvidenceSet& ev);

// Row Lipschitz constants of the lifted 2n-dimensional vector field under
// inputs in u_set: 1 for the kinematic rows, f_bar_k + sum_l g_bar_kl |U_l|
// for the dynamic rows. Aggregated 2-norm gives the step-size coefficient.
Eigen::VectorXd lifted_row_lipschitz(const IntervalVector& u_set, const LipschitzBounds& b);
double lifted_beta(const IntervalVector& u_set, const LipschitzBounds& b);

// Line-oriented text serialization of an evidence set (see docs/formats.md).
void save_evidence(std::ostream& os, const EvidenceSet& ev);
EvidenceSet load_evidence(std::istream& is);

} // namespace invar
