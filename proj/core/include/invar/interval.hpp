#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "invar/errors.hpp"

namespace invar {

// Closed real interval [lo, hi] with plain floating-point endpoints.
// Degenerate intervals (lo == hi) represent exact reals.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    explicit Interval(double v) : lo(v), hi(v) {}
    Interval(double l, double h) : lo(l), hi(h) { assert(l <= h); }

    // [-r, r] for r >= 0.
    static Interval symmetric(double r) { return {-r, r}; }

    double width() const { return hi - lo; }
    double magnitude() const { return std::max(std::abs(lo), std::abs(hi)); }
    double midpoint() const { return 0.5 * (lo + hi); }

    bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
    bool subset_of(const Interval& o, double tol = 0.0) const {
        return lo >= o.lo - tol && hi <= o.hi + tol;
    }
};

inline Interval operator+(Interval a, Interval b) { return {a.lo + b.lo, a.hi + b.hi}; }
inline Interval operator+(Interval a, double b) { return {a.lo + b, a.hi + b}; }
inline Interval operator+(double a, Interval b) { return b + a; }
inline Interval operator-(Interval a) { return {-a.hi, -a.lo}; }
inline Interval operator-(Interval a, Interval b) { return {a.lo - b.hi, a.hi - b.lo}; }
inline Interval operator-(double a, Interval b) { return {a - b.hi, a - b.lo}; }
inline Interval operator-(Interval a, double b) { return {a.lo - b, a.hi - b}; }

// Four-corner product rule.
inline Interval operator*(Interval a, Interval b) {
    const double p1 = a.lo * b.lo;
    const double p2 = a.lo * b.hi;
    const double p3 = a.hi * b.lo;
    const double p4 = a.hi * b.hi;
    return {std::min(std::min(p1, p2), std::min(p3, p4)),
            std::max(std::max(p1, p2), std::max(p3, p4))};
}

inline Interval operator*(double s, Interval a) {
    return s >= 0.0 ? Interval{s * a.lo, s * a.hi} : Interval{s * a.hi, s * a.lo};
}
inline Interval operator*(Interval a, double s) { return s * a; }

// Empty result is a value, not an error: callers decide how to report
// inconsistent evidence.
inline std::optional<Interval> intersect(Interval a, Interval b) {
    const double lo = std::max(a.lo, b.lo);
    const double hi = std::min(a.hi, b.hi);
    if (lo > hi) return std::nullopt;
    return Interval{lo, hi};
}

inline double width(Interval a) { return a.width(); }
inline double magnitude(Interval a) { return a.magnitude(); }

// Ordered list of intervals; a box in R^n.
struct IntervalVector {
    std::vector<Interval> entries;

    IntervalVector() = default;
    explicit IntervalVector(std::size_t n) : entries(n) {}
    IntervalVector(std::initializer_list<Interval> init) : entries(init) {}

    // Degenerate box around a point.
    static IntervalVector from_point(const Eigen::VectorXd& x) {
        IntervalVector v(static_cast<std::size_t>(x.size()));
        for (Eigen::Index i = 0; i < x.size(); ++i) v.entries[static_cast<std::size_t>(i)] = Interval(x(i));
        return v;
    }
    // x + [-r, r]^n.
    static IntervalVector ball(const Eigen::VectorXd& x, double r) {
        IntervalVector v(static_cast<std::size_t>(x.size()));
        for (Eigen::Index i = 0; i < x.size(); ++i)
            v.entries[static_cast<std::size_t>(i)] = Interval(x(i) - r, x(i) + r);
        return v;
    }

    std::size_t size() const { return entries.size(); }
    Interval& operator[](std::size_t i) { return entries[i]; }
    const Interval& operator[](std::size_t i) const { return entries[i]; }

    bool contains(const Eigen::VectorXd& x, double tol = 0.0) const {
        if (static_cast<std::size_t>(x.size()) != entries.size()) return false;
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (!entries[i].contains(x(static_cast<Eigen::Index>(i)), tol)) return false;
        return true;
    }
    bool subset_of(const IntervalVector& o, double tol = 0.0) const {
        if (o.size() != size()) return false;
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (!entries[i].subset_of(o.entries[i], tol)) return false;
        return true;
    }

    Eigen::VectorXd midpoint() const {
        Eigen::VectorXd m(static_cast<Eigen::Index>(entries.size()));
        for (std::size_t i = 0; i < entries.size(); ++i) m(static_cast<Eigen::Index>(i)) = entries[i].midpoint();
        return m;
    }
};

inline IntervalVector operator+(const IntervalVector& a, const IntervalVector& b) {
    assert(a.size() == b.size());
    IntervalVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline IntervalVector operator-(const IntervalVector& a, const Eigen::VectorXd& b) {
    assert(a.size() == static_cast<std::size_t>(b.size()));
    IntervalVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b(static_cast<Eigen::Index>(i));
    return r;
}

inline IntervalVector operator*(const IntervalVector& a, double s) {
    IntervalVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
    return r;
}

// max_i |A_i| with |.| the interval magnitude.
inline double inf_norm(const IntervalVector& v) {
    double m = 0.0;
    for (const auto& e : v.entries) m = std::max(m, e.magnitude());
    return m;
}

// Interval enclosure of the Euclidean norm over the box: the upper endpoint is
// attained at the corner farthest from the origin; the lower endpoint uses the
// per-axis distance to zero (zero when the axis interval straddles it).
inline Interval euclidean_norm(const IntervalVector& v) {
    double lo2 = 0.0;
    double hi2 = 0.0;
    for (const auto& e : v.entries) {
        const double mag = e.magnitude();
        hi2 += mag * mag;
        if (e.lo > 0.0 || e.hi < 0.0) {
            const double near = std::min(std::abs(e.lo), std::abs(e.hi));
            lo2 += near * near;
        }
    }
    return {std::sqrt(lo2), std::sqrt(hi2)};
}

// n x m grid of intervals, row major.
struct IntervalMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<Interval> entries;

    IntervalMatrix() = default;
    IntervalMatrix(int r, int c) : rows(r), cols(c), entries(static_cast<std::size_t>(r) * static_cast<std::size_t>(c)) {}

    static IntervalMatrix constant(int r, int c, Interval value) {
        IntervalMatrix m(r, c);
        for (auto& e : m.entries) e = value;
        return m;
    }

    Interval& at(int r, int c) { return entries[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }
    const Interval& at(int r, int c) const { return entries[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }

    bool contains(const Eigen::MatrixXd& g, double tol = 0.0) const {
        if (g.rows() != rows || g.cols() != cols) return false;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                if (!at(r, c).contains(g(r, c), tol)) return false;
        return true;
    }
};

// Interval matrix times a real vector; entry k encloses (g u)_k for every
// pointwise selection g in G.
inline IntervalVector mat_vec(const IntervalMatrix& g, const Eigen::VectorXd& u) {
    if (g.cols != u.size())
        throw DimensionMismatchError("mat_vec: matrix has " + std::to_string(g.cols) +
                                     " columns, vector has " + std::to_string(u.size()));
    IntervalVector y(static_cast<std::size_t>(g.rows));
    for (int k = 0; k < g.rows; ++k) {
        Interval acc(0.0);
        for (int l = 0; l < g.cols; ++l) acc = acc + g.at(k, l) * u(l);
        y[static_cast<std::size_t>(k)] = acc;
    }
    return y;
}

// Same contraction against an interval-valued input set.
inline IntervalVector mat_vec(const IntervalMatrix& g, const IntervalVector& u) {
    if (static_cast<std::size_t>(g.cols) != u.size())
        throw DimensionMismatchError("mat_vec: matrix has " + std::to_string(g.cols) +
                                     " columns, interval vector has " + std::to_string(u.size()));
    IntervalVector y(static_cast<std::size_t>(g.rows));
    for (int k = 0; k < g.rows; ++k) {
        Interval acc(0.0);
        for (int l = 0; l < g.cols; ++l) acc = acc + g.at(k, l) * u[static_cast<std::size_t>(l)];
        y[static_cast<std::size_t>(k)] = acc;
    }
    return y;
}

} // namespace invar
