#include <doctest.h>

#include <random>

#include "invar/interval.hpp"

using namespace invar;

TEST_CASE("interval addition") {
    const Interval a = Interval(1, 2) + Interval(3, 4);
    CHECK(a.lo == 4.0);
    CHECK(a.hi == 6.0);
    const Interval b = Interval(0, 0) + Interval(-1, 1);
    CHECK(b.lo == -1.0);
    CHECK(b.hi == 1.0);
    const Interval c = Interval(-2, -1) + Interval(1, 2);
    CHECK(c.lo == -1.0);
    CHECK(c.hi == 1.0);
}

TEST_CASE("interval product uses the four-corner rule") {
    const Interval a = Interval(-1, 2) * Interval(3, 4);
    CHECK(a.lo == -4.0);
    CHECK(a.hi == 8.0);
    const Interval b = Interval(0, 0) * Interval(-5, 7);
    CHECK(b.lo == 0.0);
    CHECK(b.hi == 0.0);
    const Interval c = Interval(-1, 1) * Interval(-1, 1);
    CHECK(c.lo == -1.0);
    CHECK(c.hi == 1.0);
}

TEST_CASE("intersection") {
    auto a = intersect(Interval(0, 2), Interval(1, 3));
    REQUIRE(a.has_value());
    CHECK(a->lo == 1.0);
    CHECK(a->hi == 2.0);

    auto idem = intersect(Interval(0, 1), Interval(0, 1));
    REQUIRE(idem.has_value());
    CHECK(idem->lo == 0.0);
    CHECK(idem->hi == 1.0);

    CHECK(!intersect(Interval(0, 1), Interval(2, 3)).has_value());
}

TEST_CASE("width, magnitude, inf norm") {
    CHECK(width(Interval(-1, 3)) == 4.0);
    CHECK(magnitude(Interval(-3, 2)) == 3.0);
    const IntervalVector v{Interval(-1, 1), Interval(0, 5)};
    CHECK(inf_norm(v) == 5.0);
}

TEST_CASE("interval matrix times real vector") {
    IntervalMatrix g(1, 2);
    g.at(0, 0) = Interval(1, 2);
    g.at(0, 1) = Interval(0, 1);
    Eigen::VectorXd u(2);
    u << 1.0, 1.0;
    const IntervalVector y = mat_vec(g, u);
    CHECK(y[0].lo == 1.0);
    CHECK(y[0].hi == 3.0);

    IntervalMatrix z(1, 2);
    const IntervalVector zy = mat_vec(z, u);
    CHECK(zy[0].lo == 0.0);
    CHECK(zy[0].hi == 0.0);

    IntervalMatrix s(1, 1);
    s.at(0, 0) = Interval(-1, 1);
    Eigen::VectorXd w(1);
    w << -2.0;
    const IntervalVector sy = mat_vec(s, w);
    CHECK(sy[0].lo == -2.0);
    CHECK(sy[0].hi == 2.0);

    Eigen::VectorXd bad(3);
    CHECK_THROWS_AS(mat_vec(g, bad), DimensionMismatchError);
}

namespace {

Interval random_interval(std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> unif(-scale, scale);
    double a = unif(rng), b = unif(rng);
    if (a > b) std::swap(a, b);
    return {a, b};
}

double pick(std::mt19937_64& rng, Interval iv) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    return iv.lo + unif(rng) * iv.width();
}

} // namespace

TEST_CASE("containment soundness under random point selections") {
    std::mt19937_64 rng(42);
    for (int it = 0; it < 2000; ++it) {
        const Interval a = random_interval(rng, 10.0);
        const Interval b = random_interval(rng, 10.0);
        const double x = pick(rng, a);
        const double y = pick(rng, b);
        CHECK((a + b).contains(x + y, 1e-9));
        CHECK((a - b).contains(x - y, 1e-9));
        CHECK((a * b).contains(x * y, 1e-9));
        CHECK(Interval(a).magnitude() >= std::abs(x) - 1e-12);
    }
}

TEST_CASE("inclusion monotonicity") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> grow(0.0, 1.0);
    for (int it = 0; it < 2000; ++it) {
        const Interval a = random_interval(rng, 5.0);
        const Interval b = random_interval(rng, 5.0);
        const Interval a_big(a.lo - grow(rng), a.hi + grow(rng));
        const Interval b_big(b.lo - grow(rng), b.hi + grow(rng));
        CHECK((a + b).subset_of(a_big + b_big, 1e-12));
        CHECK((a - b).subset_of(a_big - b_big, 1e-12));
        CHECK((a * b).subset_of(a_big * b_big, 1e-9));
    }
}

TEST_CASE("intersection algebra on nonempty chains") {
    std::mt19937_64 rng(44);
    for (int it = 0; it < 500; ++it) {
        // Three intervals sharing a common point so every meet is nonempty.
        std::uniform_real_distribution<double> unif(-3.0, 3.0);
        const double common = unif(rng);
        auto around = [&](double r) {
            std::uniform_real_distribution<double> rad(0.0, r);
            const double lo = common - rad(rng);
            const double hi = common + rad(rng);
            return Interval(lo, hi);
        };
        const Interval a = around(2.0), b = around(2.0), c = around(2.0);

        auto ab = intersect(a, b);
        auto ba = intersect(b, a);
        REQUIRE(ab.has_value());
        REQUIRE(ba.has_value());
        CHECK(ab->lo == ba->lo);
        CHECK(ab->hi == ba->hi);

        auto left = intersect(*intersect(a, b), c);
        auto right = intersect(a, *intersect(b, c));
        REQUIRE(left.has_value());
        REQUIRE(right.has_value());
        CHECK(left->lo == right->lo);
        CHECK(left->hi == right->hi);

        auto aa = intersect(a, a);
        REQUIRE(aa.has_value());
        CHECK(aa->lo == a.lo);
        CHECK(aa->hi == a.hi);
    }
}

TEST_CASE("euclidean norm of a box") {
    // Box straddling zero on one axis: lower endpoint ignores that axis.
    const IntervalVector v{Interval(-1, 2), Interval(3, 4)};
    const Interval n = euclidean_norm(v);
    CHECK(n.lo == doctest::Approx(3.0));
    CHECK(n.hi == doctest::Approx(std::sqrt(4.0 + 16.0)));

    std::mt19937_64 rng(45);
    for (int it = 0; it < 500; ++it) {
        IntervalVector box(3);
        for (int i = 0; i < 3; ++i) box[static_cast<std::size_t>(i)] = random_interval(rng, 4.0);
        const Interval hull = euclidean_norm(box);
        Eigen::VectorXd x(3);
        for (int i = 0; i < 3; ++i) x(i) = pick(rng, box[static_cast<std::size_t>(i)]);
        CHECK(hull.contains(x.norm(), 1e-9));
    }
}
