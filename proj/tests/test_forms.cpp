#include <doctest.h>

#include "cosym/forms.hpp"
#include "test_support.hpp"

using namespace cosym;
using cosym::testing::Rng;

namespace {

Chart plane() { return Chart({"x", "y"}); }

Chart chart3() { return Chart({"x1", "x2", "t"}, 2); }

PolyForm dx(const Chart& c, std::size_t i) { return PolyForm::coordinate_differential(c, i); }

}  // namespace

TEST_CASE("wedge: antisymmetry, disjoint indices, coefficient products") {
    Chart c = chart3();
    CHECK(wedge(dx(c, 0), dx(c, 0)).is_zero());

    PolyForm dt_dx1dx2 = wedge(dx(c, 2), wedge(dx(c, 0), dx(c, 1)));
    PolyForm expected(c, 3);
    expected.add_term({0, 1, 2}, PolyScalar::constant(3, rat(1)));
    CHECK(dt_dx1dx2 == expected);

    PolyForm x1dx1 = PolyScalar::variable(3, 0) * dx(c, 0);
    PolyForm w = wedge(x1dx1, dx(c, 1));
    PolyForm want(c, 2);
    want.add_term({0, 1}, PolyScalar::variable(3, 0));
    CHECK(w == want);

    // oracle: alternating product of the evaluated tensors at random points
    Rng rng(3);
    for (int i = 0; i < 3; ++i) {
        QVec p = testing::random_point(rng, 3);
        Evaluation lhs = evaluate(w, p);
        Evaluation rhs = testing::alternating_product(evaluate(x1dx1, p), evaluate(dx(c, 1), p));
        CHECK(lhs.values == rhs.values);
    }
}

TEST_CASE("wedge degree beyond chart dimension is the zero form") {
    Chart c = plane();
    PolyForm a = wedge(dx(c, 0), dx(c, 1));
    CHECK(wedge(a, dx(c, 0)).is_zero());
    CHECK(wedge(a, a).degree() == 4);
    CHECK(wedge(a, a).is_zero());
}

TEST_CASE("exterior derivative: constants, Leibniz, the primitive example") {
    Chart c = plane();
    CHECK(d(PolyForm::constant(c, rat(5))).is_zero());

    PolyForm x1dx2(c, 1);
    x1dx2.add_term({1}, PolyScalar::variable(2, 0));
    PolyForm want(c, 2);
    want.add_term({0, 1}, PolyScalar::constant(2, rat(1)));
    CHECK(d(x1dx2) == want);

    // (x^2 dy - x y dx)/3 has differential x dx^dy
    PolyScalar x = PolyScalar::variable(2, 0), y = PolyScalar::variable(2, 1);
    PolyForm phi(c, 1);
    phi.add_term({1}, rat(1, 3) * x * x);
    phi.add_term({0}, rat(-1, 3) * x * y);
    PolyForm xdxdy(c, 2);
    xdxdy.add_term({0, 1}, x);
    CHECK(d(phi) == xdxdy);
}

TEST_CASE("interior product: slots and signs") {
    Chart c = chart3();
    PolyForm dx12 = wedge(dx(c, 0), dx(c, 1));
    CHECK(interior(PolyVectorField::coordinate(c, 2), dx12).is_zero());
    CHECK(interior(PolyVectorField::coordinate(c, 0), dx12) == dx(c, 1));

    // X = x1 d/dx2: i_X (dx1 ^ dx2) = -x1 dx1
    std::vector<PolyScalar> comps(3, PolyScalar(3));
    comps[1] = PolyScalar::variable(3, 0);
    PolyVectorField x1d2(c, comps);
    PolyForm got = interior(x1d2, dx12);
    PolyForm want(c, 1);
    want.add_term({0}, -PolyScalar::variable(3, 0));
    CHECK(got == want);

    // evaluation oracle: contraction of the evaluated tables
    Rng rng(5);
    QVec p = testing::random_point(rng, 3);
    Evaluation ev = evaluate(got, p);
    CHECK(ev.covector()[0] == -p[0]);

    CHECK_THROWS_AS(interior(x1d2, PolyForm::constant(c, rat(1))), error);
}

TEST_CASE("interior is an antiderivation") {
    Rng rng(17);
    Chart c({"a", "b", "u", "v"});
    for (int rep = 0; rep < 50; ++rep) {
        PolyForm a = testing::random_form(rng, c, 1 + rep % 2);
        PolyForm b = testing::random_form(rng, c, 1);
        std::vector<PolyScalar> comps;
        for (int i = 0; i < 4; ++i) comps.push_back(testing::random_polyscalar(rng, 4, 1));
        PolyVectorField x(c, comps);
        PolyForm lhs = interior(x, wedge(a, b));
        PolyForm rhs = wedge(interior(x, a), b);
        PolyForm second = wedge(a, interior(x, b));
        if (a.degree() % 2 == 1) second = -second;
        rhs += second;
        CHECK(lhs == rhs);
    }
}

TEST_CASE("pullback: identity, scaling map, inclusion") {
    Chart c = plane();
    PolyForm dxdy = wedge(dx(c, 0), dx(c, 1));
    CHECK(pullback(PolyMap::identity(c), dxdy) == dxdy);

    // pi_t : (t, x, y) -> (t x, t y);  pi_t^*(dx ^ dy) =
    // t^2 dx^dy + t x dt^dy - t y dt^dx
    Chart src({"t", "x", "y"});
    PolyScalar t = PolyScalar::variable(3, 0);
    PolyScalar x = PolyScalar::variable(3, 1);
    PolyScalar y = PolyScalar::variable(3, 2);
    PolyMap scaling(src, c, {t * x, t * y});
    PolyForm got = pullback(scaling, dxdy);
    PolyForm want(src, 2);
    want.add_term({1, 2}, t * t);
    want.add_term({0, 2}, t * x);
    want.add_term({0, 1}, -(t * y));
    CHECK(got == want);

    // inclusion of the line {x = 0}: s -> (0, s) kills x dx2
    Chart line({"s"});
    PolyMap incl(line, c, {PolyScalar(1), PolyScalar::variable(1, 0)});
    PolyForm xdx2(c, 1);
    xdx2.add_term({1}, PolyScalar::variable(2, 0));
    CHECK(pullback(incl, xdx2).is_zero());
}

TEST_CASE("pullback commutes with d and composes contravariantly") {
    Rng rng(23);
    Chart src({"u", "v", "w"});
    Chart mid({"a", "b"});
    Chart tgt({"p", "q"});
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<PolyScalar> f1 = {testing::random_polyscalar(rng, 3),
                                      testing::random_polyscalar(rng, 3)};
        std::vector<PolyScalar> f2 = {testing::random_polyscalar(rng, 2),
                                      testing::random_polyscalar(rng, 2)};
        PolyMap m1(src, mid, f1);
        PolyMap m2(mid, tgt, f2);
        PolyForm a = testing::random_form(rng, tgt, 1);
        CHECK(pullback(m1, d(pullback(m2, a))) == pullback(m1, pullback(m2, d(a))));
        CHECK(d(pullback(m1, pullback(m2, a))) == pullback(m1, pullback(m2, d(a))));
        // functoriality
        CHECK(pullback(compose(m2, m1), a) == pullback(m1, pullback(m2, a)));
    }
}

TEST_CASE("evaluate: constant tables, coefficients, covectors") {
    Chart c = chart3();
    PolyForm dx12 = wedge(dx(c, 0), dx(c, 1));
    QMat m = evaluate(dx12, QVec{rat(7), rat(-2), rat(1, 3)}).skew_matrix();
    CHECK(m(0, 1) == 1);
    CHECK(m(1, 0) == -1);
    CHECK(m(2, 2) == 0);

    PolyForm x1dx12 = PolyScalar::variable(3, 0) * dx12;
    QMat m2 = evaluate(x1dx12, QVec{rat(3), rat(0), rat(0)}).skew_matrix();
    CHECK(m2(0, 1) == 3);

    QVec cov = evaluate(dx(c, 2), QVec{rat(1), rat(2), rat(3)}).covector();
    CHECK(cov == QVec{rat(0), rat(0), rat(1)});
}

TEST_CASE("evaluate of a degree-3 form returns the full coefficient table") {
    Chart c({"a", "b", "u", "v"});
    PolyForm w = wedge(wedge(PolyForm::coordinate_differential(c, 0),
                             PolyForm::coordinate_differential(c, 1)),
                       PolyForm::coordinate_differential(c, 3));
    Evaluation ev = evaluate(w, QVec{rat(0), rat(0), rat(0), rat(0)});
    CHECK(ev.degree == 3);
    CHECK(ev.values.size() == 1);
    CHECK(ev.values.at(IndexTuple{0, 1, 3}) == 1);
    CHECK_THROWS_AS(ev.skew_matrix(), error);
}

TEST_CASE("d . d = 0 on random forms") {
    Rng rng(29);
    for (int rep = 0; rep < 200; ++rep) {
        std::size_t dim = 2 + rep % 5;  // up to 6
        std::vector<std::string> names;
        for (std::size_t i = 0; i < dim; ++i) names.push_back("c" + std::to_string(i));
        Chart c(names);
        unsigned degree = rep % std::min<std::size_t>(4, dim);
        PolyForm a = testing::random_form(rng, c, degree);
        CHECK(d(d(a)).is_zero());
    }
}

TEST_CASE("graded antisymmetry of wedge") {
    Rng rng(31);
    Chart c({"a", "b", "u", "v", "w"});
    for (int rep = 0; rep < 100; ++rep) {
        unsigned p = rep % 3, q = (rep / 3) % 3;
        PolyForm a = testing::random_form(rng, c, p);
        PolyForm b = testing::random_form(rng, c, q);
        PolyForm rhs = wedge(b, a);
        if ((p * q) % 2 == 1) rhs = -rhs;
        CHECK(wedge(a, b) == rhs);
    }
}

TEST_CASE("evaluate(wedge) equals the alternating product for low degrees") {
    Rng rng(37);
    Chart c({"a", "b", "u", "v"});
    for (int rep = 0; rep < 60; ++rep) {
        unsigned p = rep % 3, q = (rep / 3) % 3;  // degrees up to 2
        PolyForm a = testing::random_form(rng, c, p);
        PolyForm b = testing::random_form(rng, c, q);
        QVec pt = testing::random_point(rng, 4);
        Evaluation lhs = evaluate(wedge(a, b), pt);
        Evaluation rhs = testing::alternating_product(evaluate(a, pt), evaluate(b, pt));
        CHECK(lhs.values == rhs.values);
    }
}

TEST_CASE("chart mismatch is rejected") {
    Chart c1({"x", "y"});
    Chart c2({"x", "z"});
    PolyForm a(c1, 1), b(c2, 1);
    CHECK_THROWS_AS(wedge(a, b), error);
    CHECK_THROWS_AS(a + b, error);
}
