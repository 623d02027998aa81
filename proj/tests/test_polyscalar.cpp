#include <doctest.h>

#include "cosym/polyscalar.hpp"
#include "test_support.hpp"

using namespace cosym;

TEST_CASE("polyscalar arithmetic and canonical storage") {
    PolyScalar x = PolyScalar::variable(2, 0);
    PolyScalar y = PolyScalar::variable(2, 1);
    PolyScalar p = x * x + rat(3) * y;
    CHECK(p.terms().size() == 2);
    CHECK((p - p).is_zero());

    PolyScalar q = p;
    q.add_term({2, 0}, rat(-1));
    CHECK(q == rat(3) * y);  // cancelled term is not stored

    CHECK(p.evaluate(QVec{rat(2), rat(1, 3)}) == rat(5));
    CHECK(p.derivative(0) == rat(2) * x);
    CHECK(p.derivative(1) == PolyScalar::constant(2, rat(3)));
}

TEST_CASE("substitution composes polynomials") {
    // p(x, y) = x^2 + y, substitute x -> u*v, y -> u
    PolyScalar p = PolyScalar::variable(2, 0) * PolyScalar::variable(2, 0) +
                   PolyScalar::variable(2, 1);
    PolyScalar u = PolyScalar::variable(2, 0), v = PolyScalar::variable(2, 1);
    PolyScalar composed = p.substitute({u * v, u});
    CHECK(composed == u * u * v * v + u);
}

TEST_CASE("set_var_zero and ideal membership") {
    PolyScalar x = PolyScalar::variable(3, 0);
    PolyScalar z = PolyScalar::variable(3, 2);
    PolyScalar p = x * z + z;
    CHECK(p.set_var_zero(2).is_zero());
    CHECK(p.in_ideal({2}));
    CHECK(!p.in_ideal({0}));
}

TEST_CASE("exact division succeeds exactly when the quotient is polynomial") {
    PolyScalar x = PolyScalar::variable(2, 0);
    PolyScalar y = PolyScalar::variable(2, 1);
    PolyScalar f = (x + y) * (x - y);
    auto q = try_divide_exact(f, x + y);
    REQUIRE(q.has_value());
    CHECK(*q == x - y);
    CHECK(!try_divide_exact(x * x + y, x).has_value());
    CHECK(!try_divide_exact(PolyScalar::constant(2, rat(1)), x).has_value());

    testing::Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        PolyScalar a = testing::random_polyscalar(rng, 3);
        PolyScalar b = testing::random_polyscalar(rng, 3);
        if (b.is_zero()) continue;
        auto quot = try_divide_exact(a * b, b);
        REQUIRE(quot.has_value());
        CHECK(*quot == a);
    }
}

TEST_CASE("double evaluation agrees with rational evaluation") {
    testing::Rng rng(11);
    for (int i = 0; i < 20; ++i) {
        PolyScalar p = testing::random_polyscalar(rng, 3, 3, 4);
        QVec pt = testing::random_point(rng, 3);
        DVec ptd(3);
        for (int j = 0; j < 3; ++j) ptd[j] = to_double(pt[j]);
        CHECK(p.evaluate(ptd) == doctest::Approx(to_double(p.evaluate(pt))).epsilon(1e-9));
    }
}
