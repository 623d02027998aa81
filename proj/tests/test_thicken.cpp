#include <doctest.h>

#include "cosym/thicken.hpp"
#include "test_support.hpp"

using namespace cosym;
using cosym::testing::Rng;

namespace {

PolyScalar var(const Chart& c, const std::string& label) {
    return PolyScalar::variable(c.dim(), c.require_index(label));
}

// random A table over the base chart; optionally t-free
std::vector<std::vector<PolyScalar>> random_a_table(Rng& rng,
                                                    const PrecosymplecticChartStructure& s,
                                                    bool allow_time) {
    std::uniform_int_distribution<int> pick_var(0, static_cast<int>(s.dim()) - 1);
    std::uniform_int_distribution<int> deg(0, 2);
    std::uniform_int_distribution<int> coin(0, 3);
    std::vector<std::vector<PolyScalar>> table(
        s.k, std::vector<PolyScalar>(2 * s.p, PolyScalar(s.dim())));
    for (std::size_t r = 0; r < s.k; ++r)
        for (std::size_t i = 0; i < 2 * s.p; ++i) {
            if (coin(rng) != 0) continue;  // sparse tables
            PolyScalar::Exponents e(s.dim(), 0);
            int dtotal = deg(rng);
            for (int dd = 0; dd < dtotal; ++dd) {
                int v = pick_var(rng);
                if (!allow_time && static_cast<std::size_t>(v) == s.time_index()) v = 0;
                if (s.dim() == 1) continue;
                e[v] += 1;
            }
            table[r][i] = PolyScalar::monomial(s.dim(), e, rat(coin(rng) == 0 ? -1 : 1, 8));
        }
    return table;
}

}  // namespace

TEST_CASE("canonical structures and Darboux-form inference") {
    auto s = PrecosymplecticChartStructure::canonical(1, 1);
    CHECK(s.chart.names() == std::vector<std::string>{"x1", "x2", "t", "z1"});
    CHECK(s.time_index() == 2);
    CHECK(d(s.omega).is_zero());
    CHECK(d(s.eta).is_zero());

    auto inferred = PrecosymplecticChartStructure::from_forms(s.chart, s.omega, s.eta);
    CHECK(inferred.p == 1);
    CHECK(inferred.k == 1);

    // non-canonical omega is rejected
    PolyForm wrong = s.omega;
    wrong.add_term({0, 3}, PolyScalar::constant(4, rat(1)));
    CHECK_THROWS_AS(PrecosymplecticChartStructure::from_forms(s.chart, wrong, s.eta), error);
}

TEST_CASE("characteristic_distribution finds the kernel coordinate fields") {
    auto s11 = PrecosymplecticChartStructure::canonical(1, 1);
    auto k11 = characteristic_distribution(s11);
    REQUIRE(k11.size() == 1);
    CHECK(k11[0] == PolyVectorField::coordinate(s11.chart, 3));

    auto s10 = PrecosymplecticChartStructure::canonical(1, 0);
    CHECK(characteristic_distribution(s10).empty());

    auto s02 = PrecosymplecticChartStructure::canonical(0, 2);
    auto k02 = characteristic_distribution(s02);
    REQUIRE(k02.size() == 2);
    CHECK(k02[0] == PolyVectorField::coordinate(s02.chart, 1));
    CHECK(k02[1] == PolyVectorField::coordinate(s02.chart, 2));

    // a structure whose declared k disagrees with the coordinate kernel
    auto bad = PrecosymplecticChartStructure::canonical(1, 1);
    bad.k = 2;
    CHECK_THROWS_AS(characteristic_distribution(bad), error);
}

TEST_CASE("choose_complement: coordinate and custom policies") {
    auto s = PrecosymplecticChartStructure::canonical(1, 1);
    auto coord = choose_complement(s);
    CHECK(coord.A.size() == 1);
    CHECK(coord.A[0][0].is_zero());
    CHECK(coord.A[0][1].is_zero());
    REQUIRE(coord.G_fields.size() == 3);
    CHECK(coord.G_fields[2] == PolyVectorField::coordinate(s.chart, 2));  // dt in G

    // A^1_1 = x2^2 tilts the first G field: d/dx1 - x2^2 d/dz1
    PolyScalar a11 = var(s.chart, "x2") * var(s.chart, "x2");
    auto custom = choose_complement(s, {{a11, PolyScalar(4)}});
    std::vector<PolyScalar> expect(4, PolyScalar(4));
    expect[0] = PolyScalar::constant(4, rat(1));
    expect[3] = -a11;
    CHECK(custom.G_fields[0] == PolyVectorField(s.chart, expect));
    CHECK(custom.G_fields[1] == PolyVectorField::coordinate(s.chart, 1));
    CHECK(custom.G_fields[2] == PolyVectorField::coordinate(s.chart, 2));

    // nonzero C is rejected: the time direction must project to zero
    std::optional<std::vector<PolyScalar>> c_table =
        std::vector<PolyScalar>{var(s.chart, "t")};
    CHECK_THROWS_AS(choose_complement(s, {{a11, PolyScalar(4)}}, c_table), error);

    // wrong shapes are rejected
    CHECK_THROWS_AS(choose_complement(s, {{a11}}), error);
}

TEST_CASE("p_G is a projection onto K at sampled points") {
    Rng rng(73);
    auto s = PrecosymplecticChartStructure::canonical(1, 2);
    auto table = random_a_table(rng, s, true);
    auto c = choose_complement(s, table);
    for (int rep = 0; rep < 20; ++rep) {
        QVec pt = testing::random_point(rng, s.dim());
        QVec v = testing::random_point(rng, s.dim());
        QVec once = project_to_k(c, pt, v);
        QVec twice = project_to_k(c, pt, once);
        CHECK(once == twice);
        // G fields project to zero
        for (const auto& g : c.G_fields) {
            QVec gv(s.dim());
            for (std::size_t i = 0; i < s.dim(); ++i) gv[i] = g.component(i).evaluate(pt);
            for (const auto& x : project_to_k(c, pt, gv)) CHECK(x == 0);
        }
    }
}

TEST_CASE("liouville_form: printed expression") {
    auto s = PrecosymplecticChartStructure::canonical(1, 1);
    auto coord = choose_complement(s);
    PolyForm lam = liouville_form(coord);
    Chart thick = thickened_chart(s);
    PolyForm want(thick, 1);
    want.add_term({3}, PolyScalar::variable(5, 4));  // b1 dz1
    CHECK(lam == want);

    auto s0 = PrecosymplecticChartStructure::canonical(1, 0);
    CHECK(liouville_form(choose_complement(s0)).is_zero());

    // A^1_1 = x1 gives b1 (dz1 + x1 dx1)
    auto custom = choose_complement(s, {{var(s.chart, "x1"), PolyScalar(4)}});
    PolyForm lam2 = liouville_form(custom);
    PolyForm want2(thick, 1);
    PolyScalar b1 = PolyScalar::variable(5, 4);
    want2.add_term({3}, b1);
    want2.add_term({0}, b1 * PolyScalar::variable(5, 0));
    CHECK(lam2 == want2);
}

TEST_CASE("thickened_structure reproduces the displayed local formula") {
    auto s = PrecosymplecticChartStructure::canonical(1, 1);
    auto t = thickened_structure(s, choose_complement(s));
    Chart thick = t.chart;
    PolyForm want(thick, 2);
    want.add_term({0, 1}, PolyScalar::constant(5, rat(1)));   // dx1^dx2
    want.add_term({3, 4}, PolyScalar::constant(5, rat(-1)));  // db1^dz1 = -dz1^db1
    CHECK(t.omega_g == want);
    CHECK(t.eta_g == PolyForm::coordinate_differential(thick, 2));
    CHECK(t.base_dim == 4);
    CHECK(t.fiber_dim == 1);

    // p = 0, k = 1: omega_G = db1 ^ dz1 on a 3-dim chart, eta ^ omega != 0
    auto s01 = PrecosymplecticChartStructure::canonical(0, 1);
    auto t01 = thickened_structure(s01, choose_complement(s01));
    CHECK(t01.chart.dim() == 3);
    PolyForm top = wedge(t01.eta_g, t01.omega_g);
    REQUIRE(!top.is_zero());
    CHECK(top.terms().size() == 1);

    // A^1_1 = x2 adds the b_r dA ^ dx block: b1 dx2^dx1
    PolyScalar a11 = var(s.chart, "x2");
    auto tc = thickened_structure(s, choose_complement(s, {{a11, PolyScalar(4)}}));
    PolyScalar b1 = PolyScalar::variable(5, 4);
    PolyForm expect(thick, 2);
    expect.add_term({0, 1}, PolyScalar::constant(5, rat(1)) - b1);  // dx1^dx2 + b1 dx2^dx1
    expect.add_term({3, 4}, PolyScalar::constant(5, rat(-1)));
    expect.add_term({0, 4}, -PolyScalar::variable(5, 1));  // db1 ^ (x2 dx1)
    CHECK(tc.omega_g == expect);
}

TEST_CASE("thickening invariants on random complements") {
    Rng rng(79);
    for (int rep = 0; rep < 12; ++rep) {
        std::size_t p = rep % 3, k = 1 + rep % 2;
        auto s = PrecosymplecticChartStructure::canonical(p, k);
        auto table = random_a_table(rng, s, false);  // t-free tables here
        auto c = choose_complement(s, table);
        auto t = thickened_structure(s, c);

        CHECK(d(t.omega_g).is_zero());
        PolyMap pi = t.projection(s.chart);
        CHECK(t.omega_g == pullback(pi, s.omega) + d(t.liouville));
        CHECK(t.eta_g == pullback(pi, s.eta));

        // i_{d/dt} omega_G = 0 and eta_G(d/dt) = 1 for t-free tables
        PolyVectorField dt = PolyVectorField::coordinate(t.chart, t.time_index());
        CHECK(interior(dt, t.omega_g).is_zero());
        PolyScalar eta_dt = interior(dt, t.eta_g).scalar_part();
        CHECK(eta_dt == PolyScalar::constant(t.chart.dim(), rat(1)));

        // rank 2p + 2k at b = 0
        QVec pt = testing::random_point(rng, s.dim());
        pt.resize(t.chart.dim(), Rational(0));
        auto rk = skew_rank_kernel(SkewForm(evaluate(t.omega_g, pt).skew_matrix()));
        CHECK(rk.rank == 2 * p + 2 * k);

        // coisotropy witness: pairing a fiber vector against its kernel field
        for (std::size_t r = 0; r < k; ++r) {
            QVec y(t.chart.dim(), Rational(0));
            y[t.base_dim + r] = testing::random_nonzero_rational(rng);
            QVec zr(t.chart.dim(), Rational(0));
            zr[2 * p + 1 + r] = 1;
            SkewForm og(evaluate(t.omega_g, pt).skew_matrix());
            CHECK(og.pair(zr, y) != 0);
        }
    }
}

TEST_CASE("time-dependent tables keep the zero-section conclusions") {
    Rng rng(83);
    auto s = PrecosymplecticChartStructure::canonical(1, 1);
    PolyScalar a11 = var(s.chart, "t") * var(s.chart, "x2");
    auto t = thickened_structure(s, choose_complement(s, {{a11, PolyScalar(4)}}));
    CHECK(d(t.omega_g).is_zero());
    PolyVectorField dt = PolyVectorField::coordinate(t.chart, t.time_index());
    PolyForm contraction = interior(dt, t.omega_g);
    CHECK(!contraction.is_zero());  // off the zero section the Reeb tilts
    for (int rep = 0; rep < 5; ++rep) {
        QVec pt = testing::random_point(rng, s.dim());
        pt.resize(t.chart.dim(), Rational(0));
        Evaluation ev = evaluate(contraction, pt);
        CHECK(ev.values.empty());  // but vanishes at b = 0
    }
}

TEST_CASE("verify_embedding: the four conclusions on a canonical thickening") {
    auto s = PrecosymplecticChartStructure::canonical(1, 1);
    auto t = thickened_structure(s, choose_complement(s));
    EmbeddingVerifyOptions opt;
    opt.radius = 1;
    opt.grid = 3;
    opt.max_points = 256;
    auto rep = verify_embedding(t, s, opt);
    CHECK(rep.passed());
    REQUIRE(rep.find("zero_section_pullback") != nullptr);
    CHECK(rep.find("zero_section_pullback")->passed);
    CHECK(rep.find("cosymplectic_neighbourhood")->passed);
    CHECK(rep.find("zero_section_coisotropic")->passed);
    CHECK(rep.find("thickened_reeb_is_dt")->passed);
}

TEST_CASE("verify_embedding bisects to the largest passing radius") {
    auto s = PrecosymplecticChartStructure::canonical(1, 1);
    PolyScalar a11 = rat(4) * var(s.chart, "x2");
    auto t = thickened_structure(s, choose_complement(s, {{a11, PolyScalar(4)}}));
    EmbeddingVerifyOptions opt;  // radius 1/2, grid 5 hits the degeneracy at b = 1/4
    auto rep = verify_embedding(t, s, opt);
    const CheckResult* c = rep.find("cosymplectic_neighbourhood");
    REQUIRE(c != nullptr);
    CHECK(!c->passed);
    CHECK(c->detail.find("1/8") != std::string::npos);
    // the other conclusions still hold on the zero section
    CHECK(rep.find("zero_section_pullback")->passed);
    CHECK(rep.find("zero_section_coisotropic")->passed);
    CHECK(rep.find("thickened_reeb_is_dt")->passed);
}

TEST_CASE("verify_embedding names a witness when the zero section fails coisotropy") {
    // Doctored thickened pair on the (p=1, k=2) chart: the fiber directions
    // pair with each other instead of with the kernel directions, so the
    // zero section's orthogonal complement escapes it.
    auto s = PrecosymplecticChartStructure::canonical(1, 2);
    ThickenedStructure t;
    t.chart = thickened_chart(s);
    t.base_dim = s.dim();
    t.fiber_dim = 2;
    t.p = 1;
    t.k = 2;
    t.liouville = PolyForm(t.chart, 1);
    std::size_t n = t.chart.dim();
    t.omega_g = PolyForm(t.chart, 2);
    t.omega_g.add_term({0, 1}, PolyScalar::constant(n, rat(1)));  // dx1^dx2
    t.omega_g.add_term({3, 4}, PolyScalar::constant(n, rat(1)));  // dz1^dz2
    t.omega_g.add_term({5, 6}, PolyScalar::constant(n, rat(1)));  // db1^db2
    t.eta_g = PolyForm::coordinate_differential(t.chart, 2);

    EmbeddingVerifyOptions opt;
    opt.grid = 3;
    opt.max_points = 64;
    auto rep = verify_embedding(t, s, opt);
    CHECK(!rep.passed());
    const CheckResult* pull = rep.find("zero_section_pullback");
    REQUIRE(pull != nullptr);
    CHECK(!pull->passed);  // dz1^dz2 survives the zero-section pullback
    const CheckResult* coiso = rep.find("zero_section_coisotropic");
    REQUIRE(coiso != nullptr);
    CHECK(!coiso->passed);
    CHECK(coiso->worst_point.has_value());
    CHECK(coiso->detail.find("witness vector") != std::string::npos);
    CHECK(rep.find("thickened_reeb_is_dt")->passed);  // the Reeb is still dt
}

TEST_CASE("k = 0 thickening degenerates to the structure itself") {
    auto s = PrecosymplecticChartStructure::canonical(1, 0);
    auto t = thickened_structure(s, choose_complement(s));
    CHECK(t.chart == s.chart);
    CHECK(t.omega_g == s.omega);
    CHECK(t.eta_g == s.eta);
    CHECK(t.liouville.is_zero());
    auto rep = verify_embedding(t, s, {});
    CHECK(rep.passed());
}
