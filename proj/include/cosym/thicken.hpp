#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cosym/coslinalg.hpp"
#include "cosym/errors.hpp"
#include "cosym/forms.hpp"
#include "cosym/gridding.hpp"
#include "cosym/report.hpp"

namespace cosym {

// A precosymplectic structure presented in Darboux coordinates
// (x^1..x^2p, t, z^1..z^k): omega = sum_i dx^i ^ dx^{p+i}, eta = dt.
// The chart ordering is part of the contract; general-position structures
// are reduced pointwise by the linear Darboux machinery instead.
struct PrecosymplecticChartStructure {
    Chart chart;
    PolyForm omega;
    PolyForm eta;
    std::size_t p = 0;
    std::size_t k = 0;

    std::size_t dim() const { return chart.dim(); }
    std::size_t time_index() const { return 2 * p; }

    static PolyForm canonical_omega(const Chart& chart, std::size_t p) {
        PolyForm om(chart, 2);
        for (std::size_t i = 0; i < p; ++i)
            om.add_term({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(p + i)},
                        PolyScalar::constant(chart.dim(), Rational(1)));
        return om;
    }

    static PrecosymplecticChartStructure canonical(std::size_t p, std::size_t k) {
        std::vector<std::string> names;
        for (std::size_t i = 1; i <= 2 * p; ++i) names.push_back("x" + std::to_string(i));
        names.push_back("t");
        for (std::size_t i = 1; i <= k; ++i) names.push_back("z" + std::to_string(i));
        Chart chart(names, 2 * p);
        PolyForm om = canonical_omega(chart, p);
        PolyForm et = PolyForm::coordinate_differential(chart, 2 * p);
        return PrecosymplecticChartStructure{chart, om, et, p, k};
    }

    // Accepts forms on a chart and infers (p, k), rejecting anything that is
    // not exactly the Darboux normal form.
    static PrecosymplecticChartStructure from_forms(const Chart& chart, const PolyForm& om,
                                                    const PolyForm& et) {
        if (!chart.time_index())
            throw error(errc::not_darboux, "chart has no distinguished time coordinate");
        std::size_t t = *chart.time_index();
        if (t % 2 != 0)
            throw error(errc::not_darboux,
                        "time coordinate must follow an even number of x coordinates");
        std::size_t p = t / 2;
        if (chart.dim() < 2 * p + 1) throw error(errc::not_darboux, "chart too small");
        std::size_t k = chart.dim() - 2 * p - 1;
        if (om.chart() != chart || et.chart() != chart)
            throw error(errc::chart_mismatch, "forms live on a different chart");
        if (om != canonical_omega(chart, p))
            throw error(errc::not_darboux, "omega is not in Darboux normal form");
        if (et != PolyForm::coordinate_differential(chart, t))
            throw error(errc::not_darboux, "eta is not dt");
        return PrecosymplecticChartStructure{chart, om, et, p, k};
    }
};

// K = ker omega  intersect  ker eta, as coordinate fields. Errors when the
// kernel is not spanned by coordinate directions.
inline std::vector<PolyVectorField> characteristic_distribution(
    const PrecosymplecticChartStructure& s) {
    std::vector<PolyVectorField> fields;
    for (std::size_t i = 0; i < s.dim(); ++i) {
        PolyVectorField di = PolyVectorField::coordinate(s.chart, i);
        if (!interior(di, s.omega).is_zero()) continue;
        if (!interior(di, s.eta).scalar_part().is_zero()) continue;
        fields.push_back(std::move(di));
    }
    if (fields.size() != s.k)
        throw error(errc::not_darboux, "ker omega and ker eta is not coordinate-spanned");
    return fields;
}

// A complement G of K containing the Reeb direction, encoded by the
// coefficient table A^r_i of the induced projection p_G. The C^r block is
// forced to zero: the time direction always lies in G.
struct ComplementChoice {
    Chart base_chart;
    std::size_t p = 0;
    std::size_t k = 0;
    // A[r][i], r < k, i < 2p, polynomials on the base chart
    std::vector<std::vector<PolyScalar>> A;
    std::vector<PolyVectorField> K_fields;
    std::vector<PolyVectorField> G_fields;
};

namespace detail {

inline ComplementChoice build_complement(const PrecosymplecticChartStructure& s,
                                         std::vector<std::vector<PolyScalar>> a_table) {
    ComplementChoice c;
    c.base_chart = s.chart;
    c.p = s.p;
    c.k = s.k;
    c.A = std::move(a_table);
    c.K_fields = characteristic_distribution(s);

    std::size_t n = s.dim();
    for (std::size_t i = 0; i < 2 * s.p; ++i) {
        std::vector<PolyScalar> comps(n, PolyScalar(n));
        comps[i] = PolyScalar::constant(n, Rational(1));
        for (std::size_t r = 0; r < s.k; ++r) {
            std::size_t zr = 2 * s.p + 1 + r;
            comps[zr] = -c.A[r][i];
        }
        c.G_fields.emplace_back(s.chart, std::move(comps));
    }
    c.G_fields.push_back(PolyVectorField::coordinate(s.chart, s.time_index()));
    return c;
}

}  // namespace detail

// Coordinate policy: G = span(dx directions, dt), A identically zero.
inline ComplementChoice choose_complement(const PrecosymplecticChartStructure& s) {
    std::vector<std::vector<PolyScalar>> a(s.k,
                                           std::vector<PolyScalar>(2 * s.p, PolyScalar(s.dim())));
    return detail::build_complement(s, std::move(a));
}

// Custom policy: caller supplies A^r_i over the base chart. An optional C
// table is accepted only to enforce that it is identically zero.
inline ComplementChoice choose_complement(
    const PrecosymplecticChartStructure& s, const std::vector<std::vector<PolyScalar>>& a_table,
    const std::optional<std::vector<PolyScalar>>& c_table = std::nullopt) {
    if (a_table.size() != s.k)
        throw error(errc::complement_invalid, "A table must have k rows");
    for (const auto& row : a_table) {
        if (row.size() != 2 * s.p)
            throw error(errc::complement_invalid, "A table rows must have 2p entries");
        for (const auto& entry : row)
            if (entry.nvars() != s.dim())
                throw error(errc::complement_invalid,
                            "A entries must be polynomials on the base chart");
    }
    if (c_table) {
        if (c_table->size() != s.k)
            throw error(errc::complement_invalid, "C table must have k entries");
        for (const auto& entry : *c_table)
            if (!entry.is_zero())
                throw error(errc::complement_invalid, "C^r must vanish: dt lies in G");
    }
    return detail::build_complement(s, a_table);
}

// p_G applied to a tangent vector at a point: the K-component
// Z^r + sum_i A^r_i X^i along each kernel direction.
inline QVec project_to_k(const ComplementChoice& c, const QVec& point, const QVec& v) {
    std::size_t n = c.base_chart.dim();
    if (point.size() != n || v.size() != n)
        throw error(errc::chart_mismatch, "projection point/vector dim mismatch");
    QVec out(n, Rational(0));
    for (std::size_t r = 0; r < c.k; ++r) {
        std::size_t zr = 2 * c.p + 1 + r;
        Rational val = v[zr];
        for (std::size_t i = 0; i < 2 * c.p; ++i) val += c.A[r][i].evaluate(point) * v[i];
        out[zr] = val;
    }
    return out;
}

// The thickened chart appends one fiber coordinate b_r per kernel direction.
inline Chart thickened_chart(const PrecosymplecticChartStructure& s) {
    std::vector<std::string> extra;
    for (std::size_t r = 1; r <= s.k; ++r) extra.push_back("b" + std::to_string(r));
    return s.chart.with_appended(extra);
}

// Generalised Liouville form lambda = sum_r b_r (dz^r + sum_i A^r_i dx^i) on
// the thickened chart.
inline PolyForm liouville_form(const ComplementChoice& c) {
    PrecosymplecticChartStructure probe{c.base_chart, PolyForm(c.base_chart, 2),
                                        PolyForm(c.base_chart, 1), c.p, c.k};
    Chart thick = thickened_chart(probe);
    std::size_t n = thick.dim();
    std::size_t base = c.base_chart.dim();
    PolyForm lambda(thick, 1);
    for (std::size_t r = 0; r < c.k; ++r) {
        PolyScalar br = PolyScalar::variable(n, base + r);
        std::size_t zr = 2 * c.p + 1 + r;
        lambda.add_term({static_cast<std::uint32_t>(zr)}, br);
        for (std::size_t i = 0; i < 2 * c.p; ++i) {
            PolyScalar lifted = c.A[r][i].with_appended_vars(c.k);
            lambda.add_term({static_cast<std::uint32_t>(i)}, br * lifted);
        }
    }
    return lambda;
}

// The chart on K* carrying the pair (Omega_G, eta_G) and its Liouville
// potential: omega_g = pi^* omega + d(lambda), eta_g = pi^* eta.
struct ThickenedStructure {
    Chart chart;
    PolyForm omega_g;
    PolyForm eta_g;
    PolyForm liouville;
    std::size_t base_dim = 0;
    std::size_t fiber_dim = 0;
    std::size_t p = 0;
    std::size_t k = 0;

    std::size_t time_index() const { return 2 * p; }

    PolyMap projection(const Chart& base) const {
        std::vector<PolyScalar> comps;
        for (std::size_t j = 0; j < base_dim; ++j)
            comps.push_back(PolyScalar::variable(chart.dim(), j));
        return PolyMap(chart, base, std::move(comps));
    }

    PolyMap zero_section(const Chart& base) const {
        std::vector<PolyScalar> comps;
        for (std::size_t j = 0; j < base_dim; ++j)
            comps.push_back(PolyScalar::variable(base.dim(), j));
        for (std::size_t r = 0; r < fiber_dim; ++r) comps.push_back(PolyScalar(base.dim()));
        return PolyMap(base, chart, std::move(comps));
    }
};

inline ThickenedStructure thickened_structure(const PrecosymplecticChartStructure& s,
                                              const ComplementChoice& c) {
    if (c.base_chart != s.chart || c.p != s.p || c.k != s.k)
        throw error(errc::chart_mismatch, "complement built for a different structure");
    ThickenedStructure t;
    t.chart = thickened_chart(s);
    t.base_dim = s.dim();
    t.fiber_dim = s.k;
    t.p = s.p;
    t.k = s.k;
    t.liouville = liouville_form(c);

    std::vector<PolyScalar> proj_comps;
    for (std::size_t j = 0; j < t.base_dim; ++j)
        proj_comps.push_back(PolyScalar::variable(t.chart.dim(), j));
    PolyMap pi(t.chart, s.chart, std::move(proj_comps));

    t.omega_g = pullback(pi, s.omega) + d(t.liouville);
    t.eta_g = pullback(pi, s.eta);
    return t;
}

// The per-point linear data of the thickened pair.
inline CosymplecticLinearData evaluate_pair(const PolyForm& omega, const PolyForm& eta,
                                            const QVec& point) {
    return CosymplecticLinearData(SkewForm(evaluate(omega, point).skew_matrix()),
                                  evaluate(eta, point).covector());
}

struct EmbeddingVerifyOptions {
    Rational radius = Rational(1, 2);
    int grid = 5;
    std::size_t max_points = 512;
};

// Checks the conclusions of the existence construction on a concrete box:
// (a) the zero section pulls (Omega_G, eta_G) back to (omega, eta) exactly,
// (b) the pair is cosymplectic at every sampled point with |b| <= radius,
// (c) the zero section is coisotropic at sampled base points,
// (d) the thickened Reeb vector at the zero section is the time direction.
inline EquivalenceReport verify_embedding(const ThickenedStructure& t,
                                          const PrecosymplecticChartStructure& s,
                                          const EmbeddingVerifyOptions& opt = {}) {
    if (t.base_dim != s.dim() || t.p != s.p || t.k != s.k)
        throw error(errc::chart_mismatch, "thickened structure does not match base");
    EquivalenceReport rep;
    rep.subject = "coisotropic embedding";

    // (a) exact pullback identity along the zero section
    PolyMap zs = t.zero_section(s.chart);
    bool pull_omega = pullback(zs, t.omega_g) == s.omega;
    bool pull_eta = pullback(zs, t.eta_g) == s.eta;
    rep.add(CheckResult::exact_check("zero_section_pullback", pull_omega && pull_eta, std::nullopt,
                                     pull_omega ? (pull_eta ? "" : "eta mismatch")
                                                : "omega mismatch"));

    // (b) cosymplectic on the sampled box, with a radius bisection fallback
    auto box_points = [&](const Rational& b_radius) {
        std::vector<Rational> widths(t.chart.dim(), opt.radius);
        for (std::size_t r = 0; r < t.fiber_dim; ++r) widths[t.base_dim + r] = b_radius;
        return sample_box(widths, opt.grid, opt.max_points);
    };
    auto box_cosymplectic = [&](const Rational& b_radius, std::optional<QVec>* bad) {
        for (const QVec& pt : box_points(b_radius)) {
            CosymplecticLinearData data = evaluate_pair(t.omega_g, t.eta_g, pt);
            if (classify(data).kind != Classification::Kind::cosymplectic) {
                if (bad) *bad = pt;
                return false;
            }
        }
        return true;
    };
    std::optional<QVec> bad_point;
    bool full_radius_ok = box_cosymplectic(opt.radius, &bad_point);
    Rational passing_radius = opt.radius;
    if (!full_radius_ok) {
        passing_radius = 0;
        Rational r = opt.radius / 2;
        for (int it = 0; it < 10; ++it, r /= 2) {
            if (box_cosymplectic(r, nullptr)) { passing_radius = r; break; }
        }
    }
    std::optional<DVec> worst;
    if (bad_point) worst = to_doubles(*bad_point);
    rep.add(CheckResult::exact_check(
        "cosymplectic_neighbourhood", full_radius_ok, worst,
        full_radius_ok ? "certified |b| <= " + format_rational(opt.radius)
                       : "largest sampled passing radius " + format_rational(passing_radius)));

    // (c), (d) at sampled base points on the zero section
    std::vector<Rational> base_widths(s.dim(), opt.radius);
    std::vector<QVec> base_points = sample_box(base_widths, opt.grid, opt.max_points);
    std::vector<QVec> section_basis;
    for (std::size_t j = 0; j < t.base_dim; ++j) {
        QVec e(t.chart.dim(), Rational(0));
        e[j] = 1;
        section_basis.push_back(std::move(e));
    }
    Subspace section(t.chart.dim(), section_basis);

    bool coiso_ok = true;
    bool reeb_ok = true;
    std::optional<DVec> coiso_bad, reeb_bad;
    std::string coiso_detail;
    QVec e_time(t.chart.dim(), Rational(0));
    e_time[t.time_index()] = 1;
    for (const QVec& base_pt : base_points) {
        QVec pt = base_pt;
        pt.resize(t.chart.dim(), Rational(0));
        CosymplecticLinearData data = evaluate_pair(t.omega_g, t.eta_g, pt);
        if (coiso_ok) {
            bool ok = false;
            std::optional<QVec> witness;
            if (classify(data).kind == Classification::Kind::cosymplectic) {
                CoisotropyResult co = is_coisotropic(data, section);
                ok = co.coisotropic;
                witness = co.witness;
            }
            if (!ok) {
                coiso_ok = false;
                coiso_bad = to_doubles(pt);
                if (witness) {
                    coiso_detail = "witness vector (";
                    for (std::size_t i = 0; i < witness->size(); ++i)
                        coiso_detail +=
                            (i ? ", " : "") + format_rational((*witness)[i]);
                    coiso_detail += ")";
                } else {
                    coiso_detail = "pair degenerate at the point";
                }
            }
        }
        if (reeb_ok && reeb_linear(data) != e_time) {
            reeb_ok = false;
            reeb_bad = to_doubles(pt);
        }
    }
    rep.add(CheckResult::exact_check("zero_section_coisotropic", coiso_ok, coiso_bad,
                                     coiso_detail));
    rep.add(CheckResult::exact_check("thickened_reeb_is_dt", reeb_ok, reeb_bad));
    return rep;
}

}  // namespace cosym
