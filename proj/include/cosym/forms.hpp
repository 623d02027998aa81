#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cosym/chart.hpp"
#include "cosym/errors.hpp"
#include "cosym/polyscalar.hpp"

namespace cosym {

using IndexTuple = std::vector<std::uint32_t>;

// Differential k-form with polynomial coefficients on a chart. Terms are
// keyed by strictly increasing coordinate index tuples; a degree-0 form is a
// single polynomial stored under the empty tuple.
class PolyForm {
  public:
    using TermMap = std::map<IndexTuple, PolyScalar>;

    PolyForm() : degree_(0) {}

    PolyForm(Chart chart, unsigned degree) : chart_(std::move(chart)), degree_(degree) {}

    static PolyForm zero(Chart chart, unsigned degree) { return PolyForm(std::move(chart), degree); }

    static PolyForm scalar(Chart chart, PolyScalar value) {
        PolyForm f(std::move(chart), 0);
        if (value.nvars() != f.chart_.dim())
            throw error(errc::chart_mismatch, "scalar coefficient has wrong variable count");
        f.add_term({}, std::move(value));
        return f;
    }

    static PolyForm constant(Chart chart, Rational value) {
        std::size_t n = chart.dim();
        return scalar(std::move(chart), PolyScalar::constant(n, std::move(value)));
    }

    // dx_i
    static PolyForm coordinate_differential(Chart chart, std::size_t i) {
        if (i >= chart.dim()) throw error(errc::chart_mismatch, "coordinate index out of range");
        PolyForm f(chart, 1);
        f.add_term({static_cast<std::uint32_t>(i)},
                   PolyScalar::constant(chart.dim(), Rational(1)));
        return f;
    }

    static PolyForm coordinate_differential(const Chart& chart, const std::string& label) {
        return coordinate_differential(chart, chart.require_index(label));
    }

    const Chart& chart() const { return chart_; }
    unsigned degree() const { return degree_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    PolyScalar coefficient(const IndexTuple& idx) const {
        auto it = terms_.find(idx);
        if (it != terms_.end()) return it->second;
        return PolyScalar(chart_.dim());
    }

    PolyScalar scalar_part() const {
        if (degree_ != 0) throw error(errc::degree_mismatch, "scalar_part of nonzero degree");
        return coefficient({});
    }

    void add_term(IndexTuple idx, PolyScalar coeff) {
        if (idx.size() != degree_)
            throw error(errc::degree_mismatch, "index tuple length != form degree");
        if (coeff.nvars() != chart_.dim())
            throw error(errc::chart_mismatch, "coefficient variable count != chart dim");
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (idx[k] >= chart_.dim())
                throw error(errc::chart_mismatch, "form index out of chart range");
            if (k > 0 && idx[k] <= idx[k - 1])
                throw error(errc::degree_mismatch, "index tuple not strictly increasing");
        }
        if (coeff.is_zero()) return;
        auto it = terms_.find(idx);
        if (it == terms_.end()) {
            terms_[std::move(idx)] = std::move(coeff);
        } else {
            it->second += coeff;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }

    PolyForm& operator+=(const PolyForm& o) {
        require_same_chart(o);
        if (degree_ != o.degree_) throw error(errc::degree_mismatch, "form degree mismatch in sum");
        for (const auto& [idx, c] : o.terms_) add_term(idx, c);
        return *this;
    }

    PolyForm& operator-=(const PolyForm& o) {
        require_same_chart(o);
        if (degree_ != o.degree_) throw error(errc::degree_mismatch, "form degree mismatch in diff");
        for (const auto& [idx, c] : o.terms_) add_term(idx, -c);
        return *this;
    }

    friend PolyForm operator+(PolyForm a, const PolyForm& b) { return a += b; }
    friend PolyForm operator-(PolyForm a, const PolyForm& b) { return a -= b; }

    PolyForm operator-() const {
        PolyForm r(chart_, degree_);
        for (const auto& [idx, c] : terms_) r.terms_[idx] = -c;
        return r;
    }

    friend PolyForm operator*(const PolyScalar& s, const PolyForm& f) {
        PolyForm r(f.chart_, f.degree_);
        for (const auto& [idx, c] : f.terms_) r.add_term(idx, s * c);
        return r;
    }

    friend PolyForm operator*(const Rational& s, const PolyForm& f) {
        return PolyScalar::constant(f.chart_.dim(), s) * f;
    }

    bool operator==(const PolyForm& o) const {
        return chart_ == o.chart_ && degree_ == o.degree_ && terms_ == o.terms_;
    }
    bool operator!=(const PolyForm& o) const { return !(*this == o); }

    void require_same_chart(const PolyForm& o) const {
        if (chart_ != o.chart_) throw error(errc::chart_mismatch, "forms live on different charts");
    }

    std::string to_string() const {
        if (terms_.empty()) return "0";
        std::string out;
        for (const auto& [idx, c] : terms_) {
            if (!out.empty()) out += "  +  ";
            out += "(" + c.to_string(chart_.names()) + ")";
            for (auto i : idx) out += " d" + chart_.name(i);
        }
        return out;
    }

  private:
    Chart chart_;
    unsigned degree_;
    TermMap terms_;
};

// Vector field with polynomial components.
class PolyVectorField {
  public:
    PolyVectorField() = default;

    PolyVectorField(Chart chart, std::vector<PolyScalar> components)
        : chart_(std::move(chart)), components_(std::move(components)) {
        if (components_.size() != chart_.dim())
            throw error(errc::chart_mismatch, "vector field component count != chart dim");
        for (const auto& c : components_)
            if (c.nvars() != chart_.dim())
                throw error(errc::chart_mismatch, "component variable count != chart dim");
    }

    // ∂/∂x_i
    static PolyVectorField coordinate(const Chart& chart, std::size_t i) {
        std::vector<PolyScalar> comps(chart.dim(), PolyScalar(chart.dim()));
        comps.at(i) = PolyScalar::constant(chart.dim(), Rational(1));
        return PolyVectorField(chart, std::move(comps));
    }

    static PolyVectorField coordinate(const Chart& chart, const std::string& label) {
        return coordinate(chart, chart.require_index(label));
    }

    const Chart& chart() const { return chart_; }
    const std::vector<PolyScalar>& components() const { return components_; }
    const PolyScalar& component(std::size_t i) const { return components_.at(i); }

    // Index of the single unit coordinate direction, if the field is one.
    std::optional<std::size_t> coordinate_direction() const {
        std::optional<std::size_t> found;
        for (std::size_t i = 0; i < components_.size(); ++i) {
            if (components_[i].is_zero()) continue;
            if (!components_[i].is_constant() || components_[i].constant_value() != 1)
                return std::nullopt;
            if (found) return std::nullopt;
            found = i;
        }
        return found;
    }

    bool operator==(const PolyVectorField& o) const {
        return chart_ == o.chart_ && components_ == o.components_;
    }

  private:
    Chart chart_;
    std::vector<PolyScalar> components_;
};

// Polynomial map between charts: one source-chart polynomial per target
// coordinate.
class PolyMap {
  public:
    PolyMap(Chart source, Chart target, std::vector<PolyScalar> components)
        : source_(std::move(source)), target_(std::move(target)), components_(std::move(components)) {
        if (components_.size() != target_.dim())
            throw error(errc::chart_mismatch, "map component count != target dim");
        for (const auto& c : components_)
            if (c.nvars() != source_.dim())
                throw error(errc::chart_mismatch, "map component vars != source dim");
    }

    static PolyMap identity(const Chart& chart) {
        std::vector<PolyScalar> comps;
        for (std::size_t i = 0; i < chart.dim(); ++i)
            comps.push_back(PolyScalar::variable(chart.dim(), i));
        return PolyMap(chart, chart, std::move(comps));
    }

    const Chart& source() const { return source_; }
    const Chart& target() const { return target_; }
    const std::vector<PolyScalar>& components() const { return components_; }

    friend PolyMap compose(const PolyMap& outer, const PolyMap& inner) {
        if (inner.target_ != outer.source_)
            throw error(errc::chart_mismatch, "map composition chart mismatch");
        std::vector<PolyScalar> comps;
        for (const auto& c : outer.components_) comps.push_back(c.substitute(inner.components_));
        return PolyMap(inner.source_, outer.target_, std::move(comps));
    }

  private:
    Chart source_;
    Chart target_;
    std::vector<PolyScalar> components_;
};

namespace detail {

// Sign of merging two disjoint increasing tuples into one increasing tuple:
// parity of the number of transpositions.
inline std::optional<std::pair<IndexTuple, int>> merge_tuples(const IndexTuple& a,
                                                              const IndexTuple& b) {
    IndexTuple out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    long inversions = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return std::nullopt;  // repeated index: term vanishes
        if (a[i] < b[j]) {
            out.push_back(a[i++]);
        } else {
            // b[j] jumps over the remaining entries of a
            inversions += static_cast<long>(a.size() - i);
            out.push_back(b[j++]);
        }
    }
    while (i < a.size()) out.push_back(a[i++]);
    while (j < b.size()) out.push_back(b[j++]);
    return std::make_pair(std::move(out), (inversions % 2 == 0) ? 1 : -1);
}

}  // namespace detail

inline PolyForm wedge(const PolyForm& a, const PolyForm& b) {
    a.require_same_chart(b);
    unsigned deg = a.degree() + b.degree();
    PolyForm r(a.chart(), deg);
    if (deg > a.chart().dim()) return r;  // vacuously zero by antisymmetry
    for (const auto& [ia, ca] : a.terms())
        for (const auto& [ib, cb] : b.terms()) {
            auto merged = detail::merge_tuples(ia, ib);
            if (!merged) continue;
            PolyScalar c = ca * cb;
            if (merged->second < 0) c = -c;
            r.add_term(merged->first, std::move(c));
        }
    return r;
}

inline PolyForm wedge_power(const PolyForm& a, unsigned m) {
    PolyForm r = PolyForm::constant(a.chart(), Rational(1));
    for (unsigned i = 0; i < m; ++i) r = wedge(r, a);
    return r;
}

// Exterior derivative.
inline PolyForm d(const PolyForm& a) {
    PolyForm r(a.chart(), a.degree() + 1);
    if (a.degree() + 1 > a.chart().dim()) return r;
    for (const auto& [idx, c] : a.terms()) {
        for (std::size_t v = 0; v < a.chart().dim(); ++v) {
            PolyScalar dc = c.derivative(v);
            if (dc.is_zero()) continue;
            auto merged = detail::merge_tuples({static_cast<std::uint32_t>(v)}, idx);
            if (!merged) continue;
            if (merged->second < 0) dc = -dc;
            r.add_term(merged->first, std::move(dc));
        }
    }
    return r;
}

// Interior product i_X a; degree-1 antiderivation.
inline PolyForm interior(const PolyVectorField& X, const PolyForm& a) {
    if (X.chart() != a.chart())
        throw error(errc::chart_mismatch, "interior: field and form on different charts");
    if (a.degree() == 0)
        throw error(errc::degree_mismatch, "interior product of a degree-0 form");
    PolyForm r(a.chart(), a.degree() - 1);
    for (const auto& [idx, c] : a.terms()) {
        for (std::size_t pos = 0; pos < idx.size(); ++pos) {
            const PolyScalar& comp = X.component(idx[pos]);
            if (comp.is_zero()) continue;
            PolyScalar coeff = c * comp;
            if (pos % 2 == 1) coeff = -coeff;
            IndexTuple rest;
            rest.reserve(idx.size() - 1);
            for (std::size_t k = 0; k < idx.size(); ++k)
                if (k != pos) rest.push_back(idx[k]);
            r.add_term(std::move(rest), std::move(coeff));
        }
    }
    return r;
}

// Pullback along a polynomial map: substitute into coefficients and expand
// each target differential as d of the corresponding component.
inline PolyForm pullback(const PolyMap& m, const PolyForm& a) {
    if (a.chart() != m.target())
        throw error(errc::chart_mismatch, "pullback: form does not live on the map target");
    const Chart& src = m.source();
    PolyForm r(src, a.degree());
    if (a.degree() > src.dim()) return r;

    // d(component_i) as 1-forms on the source, computed once.
    std::vector<PolyForm> dcomp;
    dcomp.reserve(m.components().size());
    for (const auto& comp : m.components()) {
        PolyForm df(src, 1);
        for (std::size_t v = 0; v < src.dim(); ++v) {
            PolyScalar dc = comp.derivative(v);
            if (!dc.is_zero()) df.add_term({static_cast<std::uint32_t>(v)}, std::move(dc));
        }
        dcomp.push_back(std::move(df));
    }

    for (const auto& [idx, c] : a.terms()) {
        PolyForm piece = PolyForm::scalar(src, c.substitute(m.components()));
        for (auto i : idx) {
            piece = wedge(piece, dcomp[i]);
            if (piece.is_zero()) break;
        }
        if (piece.degree() == r.degree()) r += piece;
    }
    return r;
}

inline PolyForm apply_field_as_function(const PolyForm& one_form, const PolyVectorField& X) {
    return interior(X, one_form);
}

// Pointwise value of a form: the full alternating coefficient table, with
// covector/skew-matrix views for degrees 1 and 2.
struct Evaluation {
    unsigned degree = 0;
    std::size_t dim = 0;
    std::map<IndexTuple, Rational> values;

    Rational scalar() const {
        if (degree != 0) throw error(errc::degree_mismatch, "scalar view of nonzero degree");
        auto it = values.find({});
        return it == values.end() ? Rational(0) : it->second;
    }

    QVec covector() const {
        if (degree != 1) throw error(errc::degree_mismatch, "covector view of degree != 1");
        QVec v(dim, Rational(0));
        for (const auto& [idx, val] : values) v[idx[0]] = val;
        return v;
    }

    QMat skew_matrix() const {
        if (degree != 2) throw error(errc::degree_mismatch, "matrix view of degree != 2");
        QMat m(dim, dim);
        for (const auto& [idx, val] : values) {
            m(idx[0], idx[1]) = val;
            m(idx[1], idx[0]) = -val;
        }
        return m;
    }
};

inline Evaluation evaluate(const PolyForm& a, const QVec& point) {
    if (point.size() != a.chart().dim())
        throw error(errc::chart_mismatch, "evaluation point dim != chart dim");
    Evaluation ev;
    ev.degree = a.degree();
    ev.dim = a.chart().dim();
    for (const auto& [idx, c] : a.terms()) {
        Rational v = c.evaluate(point);
        if (v != 0) ev.values[idx] = v;
    }
    return ev;
}

// Double-precision evaluation table used by the flow verification path.
inline std::map<IndexTuple, double> evaluate_d(const PolyForm& a, const DVec& point) {
    std::map<IndexTuple, double> out;
    for (const auto& [idx, c] : a.terms()) out[idx] = c.evaluate(point);
    return out;
}

inline DMat evaluate_skew_d(const PolyForm& a, const DVec& point) {
    if (a.degree() != 2) throw error(errc::degree_mismatch, "evaluate_skew_d needs a 2-form");
    std::size_t n = a.chart().dim();
    DMat m(n, DVec(n, 0.0));
    for (const auto& [idx, c] : a.terms()) {
        double v = c.evaluate(point);
        m[idx[0]][idx[1]] = v;
        m[idx[1]][idx[0]] = -v;
    }
    return m;
}

inline DVec evaluate_covector_d(const PolyForm& a, const DVec& point) {
    if (a.degree() != 1) throw error(errc::degree_mismatch, "evaluate_covector_d needs a 1-form");
    DVec v(a.chart().dim(), 0.0);
    for (const auto& [idx, c] : a.terms()) v[idx[0]] = c.evaluate(point);
    return v;
}

// Restriction of a form to the subspace {x_v = 0 : v in vanishing}: drop
// terms containing those differentials and zero the variables in what is
// left. This is the pullback along the inclusion of the locus, expressed on
// the ambient chart.
inline PolyForm tangential_restriction(const PolyForm& a, const std::set<std::size_t>& vanishing) {
    PolyForm r(a.chart(), a.degree());
    for (const auto& [idx, c] : a.terms()) {
        bool drop = false;
        for (auto i : idx)
            if (vanishing.count(i)) { drop = true; break; }
        if (drop) continue;
        PolyScalar cc = c;
        for (std::size_t v : vanishing) cc = cc.set_var_zero(v);
        r.add_term(idx, std::move(cc));
    }
    return r;
}

// Does every coefficient vanish on the locus {x_v = 0}? Equivalent to the
// form vanishing as a tensor at every point of the locus.
inline bool vanishes_on_locus(const PolyForm& a, const std::set<std::size_t>& vanishing) {
    for (const auto& [idx, c] : a.terms())
        if (!c.in_ideal(vanishing)) return false;
    return true;
}

}  // namespace cosym
