#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cosym/linalg.hpp"
#include "cosym/rational.hpp"

namespace cosym {

// Sparse multivariate polynomial with exact rational coefficients. Terms are
// keyed by exponent vectors of fixed length (the chart dimension) in
// lexicographic order, which fixes the serialization.
class PolyScalar {
  public:
    using Exponents = std::vector<std::uint32_t>;
    using TermMap = std::map<Exponents, Rational>;

    PolyScalar() : nvars_(0) {}
    explicit PolyScalar(std::size_t nvars) : nvars_(nvars) {}

    static PolyScalar constant(std::size_t nvars, Rational c) {
        PolyScalar p(nvars);
        if (c != 0) p.terms_[Exponents(nvars, 0)] = std::move(c);
        return p;
    }

    static PolyScalar variable(std::size_t nvars, std::size_t v) {
        if (v >= nvars) throw std::logic_error("variable index out of range");
        PolyScalar p(nvars);
        Exponents e(nvars, 0);
        e[v] = 1;
        p.terms_[e] = 1;
        return p;
    }

    static PolyScalar monomial(std::size_t nvars, Exponents e, Rational c) {
        if (e.size() != nvars) throw std::logic_error("exponent vector length mismatch");
        PolyScalar p(nvars);
        if (c != 0) p.terms_[std::move(e)] = std::move(c);
        return p;
    }

    std::size_t nvars() const { return nvars_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    bool is_constant() const {
        if (terms_.empty()) return true;
        return terms_.size() == 1 && terms_.begin()->first == Exponents(nvars_, 0);
    }

    Rational constant_value() const {
        if (terms_.empty()) return Rational(0);
        if (!is_constant()) throw std::logic_error("not a constant polynomial");
        return terms_.begin()->second;
    }

    void add_term(const Exponents& e, const Rational& c) {
        if (e.size() != nvars_) throw std::logic_error("exponent vector length mismatch");
        if (c == 0) return;
        auto it = terms_.find(e);
        if (it == terms_.end()) {
            terms_[e] = c;
        } else {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    PolyScalar& operator+=(const PolyScalar& o) {
        check_vars(o);
        for (const auto& [e, c] : o.terms_) add_term(e, c);
        return *this;
    }

    PolyScalar& operator-=(const PolyScalar& o) {
        check_vars(o);
        for (const auto& [e, c] : o.terms_) add_term(e, -c);
        return *this;
    }

    friend PolyScalar operator+(PolyScalar a, const PolyScalar& b) { return a += b; }
    friend PolyScalar operator-(PolyScalar a, const PolyScalar& b) { return a -= b; }

    PolyScalar operator-() const {
        PolyScalar r(nvars_);
        for (const auto& [e, c] : terms_) r.terms_[e] = -c;
        return r;
    }

    friend PolyScalar operator*(const PolyScalar& a, const PolyScalar& b) {
        a.check_vars(b);
        PolyScalar r(a.nvars_);
        for (const auto& [ea, ca] : a.terms_)
            for (const auto& [eb, cb] : b.terms_) {
                Exponents e(a.nvars_);
                for (std::size_t i = 0; i < a.nvars_; ++i) e[i] = ea[i] + eb[i];
                r.add_term(e, ca * cb);
            }
        return r;
    }

    friend PolyScalar operator*(const Rational& s, const PolyScalar& p) {
        PolyScalar r(p.nvars_);
        if (s == 0) return r;
        for (const auto& [e, c] : p.terms_) r.terms_[e] = s * c;
        return r;
    }

    friend PolyScalar operator*(const PolyScalar& p, const Rational& s) { return s * p; }

    bool operator==(const PolyScalar& o) const {
        return nvars_ == o.nvars_ && terms_ == o.terms_;
    }
    bool operator!=(const PolyScalar& o) const { return !(*this == o); }

    PolyScalar derivative(std::size_t v) const {
        if (v >= nvars_) throw std::logic_error("derivative variable out of range");
        PolyScalar r(nvars_);
        for (const auto& [e, c] : terms_) {
            if (e[v] == 0) continue;
            Exponents d = e;
            d[v] -= 1;
            r.add_term(d, c * Rational(static_cast<long>(e[v])));
        }
        return r;
    }

    Rational evaluate(const QVec& point) const {
        if (point.size() != nvars_) throw std::logic_error("evaluation point dim mismatch");
        Rational total(0);
        for (const auto& [e, c] : terms_) {
            Rational m = c;
            for (std::size_t i = 0; i < nvars_; ++i)
                for (std::uint32_t k = 0; k < e[i]; ++k) m *= point[i];
            total += m;
        }
        return total;
    }

    double evaluate(const DVec& point) const {
        if (point.size() != nvars_) throw std::logic_error("evaluation point dim mismatch");
        double total = 0.0;
        for (const auto& [e, c] : terms_) {
            double m = to_double(c);
            for (std::size_t i = 0; i < nvars_; ++i)
                if (e[i] != 0) m *= std::pow(point[i], static_cast<int>(e[i]));
            total += m;
        }
        return total;
    }

    // Full composition: substitute images[v] for variable v. All images must
    // share a variable count, which becomes the result's.
    PolyScalar substitute(const std::vector<PolyScalar>& images) const {
        if (images.size() != nvars_) throw std::logic_error("substitute image count mismatch");
        std::size_t out_vars = images.empty() ? 0 : images.front().nvars();
        for (const auto& im : images)
            if (im.nvars() != out_vars) throw std::logic_error("substitute image vars mismatch");
        PolyScalar r(out_vars);
        for (const auto& [e, c] : terms_) {
            PolyScalar m = PolyScalar::constant(out_vars, c);
            for (std::size_t i = 0; i < nvars_; ++i)
                for (std::uint32_t k = 0; k < e[i]; ++k) m = m * images[i];
            r += m;
        }
        return r;
    }

    // Substitute 0 for variable v (keeps the variable slot).
    PolyScalar set_var_zero(std::size_t v) const {
        PolyScalar r(nvars_);
        for (const auto& [e, c] : terms_)
            if (e[v] == 0) r.terms_[e] = c;
        return r;
    }

    bool depends_on(std::size_t v) const {
        for (const auto& [e, c] : terms_)
            if (e[v] != 0) return true;
        return false;
    }

    // Every monomial has positive degree in at least one of the given
    // variables, i.e. the polynomial lies in the ideal they generate.
    bool in_ideal(const std::set<std::size_t>& vars) const {
        for (const auto& [e, c] : terms_) {
            bool hit = false;
            for (std::size_t v : vars)
                if (e[v] != 0) { hit = true; break; }
            if (!hit) return false;
        }
        return true;
    }

    // Same polynomial viewed on a chart with extra trailing variables.
    PolyScalar with_appended_vars(std::size_t extra) const {
        PolyScalar r(nvars_ + extra);
        for (const auto& [e, c] : terms_) {
            Exponents ee = e;
            ee.resize(nvars_ + extra, 0);
            r.terms_[std::move(ee)] = c;
        }
        return r;
    }

    std::uint32_t degree_in(std::size_t v) const {
        std::uint32_t d = 0;
        for (const auto& [e, c] : terms_)
            if (e[v] > d) d = e[v];
        return d;
    }

    std::uint32_t total_degree() const {
        std::uint32_t d = 0;
        for (const auto& [e, c] : terms_) {
            std::uint32_t s = 0;
            for (auto x : e) s += x;
            if (s > d) d = s;
        }
        return d;
    }

    std::string to_string(const std::vector<std::string>& names) const {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& [e, c] : terms_) {
            if (!first) os << " + ";
            first = false;
            os << format_rational(c);
            for (std::size_t i = 0; i < nvars_; ++i) {
                if (e[i] == 0) continue;
                os << "*" << (i < names.size() ? names[i] : "v" + std::to_string(i));
                if (e[i] > 1) os << "^" << e[i];
            }
        }
        return os.str();
    }

  private:
    void check_vars(const PolyScalar& o) const {
        if (nvars_ != o.nvars_) throw std::logic_error("polynomial variable count mismatch");
    }

    std::size_t nvars_;
    TermMap terms_;
};

// Exact multivariate division: returns f/g when the remainder is zero.
// Used by the symbolic linear solver to decide whether a Cramer quotient is
// itself polynomial.
inline std::optional<PolyScalar> try_divide_exact(const PolyScalar& f, const PolyScalar& g) {
    if (g.is_zero()) return std::nullopt;
    if (f.is_zero()) return PolyScalar(f.nvars());
    if (f.nvars() != g.nvars()) throw std::logic_error("division variable count mismatch");
    const auto& glead = *g.terms().rbegin();
    PolyScalar q(f.nvars());
    PolyScalar r = f;
    // Cancel leading terms in lexicographic order; bail out when the leading
    // monomial is not divisible (exact division then impossible).
    std::size_t guard = 0;
    const std::size_t max_steps = 100000;
    while (!r.is_zero()) {
        if (++guard > max_steps) return std::nullopt;
        const auto& rlead = *r.terms().rbegin();
        PolyScalar::Exponents diff(f.nvars());
        bool divisible = true;
        for (std::size_t i = 0; i < f.nvars(); ++i) {
            if (rlead.first[i] < glead.first[i]) { divisible = false; break; }
            diff[i] = rlead.first[i] - glead.first[i];
        }
        if (!divisible) return std::nullopt;
        PolyScalar t = PolyScalar::monomial(f.nvars(), diff, rlead.second / glead.second);
        q += t;
        r -= t * g;
    }
    return q;
}

}  // namespace cosym
