#pragma once

#include <gmpxx.h>

#include <cstdlib>
#include <optional>
#include <string>

namespace cosym {

// Exact rational scalar. All symbolic computation in the library runs over
// this type; doubles appear only in the numerical flow machinery.
using Rational = mpq_class;

inline Rational rat(long num, long den = 1) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

inline double to_double(const Rational& q) { return q.get_d(); }

inline std::string format_rational(const Rational& q) { return q.get_str(); }

// Accepts "p" or "p/q" with an optional leading minus. Anything else
// (floats, whitespace, empty denominators) is rejected.
inline std::optional<Rational> parse_rational(const std::string& text) {
    if (text.empty()) return std::nullopt;
    std::size_t i = 0;
    if (text[i] == '-' || text[i] == '+') ++i;
    std::size_t digits = 0;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') { ++i; ++digits; }
    if (digits == 0) return std::nullopt;
    if (i < text.size()) {
        if (text[i] != '/') return std::nullopt;
        ++i;
        std::size_t den_digits = 0;
        while (i < text.size() && text[i] >= '0' && text[i] <= '9') { ++i; ++den_digits; }
        if (den_digits == 0 || i != text.size()) return std::nullopt;
    }
    Rational r;
    if (r.set_str(text, 10) != 0) return std::nullopt;
    if (r.get_den() == 0) return std::nullopt;
    r.canonicalize();
    return r;
}

inline int sign(const Rational& q) { return sgn(q); }

}  // namespace cosym
