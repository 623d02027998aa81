#pragma once

#include <cstdint>
#include <vector>

#include "cosym/linalg.hpp"
#include "cosym/rational.hpp"

namespace cosym {

// Deterministic sampling of the box prod_i [-h_i, h_i] with a fixed number of
// points per axis. When the full tensor grid exceeds max_points, a strided
// mixed-radix subsample of exactly max_points points is taken instead, so
// high-dimensional verifications stay bounded while remaining reproducible.
inline std::vector<QVec> sample_box(const std::vector<Rational>& half_widths,
                                    int points_per_axis, std::size_t max_points) {
    std::size_t n = half_widths.size();
    if (points_per_axis < 1) points_per_axis = 1;
    std::vector<std::vector<Rational>> axis_values(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (points_per_axis == 1 || half_widths[i] == 0) {
            axis_values[i] = {Rational(0)};
        } else {
            for (int j = 0; j < points_per_axis; ++j) {
                Rational t(2 * j, points_per_axis - 1);  // 0 .. 2
                t.canonicalize();
                axis_values[i].push_back((t - 1) * half_widths[i]);
            }
        }
    }

    unsigned long long total = 1;
    bool overflow = false;
    for (std::size_t i = 0; i < n; ++i) {
        unsigned long long m = axis_values[i].size();
        if (total > (1ull << 62) / m) { overflow = true; break; }
        total *= m;
    }

    std::vector<QVec> points;
    auto decode = [&](unsigned long long index) {
        QVec p(n);
        for (std::size_t i = n; i-- > 0;) {
            unsigned long long m = axis_values[i].size();
            p[i] = axis_values[i][index % m];
            index /= m;
        }
        return p;
    };

    if (!overflow && total <= max_points) {
        for (unsigned long long idx = 0; idx < total; ++idx) points.push_back(decode(idx));
    } else {
        unsigned long long count = max_points;
        for (unsigned long long j = 0; j < count; ++j) {
            unsigned long long idx;
            if (overflow) {
                // fall back to a deterministic linear-congruential walk
                idx = j * 6364136223846793005ull + 1442695040888963407ull;
                QVec p(n);
                for (std::size_t i = 0; i < n; ++i) {
                    unsigned long long m = axis_values[i].size();
                    p[i] = axis_values[i][idx % m];
                    idx /= m ? m : 1;
                    idx ^= idx >> 17;
                }
                points.push_back(std::move(p));
                continue;
            }
            idx = static_cast<unsigned long long>(
                (static_cast<unsigned __int128>(j) * total) / count);
            points.push_back(decode(idx));
        }
    }
    return points;
}

inline DVec to_doubles(const QVec& q) {
    DVec d(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) d[i] = to_double(q[i]);
    return d;
}

}  // namespace cosym
