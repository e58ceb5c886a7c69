#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "gait/errors.hpp"
#include "gait/signal.hpp"

namespace gait {

/// Sorted multiset union of two position lists (duplicates kept, so
/// |z| = n1 + n2) with both signals interpolated onto it.
struct MergedGrid {
    std::vector<double> z;
    std::vector<double> s1_on_z;
    std::vector<double> s2_on_z;
};

namespace detail {

inline void require_nonempty(const Signal& s, const char* what) {
    if (s.empty()) throw EmptySignal(std::string(what) + ": empty signal");
    if (s.values.size() != s.positions.size())
        throw EmptySignal(std::string(what) + ": positions/values size mismatch");
}

/// Linear interpolation with constant extension outside the sample range.
/// `cursor` must be reused only with non-decreasing z queries.
inline double interp_at(const Signal& s, std::size_t& cursor, double z) {
    const auto& xs = s.positions;
    if (z <= xs.front()) return s.values.front();
    if (z >= xs.back()) return s.values.back();
    while (cursor + 1 < xs.size() && xs[cursor + 1] <= z) ++cursor;
    if (xs[cursor] == z) return s.values[cursor];
    const double t = (z - xs[cursor]) / (xs[cursor + 1] - xs[cursor]);
    return s.values[cursor] + (s.values[cursor + 1] - s.values[cursor]) * t;
}

}  // namespace detail

inline MergedGrid merge_and_interpolate(const Signal& a, const Signal& b) {
    detail::require_nonempty(a, "merge_and_interpolate");
    detail::require_nonempty(b, "merge_and_interpolate");
    MergedGrid g;
    g.z.resize(a.size() + b.size());
    std::merge(a.positions.begin(), a.positions.end(), b.positions.begin(), b.positions.end(),
               g.z.begin());
    g.s1_on_z.reserve(g.z.size());
    g.s2_on_z.reserve(g.z.size());
    std::size_t ca = 0, cb = 0;
    for (double z : g.z) {
        g.s1_on_z.push_back(detail::interp_at(a, ca, z));
        g.s2_on_z.push_back(detail::interp_at(b, cb, z));
    }
    return g;
}

/// Euclidean gap between the two interpolants on the merged grid.
inline double signal_distance(const Signal& a, const Signal& b) {
    detail::require_nonempty(a, "signal_distance");
    detail::require_nonempty(b, "signal_distance");
    std::size_t ia = 0, ib = 0, ca = 0, cb = 0;
    double sum = 0.0;
    while (ia < a.size() || ib < b.size()) {
        double z;
        if (ib >= b.size() || (ia < a.size() && a.positions[ia] <= b.positions[ib]))
            z = a.positions[ia++];
        else
            z = b.positions[ib++];
        const double gap = detail::interp_at(a, ca, z) - detail::interp_at(b, cb, z);
        sum += gap * gap;
    }
    return std::sqrt(sum);
}

/// Elementwise mean of the two interpolants on the merged grid.
inline Signal average_pair(const Signal& a, const Signal& b) {
    MergedGrid g = merge_and_interpolate(a, b);
    Signal out;
    out.channel = a.channel;
    out.positions = std::move(g.z);
    out.values.reserve(out.positions.size());
    for (std::size_t h = 0; h < g.s1_on_z.size(); ++h)
        out.values.push_back((g.s1_on_z[h] + g.s2_on_z[h]) / 2.0);
    return out;
}

}  // namespace gait
