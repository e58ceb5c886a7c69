#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "gait/errors.hpp"

namespace gait {

enum class Channel { acc_x, acc_y, acc_z, gyr_x, gyr_y, gyr_z };

inline const char* channel_name(Channel c) {
    switch (c) {
        case Channel::acc_x: return "acc_x";
        case Channel::acc_y: return "acc_y";
        case Channel::acc_z: return "acc_z";
        case Channel::gyr_x: return "gyr_x";
        case Channel::gyr_y: return "gyr_y";
        case Channel::gyr_z: return "gyr_z";
    }
    return "?";
}

inline Channel channel_from_name(const std::string& name) {
    for (Channel c : {Channel::acc_x, Channel::acc_y, Channel::acc_z,
                      Channel::gyr_x, Channel::gyr_y, Channel::gyr_z}) {
        if (name == channel_name(c)) return c;
    }
    throw ParseError("unknown channel name: " + name);
}

/// A sampled signal. Positions are sample ticks; raw sensor signals use
/// consecutive integers, merged/averaged grids may repeat positions.
struct Signal {
    std::vector<double> positions;
    std::vector<double> values;
    Channel channel = Channel::acc_x;

    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }
};

enum class Stage { scaled, zero_mean };

struct NormalizedSignal {
    std::vector<double> positions;
    std::vector<double> values;
    Channel channel = Channel::acc_x;
    Stage stage = Stage::scaled;

    std::size_t size() const { return positions.size(); }
};

/// Candidate cut points: positions with raw values; angles filled in by the
/// segmentation layer (empty until then).
struct PeakSet {
    std::vector<double> positions;
    std::vector<double> raw_values;
    std::vector<double> angles;

    std::size_t size() const { return positions.size(); }
};

namespace detail {

inline void require_valid_signal(const Signal& s, const char* what) {
    if (s.size() < 2) throw EmptySignal(std::string(what) + ": need at least 2 samples");
    if (s.values.size() != s.positions.size())
        throw EmptySignal(std::string(what) + ": positions/values size mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isfinite(s.values[i]) || !std::isfinite(s.positions[i]))
            throw EmptySignal(std::string(what) + ": non-finite sample at index " + std::to_string(i));
        if (i > 0 && s.positions[i] <= s.positions[i - 1])
            throw EmptySignal(std::string(what) + ": positions not strictly increasing at index " +
                              std::to_string(i));
    }
}

/// Raw sensor signals are sampled on consecutive integer ticks; the cutting
/// machinery indexes them by position - front().
inline void require_unit_spaced(const Signal& s, const char* what) {
    require_valid_signal(s, what);
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s.positions[i] - s.positions[i - 1] != 1.0)
            throw EmptySignal(std::string(what) + ": positions not unit-spaced at index " +
                              std::to_string(i));
    }
}

inline double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace detail

/// Affine map of values onto [0,1]; positions untouched.
inline NormalizedSignal scale_to_unit(const Signal& s) {
    detail::require_valid_signal(s, "scale_to_unit");
    auto [mn_it, mx_it] = std::minmax_element(s.values.begin(), s.values.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mx == mn) throw ConstantSignal("scale_to_unit: constant signal (max == min)");
    NormalizedSignal out;
    out.positions = s.positions;
    out.channel = s.channel;
    out.stage = Stage::scaled;
    out.values.reserve(s.size());
    const double span = mx - mn;
    for (double v : s.values) out.values.push_back((v - mn) / span);
    return out;
}

inline NormalizedSignal shift_to_zero_mean(const NormalizedSignal& s) {
    if (s.stage != Stage::scaled)
        throw EmptySignal("shift_to_zero_mean: input must be scaled stage");
    NormalizedSignal out = s;
    out.stage = Stage::zero_mean;
    const double m = detail::mean(s.values);
    for (double& v : out.values) v -= m;
    return out;
}

/// Vertex angle at an interior sample: angle between the vectors to the two
/// neighboring samples, one tick away horizontally. Flat -> pi, sharp V -> small.
inline double peak_angle(const Signal& raw, std::size_t index) {
    if (index == 0 || index + 1 >= raw.size())
        throw BoundaryPoint("peak_angle: index " + std::to_string(index) +
                            " has no two neighbors (size " + std::to_string(raw.size()) + ")");
    const double y = raw.values[index];
    const double a = raw.values[index - 1] - y;
    const double b = raw.values[index + 1] - y;
    double c = (a * b - 1.0) / (std::sqrt(a * a + 1.0) * std::sqrt(b * b + 1.0));
    c = std::clamp(c, -1.0, 1.0);
    return std::acos(c);
}

/// Minimal-peak detector. Candidates are interior local minima of the
/// zero-mean signal (equal-valued plateau runs collapse to their midpoint
/// sample), kept when their depth below zero lies in [0.1, 0.5] and thinned
/// so survivors are >= 10 samples apart (deeper peak wins, earlier on ties).
inline PeakSet detect_minimal_peaks(const NormalizedSignal& zm, const Signal& raw) {
    if (zm.stage != Stage::zero_mean)
        throw EmptySignal("detect_minimal_peaks: input must be zero-mean stage");
    if (zm.size() != raw.size() || zm.positions != raw.positions)
        throw EmptySignal("detect_minimal_peaks: normalized/raw position grids differ");

    // The 0.5 edge is exact for symmetric waves up to rounding; a few ulps of
    // slack keep boundary-grazing valleys from flickering out of the band.
    constexpr double kBandTol = 1e-9;
    constexpr double kDepthLo = 0.1, kDepthHi = 0.5;
    constexpr double kMinSeparation = 10.0;

    const auto& v = zm.values;
    const std::size_t n = v.size();

    struct Cand {
        std::size_t index;
        double depth;
    };
    std::vector<Cand> cands;
    std::size_t t = 1;
    while (n >= 3 && t + 1 < n) {
        if (!(v[t] <= v[t - 1] && v[t] <= v[t + 1])) {
            ++t;
            continue;
        }
        // Extend over an equal-valued qualifying plateau.
        std::size_t last = t;
        while (last + 2 < n && v[last + 1] == v[t] && v[last + 1] <= v[last + 2]) ++last;
        const std::size_t mid = (t + last) / 2;
        const double depth = -v[mid];
        if (depth >= kDepthLo - kBandTol && depth <= kDepthHi + kBandTol)
            cands.push_back({mid, depth});
        t = last + 1;
    }

    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.depth != b.depth) return a.depth > b.depth;
        return a.index < b.index;
    });

    std::vector<std::size_t> kept;
    for (const Cand& c : cands) {
        bool clear = true;
        for (std::size_t k : kept) {
            if (std::abs(zm.positions[c.index] - zm.positions[k]) < kMinSeparation) {
                clear = false;
                break;
            }
        }
        if (clear) kept.push_back(c.index);
    }
    if (kept.empty()) throw NoPeaks("detect_minimal_peaks: no candidate minima in the depth band");
    std::sort(kept.begin(), kept.end());

    PeakSet out;
    out.positions.reserve(kept.size());
    out.raw_values.reserve(kept.size());
    for (std::size_t k : kept) {
        out.positions.push_back(raw.positions[k]);
        out.raw_values.push_back(raw.values[k]);
    }
    return out;
}

}  // namespace gait
