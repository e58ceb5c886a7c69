#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <list>
#include <string>
#include <vector>

#include "gait/distance.hpp"
#include "gait/identification.hpp"
#include "gait/signal.hpp"

namespace testsupport {

/// Independent post-condition verifier for detect_minimal_peaks. Instead of
/// re-running the greedy, it checks the defining properties of the output:
/// every kept cut is an in-band valley, kept cuts are >= 10 apart, and every
/// in-band valley that was dropped loses to a kept one within 10 samples
/// under the (deeper first, earlier on ties) priority.
struct PeakCheck {
    bool ok = true;
    std::string why;
};

inline PeakCheck verify_minimal_peaks(const gait::NormalizedSignal& norm,
                                      const std::vector<double>& kept_positions) {
    const auto& v = norm.values;
    const std::size_t n = v.size();
    const double p0 = norm.positions.front();
    constexpr double kTol = 1e-9;

    // Candidate valleys by the detector's definition (non-strict local
    // minimum, equal-valued plateau collapsed to its floor midpoint, depth
    // band [0.1, 0.5] with roundoff slack). This part mirrors the
    // definition; the greedy-separation outcome below is checked purely
    // through its defining properties.
    struct Valley {
        std::size_t idx;
        double depth;
    };
    std::vector<Valley> valleys;
    std::size_t t = 1;
    while (n >= 3 && t + 1 < n) {
        if (!(v[t] <= v[t - 1] && v[t] <= v[t + 1])) {
            ++t;
            continue;
        }
        std::size_t last = t;
        while (last + 2 < n && v[last + 1] == v[t] && v[last + 1] <= v[last + 2]) ++last;
        const std::size_t mid = (t + last) / 2;
        const double depth = -v[mid];
        if (depth >= 0.1 - kTol && depth <= 0.5 + kTol) valleys.push_back({mid, depth});
        t = last + 1;
    }

    PeakCheck out;
    const auto fail = [&](const std::string& why) {
        out.ok = false;
        out.why = why;
        return out;
    };

    // Kept positions must be in-band candidate valleys, sorted, >= 10 apart.
    std::vector<std::size_t> kept;
    for (double pos : kept_positions)
        kept.push_back(static_cast<std::size_t>(std::llround(pos - p0)));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const bool is_candidate = std::any_of(valleys.begin(), valleys.end(),
                                              [&](const Valley& c) { return c.idx == kept[i]; });
        if (!is_candidate)
            return fail("kept position " + std::to_string(kept[i]) + " is not an in-band valley");
        if (i && kept[i] <= kept[i - 1]) return fail("kept positions not increasing");
    }
    for (std::size_t i = 0; i < kept.size(); ++i)
        for (std::size_t j = i + 1; j < kept.size(); ++j)
            if (static_cast<double>(kept[j] - kept[i]) < 10.0)
                return fail("kept cuts closer than 10 samples");

    // Every dropped candidate must be blocked by a kept cut within < 10
    // samples that dominates it (deeper, or equal depth and earlier).
    const auto depth_of = [&](std::size_t idx) {
        for (const Valley& c : valleys)
            if (c.idx == idx) return c.depth;
        return -1.0;
    };
    for (const Valley& c : valleys) {
        if (std::find(kept.begin(), kept.end(), c.idx) != kept.end()) continue;
        bool blocked = false;
        for (std::size_t k : kept) {
            const double dist = std::abs(static_cast<double>(k) - static_cast<double>(c.idx));
            if (dist >= 10.0) continue;
            const double kd = depth_of(k);
            if (kd > c.depth || (kd == c.depth && k < c.idx)) {
                blocked = true;
                break;
            }
        }
        if (!blocked)
            return fail("candidate at " + std::to_string(c.idx) + " dropped without a blocker");
    }
    return out;
}

/// Step-by-step translation of the greedy threshold clustering loop using a
/// mutating std::list, structured differently from the library sweep.
struct SimulatedCluster {
    std::vector<gait::Signal> archetypes;
    std::vector<std::size_t> member_counts;
};

inline SimulatedCluster simulate_clustering(const std::vector<gait::Signal>& cycles,
                                            double rho) {
    SimulatedCluster out;
    std::list<gait::Signal> remaining(cycles.begin(), cycles.end());
    while (!remaining.empty()) {
        const gait::Signal seed = remaining.front();
        remaining.pop_front();
        gait::Signal archetype = seed;
        std::size_t members = 1;
        for (auto it = remaining.begin(); it != remaining.end();) {
            if (gait::signal_distance(seed, *it) <= rho) {
                archetype = gait::average_pair(archetype, *it);
                it = remaining.erase(it);
                ++members;
            } else {
                ++it;
            }
        }
        out.archetypes.push_back(std::move(archetype));
        out.member_counts.push_back(members);
    }
    return out;
}

/// Brute-force nearest-archetype scan over every (candidate, archetype) pair.
inline int brute_force_predict(const gait::Signal& cycle,
                               const std::vector<gait::ArchetypeSet>& candidates) {
    double best = std::numeric_limits<double>::infinity();
    int who = -1;
    for (const auto& person : candidates)
        for (const auto& a : person.archetypes) {
            const double d = gait::signal_distance(cycle, a);
            if (d < best || (d == best && person.person_id < who)) {
                best = d;
                who = person.person_id;
            }
        }
    return who;
}

/// Quantile oracle built on nth_element instead of a full sort.
inline double quantile_oracle(std::vector<double> v, double q) {
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(h);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
    const double a = v[lo];
    if (lo + 1 >= v.size()) return a;
    const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
    return a + (h - static_cast<double>(lo)) * (b - a);
}

}  // namespace testsupport
