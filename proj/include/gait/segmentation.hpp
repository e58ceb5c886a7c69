#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <utility>
#include <vector>

#include "gait/distance.hpp"
#include "gait/errors.hpp"
#include "gait/signal.hpp"

namespace gait {

/// Pre-cuts surviving the angle-quantile filter. Carries the peak set it was
/// filtered from so the best-cycle search can re-filter at lower quantiles.
struct FinerCuts {
    std::vector<double> positions;
    std::vector<double> raw_values;
    double source_quantile = 0.5;
    PeakSet source;

    std::size_t size() const { return positions.size(); }
};

struct CycleLengthHistogram {
    std::vector<double> lengths;
    std::vector<std::size_t> counts;
    std::vector<double> edges;  // counts.size() + 1, strictly increasing
};

/// Seed cycle for the left/right extension walks. On the normal path `length`
/// equals end - start; when the search gives up (cap path) `length` is the
/// hypothesized gait length and `forced` is set.
struct BestCycle {
    Signal cycle;  // slice of the parent signal, absolute positions
    double start = 0;
    double end = 0;
    double length = 0;
    bool forced = false;
};

struct HyperParams {
    double d_hy = 50;         // hypothesized gait length, samples
    double beta_hy = -1;      // correlation gate; negative disables gating
    double l_hy = 10;         // local-minimum snap radius, samples
    double shift_radius = 5;  // score alignment shift, samples

    void validate() const {
        if (!(d_hy >= 4)) throw Error("HyperParams: d_hy must be >= 4");
        if (!(beta_hy >= -1 && beta_hy <= 1))
            throw Error("HyperParams: beta_hy must be in [-1, 1]");
        if (!(l_hy >= 0)) throw Error("HyperParams: l_hy must be >= 0");
        if (!(shift_radius >= 0)) throw Error("HyperParams: shift_radius must be >= 0");
    }
};

/// Final cut list plus the materialized cycles. Cut positions are absolute;
/// each cycle is re-based to start at position 1 so cycles from different
/// recording periods are directly comparable under the signal distance.
struct Segmentation {
    std::vector<double> cut_positions;  // M + 1, strictly increasing
    std::vector<Signal> cycles;         // M
    HyperParams params;
    double score = std::numeric_limits<double>::quiet_NaN();
};

struct TuneGrid {
    std::vector<double> d_hy{40, 45, 50, 55, 60};
    std::vector<double> beta_hy{-1};
    std::vector<double> l_hy{5, 10, 15};
    double shift_radius = 5;
};

namespace detail {

inline std::size_t position_index(const Signal& s, double pos, const char* what) {
    const double off = pos - s.positions.front();
    const auto idx = static_cast<long long>(std::llround(off));
    if (off != std::floor(off) || idx < 0 || idx >= static_cast<long long>(s.size()))
        throw GridMismatch(std::string(what) + ": position " + std::to_string(pos) +
                           " not on the signal grid");
    return static_cast<std::size_t>(idx);
}

inline Signal slice_by_index(const Signal& s, std::size_t lo, std::size_t hi) {
    Signal out;
    out.channel = s.channel;
    out.positions.assign(s.positions.begin() + lo, s.positions.begin() + hi + 1);
    out.values.assign(s.values.begin() + lo, s.values.begin() + hi + 1);
    return out;
}

inline Signal rebase_to_one(Signal s) {
    for (std::size_t i = 0; i < s.size(); ++i) s.positions[i] = static_cast<double>(i + 1);
    return s;
}

/// Linear-interpolation quantile of an unsorted list (index h = (n-1)*q).
inline double quantile_linear(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

}  // namespace detail

/// Normalize, detect minimal peaks, and attach vertex angles.
inline PeakSet precut(const Signal& raw) {
    detail::require_unit_spaced(raw, "precut");
    const NormalizedSignal zm = shift_to_zero_mean(scale_to_unit(raw));
    PeakSet peaks = detect_minimal_peaks(zm, raw);
    peaks.angles.reserve(peaks.size());
    const double p0 = raw.positions.front();
    for (double pos : peaks.positions)
        peaks.angles.push_back(peak_angle(raw, static_cast<std::size_t>(std::llround(pos - p0))));
    return peaks;
}

/// Keep pre-cuts whose angle is at or above the angle quantile (ties pass,
/// so an all-equal angle population keeps everything).
inline FinerCuts finer_cuts(const PeakSet& peaks, double quantile = 0.5) {
    if (peaks.size() == 0) throw TooFewCuts("finer_cuts: empty peak set");
    if (peaks.angles.size() != peaks.size())
        throw TooFewCuts("finer_cuts: peak set has no angles");
    const double threshold = detail::quantile_linear(peaks.angles, quantile);
    FinerCuts out;
    out.source_quantile = quantile;
    out.source = peaks;
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        if (peaks.angles[i] >= threshold) {
            out.positions.push_back(peaks.positions[i]);
            out.raw_values.push_back(peaks.raw_values[i]);
        }
    }
    if (out.size() < 2)
        throw TooFewCuts("finer_cuts: fewer than 2 cuts above the angle quantile");
    return out;
}

/// Equal-width histogram of consecutive cut gaps with ceil(sqrt(n)) bins.
inline CycleLengthHistogram cycle_length_histogram(const FinerCuts& cuts) {
    if (cuts.size() < 2) throw TooFewCuts("cycle_length_histogram: need >= 2 cuts");
    CycleLengthHistogram h;
    h.lengths.reserve(cuts.size() - 1);
    for (std::size_t i = 1; i < cuts.size(); ++i)
        h.lengths.push_back(cuts.positions[i] - cuts.positions[i - 1]);
    const auto [mn_it, mx_it] = std::minmax_element(h.lengths.begin(), h.lengths.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mn == mx) {
        h.edges = {mn - 0.5, mn + 0.5};
        h.counts = {h.lengths.size()};
        return h;
    }
    const auto bins = static_cast<std::size_t>(
        std::max(1.0, std::ceil(std::sqrt(static_cast<double>(h.lengths.size())))));
    const double width = (mx - mn) / static_cast<double>(bins);
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = mn + width * static_cast<double>(i);
    h.edges[bins] = mx;
    h.counts.assign(bins, 0);
    for (double len : h.lengths) {
        auto b = static_cast<std::size_t>((len - mn) / width);
        if (b >= bins) b = bins - 1;
        ++h.counts[b];
    }
    return h;
}

namespace detail {

struct BestCycleSearch {
    BestCycle best;
    FinerCuts cuts;         // the (possibly merged or re-filtered) final cut list
    std::size_t cut_index;  // best.start == cuts.positions[cut_index]
};

inline double bin_center(const CycleLengthHistogram& h, std::size_t i) {
    return (h.edges[i] + h.edges[i + 1]) / 2.0;
}

inline std::size_t argmax_count(const CycleLengthHistogram& h) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < h.counts.size(); ++i)
        if (h.counts[i] > h.counts[best]) best = i;
    return best;
}

inline BestCycleSearch best_cycle_search(const FinerCuts& input, const Signal& raw, double d_hy) {
    if (input.size() < 2) throw TooFewCuts("find_best_cycle: need >= 2 cuts");
    const auto in_band = [d_hy](double len) { return 0.8 * d_hy <= len && len <= 1.2 * d_hy; };

    FinerCuts cur = input;
    CycleLengthHistogram hist = cycle_length_histogram(cur);

    // Step 1: scan bins left to right; an empty bin aborts the scan with a
    // zero-length placeholder, a bin whose center is in band wins.
    double target = 0;
    bool found = false, scanned_all = true;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        if (hist.counts[i] == 0) {
            target = 0;
            scanned_all = false;
            break;
        }
        const double c = bin_center(hist, i);
        if (in_band(c)) {
            target = c;
            found = true;
            scanned_all = false;
            break;
        }
    }
    if (scanned_all) target = bin_center(hist, hist.counts.size() - 1);

    // Step 2/3: alternate merging alternating cuts (too short) and re-filtering
    // at lower angle quantiles (too long) until the dominant bin lands in band;
    // give up to the cap after 6 re-filters or when cuts run out.
    bool forced = false;
    if (!found) {
        int relaxations = 0;
        int spins = 0;
        while (!in_band(target)) {
            if (++spins > 64) {
                forced = true;
                break;
            }
            if (target <= 0.8 * d_hy) {
                if (cur.size() < 3) {
                    forced = true;
                    break;
                }
                FinerCuts merged;
                merged.source_quantile = cur.source_quantile;
                merged.source = cur.source;
                for (std::size_t i = 0; i < cur.size(); i += 2) {
                    merged.positions.push_back(cur.positions[i]);
                    merged.raw_values.push_back(cur.raw_values[i]);
                }
                cur = std::move(merged);
            } else {
                if (relaxations == 6) {
                    forced = true;
                    break;
                }
                ++relaxations;
                cur = finer_cuts(cur.source, 0.5 - 0.1 * static_cast<double>(relaxations));
            }
            hist = cycle_length_histogram(cur);
            target = bin_center(hist, argmax_count(hist));
        }
    }
    if (forced) target = d_hy;

    // Pick the cycle with length closest to the target; when the target came
    // from an in-band bin, restrict to cycles that are themselves in band so
    // the reported length honors the band-or-cap contract.
    const std::size_t ncyc = cur.size() - 1;
    auto gap_at = [&](std::size_t j) { return cur.positions[j + 1] - cur.positions[j]; };
    std::size_t pick = ncyc;
    if (!forced) {
        for (std::size_t j = 0; j < ncyc; ++j) {
            if (!in_band(gap_at(j))) continue;
            if (pick == ncyc ||
                std::abs(gap_at(j) - target) < std::abs(gap_at(pick) - target))
                pick = j;
        }
        if (pick == ncyc) forced = true;  // straddling bin: no individual in-band length
    }
    if (forced) {
        target = d_hy;
        pick = 0;
        for (std::size_t j = 1; j < ncyc; ++j)
            if (std::abs(gap_at(j) - target) < std::abs(gap_at(pick) - target)) pick = j;
    }

    BestCycleSearch out;
    out.cut_index = pick;
    const std::size_t lo = position_index(raw, cur.positions[pick], "find_best_cycle");
    const std::size_t hi = position_index(raw, cur.positions[pick + 1], "find_best_cycle");
    out.best.cycle = slice_by_index(raw, lo, hi);
    out.best.start = cur.positions[pick];
    out.best.end = cur.positions[pick + 1];
    out.best.forced = forced;
    out.best.length = forced ? d_hy : gap_at(pick);
    out.cuts = std::move(cur);
    return out;
}

}  // namespace detail

inline BestCycle find_best_cycle(const FinerCuts& cuts, const Signal& raw, double d_hy) {
    return detail::best_cycle_search(cuts, raw, d_hy).best;
}

/// Pearson correlation after resampling both cycles onto 64 evenly spaced
/// points across their own spans.
inline double correlation(const Signal& a, const Signal& b) {
    if (a.size() < 2 || b.size() < 2)
        throw EmptySignal("correlation: both cycles need >= 2 samples");
    constexpr int kGrid = 64;
    const auto resample = [](const Signal& s) {
        std::array<double, kGrid> out{};
        const double lo = s.positions.front(), span = s.positions.back() - s.positions.front();
        std::size_t cursor = 0;
        for (int t = 0; t < kGrid; ++t)
            out[t] = detail::interp_at(s, cursor, lo + span * t / (kGrid - 1.0));
        return out;
    };
    const auto xa = resample(a), xb = resample(b);
    double ma = 0, mb = 0;
    for (int t = 0; t < kGrid; ++t) {
        ma += xa[t];
        mb += xb[t];
    }
    ma /= kGrid;
    mb /= kGrid;
    double sab = 0, saa = 0, sbb = 0;
    for (int t = 0; t < kGrid; ++t) {
        sab += (xa[t] - ma) * (xb[t] - mb);
        saa += (xa[t] - ma) * (xa[t] - ma);
        sbb += (xb[t] - mb) * (xb[t] - mb);
    }
    if (saa == 0.0 || sbb == 0.0)
        throw ZeroVariance("correlation: a resampled cycle is constant");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace detail {

/// Leftward extension walk in index space. `cuts` are finer-cut indices,
/// [best_lo, best_hi] the accepted seed cycle, `seed_len` its reported length
/// (used only until the first refresh). Returns newly accepted cut indices
/// strictly left of best_lo, ascending. Any correlation failure stops the
/// whole walk; a negative beta_hy disables the gate.
inline std::vector<std::size_t> extend_core(const std::vector<double>& v,
                                            const std::vector<std::size_t>& cuts,
                                            std::size_t best_lo, std::size_t best_hi,
                                            const HyperParams& p, double seed_len) {
    const bool gated = p.beta_hy >= 0.0;
    std::deque<std::size_t> X{best_lo, best_hi};

    const auto mean_len = [&X] {
        return static_cast<double>(X.back() - X.front()) / static_cast<double>(X.size() - 1);
    };
    const auto make_slice = [&v](std::size_t lo, std::size_t hi) {
        Signal s;
        s.positions.reserve(hi - lo + 1);
        s.values.reserve(hi - lo + 1);
        for (std::size_t i = lo; i <= hi; ++i) {
            s.positions.push_back(static_cast<double>(i));
            s.values.push_back(v[i]);
        }
        return s;
    };
    // Candidate cycle [lo, hi] against the current first accepted cycle.
    const auto gate_pass = [&](std::size_t lo, std::size_t hi) {
        if (!gated) return true;
        try {
            return correlation(make_slice(lo, hi), make_slice(X[0], X[1])) >= p.beta_hy;
        } catch (const ZeroVariance&) {
            return false;
        }
    };
    const auto argmin_window = [&v](long lo, long hi) {
        std::size_t best = static_cast<std::size_t>(lo);
        for (long j = lo + 1; j <= hi; ++j)
            if (v[static_cast<std::size_t>(j)] < v[best]) best = static_cast<std::size_t>(j);
        return best;
    };

    double d_be = seed_len;
    bool stopped = false;

    // Phase 1: walk the finer cuts leftward from the seed.
    std::size_t pp = 0;
    {
        auto it = std::find(cuts.begin(), cuts.end(), best_lo);
        if (it == cuts.end()) throw GridMismatch("extend: best cycle start is not a cut");
        pp = static_cast<std::size_t>(it - cuts.begin());
    }
    while (pp >= 1 && !stopped) {
        d_be = mean_len();
        const std::size_t L = cuts[pp - 1];
        const double total = static_cast<double>(X.front() - L);
        if (0.95 * d_be <= total && total <= 1.05 * d_be) {
            if (!gate_pass(L, X.front())) {
                stopped = true;
                break;
            }
            X.push_front(L);
        } else if (total <= 0.95 * d_be) {
            // Too short: leave the gap to accumulate into the next candidate.
        } else {
            // Too long: place interior cuts at spacing d_be from the right,
            // each snapped to the lowest sample within +-l_hy.
            const std::size_t R = X.front();
            const auto pieces = static_cast<long>(std::ceil(total / d_be));
            std::size_t prev = R;
            for (long k = 1; k <= pieces - 1; ++k) {
                const double nominal = static_cast<double>(R) - static_cast<double>(k) * d_be;
                long wlo = static_cast<long>(std::ceil(nominal - p.l_hy));
                long whi = static_cast<long>(std::floor(nominal + p.l_hy));
                wlo = std::max(wlo, static_cast<long>(L) + 1);
                whi = std::min(whi, static_cast<long>(prev) - 1);
                if (wlo > whi) break;
                const std::size_t snapped = argmin_window(wlo, whi);
                if (!gate_pass(snapped, prev)) {
                    stopped = true;
                    break;
                }
                X.push_front(snapped);
                prev = snapped;
            }
            if (stopped) break;
        }
        --pp;
    }

    // Phase 2: step by the running mean length until within d_be of the start.
    while (!stopped && static_cast<double>(X.front()) >= d_be) {
        d_be = mean_len();
        const double nominal = static_cast<double>(X.front()) - d_be;
        long wlo = static_cast<long>(std::ceil(nominal - p.l_hy));
        long whi = static_cast<long>(std::floor(nominal + p.l_hy));
        wlo = std::max(wlo, 0L);
        whi = std::min(whi, static_cast<long>(X.front()) - 1);
        if (wlo > whi) break;
        const std::size_t snapped = argmin_window(wlo, whi);
        if (!gate_pass(snapped, X.front())) break;
        X.push_front(snapped);
    }

    std::vector<std::size_t> added(X.begin(), X.end() - 2);
    return added;
}

/// Rightward extension: reflect, extend left, reflect back. Window-argmin
/// ties therefore resolve toward the later sample, mirroring the left walk.
inline std::vector<std::size_t> extend_core_right(const std::vector<double>& v,
                                                  const std::vector<std::size_t>& cuts,
                                                  std::size_t best_lo, std::size_t best_hi,
                                                  const HyperParams& p, double seed_len) {
    const std::size_t n = v.size();
    std::vector<double> rv(v.rbegin(), v.rend());
    std::vector<std::size_t> rcuts;
    rcuts.reserve(cuts.size());
    for (auto it = cuts.rbegin(); it != cuts.rend(); ++it) rcuts.push_back(n - 1 - *it);
    auto radded = extend_core(rv, rcuts, n - 1 - best_hi, n - 1 - best_lo, p, seed_len);
    std::vector<std::size_t> added;
    added.reserve(radded.size());
    for (auto it = radded.rbegin(); it != radded.rend(); ++it) added.push_back(n - 1 - *it);
    return added;
}

inline Segmentation assemble_segmentation(const Signal& raw,
                                          const std::vector<std::size_t>& cut_indices,
                                          const HyperParams& params);

}  // namespace detail

/// Distance-based self-consistency score: for each adjacent cycle pair, the
/// best shifted alignment of the first window against the second, summed.
inline double segmentation_score(const Signal& raw, const Segmentation& seg,
                                 double shift_radius) {
    if (seg.cut_positions.size() < 3)
        throw TooFewCycles("segmentation_score: need at least 2 cycles");
    detail::require_unit_spaced(raw, "segmentation_score");
    const double p0 = raw.positions.front();
    const auto last = static_cast<long>(raw.size()) - 1;

    // Window of absolute positions [a, b], clipped to the signal extent.
    const auto window = [&](double a, double b) {
        Signal w;
        long lo = static_cast<long>(std::ceil(a - p0));
        long hi = static_cast<long>(std::floor(b - p0));
        lo = std::max(lo, 0L);
        hi = std::min(hi, last);
        if (lo <= hi)
            w = detail::slice_by_index(raw, static_cast<std::size_t>(lo),
                                       static_cast<std::size_t>(hi));
        return w;
    };

    double total = 0;
    for (std::size_t i = 0; i + 2 < seg.cut_positions.size(); ++i) {
        const double x0 = seg.cut_positions[i];
        const double x1 = seg.cut_positions[i + 1];
        const double x2 = seg.cut_positions[i + 2];
        const Signal fixed = window(x1, x2);
        if (fixed.empty()) continue;
        const double half = (x2 - x0) / 2.0;
        const auto nlo = static_cast<long>(std::ceil(half - shift_radius));
        const auto nhi = static_cast<long>(std::floor(half + shift_radius));
        double best = std::numeric_limits<double>::infinity();
        for (long n = nlo; n <= nhi; ++n) {
            const Signal shifted = window(x0 + static_cast<double>(n), x1 + static_cast<double>(n));
            if (shifted.empty()) continue;
            best = std::min(best, signal_distance(shifted, fixed));
        }
        if (std::isfinite(best)) total += best;
    }
    return total;
}

/// Full pipeline: pre-cuts, angle filter, best cycle, extension both ways.
inline Segmentation segment(const Signal& raw, const HyperParams& params) {
    params.validate();
    detail::require_unit_spaced(raw, "segment");
    const PeakSet peaks = precut(raw);
    const FinerCuts fc = finer_cuts(peaks, 0.5);
    const auto search = detail::best_cycle_search(fc, raw, params.d_hy);

    std::vector<std::size_t> cut_idx;
    cut_idx.reserve(search.cuts.size());
    for (double pos : search.cuts.positions)
        cut_idx.push_back(detail::position_index(raw, pos, "segment"));
    const std::size_t blo = cut_idx[search.cut_index];
    const std::size_t bhi = cut_idx[search.cut_index + 1];

    const auto left =
        detail::extend_core(raw.values, cut_idx, blo, bhi, params, search.best.length);
    const auto right =
        detail::extend_core_right(raw.values, cut_idx, blo, bhi, params, search.best.length);

    std::vector<std::size_t> all;
    all.reserve(left.size() + right.size() + 2);
    all.insert(all.end(), left.begin(), left.end());
    all.push_back(blo);
    all.push_back(bhi);
    all.insert(all.end(), right.begin(), right.end());
    return detail::assemble_segmentation(raw, all, params);
}

namespace detail {

inline Segmentation assemble_segmentation(const Signal& raw,
                                          const std::vector<std::size_t>& cut_indices,
                                          const HyperParams& params) {
    Segmentation seg;
    seg.params = params;
    seg.cut_positions.reserve(cut_indices.size());
    for (std::size_t idx : cut_indices) seg.cut_positions.push_back(raw.positions[idx]);
    seg.cycles.reserve(cut_indices.size() - 1);
    for (std::size_t i = 0; i + 1 < cut_indices.size(); ++i)
        seg.cycles.push_back(
            rebase_to_one(slice_by_index(raw, cut_indices[i], cut_indices[i + 1])));
    if (seg.cycles.size() >= 2) seg.score = segmentation_score(raw, seg, params.shift_radius);
    return seg;
}

}  // namespace detail

/// Left half of the extension as a partial segmentation: accepted left cuts
/// followed by the seed cycle's own cut pair. Score is not meaningful here.
inline Segmentation extend_left(const BestCycle& best, const FinerCuts& cuts, const Signal& raw,
                                const HyperParams& params) {
    params.validate();
    detail::require_unit_spaced(raw, "extend_left");
    std::vector<std::size_t> cut_idx;
    cut_idx.reserve(cuts.size());
    for (double pos : cuts.positions)
        cut_idx.push_back(detail::position_index(raw, pos, "extend_left"));
    const std::size_t blo = detail::position_index(raw, best.start, "extend_left");
    const std::size_t bhi = detail::position_index(raw, best.end, "extend_left");
    auto added = detail::extend_core(raw.values, cut_idx, blo, bhi, params, best.length);
    added.push_back(blo);
    added.push_back(bhi);
    Segmentation seg = detail::assemble_segmentation(raw, added, params);
    seg.score = std::numeric_limits<double>::quiet_NaN();
    return seg;
}

/// Mirror image of extend_left: the seed cycle's cuts, then accepted right cuts.
inline Segmentation extend_right(const BestCycle& best, const FinerCuts& cuts, const Signal& raw,
                                 const HyperParams& params) {
    params.validate();
    detail::require_unit_spaced(raw, "extend_right");
    std::vector<std::size_t> cut_idx;
    cut_idx.reserve(cuts.size());
    for (double pos : cuts.positions)
        cut_idx.push_back(detail::position_index(raw, pos, "extend_right"));
    const std::size_t blo = detail::position_index(raw, best.start, "extend_right");
    const std::size_t bhi = detail::position_index(raw, best.end, "extend_right");
    auto added = detail::extend_core_right(raw.values, cut_idx, blo, bhi, params, best.length);
    std::vector<std::size_t> all{blo, bhi};
    all.insert(all.end(), added.begin(), added.end());
    Segmentation seg = detail::assemble_segmentation(raw, all, params);
    seg.score = std::numeric_limits<double>::quiet_NaN();
    return seg;
}

/// Exhaustive grid search minimizing the segmentation score. Ties break to
/// smaller d_hy, then smaller l_hy, then larger beta_hy.
inline std::pair<HyperParams, Segmentation> tune(const Signal& raw, const TuneGrid& grid) {
    if (grid.d_hy.empty() || grid.beta_hy.empty() || grid.l_hy.empty())
        throw AllCandidatesFailed("tune: empty grid");
    bool have = false;
    double best_score = std::numeric_limits<double>::infinity();
    HyperParams best_params;
    Segmentation best_seg;
    for (double d : grid.d_hy) {
        for (double l : grid.l_hy) {
            for (double beta : grid.beta_hy) {
                const HyperParams p{d, beta, l, grid.shift_radius};
                Segmentation s;
                try {
                    s = segment(raw, p);
                } catch (const Error&) {
                    continue;
                }
                if (s.cycles.size() < 2 || !std::isfinite(s.score)) continue;
                const bool better =
                    !have || s.score < best_score ||
                    (s.score == best_score &&
                     (d < best_params.d_hy ||
                      (d == best_params.d_hy &&
                       (l < best_params.l_hy ||
                        (l == best_params.l_hy && beta > best_params.beta_hy)))));
                if (better) {
                    have = true;
                    best_score = s.score;
                    best_params = p;
                    best_seg = std::move(s);
                }
            }
        }
    }
    if (!have) throw AllCandidatesFailed("tune: every grid point failed to segment");
    return {best_params, std::move(best_seg)};
}

/// Repeatedly segment the uncovered spans (similarity-gated mode), collecting
/// one segmentation per region that yields at least 2 cycles.
inline std::vector<Segmentation> iterative_segment(const Signal& raw, const HyperParams& params) {
    params.validate();
    if (!(params.beta_hy > 0)) throw Error("iterative_segment: requires beta_hy > 0");
    detail::require_unit_spaced(raw, "iterative_segment");

    std::vector<Segmentation> out;
    std::deque<std::pair<std::size_t, std::size_t>> work{{0, raw.size() - 1}};
    while (!work.empty()) {
        const auto [lo, hi] = work.front();
        work.pop_front();
        if (hi - lo + 1 < 4) continue;
        const Signal piece = detail::slice_by_index(raw, lo, hi);
        Segmentation s;
        try {
            s = segment(piece, params);
        } catch (const Error&) {
            continue;
        }
        if (s.cycles.size() < 2) continue;
        const std::size_t first_cut =
            lo + detail::position_index(piece, s.cut_positions.front(), "iterative_segment");
        const std::size_t last_cut =
            lo + detail::position_index(piece, s.cut_positions.back(), "iterative_segment");
        out.push_back(std::move(s));
        if (first_cut >= lo + 2) work.push_back({lo, first_cut - 1});
        if (last_cut + 2 <= hi) work.push_back({last_cut + 1, hi});
    }
    std::sort(out.begin(), out.end(), [](const Segmentation& a, const Segmentation& b) {
        return a.cut_positions.front() < b.cut_positions.front();
    });
    return out;
}

/// Slice another channel of the same recording by this segmentation's cuts.
inline std::vector<Signal> apply_cuts(const Signal& other, const Segmentation& seg) {
    detail::require_unit_spaced(other, "apply_cuts");
    if (seg.cut_positions.size() < 2) throw GridMismatch("apply_cuts: fewer than 2 cuts");
    std::vector<std::size_t> idx;
    idx.reserve(seg.cut_positions.size());
    for (double pos : seg.cut_positions) {
        if (pos < other.positions.front() || pos > other.positions.back())
            throw GridMismatch("apply_cuts: cut position " + std::to_string(pos) +
                               " outside the target signal");
        idx.push_back(detail::position_index(other, pos, "apply_cuts"));
    }
    std::vector<Signal> cycles;
    cycles.reserve(idx.size() - 1);
    for (std::size_t i = 0; i + 1 < idx.size(); ++i)
        cycles.push_back(detail::rebase_to_one(detail::slice_by_index(other, idx[i], idx[i + 1])));
    return cycles;
}

}  // namespace gait
