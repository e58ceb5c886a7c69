#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gait/errors.hpp"
#include "gait/hapt.hpp"
#include "gait/identification.hpp"
#include "gait/segmentation.hpp"
#include "gait/signal.hpp"

namespace gait {

enum class ActivityMode { walking, up, down, mixed };
enum class SensorKind { acc, gyro };
enum class ChannelMode { x_only, three_axis };

inline const char* activity_mode_name(ActivityMode m) {
    switch (m) {
        case ActivityMode::walking: return "walking";
        case ActivityMode::up: return "up";
        case ActivityMode::down: return "down";
        case ActivityMode::mixed: return "mixed";
    }
    return "?";
}

struct ExperimentConfig {
    ActivityMode activity = ActivityMode::walking;
    SensorKind sensor = SensorKind::acc;
    ChannelMode channels = ChannelMode::x_only;
    std::size_t n_classes = 6;
    bool binary = false;
    std::size_t repetitions = 20;
    double train_fraction = 0.8;
    double rho = 0.1;
    TuneGrid grid;                                // per-period tuning (non-mixed modes)
    HyperParams mixed_params{50, 0.7, 10, 5};     // iterative segmentation (mixed mode)
    std::uint64_t seed = 1;
    std::size_t jobs = 0;                         // 0 = hardware concurrency

    void validate() const {
        if (repetitions < 1) throw Error("config: repetitions must be >= 1");
        if (!(train_fraction > 0 && train_fraction < 1))
            throw Error("config: train fraction must be in (0, 1)");
        if (n_classes < 1) throw Error("config: n_classes must be >= 1");
        if (binary && n_classes < 2) throw Error("config: binary mode needs >= 2 classes");
        if (!(rho > 0)) throw Error("config: rho must be > 0");
        if (activity == ActivityMode::mixed) mixed_params.validate();
    }
};

struct Metrics {
    double acc = 0, ppv = 0, tpr = 0, f1 = 0;
};

struct RepetitionResult {
    std::size_t rep = 0;
    std::vector<int> volunteers;  // the drawn subset, ascending
    std::vector<std::vector<std::size_t>> confusion;
    Metrics metrics;
    std::vector<std::string> skips;
    bool valid = false;  // false when no test cycle could be classified
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<RepetitionResult> reps;
    Metrics mean;
    Metrics se;
    std::size_t valid_reps = 0;
};

// Deterministic seed derivation: platform-independent integer mixing.
namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t kSubsetSalt = 0x5u;
constexpr std::uint64_t kSplitSalt = 0x11u;
constexpr std::uint64_t kAdversarySalt = 0x17u;

}  // namespace detail

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return detail::splitmix64(a ^ detail::splitmix64(b));
}

/// Fisher-Yates permutation of 0..n-1 driven by a seeded mt19937_64.
inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 gen(seed);
    for (std::size_t i = n; i-- > 1;) {
        const auto j = static_cast<std::size_t>(gen() % (i + 1));
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

/// Shuffle, send the first ceil(fraction*n) to train, keep both sides
/// non-empty. Returned index lists are sorted back to chronological order.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double fraction, std::uint64_t seed) {
    if (n < 2) throw TooFewCycles("split: need >= 2 cycles");
    if (!(fraction > 0 && fraction < 1)) throw Error("split: fraction must be in (0, 1)");
    const auto idx = shuffled_indices(n, seed);
    auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    k = std::min(std::max<std::size_t>(k, 1), n - 1);
    std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

inline std::pair<std::vector<Signal>, std::vector<Signal>> split_cycles(
    const std::vector<Signal>& cycles, double fraction, std::uint64_t seed) {
    const auto [tr, te] = split_indices(cycles.size(), fraction, seed);
    std::pair<std::vector<Signal>, std::vector<Signal>> out;
    for (std::size_t i : tr) out.first.push_back(cycles[i]);
    for (std::size_t i : te) out.second.push_back(cycles[i]);
    return out;
}

/// Macro-averaged metrics; classes with a zero denominator contribute 0.
/// Rows are actual classes, columns predicted.
inline Metrics compute_metrics(const std::vector<std::vector<std::size_t>>& cm) {
    const std::size_t n = cm.size();
    if (n == 0) throw EmptyMatrix("compute_metrics: empty matrix");
    for (const auto& row : cm)
        if (row.size() != n) throw EmptyMatrix("compute_metrics: matrix not square");
    std::size_t total = 0, trace = 0;
    std::vector<std::size_t> rowsum(n, 0), colsum(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            total += cm[i][j];
            rowsum[i] += cm[i][j];
            colsum[j] += cm[i][j];
            if (i == j) trace += cm[i][j];
        }
    if (total == 0) throw EmptyMatrix("compute_metrics: all-zero matrix");
    Metrics m;
    m.acc = static_cast<double>(trace) / static_cast<double>(total);
    for (std::size_t c = 0; c < n; ++c) {
        const auto d = static_cast<double>(cm[c][c]);
        const double ppv = colsum[c] ? d / static_cast<double>(colsum[c]) : 0.0;
        const double tpr = rowsum[c] ? d / static_cast<double>(rowsum[c]) : 0.0;
        m.ppv += ppv;
        m.tpr += tpr;
        m.f1 += (ppv + tpr > 0) ? 2 * ppv * tpr / (ppv + tpr) : 0.0;
    }
    m.ppv /= static_cast<double>(n);
    m.tpr /= static_cast<double>(n);
    m.f1 /= static_cast<double>(n);
    return m;
}

namespace detail {

template <typename Fn>
inline void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min(jobs, n);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex emu;
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    const std::lock_guard<std::mutex> lk(emu);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline std::vector<std::string> channel_tags(const ExperimentConfig& cfg) {
    const bool acc = cfg.sensor == SensorKind::acc;
    if (cfg.channels == ChannelMode::x_only) return {acc ? "acc_x" : "gyr_x"};
    if (acc) return {"acc_x", "acc_y", "acc_z"};
    return {"gyr_x", "gyr_y", "gyr_z"};
}

inline const Signal& signal_for_tag(const TriAxialRecord& rec, const std::string& tag) {
    if (tag == "acc_x") return rec.acc[0];
    if (tag == "acc_y") return rec.acc[1];
    if (tag == "acc_z") return rec.acc[2];
    if (tag == "gyr_x") return rec.gyr[0];
    if (tag == "gyr_y") return rec.gyr[1];
    if (tag == "gyr_z") return rec.gyr[2];
    throw AxisMismatch("unknown channel tag " + tag);
}

struct VolunteerData {
    std::map<std::string, std::vector<Signal>> cycles;  // index-aligned across tags
    std::vector<std::string> skips;

    std::size_t cycle_count() const {
        return cycles.empty() ? 0 : cycles.begin()->second.size();
    }
};

inline std::string period_label(const ActivityPeriod& p) {
    return "exp" + std::to_string(p.experiment_id) + " user" + std::to_string(p.user_id) +
           " act" + std::to_string(p.activity_code) + " [" + std::to_string(p.start_sample) +
           ", " + std::to_string(p.end_sample) + "]";
}

/// Segment every period of one volunteer and slice all requested channels by
/// the x-axis accelerometer cuts. Period-level failures become skips.
inline VolunteerData build_volunteer(const ExperimentConfig& cfg,
                                     const std::filesystem::path& root,
                                     const std::vector<ActivityPeriod>& labels, int user) {
    VolunteerData out;
    const auto tags = channel_tags(cfg);
    for (const auto& tag : tags) out.cycles[tag];

    // Group this volunteer's relevant periods by experiment, in file order.
    const int want = cfg.activity == ActivityMode::walking ? 1
                     : cfg.activity == ActivityMode::up    ? 2
                     : cfg.activity == ActivityMode::down  ? 3
                                                           : 0;
    std::vector<std::pair<int, std::vector<ActivityPeriod>>> by_exp;
    for (const ActivityPeriod& p : labels) {
        if (p.user_id != user) continue;
        if (want ? p.activity_code != want : (p.activity_code < 1 || p.activity_code > 3))
            continue;
        if (by_exp.empty() || by_exp.back().first != p.experiment_id)
            by_exp.push_back({p.experiment_id, {}});
        by_exp.back().second.push_back(p);
    }

    if (cfg.activity != ActivityMode::mixed) {
        for (const auto& [exp, periods] : by_exp) {
            std::array<Signal, 3> acc, gyr;
            try {
                acc = load_raw_file(raw_file_path(root, "acc", exp, user), Channel::acc_x);
                gyr = load_raw_file(raw_file_path(root, "gyro", exp, user), Channel::gyr_x);
            } catch (const Error& e) {
                out.skips.push_back("exp" + std::to_string(exp) + " user" +
                                    std::to_string(user) + ": " + e.what());
                continue;
            }
            for (const ActivityPeriod& p : periods) {
                try {
                    const TriAxialRecord rec = extract_period(acc, gyr, p);
                    const Segmentation seg = tune(rec.acc[0], cfg.grid).second;
                    for (const auto& tag : tags) {
                        auto cut = apply_cuts(signal_for_tag(rec, tag), seg);
                        auto& dst = out.cycles[tag];
                        dst.insert(dst.end(), std::make_move_iterator(cut.begin()),
                                   std::make_move_iterator(cut.end()));
                    }
                } catch (const Error& e) {
                    out.skips.push_back(period_label(p) + ": " + e.what());
                }
            }
        }
        return out;
    }

    // Mixed mode: concatenate all gait periods into one recording per channel
    // and segment iteratively, letting the correlation gate stop at activity
    // boundaries; remainders re-enter the queue inside iterative_segment.
    std::map<std::string, Signal> concat;
    Signal concat_cut;  // x-axis accelerometer, always the cutting channel
    for (const auto& [exp, periods] : by_exp) {
        std::array<Signal, 3> acc, gyr;
        try {
            acc = load_raw_file(raw_file_path(root, "acc", exp, user), Channel::acc_x);
            gyr = load_raw_file(raw_file_path(root, "gyro", exp, user), Channel::gyr_x);
        } catch (const Error& e) {
            out.skips.push_back("exp" + std::to_string(exp) + " user" + std::to_string(user) +
                                ": " + e.what());
            continue;
        }
        for (const ActivityPeriod& p : periods) {
            try {
                const TriAxialRecord rec = extract_period(acc, gyr, p);
                const auto append = [](Signal& dst, const Signal& src) {
                    dst.channel = src.channel;
                    for (double v : src.values) {
                        dst.positions.push_back(static_cast<double>(dst.size() + 1));
                        dst.values.push_back(v);
                    }
                };
                append(concat_cut, rec.acc[0]);
                for (const auto& tag : tags) append(concat[tag], signal_for_tag(rec, tag));
            } catch (const Error& e) {
                out.skips.push_back(period_label(p) + ": " + e.what());
            }
        }
    }
    if (concat_cut.size() < 2) return out;
    std::vector<Segmentation> segs;
    try {
        segs = iterative_segment(concat_cut, cfg.mixed_params);
    } catch (const Error& e) {
        out.skips.push_back("user" + std::to_string(user) + " mixed segmentation: " + e.what());
        return out;
    }
    for (const Segmentation& seg : segs) {
        for (const auto& tag : tags) {
            auto cut = apply_cuts(concat.at(tag), seg);
            auto& dst = out.cycles[tag];
            dst.insert(dst.end(), std::make_move_iterator(cut.begin()),
                       std::make_move_iterator(cut.end()));
        }
    }
    return out;
}

}  // namespace detail

using ProgressFn = std::function<void(const std::string&)>;

/// Full repeated-split experiment on a HAPT-format dataset rooted at `root`.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                       const std::filesystem::path& root,
                                       const ProgressFn& progress = {}) {
    cfg.validate();
    const auto labels_file = labels_path(root);
    if (!std::filesystem::exists(labels_file))
        throw DatasetMissing("no labels file at " + labels_file.string());
    const std::vector<ActivityPeriod> labels = load_labels(labels_file);

    // Volunteer pool: users with at least one period of the requested kind.
    std::set<int> pool_set;
    for (const ActivityPeriod& p : labels) {
        const bool relevant = cfg.activity == ActivityMode::walking ? p.activity_code == 1
                              : cfg.activity == ActivityMode::up    ? p.activity_code == 2
                              : cfg.activity == ActivityMode::down  ? p.activity_code == 3
                                                                    : (p.activity_code >= 1 &&
                                                                       p.activity_code <= 3);
        if (relevant) pool_set.insert(p.user_id);
    }
    const std::vector<int> pool(pool_set.begin(), pool_set.end());
    if (cfg.n_classes > pool.size())
        throw Error("config: n_classes " + std::to_string(cfg.n_classes) + " exceeds the " +
                    std::to_string(pool.size()) + " available volunteers");

    // Draw every repetition's volunteer subset up front so only the union of
    // drawn volunteers is segmented.
    std::vector<std::vector<int>> subsets(cfg.repetitions);
    std::set<int> needed;
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        const auto perm = shuffled_indices(
            pool.size(), mix_seed(mix_seed(cfg.seed, rep), detail::kSubsetSalt));
        for (std::size_t i = 0; i < cfg.n_classes; ++i) subsets[rep].push_back(pool[perm[i]]);
        std::sort(subsets[rep].begin(), subsets[rep].end());
        needed.insert(subsets[rep].begin(), subsets[rep].end());
    }

    const std::vector<int> users(needed.begin(), needed.end());
    std::vector<detail::VolunteerData> built(users.size());
    std::mutex pmu;
    const auto note = [&](const std::string& msg) {
        if (!progress) return;
        const std::lock_guard<std::mutex> lk(pmu);
        progress(msg);
    };
    detail::parallel_for(users.size(), cfg.jobs, [&](std::size_t i) {
        built[i] = detail::build_volunteer(cfg, root, labels, users[i]);
        note("segmented volunteer " + std::to_string(users[i]) + " (" +
             std::to_string(built[i].cycle_count()) + " cycles)");
    });
    std::map<int, const detail::VolunteerData*> data;
    for (std::size_t i = 0; i < users.size(); ++i) data.emplace(users[i], &built[i]);

    const auto tags = detail::channel_tags(cfg);
    ExperimentReport report;
    report.config = cfg;
    report.reps.resize(cfg.repetitions);

    detail::parallel_for(cfg.repetitions, cfg.jobs, [&](std::size_t rep) {
        RepetitionResult& rr = report.reps[rep];
        rr.rep = rep;
        rr.volunteers = subsets[rep];
        const std::uint64_t rep_seed = mix_seed(cfg.seed, rep);
        const auto& subset = rr.volunteers;
        const std::size_t nsub = subset.size();

        // Split and cluster per volunteer and channel; collect test cycles.
        std::map<std::string, std::vector<ArchetypeSet>> arch_by_tag;
        std::map<int, std::map<std::string, std::vector<Signal>>> test_by_vol;
        for (int u : subset) {
            const detail::VolunteerData& vd = *data.at(u);
            rr.skips.insert(rr.skips.end(), vd.skips.begin(), vd.skips.end());
            const std::size_t n = vd.cycle_count();
            if (n < 2) {
                rr.skips.push_back("user" + std::to_string(u) +
                                   ": fewer than 2 cycles, excluded this repetition");
                continue;
            }
            const auto [tr, te] = split_indices(
                n, cfg.train_fraction,
                mix_seed(mix_seed(rep_seed, static_cast<std::uint64_t>(u)),
                         detail::kSplitSalt));
            for (const auto& tag : tags) {
                const auto& all = vd.cycles.at(tag);
                std::vector<Signal> train;
                train.reserve(tr.size());
                for (std::size_t i : tr) train.push_back(all[i]);
                ArchetypeSet as = cluster_archetypes(train, cfg.rho);
                as.person_id = u;
                as.channel_tag = tag;
                arch_by_tag[tag].push_back(std::move(as));
                auto& tv = test_by_vol[u][tag];
                tv.reserve(te.size());
                for (std::size_t i : te) tv.push_back(all[i]);
            }
        }

        if (test_by_vol.empty()) {
            rr.skips.push_back("no volunteer produced cycles; repetition dropped");
            return;
        }

        // Classify every test cycle once; predictions are claim-independent.
        std::map<int, std::vector<int>> predicted;  // volunteer -> per test cycle
        for (const auto& [u, by_tag] : test_by_vol) {
            const std::size_t ntest = by_tag.begin()->second.size();
            for (std::size_t t = 0; t < ntest; ++t) {
                ClassificationResult res;
                if (cfg.channels == ChannelMode::x_only) {
                    res = classify_cycle(by_tag.at(tags[0])[t], arch_by_tag.at(tags[0]));
                } else {
                    std::map<std::string, Signal> cycle_by_axis;
                    for (const auto& tag : tags) cycle_by_axis[tag] = by_tag.at(tag)[t];
                    res = classify_cycle_multiaxis(cycle_by_axis, arch_by_tag);
                }
                predicted[u].push_back(res.predicted_id);
            }
        }

        const auto subset_pos = [&](int id) {
            return static_cast<std::size_t>(
                std::lower_bound(subset.begin(), subset.end(), id) - subset.begin());
        };

        if (!cfg.binary) {
            rr.confusion.assign(nsub, std::vector<std::size_t>(nsub, 0));
            for (const auto& [u, preds] : predicted)
                for (int p : preds) ++rr.confusion[subset_pos(u)][subset_pos(p)];
        } else {
            // Authentication: rows = {genuine, impostor}, cols = {accept, reject}.
            // Per claimed user: all own test cycles, 2 drawn per adversary.
            rr.confusion.assign(2, std::vector<std::size_t>(2, 0));
            for (int u : subset) {
                if (!predicted.count(u)) continue;
                for (int p : predicted.at(u)) ++rr.confusion[0][p == u ? 0 : 1];
                for (int adv : subset) {
                    if (adv == u || !predicted.count(adv)) continue;
                    const auto& apreds = predicted.at(adv);
                    const auto perm = shuffled_indices(
                        apreds.size(),
                        mix_seed(mix_seed(mix_seed(rep_seed, static_cast<std::uint64_t>(u)),
                                          static_cast<std::uint64_t>(adv)),
                                 detail::kAdversarySalt));
                    const std::size_t take = std::min<std::size_t>(2, apreds.size());
                    for (std::size_t i = 0; i < take; ++i)
                        ++rr.confusion[1][apreds[perm[i]] == u ? 0 : 1];
                }
            }
        }

        try {
            rr.metrics = compute_metrics(rr.confusion);
            rr.valid = true;
        } catch (const EmptyMatrix&) {
            rr.skips.push_back("empty confusion matrix; repetition dropped");
        }
        note("repetition " + std::to_string(rep + 1) + "/" +
             std::to_string(cfg.repetitions) + " done");
    });

    // Aggregate in repetition order: mean and standard error over valid reps.
    std::vector<const Metrics*> vals;
    for (const auto& rr : report.reps)
        if (rr.valid) vals.push_back(&rr.metrics);
    report.valid_reps = vals.size();
    if (!vals.empty()) {
        const auto nv = static_cast<double>(vals.size());
        for (const Metrics* m : vals) {
            report.mean.acc += m->acc;
            report.mean.ppv += m->ppv;
            report.mean.tpr += m->tpr;
            report.mean.f1 += m->f1;
        }
        report.mean.acc /= nv;
        report.mean.ppv /= nv;
        report.mean.tpr /= nv;
        report.mean.f1 /= nv;
        if (vals.size() > 1) {
            Metrics ss;
            for (const Metrics* m : vals) {
                ss.acc += (m->acc - report.mean.acc) * (m->acc - report.mean.acc);
                ss.ppv += (m->ppv - report.mean.ppv) * (m->ppv - report.mean.ppv);
                ss.tpr += (m->tpr - report.mean.tpr) * (m->tpr - report.mean.tpr);
                ss.f1 += (m->f1 - report.mean.f1) * (m->f1 - report.mean.f1);
            }
            const double div = (nv - 1) * nv;
            report.se.acc = std::sqrt(ss.acc / div);
            report.se.ppv = std::sqrt(ss.ppv / div);
            report.se.tpr = std::sqrt(ss.tpr / div);
            report.se.f1 = std::sqrt(ss.f1 / div);
        }
    }
    return report;
}

}  // namespace gait
