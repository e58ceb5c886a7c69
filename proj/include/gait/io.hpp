#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gait/errors.hpp"
#include "gait/eval.hpp"
#include "gait/hapt.hpp"
#include "gait/identification.hpp"
#include "gait/segmentation.hpp"
#include "gait/signal.hpp"

namespace gait {

namespace detail {

inline std::string fmt_double(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

}  // namespace detail

/// 4 decimals, the precision used in all printed tables.
inline std::string format_metric(double v) { return detail::fmt_double("%.4f", v); }

/// Shortest round-trip-exact decimal form.
inline std::string format_exact(double v) { return detail::fmt_double("%.17g", v); }

// Signal files: one value per line (positions become 1..N) or two columns
// (position, value).
inline Signal load_signal_file(const std::filesystem::path& path,
                               Channel channel = Channel::acc_x) {
    const std::string text = detail::read_text_file(path);
    Signal s;
    s.channel = channel;
    std::size_t cols = 0;
    detail::for_each_line(text, [&](const std::vector<std::string_view>& toks,
                                    std::size_t line_no) {
        if (cols == 0) cols = toks.size();
        if (toks.size() != cols || cols > 2)
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected 1 or 2 columns throughout");
        if (cols == 1) {
            s.positions.push_back(static_cast<double>(s.size() + 1));
            s.values.push_back(detail::parse_double(toks[0], path, line_no));
        } else {
            s.positions.push_back(detail::parse_double(toks[0], path, line_no));
            s.values.push_back(detail::parse_double(toks[1], path, line_no));
        }
    });
    if (s.empty()) throw EmptyFile("no samples in " + path.string());
    return s;
}

inline void save_signal_file(const std::filesystem::path& path, const Signal& s) {
    std::string text;
    for (std::size_t i = 0; i < s.size(); ++i)
        text += format_exact(s.positions[i]) + "\t" + format_exact(s.values[i]) + "\n";
    detail::write_text_file(path, text);
}

// Archetype store: a self-describing text format holding any number of
// ArchetypeSets, exact to full double precision.
//
//   gait-archetype-store 1
//   sets <K>
//   set <person_id> <channel_tag> <rho> <n_archetypes>
//   arch <member_count> <n_samples>
//   <position> <value>          (n_samples rows)
inline void save_archetype_sets(const std::filesystem::path& path,
                                const std::vector<ArchetypeSet>& sets) {
    std::string text = "gait-archetype-store 1\n";
    text += "sets " + std::to_string(sets.size()) + "\n";
    for (const ArchetypeSet& as : sets) {
        text += "set " + std::to_string(as.person_id) + " " + as.channel_tag + " " +
                format_exact(as.rho) + " " + std::to_string(as.archetypes.size()) + "\n";
        for (std::size_t k = 0; k < as.archetypes.size(); ++k) {
            const Signal& a = as.archetypes[k];
            text += "arch " + std::to_string(as.member_counts[k]) + " " +
                    std::to_string(a.size()) + "\n";
            for (std::size_t i = 0; i < a.size(); ++i)
                text += format_exact(a.positions[i]) + " " + format_exact(a.values[i]) + "\n";
        }
    }
    detail::write_text_file(path, text);
}

inline std::vector<ArchetypeSet> load_archetype_sets(const std::filesystem::path& path) {
    const std::string text = detail::read_text_file(path);
    std::vector<std::vector<std::string_view>> rows;
    detail::for_each_line(text, [&](const std::vector<std::string_view>& toks, std::size_t) {
        rows.push_back(toks);
    });
    std::size_t r = 0;
    const auto fail = [&](const std::string& what) -> ParseError {
        return ParseError(path.string() + ": " + what + " (row " + std::to_string(r + 1) + ")");
    };
    if (rows.empty()) throw EmptyFile("empty archetype store " + path.string());
    if (rows[r].size() != 2 || rows[r][0] != "gait-archetype-store" || rows[r][1] != "1")
        throw fail("not a gait-archetype-store v1 header");
    ++r;
    if (r >= rows.size() || rows[r].size() != 2 || rows[r][0] != "sets")
        throw fail("missing sets count");
    const long nsets = detail::parse_int(rows[r][1], path, r + 1);
    ++r;
    std::vector<ArchetypeSet> sets;
    for (long si = 0; si < nsets; ++si) {
        if (r >= rows.size() || rows[r].size() != 5 || rows[r][0] != "set")
            throw fail("expected a set header");
        ArchetypeSet as;
        as.person_id = static_cast<int>(detail::parse_int(rows[r][1], path, r + 1));
        as.channel_tag = std::string(rows[r][2]);
        as.rho = detail::parse_double(rows[r][3], path, r + 1);
        const long narch = detail::parse_int(rows[r][4], path, r + 1);
        ++r;
        Channel ch = Channel::acc_x;
        try {
            ch = channel_from_name(as.channel_tag);
        } catch (const ParseError&) {
            // Free-form tags are allowed; cycles keep the default channel.
        }
        for (long k = 0; k < narch; ++k) {
            if (r >= rows.size() || rows[r].size() != 3 || rows[r][0] != "arch")
                throw fail("expected an archetype header");
            as.member_counts.push_back(
                static_cast<std::size_t>(detail::parse_int(rows[r][1], path, r + 1)));
            const long nsamp = detail::parse_int(rows[r][2], path, r + 1);
            ++r;
            Signal a;
            a.channel = ch;
            for (long i = 0; i < nsamp; ++i) {
                if (r >= rows.size() || rows[r].size() != 2) throw fail("expected a sample row");
                a.positions.push_back(detail::parse_double(rows[r][0], path, r + 1));
                a.values.push_back(detail::parse_double(rows[r][1], path, r + 1));
                ++r;
            }
            as.archetypes.push_back(std::move(a));
        }
        sets.push_back(std::move(as));
    }
    return sets;
}

// Segmentation exports: cut list, per-cycle samples, and a plot-ready overlay
// of the source signal with cut markers.
inline void save_cuts(const std::filesystem::path& path, const Segmentation& seg) {
    std::string text = "cut\tposition\n";
    for (std::size_t i = 0; i < seg.cut_positions.size(); ++i)
        text += std::to_string(i) + "\t" + format_exact(seg.cut_positions[i]) + "\n";
    detail::write_text_file(path, text);
}

inline void save_cycles(const std::filesystem::path& path, const std::vector<Signal>& cycles) {
    std::string text = "cycle\tposition\tvalue\n";
    for (std::size_t c = 0; c < cycles.size(); ++c)
        for (std::size_t i = 0; i < cycles[c].size(); ++i)
            text += std::to_string(c) + "\t" + format_exact(cycles[c].positions[i]) + "\t" +
                    format_exact(cycles[c].values[i]) + "\n";
    detail::write_text_file(path, text);
}

/// Read back a cycles TSV (cycle, position, value; header optional).
inline std::vector<Signal> load_cycles_file(const std::filesystem::path& path,
                                            Channel channel = Channel::acc_x) {
    const std::string text = detail::read_text_file(path);
    std::vector<Signal> cycles;
    long current = -1;
    bool first = true;
    detail::for_each_line(text, [&](const std::vector<std::string_view>& toks,
                                    std::size_t line_no) {
        if (first && !toks.empty() && toks[0] == "cycle") {
            first = false;
            return;
        }
        first = false;
        if (toks.size() != 3)
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected 3 columns (cycle, position, value)");
        const long id = detail::parse_int(toks[0], path, line_no);
        if (id != current) {
            if (id != current + 1)
                throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                 ": cycle ids must increase by 1");
            current = id;
            cycles.emplace_back();
            cycles.back().channel = channel;
        }
        cycles.back().positions.push_back(detail::parse_double(toks[1], path, line_no));
        cycles.back().values.push_back(detail::parse_double(toks[2], path, line_no));
    });
    if (cycles.empty()) throw EmptyFile("no cycles in " + path.string());
    return cycles;
}

inline void save_overlay(const std::filesystem::path& path, const Signal& raw,
                         const Segmentation& seg) {
    std::string text = "position\tvalue\tis_cut\n";
    std::size_t next = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        bool is_cut = false;
        while (next < seg.cut_positions.size() && seg.cut_positions[next] <= raw.positions[i]) {
            if (seg.cut_positions[next] == raw.positions[i]) is_cut = true;
            ++next;
        }
        text += format_exact(raw.positions[i]) + "\t" + format_exact(raw.values[i]) + "\t" +
                (is_cut ? "1" : "0") + "\n";
    }
    detail::write_text_file(path, text);
}

// Experiment report writers.
namespace detail {

inline std::string config_block(const ExperimentConfig& cfg) {
    std::string t;
    t += "activity " + std::string(activity_mode_name(cfg.activity)) + "\n";
    t += "sensor " + std::string(cfg.sensor == SensorKind::acc ? "acc" : "gyro") + "\n";
    t += "channels " + std::string(cfg.channels == ChannelMode::x_only ? "x" : "3axis") + "\n";
    t += "classes " + std::to_string(cfg.n_classes) + "\n";
    t += "binary " + std::string(cfg.binary ? "yes" : "no") + "\n";
    t += "repetitions " + std::to_string(cfg.repetitions) + "\n";
    t += "train_fraction " + format_exact(cfg.train_fraction) + "\n";
    t += "rho " + format_exact(cfg.rho) + "\n";
    t += "seed " + std::to_string(cfg.seed) + "\n";
    t += "grid_d";
    for (double d : cfg.grid.d_hy) t += " " + format_exact(d);
    t += "\ngrid_l";
    for (double l : cfg.grid.l_hy) t += " " + format_exact(l);
    t += "\ngrid_beta";
    for (double b : cfg.grid.beta_hy) t += " " + format_exact(b);
    t += "\n";
    if (cfg.activity == ActivityMode::mixed)
        t += "mixed_params d " + format_exact(cfg.mixed_params.d_hy) + " beta " +
             format_exact(cfg.mixed_params.beta_hy) + " l " +
             format_exact(cfg.mixed_params.l_hy) + "\n";
    return t;
}

}  // namespace detail

/// One-line Table-style summary: metric (standard error) columns.
inline std::string summary_table(const ExperimentReport& report) {
    std::string t = "ACC\tPPV\tTPR\tF1\n";
    t += format_metric(report.mean.acc) + " (" + format_metric(report.se.acc) + ")\t";
    t += format_metric(report.mean.ppv) + " (" + format_metric(report.se.ppv) + ")\t";
    t += format_metric(report.mean.tpr) + " (" + format_metric(report.se.tpr) + ")\t";
    t += format_metric(report.mean.f1) + " (" + format_metric(report.se.f1) + ")\n";
    return t;
}

/// Structured report: config echo, one record per repetition, aggregate block.
inline std::string render_report(const ExperimentReport& report) {
    std::string t = "gait-experiment-report 1\n";
    t += detail::config_block(report.config);
    t += "\n";
    for (const auto& rr : report.reps) {
        t += "repetition " + std::to_string(rr.rep) + (rr.valid ? "" : " INVALID") + "\n";
        t += "volunteers";
        for (int u : rr.volunteers) t += " " + std::to_string(u);
        t += "\n";
        if (rr.valid)
            t += "metrics ACC " + format_metric(rr.metrics.acc) + " PPV " +
                 format_metric(rr.metrics.ppv) + " TPR " + format_metric(rr.metrics.tpr) +
                 " F1 " + format_metric(rr.metrics.f1) + "\n";
        for (const auto& s : rr.skips) t += "skip " + s + "\n";
    }
    t += "\naggregate over " + std::to_string(report.valid_reps) + " valid repetitions\n";
    t += summary_table(report);
    return t;
}

/// All confusion matrices as delimited grids, one block per repetition.
inline std::string render_confusions(const ExperimentReport& report) {
    std::string t;
    for (const auto& rr : report.reps) {
        t += "# repetition " + std::to_string(rr.rep) + "\n";
        if (!rr.confusion.empty()) {
            if (report.config.binary) {
                t += "actual\\decision\taccept\treject";
            } else {
                t += "actual\\predicted";
                for (int u : rr.volunteers) t += "\t" + std::to_string(u);
            }
            t += "\n";
            for (std::size_t i = 0; i < rr.confusion.size(); ++i) {
                if (report.config.binary)
                    t += i == 0 ? "genuine" : "impostor";
                else
                    t += std::to_string(rr.volunteers[i]);
                for (std::size_t j = 0; j < rr.confusion[i].size(); ++j)
                    t += "\t" + std::to_string(rr.confusion[i][j]);
                t += "\n";
            }
        }
        t += "\n";
    }
    return t;
}

inline void save_report(const std::filesystem::path& path, const ExperimentReport& report) {
    detail::write_text_file(path, render_report(report));
}

inline void save_confusions(const std::filesystem::path& path, const ExperimentReport& report) {
    detail::write_text_file(path, render_confusions(report));
}

}  // namespace gait
