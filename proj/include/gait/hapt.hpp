#pragma once

#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "gait/errors.hpp"
#include "gait/signal.hpp"

namespace gait {

/// One labeled activity span. Samples are 1-based and the end is inclusive,
/// following the dataset's labels.txt convention (50 Hz).
struct ActivityPeriod {
    int experiment_id = 0;
    int user_id = 0;
    int activity_code = 0;  // 1 walking, 2 walking upstairs, 3 walking downstairs
    std::size_t start_sample = 0;
    std::size_t end_sample = 0;
};

/// Six position-aligned channels sliced to one activity period.
struct TriAxialRecord {
    std::array<Signal, 3> acc;
    std::array<Signal, 3> gyr;
    ActivityPeriod source_period;
};

inline std::string raw_file_name(const char* sensor, int experiment_id, int user_id) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_exp%02d_user%02d.txt", sensor, experiment_id, user_id);
    return buf;
}

inline std::filesystem::path raw_file_path(const std::filesystem::path& root, const char* sensor,
                                           int experiment_id, int user_id) {
    return root / "RawData" / raw_file_name(sensor, experiment_id, user_id);
}

inline std::filesystem::path labels_path(const std::filesystem::path& root) {
    return root / "RawData" / "labels.txt";
}

namespace detail {

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetMissing("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

inline double parse_double(std::string_view tok, const std::filesystem::path& path,
                           std::size_t line_no) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                         std::string(tok) + "'");
    return v;
}

inline long parse_int(std::string_view tok, const std::filesystem::path& path,
                      std::size_t line_no) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad integer '" +
                         std::string(tok) + "'");
    return v;
}

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

/// Split one line into whitespace-separated tokens.
inline std::vector<std::string_view> tokenize(std::string_view line) {
    std::vector<std::string_view> toks;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_space(line[i])) ++i;
        std::size_t j = i;
        while (j < line.size() && !is_space(line[j])) ++j;
        if (j > i) toks.push_back(line.substr(i, j - i));
        i = j;
    }
    return toks;
}

template <typename RowFn>
inline void for_each_line(const std::string& text, RowFn&& fn) {
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        ++line_no;
        const std::string_view line(text.data() + pos, nl - pos);
        const auto toks = tokenize(line);
        if (!toks.empty()) fn(toks, line_no);
        pos = nl + 1;
    }
}

}  // namespace detail

/// Read a 3-column sensor file into x, y, z Signals with positions 1..N.
/// `first_channel` selects the channel tags (acc_x or gyr_x).
inline std::array<Signal, 3> load_raw_file(const std::filesystem::path& path,
                                           Channel first_channel = Channel::acc_x) {
    const std::string text = detail::read_text_file(path);
    std::array<Signal, 3> out;
    for (int a = 0; a < 3; ++a)
        out[a].channel = static_cast<Channel>(static_cast<int>(first_channel) + a);
    detail::for_each_line(text, [&](const std::vector<std::string_view>& toks,
                                    std::size_t line_no) {
        if (toks.size() != 3)
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 3 columns, got " +
                             std::to_string(toks.size()));
        const double pos = static_cast<double>(out[0].size() + 1);
        for (int a = 0; a < 3; ++a) {
            out[a].positions.push_back(pos);
            out[a].values.push_back(detail::parse_double(toks[a], path, line_no));
        }
    });
    if (out[0].empty()) throw EmptyFile("no samples in " + path.string());
    return out;
}

/// Parse labels.txt rows (experiment, user, activity, start, end). All
/// activity codes are kept; filter with gait_periods for codes 1..3.
inline std::vector<ActivityPeriod> load_labels(const std::filesystem::path& path) {
    const std::string text = detail::read_text_file(path);
    std::vector<ActivityPeriod> periods;
    detail::for_each_line(text, [&](const std::vector<std::string_view>& toks,
                                    std::size_t line_no) {
        if (toks.size() != 5)
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 5 columns, got " +
                             std::to_string(toks.size()));
        ActivityPeriod p;
        p.experiment_id = static_cast<int>(detail::parse_int(toks[0], path, line_no));
        p.user_id = static_cast<int>(detail::parse_int(toks[1], path, line_no));
        p.activity_code = static_cast<int>(detail::parse_int(toks[2], path, line_no));
        const long start = detail::parse_int(toks[3], path, line_no);
        const long end = detail::parse_int(toks[4], path, line_no);
        if (start < 1 || end <= start)
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": need 1 <= start < end");
        p.start_sample = static_cast<std::size_t>(start);
        p.end_sample = static_cast<std::size_t>(end);
        periods.push_back(p);
    });
    return periods;
}

/// Keep only the gait activities this pipeline studies.
inline std::vector<ActivityPeriod> gait_periods(const std::vector<ActivityPeriod>& all) {
    std::vector<ActivityPeriod> out;
    for (const ActivityPeriod& p : all)
        if (p.activity_code >= 1 && p.activity_code <= 3) out.push_back(p);
    return out;
}

/// Slice preloaded full-recording channels to one period, re-based to 1.
inline TriAxialRecord extract_period(const std::array<Signal, 3>& acc,
                                     const std::array<Signal, 3>& gyr,
                                     const ActivityPeriod& period) {
    const std::size_t n = acc[0].size();
    for (const auto* triple : {&acc, &gyr})
        for (const Signal& s : *triple)
            if (s.size() != n) throw GridMismatch("extract_period: channel lengths differ");
    if (period.start_sample < 1 || period.end_sample > n)
        throw OutOfRange("extract_period: period [" + std::to_string(period.start_sample) + ", " +
                         std::to_string(period.end_sample) + "] outside 1.." + std::to_string(n));
    TriAxialRecord rec;
    rec.source_period = period;
    const auto slice = [&](const Signal& s) {
        Signal out;
        out.channel = s.channel;
        const std::size_t lo = period.start_sample - 1, hi = period.end_sample - 1;
        out.values.assign(s.values.begin() + static_cast<std::ptrdiff_t>(lo),
                          s.values.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
        out.positions.resize(out.values.size());
        for (std::size_t i = 0; i < out.positions.size(); ++i)
            out.positions[i] = static_cast<double>(i + 1);
        return out;
    };
    for (int a = 0; a < 3; ++a) {
        rec.acc[a] = slice(acc[a]);
        rec.gyr[a] = slice(gyr[a]);
    }
    return rec;
}

/// Load the period's files from the dataset root and slice.
inline TriAxialRecord extract_period(const std::filesystem::path& root,
                                     const ActivityPeriod& period) {
    const auto acc = load_raw_file(raw_file_path(root, "acc", period.experiment_id, period.user_id),
                                   Channel::acc_x);
    const auto gyr = load_raw_file(raw_file_path(root, "gyro", period.experiment_id, period.user_id),
                                   Channel::gyr_x);
    return extract_period(acc, gyr, period);
}

}  // namespace gait
