#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gait/gait.hpp"

namespace fs = std::filesystem;

namespace {

std::string dataset_root_or_die(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("GAIT_DATASET_ROOT"); env && *env) return env;
    throw gait::DatasetMissing(
        "no dataset root: pass --dataset-root or set GAIT_DATASET_ROOT.\n"
        "The HAPT dataset (Smartphone-Based Recognition of Human Activities and Postural\n"
        "Transitions) is a free download; see README.md for instructions. The root must\n"
        "contain RawData/labels.txt and the acc_/gyro_ files.");
}

gait::ActivityMode parse_activity(const std::string& s) {
    if (s == "walking") return gait::ActivityMode::walking;
    if (s == "up") return gait::ActivityMode::up;
    if (s == "down") return gait::ActivityMode::down;
    if (s == "mixed") return gait::ActivityMode::mixed;
    throw gait::Error("unknown activity '" + s + "' (walking, up, down, mixed)");
}

// Key-value config file; unknown keys are an error so typos surface.
std::map<std::string, std::string> read_config_file(const fs::path& path) {
    const std::string text = gait::detail::read_text_file(path);
    std::map<std::string, std::string> kv;
    gait::detail::for_each_line(text, [&](const std::vector<std::string_view>& toks,
                                          std::size_t line_no) {
        if (toks[0].front() == '#') return;
        if (toks.size() < 2)
            throw gait::ParseError(path.string() + ":" + std::to_string(line_no) +
                                   ": expected 'key value'");
        std::string val(toks[1]);
        for (std::size_t i = 2; i < toks.size(); ++i) val += " " + std::string(toks[i]);
        kv[std::string(toks[0])] = val;
    });
    return kv;
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        const std::string tok = s.substr(pos, comma - pos);
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw gait::Error(std::string(what) + ": bad number '" + tok + "'");
        }
        pos = comma + 1;
    }
    if (out.empty()) throw gait::Error(std::string(what) + ": empty list");
    return out;
}

void print_segmentation_stats(const gait::Segmentation& seg) {
    const std::size_t m = seg.cycles.size();
    const double span = seg.cut_positions.back() - seg.cut_positions.front();
    std::printf("cycles %zu\n", m);
    std::printf("mean_cycle_length %s\n",
                gait::format_metric(span / static_cast<double>(m)).c_str());
    std::printf("score %s\n",
                std::isfinite(seg.score) ? gait::format_metric(seg.score).c_str() : "n/a");
}

struct SegmentArgs {
    std::string signal_file;
    std::string dataset_root;
    int exp = 0, user = 0;
    std::string activity = "walking";
    std::size_t period = 0;
    std::optional<double> d_hy, beta_hy, l_hy;
    bool force_grid = false, half = false;
    std::string grid_d, grid_l, grid_beta;
    double shift_radius = 5;
    std::string out;
};

int cmd_segment(const SegmentArgs& a) {
    gait::Signal raw;
    if (!a.signal_file.empty()) {
        raw = gait::load_signal_file(a.signal_file);
    } else {
        const fs::path root = dataset_root_or_die(a.dataset_root);
        const auto labels = gait::gait_periods(gait::load_labels(gait::labels_path(root)));
        const int code = a.activity == "walking" ? 1 : a.activity == "up" ? 2 : 3;
        std::vector<gait::ActivityPeriod> matching;
        for (const auto& p : labels)
            if (p.experiment_id == a.exp && p.user_id == a.user && p.activity_code == code)
                matching.push_back(p);
        if (a.period >= matching.size())
            throw gait::OutOfRange("period index " + std::to_string(a.period) + ": only " +
                                   std::to_string(matching.size()) + " matching periods");
        raw = gait::extract_period(root, matching[a.period]).acc[0];
    }

    gait::Segmentation seg;
    const bool explicit_params = a.d_hy.has_value() && !a.force_grid;
    if (explicit_params) {
        gait::HyperParams p;
        p.d_hy = *a.d_hy;
        if (a.beta_hy) p.beta_hy = *a.beta_hy;
        if (a.l_hy) p.l_hy = *a.l_hy;
        p.shift_radius = a.shift_radius;
        seg = gait::segment(raw, p);
        std::printf("params d_hy %s beta_hy %s l_hy %s\n", gait::format_exact(p.d_hy).c_str(),
                    gait::format_exact(p.beta_hy).c_str(), gait::format_exact(p.l_hy).c_str());
    } else {
        gait::TuneGrid grid;
        if (!a.grid_d.empty()) grid.d_hy = parse_double_list(a.grid_d, "--grid-d");
        if (!a.grid_l.empty()) grid.l_hy = parse_double_list(a.grid_l, "--grid-l");
        if (!a.grid_beta.empty()) grid.beta_hy = parse_double_list(a.grid_beta, "--grid-beta");
        grid.shift_radius = a.shift_radius;
        if (a.half)
            for (double& d : grid.d_hy) d /= 2;
        auto [p, s] = gait::tune(raw, grid);
        seg = std::move(s);
        std::printf("tuned d_hy %s beta_hy %s l_hy %s\n", gait::format_exact(p.d_hy).c_str(),
                    gait::format_exact(p.beta_hy).c_str(), gait::format_exact(p.l_hy).c_str());
    }
    print_segmentation_stats(seg);

    if (!a.out.empty()) {
        gait::save_cuts(a.out + ".cuts.tsv", seg);
        gait::save_cycles(a.out + ".cycles.tsv", seg.cycles);
        gait::save_overlay(a.out + ".overlay.tsv", raw, seg);
        std::printf("wrote %s.cuts.tsv %s.cycles.tsv %s.overlay.tsv\n", a.out.c_str(),
                    a.out.c_str(), a.out.c_str());
    }
    return 0;
}

struct TrainArgs {
    std::string cycles_file;
    int person = 0;
    std::string channel_tag = "acc_x";
    double rho = 0.1;
    std::string out;
};

int cmd_train(const TrainArgs& a) {
    const auto cycles = gait::load_cycles_file(a.cycles_file);
    gait::ArchetypeSet as = gait::cluster_archetypes(cycles, a.rho);
    as.person_id = a.person;
    as.channel_tag = a.channel_tag;
    gait::save_archetype_sets(a.out, {as});
    std::printf("person %d channel %s: %zu cycles -> %zu archetypes (rho %s)\n", a.person,
                a.channel_tag.c_str(), cycles.size(), as.archetypes.size(),
                gait::format_exact(a.rho).c_str());
    std::printf("wrote %s\n", a.out.c_str());
    return 0;
}

struct IdentifyArgs {
    std::vector<std::string> stores;
    std::vector<std::string> cycle_files;
    std::vector<std::string> cycle_tags;
    std::size_t axes = 1;
    std::optional<std::size_t> cycle_index;
};

gait::Signal pick_cycle(const std::string& path, std::optional<std::size_t> index) {
    std::vector<gait::Signal> cycles = gait::load_cycles_file(path);
    if (!index) {
        if (cycles.size() != 1)
            throw gait::Error("identify: " + path + " holds " + std::to_string(cycles.size()) +
                              " cycles; pass --cycle-index");
        return std::move(cycles[0]);
    }
    if (*index >= cycles.size())
        throw gait::OutOfRange("identify: cycle index " + std::to_string(*index) +
                               " out of range (" + std::to_string(cycles.size()) + " cycles)");
    return std::move(cycles[*index]);
}

int cmd_identify(const IdentifyArgs& a) {
    std::vector<gait::ArchetypeSet> sets;
    for (const auto& path : a.stores) {
        auto loaded = gait::load_archetype_sets(path);
        sets.insert(sets.end(), std::make_move_iterator(loaded.begin()),
                    std::make_move_iterator(loaded.end()));
    }
    if (sets.empty()) throw gait::EmptyCandidates("identify: stores hold no archetype sets");
    if (a.cycle_files.size() != a.axes)
        throw gait::Error("identify: --axes " + std::to_string(a.axes) + " needs " +
                          std::to_string(a.axes) + " --cycle files, got " +
                          std::to_string(a.cycle_files.size()));

    gait::ClassificationResult res;
    if (a.axes == 1) {
        res = gait::classify_cycle(pick_cycle(a.cycle_files[0], a.cycle_index), sets);
    } else {
        std::vector<std::string> tags = a.cycle_tags;
        if (tags.empty()) {
            // Infer axis tags from the stores' distinct channel tags.
            std::set<std::string> distinct;
            for (const auto& s : sets) distinct.insert(s.channel_tag);
            if (distinct.size() != a.axes)
                throw gait::AxisMismatch("identify: stores hold " +
                                         std::to_string(distinct.size()) +
                                         " channel tags, expected " + std::to_string(a.axes));
            tags.assign(distinct.begin(), distinct.end());
        }
        if (tags.size() != a.axes)
            throw gait::AxisMismatch("identify: need one --cycle-tag per axis");
        std::map<std::string, gait::Signal> cycles_by_axis;
        std::map<std::string, std::vector<gait::ArchetypeSet>> sets_by_axis;
        for (std::size_t i = 0; i < a.axes; ++i)
            cycles_by_axis[tags[i]] = pick_cycle(a.cycle_files[i], a.cycle_index);
        for (auto& s : sets) sets_by_axis[s.channel_tag].push_back(std::move(s));
        for (const auto& tag : tags)
            if (!sets_by_axis.count(tag))
                throw gait::AxisMismatch("identify: no archetypes for axis " + tag);
        res = gait::classify_cycle_multiaxis(cycles_by_axis, sets_by_axis);
    }

    std::printf("predicted %d (distance %s)\n", res.predicted_id,
                gait::format_metric(res.best_distance).c_str());
    for (std::size_t i = 0; i < res.candidate_ids.size(); ++i)
        std::printf("candidate %d distance %s\n", res.candidate_ids[i],
                    gait::format_metric(res.candidate_distances[i]).c_str());
    return 0;
}

struct EvaluateArgs {
    std::string config_file;
    std::string dataset_root;
    std::string activity = "walking";
    std::string channels = "x";
    std::string sensor = "acc";
    std::size_t classes = 6;
    bool binary = false;
    std::size_t reps = 20;
    double rho = 0.1;
    double train_fraction = 0.8;
    std::string grid_d, grid_l, grid_beta;
    bool half = false;
    std::uint64_t seed = 1;
    std::size_t jobs = 0;
    std::string out;
    bool quiet = false;
};

int cmd_evaluate(EvaluateArgs a, const CLI::App* cmd) {
    if (!a.config_file.empty()) {
        // Flags win over config-file values: only keys whose flag was not
        // given on the command line are applied.
        const auto kv = read_config_file(a.config_file);
        const auto given = [&](const std::string& flag) { return cmd->count(flag) > 0; };
        for (const auto& [key, val] : kv) {
            if (key == "dataset_root") {
                if (!given("--dataset-root")) a.dataset_root = val;
            } else if (key == "activity") {
                if (!given("--activity")) a.activity = val;
            } else if (key == "channels") {
                if (!given("--channels")) a.channels = val;
            } else if (key == "sensor") {
                if (!given("--sensor")) a.sensor = val;
            } else if (key == "classes") {
                if (!given("--classes")) a.classes = std::stoul(val);
            } else if (key == "binary") {
                if (!given("--binary")) a.binary = (val == "yes" || val == "true" || val == "1");
            } else if (key == "reps") {
                if (!given("--reps")) a.reps = std::stoul(val);
            } else if (key == "rho") {
                if (!given("--rho")) a.rho = std::stod(val);
            } else if (key == "train_fraction") {
                if (!given("--train-fraction")) a.train_fraction = std::stod(val);
            } else if (key == "grid_d") {
                if (!given("--grid-d")) a.grid_d = val;
            } else if (key == "grid_l") {
                if (!given("--grid-l")) a.grid_l = val;
            } else if (key == "grid_beta") {
                if (!given("--grid-beta")) a.grid_beta = val;
            } else if (key == "half") {
                if (!given("--half")) a.half = (val == "yes" || val == "true" || val == "1");
            } else if (key == "seed") {
                if (!given("--seed")) a.seed = std::stoull(val);
            } else if (key == "jobs") {
                if (!given("--jobs")) a.jobs = std::stoul(val);
            } else if (key == "out") {
                if (!given("--out")) a.out = val;
            } else {
                throw gait::Error("config: unknown key '" + key + "'");
            }
        }
    }

    gait::ExperimentConfig cfg;
    cfg.activity = parse_activity(a.activity);
    if (a.sensor == "acc")
        cfg.sensor = gait::SensorKind::acc;
    else if (a.sensor == "gyro")
        cfg.sensor = gait::SensorKind::gyro;
    else
        throw gait::Error("unknown sensor '" + a.sensor + "' (acc, gyro)");
    if (a.channels == "x")
        cfg.channels = gait::ChannelMode::x_only;
    else if (a.channels == "3axis")
        cfg.channels = gait::ChannelMode::three_axis;
    else
        throw gait::Error("unknown channels '" + a.channels + "' (x, 3axis)");
    cfg.n_classes = a.classes;
    cfg.binary = a.binary;
    cfg.repetitions = a.reps;
    cfg.rho = a.rho;
    cfg.train_fraction = a.train_fraction;
    cfg.seed = a.seed;
    cfg.jobs = a.jobs;
    if (!a.grid_d.empty()) cfg.grid.d_hy = parse_double_list(a.grid_d, "grid_d");
    if (!a.grid_l.empty()) cfg.grid.l_hy = parse_double_list(a.grid_l, "grid_l");
    if (!a.grid_beta.empty()) cfg.grid.beta_hy = parse_double_list(a.grid_beta, "grid_beta");
    if (a.half)
        for (double& d : cfg.grid.d_hy) d /= 2;

    const fs::path root = dataset_root_or_die(a.dataset_root);
    gait::ProgressFn progress;
    if (!a.quiet)
        progress = [](const std::string& msg) {
            std::fprintf(stderr, "%s\n", msg.c_str());
        };
    const gait::ExperimentReport report = gait::run_experiment(cfg, root, progress);

    std::fputs(gait::summary_table(report).c_str(), stdout);
    if (!a.out.empty()) {
        gait::save_report(a.out + ".report.txt", report);
        gait::save_confusions(a.out + ".confusion.tsv", report);
        std::printf("wrote %s.report.txt %s.confusion.tsv\n", a.out.c_str(), a.out.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gait-cycle segmentation, archetype clustering, and identification"};
    app.require_subcommand(1);

    SegmentArgs sa;
    auto* seg = app.add_subcommand("segment", "Segment a signal into gait cycles");
    seg->add_option("--signal", sa.signal_file, "signal file (1 or 2 columns)");
    seg->add_option("--dataset-root", sa.dataset_root, "HAPT dataset root");
    seg->add_option("--exp", sa.exp, "experiment id (dataset mode)");
    seg->add_option("--user", sa.user, "user id (dataset mode)");
    seg->add_option("--activity", sa.activity, "walking, up or down (dataset mode)");
    seg->add_option("--period", sa.period, "period index among matches (dataset mode)");
    double dv = 0, bv = 0, lv = 0;
    auto* od = seg->add_option("--d-hy", dv, "hypothesized cycle length");
    auto* ob = seg->add_option("--beta-hy", bv, "correlation gate (negative disables)");
    auto* ol = seg->add_option("--l-hy", lv, "snap window radius");
    seg->add_flag("--grid", sa.force_grid, "tune over the grid even if --d-hy is given");
    seg->add_flag("--half", sa.half, "halve the d grid (half-cycle mode)");
    seg->add_option("--grid-d", sa.grid_d, "comma list of d_hy grid values");
    seg->add_option("--grid-l", sa.grid_l, "comma list of l_hy grid values");
    seg->add_option("--grid-beta", sa.grid_beta, "comma list of beta_hy grid values");
    seg->add_option("--shift-radius", sa.shift_radius, "score alignment radius");
    seg->add_option("--out", sa.out, "output path prefix");
    std::uint64_t seed_unused = 1;
    seg->add_option("--seed", seed_unused, "accepted for interface uniformity");

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Cluster cycles into an archetype store");
    train->add_option("--cycles", ta.cycles_file, "cycles TSV (from segment --out)")->required();
    train->add_option("--person", ta.person, "person id")->required();
    train->add_option("--channel", ta.channel_tag, "channel tag recorded in the store");
    train->add_option("--rho", ta.rho, "clustering threshold");
    train->add_option("--out", ta.out, "store file to write")->required();
    train->add_option("--seed", seed_unused, "accepted for interface uniformity");

    IdentifyArgs ia;
    auto* ident = app.add_subcommand("identify", "Classify a cycle against stores");
    ident->add_option("--store", ia.stores, "archetype store file (repeatable)")->required();
    ident->add_option("--cycle", ia.cycle_files, "cycle TSV holding exactly 1 cycle (repeatable)")
        ->required();
    ident->add_option("--cycle-tag", ia.cycle_tags, "axis tag per --cycle (multiaxis)");
    ident->add_option("--axes", ia.axes, "number of axes (1 or 3)");
    std::size_t cyc_idx = 0;
    auto* oci = ident->add_option("--cycle-index", cyc_idx, "pick this cycle from each file");
    ident->add_option("--seed", seed_unused, "accepted for interface uniformity");

    EvaluateArgs ea;
    auto* eval = app.add_subcommand("evaluate", "Run a repeated-split experiment");
    eval->add_option("--config", ea.config_file, "key-value config file (flags win)");
    eval->add_option("--dataset-root", ea.dataset_root, "HAPT dataset root");
    eval->add_option("--activity", ea.activity, "walking, up, down or mixed");
    eval->add_option("--channels", ea.channels, "x or 3axis");
    eval->add_option("--sensor", ea.sensor, "acc or gyro");
    eval->add_option("--classes", ea.classes, "volunteers per repetition");
    eval->add_flag("--binary", ea.binary, "user-adversary authentication mode");
    eval->add_option("--reps", ea.reps, "repetitions");
    eval->add_option("--rho", ea.rho, "clustering threshold");
    eval->add_option("--train-fraction", ea.train_fraction, "training fraction");
    eval->add_option("--grid-d", ea.grid_d, "comma list of d_hy grid values");
    eval->add_option("--grid-l", ea.grid_l, "comma list of l_hy grid values");
    eval->add_option("--grid-beta", ea.grid_beta, "comma list of beta_hy grid values");
    eval->add_flag("--half", ea.half, "halve the d grid");
    eval->add_option("--seed", ea.seed, "random seed");
    eval->add_option("--jobs", ea.jobs, "worker threads (0 = all cores)");
    eval->add_option("--out", ea.out, "output path prefix");
    eval->add_flag("--quiet", ea.quiet, "suppress progress messages");

    CLI11_PARSE(app, argc, argv);

    try {
        if (seg->parsed()) {
            if (od->count()) sa.d_hy = dv;
            if (ob->count()) sa.beta_hy = bv;
            if (ol->count()) sa.l_hy = lv;
            return cmd_segment(sa);
        }
        if (train->parsed()) return cmd_train(ta);
        if (ident->parsed()) {
            if (oci->count()) ia.cycle_index = cyc_idx;
            return cmd_identify(ia);
        }
        if (eval->parsed()) return cmd_evaluate(ea, eval);
    } catch (const gait::DatasetMissing& e) {
        std::fprintf(stderr, "dataset error: %s\n", e.what());
        return 1;
    } catch (const gait::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
