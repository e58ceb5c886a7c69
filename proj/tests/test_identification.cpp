#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "gait/identification.hpp"
#include "gait/io.hpp"
#include "support/oracles.hpp"
#include "support/synthetic_hapt.hpp"
#include "support/waveforms.hpp"

using gait::ArchetypeSet;
using gait::ClassificationResult;
using gait::Signal;
using testsupport::from_values;
using testsupport::make_signal;

namespace {

ArchetypeSet person_with(int id, std::vector<Signal> archetypes) {
    ArchetypeSet p;
    p.person_id = id;
    p.archetypes = std::move(archetypes);
    p.member_counts.assign(p.archetypes.size(), 1);
    return p;
}

}  // namespace

TEST(Cluster, IdenticalCyclesCollapseToOneArchetype) {
    const Signal c = make_signal({1, 2, 3}, {0.5, -0.5, 1.0});
    const std::vector<Signal> cycles(7, c);
    const ArchetypeSet set = gait::cluster_archetypes(cycles, 0.1);
    ASSERT_EQ(set.size(), 1u);
    EXPECT_EQ(set.member_counts, (std::vector<std::size_t>{7}));
    EXPECT_NEAR(gait::signal_distance(set.archetypes[0], c), 0.0, 1e-12);
    EXPECT_EQ(set.rho, 0.1);
}

TEST(Cluster, FarCyclesStaySeparate) {
    std::vector<Signal> cycles;
    for (int k = 0; k < 4; ++k)
        cycles.push_back(make_signal({1, 2}, {10.0 * k, 10.0 * k}));
    const ArchetypeSet set = gait::cluster_archetypes(cycles, 0.5);
    ASSERT_EQ(set.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(set.member_counts[k], 1u);
        EXPECT_EQ(set.archetypes[k].values, cycles[k].values);
        EXPECT_EQ(set.archetypes[k].positions, cycles[k].positions);
    }
}

TEST(Cluster, NearPairAbsorbsAndAverages) {
    // A and B sit 0.1 apart (within rho), C is 2 away: two archetypes come
    // out, and the first is the running average of A and B.
    const Signal a = make_signal({1, 2}, {0.0, 0.0});
    const Signal b = make_signal({1, 2}, {0.05, 0.05});
    const Signal c = make_signal({1, 2}, {1.0, 1.0});
    ASSERT_NEAR(gait::signal_distance(a, b), 0.1, 1e-12);
    const ArchetypeSet set = gait::cluster_archetypes({a, b, c}, 0.15);
    ASSERT_EQ(set.size(), 2u);
    EXPECT_EQ(set.member_counts, (std::vector<std::size_t>{2, 1}));
    for (double v : set.archetypes[0].values) EXPECT_NEAR(v, 0.025, 1e-12);
    EXPECT_EQ(set.archetypes[1].values, c.values);
}

TEST(Cluster, DistanceIsTestedAgainstTheSeedNotTheRunningAverage) {
    // b is within rho of seed a; c is within rho of the a/b average but not
    // of a itself, so c must seed its own archetype.
    const Signal a = make_signal({1, 2}, {0.0, 0.0});
    const Signal b = make_signal({1, 2}, {0.1, 0.1});
    const Signal c = make_signal({1, 2}, {0.12, 0.12});
    const double rho = 0.2;
    ASSERT_LE(gait::signal_distance(a, b), rho);
    ASSERT_GT(gait::signal_distance(a, c), rho);
    ASSERT_LE(gait::signal_distance(gait::average_pair(a, b), c), rho);
    const ArchetypeSet set = gait::cluster_archetypes({a, b, c}, rho);
    EXPECT_EQ(set.member_counts, (std::vector<std::size_t>{2, 1}));
}

TEST(Cluster, MemberCountsSumToInputSize) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Signal> cycles;
        const std::size_t n = 1 + rng() % 12;
        for (std::size_t i = 0; i < n; ++i)
            cycles.push_back(testsupport::random_signal(rng, 3, 10));
        const ArchetypeSet set = gait::cluster_archetypes(cycles, 0.5 + (trial % 5) * 0.4);
        std::size_t total = 0;
        for (std::size_t m : set.member_counts) total += m;
        EXPECT_EQ(total, n);
        EXPECT_EQ(set.member_counts.size(), set.size());
    }
}

TEST(Cluster, MatchesEraseBasedSimulation) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<Signal> cycles;
        const std::size_t n = 1 + rng() % 10;
        // Unit-grid cycles of equal length keep distances comparable so rho
        // actually bites at mid scale.
        const std::size_t len = 4 + rng() % 5;
        std::uniform_real_distribution<double> val(-1.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> v(len);
            for (double& x : v) x = val(rng);
            cycles.push_back(from_values(std::move(v)));
        }
        const double rho = 0.3 + 2.7 * (trial % 10) / 10.0;
        const ArchetypeSet got = gait::cluster_archetypes(cycles, rho);
        const auto want = testsupport::simulate_clustering(cycles, rho);
        ASSERT_EQ(got.size(), want.archetypes.size()) << "trial " << trial;
        EXPECT_EQ(got.member_counts, want.member_counts);
        for (std::size_t k = 0; k < got.size(); ++k) {
            EXPECT_EQ(got.archetypes[k].positions, want.archetypes[k].positions);
            EXPECT_EQ(got.archetypes[k].values, want.archetypes[k].values);
        }
    }
}

TEST(Cluster, RhoLadderOnSeparatedTemplates) {
    // Three well-separated template shapes, each jittered into 12 cycles.
    // Tiny rho keeps every cycle; mid rho recovers the 3 templates; huge rho
    // folds everything into the first seed's archetype.
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> jitter(-1e-4, 1e-4);
    std::vector<Signal> cycles;
    for (int rep = 0; rep < 12; ++rep)
        for (int t = 0; t < 3; ++t) {
            std::vector<double> v(20);
            for (std::size_t i = 0; i < v.size(); ++i)
                v[i] = std::sin(2.0 * testsupport::kPi * (static_cast<double>(i) / 20.0) +
                                2.0 * t) +
                       2.0 * t + jitter(rng);
            cycles.push_back(from_values(std::move(v)));
        }
    EXPECT_EQ(gait::cluster_archetypes(cycles, 1e-6).size(), 36u);
    EXPECT_EQ(gait::cluster_archetypes(cycles, 1.0).size(), 3u);
    EXPECT_EQ(gait::cluster_archetypes(cycles, 100.0).size(), 1u);
}

TEST(Cluster, KeepsChannelTag) {
    Signal c = make_signal({1, 2}, {0, 1});
    c.channel = gait::Channel::gyr_z;
    EXPECT_EQ(gait::cluster_archetypes({c}, 0.1).channel_tag, "gyr_z");
}

TEST(Cluster, Errors) {
    EXPECT_THROW(gait::cluster_archetypes({}, 0.1), gait::EmptyInput);
    const Signal c = make_signal({1, 2}, {0, 1});
    EXPECT_THROW(gait::cluster_archetypes({c}, 0.0), gait::Error);
    EXPECT_THROW(gait::cluster_archetypes({c}, -1.0), gait::Error);
}

TEST(Classify, ExactArchetypeMatchWins) {
    const Signal probe = make_signal({1, 2, 3}, {1.0, 2.0, 3.0});
    const std::vector<ArchetypeSet> candidates = {
        person_with(5, {make_signal({1, 2, 3}, {9, 9, 9})}),
        person_with(3, {make_signal({1, 2, 3}, {1.0, 2.0, 3.0})}),
    };
    const ClassificationResult r = gait::classify_cycle(probe, candidates);
    EXPECT_EQ(r.predicted_id, 3);
    EXPECT_EQ(r.best_distance, 0.0);
    EXPECT_EQ(r.candidate_ids, (std::vector<int>{5, 3}));
    ASSERT_EQ(r.candidate_distances.size(), 2u);
    EXPECT_GT(r.candidate_distances[0], 0.0);
    EXPECT_EQ(r.candidate_distances[1], 0.0);
}

TEST(Classify, TiesGoToTheLowestId) {
    const Signal probe = make_signal({1, 2}, {0.0, 0.0});
    const Signal shared = make_signal({1, 2}, {1.0, 1.0});
    const std::vector<ArchetypeSet> candidates = {
        person_with(9, {shared}),
        person_with(4, {shared}),
        person_with(6, {shared}),
    };
    EXPECT_EQ(gait::classify_cycle(probe, candidates).predicted_id, 4);
}

TEST(Classify, SingleCandidateAlwaysWins) {
    const Signal probe = make_signal({1, 2}, {0.0, 0.0});
    const auto r =
        gait::classify_cycle(probe, {person_with(7, {make_signal({1, 2}, {5, 5})})});
    EXPECT_EQ(r.predicted_id, 7);
    EXPECT_NEAR(r.best_distance, 10.0, 1e-12);  // 4 merged points, gap 5 each
}

TEST(Classify, MatchesBruteForceScan) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<ArchetypeSet> candidates;
        const int n_people = 2 + static_cast<int>(rng() % 4);
        for (int id = 1; id <= n_people; ++id) {
            std::vector<Signal> archetypes;
            const std::size_t n_arch = 1 + rng() % 3;
            for (std::size_t a = 0; a < n_arch; ++a)
                archetypes.push_back(testsupport::random_signal(rng, 4, 12));
            candidates.push_back(person_with(id, std::move(archetypes)));
        }
        const Signal probe = testsupport::random_signal(rng, 4, 12);
        const auto r = gait::classify_cycle(probe, candidates);
        EXPECT_EQ(r.predicted_id, testsupport::brute_force_predict(probe, candidates));
        EXPECT_EQ(r.candidate_ids.size(), candidates.size());
    }
}

TEST(Classify, CandidateOrderDoesNotChangeTheWinner) {
    std::mt19937_64 rng(29);
    std::vector<ArchetypeSet> candidates;
    for (int id = 1; id <= 5; ++id)
        candidates.push_back(person_with(id, {testsupport::random_signal(rng, 4, 10)}));
    const Signal probe = testsupport::random_signal(rng, 4, 10);
    const auto fwd = gait::classify_cycle(probe, candidates);
    std::reverse(candidates.begin(), candidates.end());
    const auto rev = gait::classify_cycle(probe, candidates);
    EXPECT_EQ(fwd.predicted_id, rev.predicted_id);
    EXPECT_EQ(fwd.best_distance, rev.best_distance);
}

TEST(Classify, Errors) {
    const Signal probe = make_signal({1, 2}, {0, 0});
    EXPECT_THROW(gait::classify_cycle(probe, {}), gait::EmptyCandidates);
    ArchetypeSet hollow;
    hollow.person_id = 1;
    EXPECT_THROW(gait::classify_cycle(probe, {hollow}), gait::EmptyCandidates);
}

TEST(ClassifyMultiaxis, SingleAxisMatchesPlainClassify) {
    std::mt19937_64 rng(41);
    std::vector<ArchetypeSet> candidates;
    for (int id = 1; id <= 4; ++id)
        candidates.push_back(person_with(id, {testsupport::random_signal(rng, 4, 10)}));
    const Signal probe = testsupport::random_signal(rng, 4, 10);
    const auto plain = gait::classify_cycle(probe, candidates);
    const auto multi = gait::classify_cycle_multiaxis({{"acc_x", probe}},
                                                      {{"acc_x", candidates}});
    EXPECT_EQ(multi.predicted_id, plain.predicted_id);
    EXPECT_EQ(multi.best_distance, plain.best_distance);
}

TEST(ClassifyMultiaxis, PersonScoreIsTheMinimumOverAxes) {
    // Person 1 is moderately close on x; person 2 is nearly exact on y.
    const Signal probe_x = make_signal({1, 2}, {0.0, 0.0});
    const Signal probe_y = make_signal({1, 2}, {5.0, 5.0});
    const std::map<std::string, std::vector<ArchetypeSet>> candidates = {
        {"acc_x",
         {person_with(1, {make_signal({1, 2}, {0.1, 0.1})}),
          person_with(2, {make_signal({1, 2}, {3.0, 3.0})})}},
        {"acc_y",
         {person_with(1, {make_signal({1, 2}, {9.0, 9.0})}),
          person_with(2, {make_signal({1, 2}, {5.01, 5.01})})}},
    };
    const auto r = gait::classify_cycle_multiaxis({{"acc_x", probe_x}, {"acc_y", probe_y}},
                                                  candidates);
    EXPECT_EQ(r.predicted_id, 2);
    EXPECT_NEAR(r.best_distance, 0.02, 1e-9);
}

TEST(ClassifyMultiaxis, ExactMatchOnAnyAxisWins) {
    const Signal probe_y = make_signal({1, 2, 3}, {4.0, 5.0, 6.0});
    const std::map<std::string, std::vector<ArchetypeSet>> candidates = {
        {"acc_y",
         {person_with(8, {make_signal({1, 2, 3}, {0, 0, 0})}),
          person_with(5, {probe_y})}},
    };
    const auto r = gait::classify_cycle_multiaxis({{"acc_y", probe_y}}, candidates);
    EXPECT_EQ(r.predicted_id, 5);
    EXPECT_EQ(r.best_distance, 0.0);
}

TEST(ClassifyMultiaxis, AxisMismatchErrors) {
    const Signal probe = make_signal({1, 2}, {0, 0});
    const std::vector<ArchetypeSet> cands = {person_with(1, {probe})};
    EXPECT_THROW(gait::classify_cycle_multiaxis({}, {}), gait::AxisMismatch);
    EXPECT_THROW(gait::classify_cycle_multiaxis({{"acc_x", probe}},
                                                {{"acc_x", cands}, {"acc_y", cands}}),
                 gait::AxisMismatch);
    EXPECT_THROW(gait::classify_cycle_multiaxis({{"acc_y", probe}}, {{"acc_x", cands}}),
                 gait::AxisMismatch);
}

TEST(BinaryAuthenticate, AcceptsOwnerRejectsImpostor) {
    const Signal own = make_signal({1, 2, 3}, {1.0, 2.0, 1.0});
    const Signal other = make_signal({1, 2, 3}, {5.0, 6.0, 5.0});
    const std::vector<ArchetypeSet> candidates = {person_with(1, {own}),
                                                  person_with(2, {other})};
    Signal probe = own;
    probe.values[1] += 0.01;
    EXPECT_TRUE(gait::binary_authenticate(probe, 1, candidates));
    EXPECT_FALSE(gait::binary_authenticate(probe, 2, candidates));
}

TEST(BinaryAuthenticate, UnknownUserRejected) {
    const Signal c = make_signal({1, 2}, {0, 0});
    const std::vector<ArchetypeSet> candidates = {person_with(1, {c})};
    EXPECT_THROW(gait::binary_authenticate(c, 99, candidates), gait::UnknownUser);
    EXPECT_THROW(gait::binary_authenticate(c, 99, {}), gait::EmptyCandidates);
}

TEST(BinaryAuthenticate, MultiaxisVariant) {
    const Signal own_x = make_signal({1, 2}, {1.0, 1.0});
    const Signal other_x = make_signal({1, 2}, {4.0, 4.0});
    const std::map<std::string, std::vector<ArchetypeSet>> candidates = {
        {"acc_x", {person_with(1, {own_x}), person_with(2, {other_x})}},
    };
    EXPECT_TRUE(gait::binary_authenticate_multiaxis({{"acc_x", own_x}}, 1, candidates));
    EXPECT_FALSE(gait::binary_authenticate_multiaxis({{"acc_x", own_x}}, 2, candidates));
    EXPECT_THROW(gait::binary_authenticate_multiaxis({{"acc_x", own_x}}, 42, candidates),
                 gait::UnknownUser);
}

TEST(ArchetypeStore, RoundTripIsExact) {
    namespace fs = std::filesystem;
    const fs::path dir = testsupport::fresh_temp_dir("store");
    const fs::path file = dir / "people.archetypes";

    std::mt19937_64 rng(53);
    std::vector<ArchetypeSet> sets;
    for (int id : {3, 11}) {
        ArchetypeSet s = gait::cluster_archetypes(
            {testsupport::random_signal(rng, 4, 9), testsupport::random_signal(rng, 4, 9)},
            0.25);
        s.person_id = id;
        sets.push_back(std::move(s));
    }
    // Values that only survive full-precision printing.
    sets[0].archetypes[0].values[0] = 1.0 / 3.0;
    sets[0].archetypes[0].values[1] = std::sqrt(2.0);

    gait::save_archetype_sets(file, sets);
    const auto loaded = gait::load_archetype_sets(file);
    ASSERT_EQ(loaded.size(), sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) {
        EXPECT_EQ(loaded[i].person_id, sets[i].person_id);
        EXPECT_EQ(loaded[i].channel_tag, sets[i].channel_tag);
        EXPECT_EQ(loaded[i].rho, sets[i].rho);
        EXPECT_EQ(loaded[i].member_counts, sets[i].member_counts);
        ASSERT_EQ(loaded[i].size(), sets[i].size());
        for (std::size_t k = 0; k < sets[i].size(); ++k) {
            EXPECT_EQ(loaded[i].archetypes[k].positions, sets[i].archetypes[k].positions);
            EXPECT_EQ(loaded[i].archetypes[k].values, sets[i].archetypes[k].values);
            EXPECT_EQ(loaded[i].archetypes[k].channel, sets[i].archetypes[k].channel);
        }
    }
    fs::remove_all(dir);
}

TEST(ArchetypeStore, LoadErrors) {
    namespace fs = std::filesystem;
    const fs::path dir = testsupport::fresh_temp_dir("store-bad");
    EXPECT_THROW(gait::load_archetype_sets(dir / "absent.archetypes"), gait::Error);
    const fs::path junk = dir / "junk.archetypes";
    gait::detail::write_text_file(junk, "not-a-store 1\n");
    EXPECT_THROW(gait::load_archetype_sets(junk), gait::ParseError);
    fs::remove_all(dir);
}
