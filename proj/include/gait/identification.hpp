#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "gait/distance.hpp"
#include "gait/errors.hpp"
#include "gait/signal.hpp"

namespace gait {

struct ArchetypeSet {
    int person_id = -1;
    std::string channel_tag;
    std::vector<Signal> archetypes;
    double rho = 0.1;
    std::vector<std::size_t> member_counts;  // training cycles absorbed per archetype

    std::size_t size() const { return archetypes.size(); }
};

struct ClassificationResult {
    int predicted_id = -1;
    double best_distance = std::numeric_limits<double>::infinity();
    std::vector<int> candidate_ids;
    std::vector<double> candidate_distances;  // per-candidate best distance
};

/// Greedy threshold clustering: the first unabsorbed cycle seeds an archetype,
/// every later cycle within rho OF THE SEED is folded into the running average
/// (the seed itself never changes), and the sweep repeats on what is left.
inline ArchetypeSet cluster_archetypes(const std::vector<Signal>& cycles, double rho) {
    if (cycles.empty()) throw EmptyInput("cluster_archetypes: no cycles");
    if (!(rho > 0)) throw Error("cluster_archetypes: rho must be > 0");
    ArchetypeSet out;
    out.rho = rho;
    out.channel_tag = channel_name(cycles.front().channel);
    std::vector<bool> absorbed(cycles.size(), false);
    for (std::size_t i = 0; i < cycles.size(); ++i) {
        if (absorbed[i]) continue;
        const Signal& seed = cycles[i];
        Signal archetype = seed;
        std::size_t members = 1;
        for (std::size_t j = i + 1; j < cycles.size(); ++j) {
            if (absorbed[j]) continue;
            if (signal_distance(seed, cycles[j]) <= rho) {
                archetype = average_pair(archetype, cycles[j]);
                absorbed[j] = true;
                ++members;
            }
        }
        out.archetypes.push_back(std::move(archetype));
        out.member_counts.push_back(members);
    }
    return out;
}

namespace detail {

inline double best_archetype_distance(const Signal& cycle, const ArchetypeSet& person) {
    if (person.archetypes.empty())
        throw EmptyCandidates("classify: candidate with no archetypes");
    double best = std::numeric_limits<double>::infinity();
    for (const Signal& a : person.archetypes) best = std::min(best, signal_distance(cycle, a));
    return best;
}

}  // namespace detail

/// Nearest archetype over all candidates; ties go to the lowest person_id.
inline ClassificationResult classify_cycle(const Signal& cycle,
                                           const std::vector<ArchetypeSet>& candidates) {
    if (candidates.empty()) throw EmptyCandidates("classify_cycle: no candidates");
    ClassificationResult r;
    for (const ArchetypeSet& person : candidates) {
        const double d = detail::best_archetype_distance(cycle, person);
        r.candidate_ids.push_back(person.person_id);
        r.candidate_distances.push_back(d);
        if (d < r.best_distance ||
            (d == r.best_distance && person.person_id < r.predicted_id)) {
            r.best_distance = d;
            r.predicted_id = person.person_id;
        }
    }
    return r;
}

/// Multi-axis rule: a person's score is the minimum over axes of their best
/// archetype distance on that axis; the winner is the global minimum.
inline ClassificationResult classify_cycle_multiaxis(
    const std::map<std::string, Signal>& cycles_by_axis,
    const std::map<std::string, std::vector<ArchetypeSet>>& candidates_by_axis) {
    if (cycles_by_axis.empty()) throw AxisMismatch("classify_cycle_multiaxis: no axes");
    if (cycles_by_axis.size() != candidates_by_axis.size())
        throw AxisMismatch("classify_cycle_multiaxis: axis keys differ");
    for (const auto& [axis, _] : cycles_by_axis)
        if (!candidates_by_axis.count(axis))
            throw AxisMismatch("classify_cycle_multiaxis: missing candidates for axis " + axis);

    std::map<int, double> score;
    for (const auto& [axis, cycle] : cycles_by_axis) {
        for (const ArchetypeSet& person : candidates_by_axis.at(axis)) {
            const double d = detail::best_archetype_distance(cycle, person);
            auto it = score.find(person.person_id);
            if (it == score.end())
                score.emplace(person.person_id, d);
            else
                it->second = std::min(it->second, d);
        }
    }
    if (score.empty()) throw EmptyCandidates("classify_cycle_multiaxis: no candidates");

    ClassificationResult r;
    for (const auto& [id, d] : score) {  // map order = ascending id, so ties keep the lowest
        r.candidate_ids.push_back(id);
        r.candidate_distances.push_back(d);
        if (d < r.best_distance) {
            r.best_distance = d;
            r.predicted_id = id;
        }
    }
    return r;
}

namespace detail {

inline void require_known_user(int user_id, const std::vector<int>& ids) {
    for (int id : ids)
        if (id == user_id) return;
    throw UnknownUser("binary_authenticate: user " + std::to_string(user_id) +
                      " not among candidates");
}

}  // namespace detail

/// Accept iff the nearest archetype over ALL enrolled candidates belongs to
/// the claimed user.
inline bool binary_authenticate(const Signal& cycle, int user_id,
                                const std::vector<ArchetypeSet>& all_candidates) {
    if (all_candidates.empty()) throw EmptyCandidates("binary_authenticate: no candidates");
    std::vector<int> ids;
    ids.reserve(all_candidates.size());
    for (const auto& c : all_candidates) ids.push_back(c.person_id);
    detail::require_known_user(user_id, ids);
    return classify_cycle(cycle, all_candidates).predicted_id == user_id;
}

inline bool binary_authenticate_multiaxis(
    const std::map<std::string, Signal>& cycles_by_axis, int user_id,
    const std::map<std::string, std::vector<ArchetypeSet>>& candidates_by_axis) {
    const ClassificationResult r = classify_cycle_multiaxis(cycles_by_axis, candidates_by_axis);
    detail::require_known_user(user_id, r.candidate_ids);
    return r.predicted_id == user_id;
}

}  // namespace gait
