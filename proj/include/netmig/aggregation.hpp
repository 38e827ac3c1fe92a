#pragma once

// Random contiguous spatial aggregation: partition a zone system into
// connected groups, collapse flows onto the groups, and profile how the
// migration indices respond as the number of units shrinks.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "netmig/errors.hpp"
#include "netmig/indices.hpp"
#include "netmig/rng.hpp"
#include "netmig/system.hpp"

namespace netmig {

// Assignment of each zone to a group.  Groups are numbered canonically:
// group k has the k-th smallest leading zone index, so the same grouping
// always gets the same labels.
struct Partition {
    std::vector<std::uint32_t> assignment;
    std::uint32_t group_count = 0;
};

// Grows target_count connected regions from uniformly drawn seed zones.
// Growth repeatedly picks uniformly among the current frontier edges
// (assigned zone, unassigned neighbor) and assigns the neighbor to the
// seed's group, so every group is connected by construction.  Identical
// inputs give identical partitions.
inline Partition random_contiguous_partition(const AdjacencyGraph& graph,
                                             std::uint32_t target_count, std::uint64_t seed) {
    const std::size_t n = graph.size();
    if (target_count < 2)
        throw ValidationError("partition needs at least 2 groups, got " +
                              std::to_string(target_count));
    if (target_count > n)
        throw ValidationError("cannot partition " + std::to_string(n) + " zones into " +
                              std::to_string(target_count) + " groups");

    constexpr std::uint32_t kUnassigned = 0xffffffffu;
    std::vector<std::uint32_t> assignment(n, kUnassigned);
    Rng rng(seed);

    // Distinct seed zones via a partial Fisher-Yates shuffle.
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    struct FrontierEdge {
        std::uint32_t from;
        std::uint32_t to;
    };
    std::vector<FrontierEdge> frontier;
    std::size_t assigned = 0;
    for (std::uint32_t g = 0; g < target_count; ++g) {
        const std::size_t j = g + rng.uniform_below(n - g);
        std::swap(order[g], order[j]);
        assignment[order[g]] = g;
        ++assigned;
    }
    for (std::uint32_t g = 0; g < target_count; ++g) {
        const std::uint32_t z = order[g];
        for (std::uint32_t nb : graph.neighbors(z))
            if (assignment[nb] == kUnassigned) frontier.push_back({z, nb});
    }

    // Stale edges (neighbor assigned meanwhile) are discarded when drawn,
    // which keeps the draw uniform over the edges still valid.
    while (assigned < n) {
        if (frontier.empty())
            throw std::logic_error("region growth stalled on a connected graph");
        const std::size_t pick = rng.uniform_below(frontier.size());
        const FrontierEdge edge = frontier[pick];
        frontier[pick] = frontier.back();
        frontier.pop_back();
        if (assignment[edge.to] != kUnassigned) continue;
        assignment[edge.to] = assignment[edge.from];
        ++assigned;
        for (std::uint32_t nb : graph.neighbors(edge.to))
            if (assignment[nb] == kUnassigned) frontier.push_back({edge.to, nb});
    }

    // Canonical relabel by smallest member index.
    std::vector<std::uint32_t> relabel(target_count, kUnassigned);
    std::uint32_t next = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (relabel[assignment[i]] == kUnassigned) relabel[assignment[i]] = next++;
    for (auto& a : assignment) a = relabel[a];

    return Partition{std::move(assignment), target_count};
}

// Aggregation needs per-pair flows; marginals cannot tell within-group moves
// from between-group moves.
inline void require_full_matrix(const MigrationSystem& system) {
    if (system.flows.kind() != FlowKind::FullMatrix)
        throw ValidationError(
            "aggregation requires a full origin-destination matrix; "
            "marginals-only flow data cannot be aggregated");
}

// Collapses a system onto the groups of a partition.  Group populations and
// areas are summed in ascending member order; flows between zones of the
// same group become within-group moves and drop out of the aggregated
// matrix.  Requires a full origin-destination matrix.
inline MigrationSystem aggregate_system(const MigrationSystem& system,
                                        const Partition& partition) {
    const std::size_t n = system.zones.size();
    if (partition.assignment.size() != n)
        throw ValidationError("partition covers " + std::to_string(partition.assignment.size()) +
                              " zones but the system has " + std::to_string(n));
    require_full_matrix(system);
    const std::size_t t = partition.group_count;
    if (t < 2) throw ValidationError("partition must have at least 2 groups");
    std::vector<std::size_t> members(t, 0);
    for (std::uint32_t g : partition.assignment) {
        if (g >= t) throw ValidationError("partition assignment references group out of range");
        ++members[g];
    }
    for (std::size_t g = 0; g < t; ++g)
        if (members[g] == 0)
            throw ValidationError("partition group " + std::to_string(g) + " has no members");

    std::vector<Zone> groups(t);
    for (std::size_t g = 0; g < t; ++g) {
        groups[g].id = "g" + std::to_string(g);
        groups[g].population = 0.0;
        groups[g].area_km2 = 0.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        Zone& g = groups[partition.assignment[i]];
        g.population += system.zones.zone(i).population;
        g.area_km2 += system.zones.zone(i).area_km2;
    }

    std::vector<double> cells(t * t, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t gi = partition.assignment[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const std::size_t gj = partition.assignment[j];
            if (gi == gj) continue;
            cells[gi * t + gj] += system.flows.flow(i, j);
        }
    }

    return MigrationSystem(ZoneSet(std::move(groups)), FlowData::full_matrix(t, std::move(cells)),
                           system.label, system.year, system.interval);
}

// Geometric ladder of unit counts from min_n up to base_n inclusive,
// rounded to integers, deduplicated, strictly increasing.
inline std::vector<std::uint32_t> scale_ladder(std::uint32_t base_n, std::uint32_t min_n,
                                               std::uint32_t steps) {
    if (min_n < 2)
        throw ValidationError("scale ladder needs min_n >= 2, got " + std::to_string(min_n));
    if (base_n <= min_n)
        throw ValidationError("scale ladder needs base_n > min_n, got base_n=" +
                              std::to_string(base_n) + " min_n=" + std::to_string(min_n));
    if (steps < 2)
        throw ValidationError("scale ladder needs at least 2 steps, got " + std::to_string(steps));
    const double ratio = static_cast<double>(base_n) / static_cast<double>(min_n);
    std::vector<std::uint32_t> ladder;
    for (std::uint32_t k = 0; k < steps; ++k) {
        double v = min_n * std::pow(ratio, static_cast<double>(k) / (steps - 1));
        auto r = static_cast<std::uint32_t>(std::llround(v));
        if (r < min_n) r = min_n;
        if (r > base_n) r = base_n;
        if (ladder.empty() || r > ladder.back()) ladder.push_back(r);
    }
    if (ladder.front() != min_n) ladder.insert(ladder.begin(), min_n);
    if (ladder.back() != base_n) ladder.push_back(base_n);
    return ladder;
}

struct ScalePoint {
    std::uint32_t n_units = 0;
    std::uint32_t samples = 0;
    double mean_cmi = 0.0;
    double sd_cmi = 0.0;
    double mean_mei = 0.0;
    double sd_mei = 0.0;
    double mean_anmr = 0.0;
};

struct ScaleProfile {
    std::vector<ScalePoint> points;
    std::uint32_t base_n = 0;
    std::uint64_t master_seed = 0;
};

namespace detail {

inline void mean_sd(const std::vector<double>& xs, double& mean, double& sd) {
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) {
        sd = 0.0;
        return;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace detail

// Samples random contiguous partitions at every ladder scale and records
// the distribution of the indices.  Sample s at ladder position k uses the
// stream derive_seed(master_seed, k, s), so results do not depend on
// evaluation order and any (scale, sample) cell can be reproduced alone.
inline ScaleProfile scale_profile(const MigrationSystem& system, const AdjacencyGraph& graph,
                                  const std::vector<std::uint32_t>& ladder,
                                  std::uint32_t samples_per_scale, std::uint64_t master_seed) {
    require_full_matrix(system);
    if (graph.size() != system.zones.size())
        throw ValidationError("adjacency graph covers " + std::to_string(graph.size()) +
                              " zones but the system has " + std::to_string(system.zones.size()));
    if (ladder.empty()) throw ValidationError("scale ladder is empty");
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        if (ladder[k] < 2 || ladder[k] > system.zones.size())
            throw ValidationError("ladder scale " + std::to_string(ladder[k]) +
                                  " is outside [2, " + std::to_string(system.zones.size()) + "]");
        if (k > 0 && ladder[k] <= ladder[k - 1])
            throw ValidationError("scale ladder must be strictly increasing");
    }
    if (samples_per_scale < 1)
        throw ValidationError("samples_per_scale must be at least 1");

    ScaleProfile profile;
    profile.base_n = static_cast<std::uint32_t>(system.zones.size());
    profile.master_seed = master_seed;
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        std::vector<double> cmis, meis, anmrs;
        cmis.reserve(samples_per_scale);
        meis.reserve(samples_per_scale);
        anmrs.reserve(samples_per_scale);
        for (std::uint32_t s = 0; s < samples_per_scale; ++s) {
            const std::uint64_t seed = derive_seed(master_seed, k, s);
            const Partition part = random_contiguous_partition(graph, ladder[k], seed);
            const MigrationSystem agg = aggregate_system(system, part);
            const SystemIndices idx = system_indices(agg);
            cmis.push_back(idx.cmi);
            meis.push_back(idx.mei);
            anmrs.push_back(idx.anmr);
        }
        ScalePoint point;
        point.n_units = ladder[k];
        point.samples = samples_per_scale;
        detail::mean_sd(cmis, point.mean_cmi, point.sd_cmi);
        detail::mean_sd(meis, point.mean_mei, point.sd_mei);
        double anmr_sd = 0.0;
        detail::mean_sd(anmrs, point.mean_anmr, anmr_sd);
        profile.points.push_back(point);
    }
    return profile;
}

struct CmiFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Ordinary least squares of mean CMI on log10(number of units).  The slope
// summarizes how fast measured intensity grows with spatial resolution.
inline CmiFit fit_cmi_slope(const ScaleProfile& profile) {
    const std::size_t n = profile.points.size();
    if (n < 2)
        throw ValidationError("CMI slope fit needs at least two scales, got " +
                              std::to_string(n));
    double sx = 0.0, sy = 0.0;
    for (const ScalePoint& pt : profile.points) {
        sx += std::log10(static_cast<double>(pt.n_units));
        sy += pt.mean_cmi;
    }
    const double xbar = sx / static_cast<double>(n);
    const double ybar = sy / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const ScalePoint& pt : profile.points) {
        const double dx = std::log10(static_cast<double>(pt.n_units)) - xbar;
        const double dy = pt.mean_cmi - ybar;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0)
        throw ValidationError("CMI slope fit is degenerate: all scales have the same unit count");
    CmiFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    if (syy > 0.0) {
        double ssr = 0.0;
        for (const ScalePoint& pt : profile.points) {
            const double e =
                pt.mean_cmi - (fit.intercept + fit.slope * std::log10(static_cast<double>(pt.n_units)));
            ssr += e * e;
        }
        fit.r_squared = 1.0 - ssr / syy;
        if (fit.r_squared < 0.0) fit.r_squared = 0.0;
        if (fit.r_squared > 1.0) fit.r_squared = 1.0;
    }
    return fit;
}

// Mean of the per-scale mean effectiveness over scales with at least
// min_units units.  Effectiveness is only scale-stable above a floor, so
// coarser scales are excluded from the summary.
inline double mean_mei(const ScaleProfile& profile, std::uint32_t min_units = 20) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const ScalePoint& pt : profile.points) {
        if (pt.n_units < min_units) continue;
        sum += pt.mean_mei;
        ++count;
    }
    if (count == 0)
        throw ValidationError("no aggregation scale has at least " + std::to_string(min_units) +
                              " units");
    return sum / static_cast<double>(count);
}

}  // namespace netmig
