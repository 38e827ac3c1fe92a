#pragma once

// Core data model: zones, flow data (full origin-destination matrix or
// inflow/outflow marginals), the migration system that ties them together,
// and the zone adjacency graph used for contiguous aggregation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "netmig/errors.hpp"

namespace netmig {

struct Zone {
    std::string id;
    std::string name;
    double population = 0.0;
    double area_km2 = 0.0;

    bool operator==(const Zone&) const = default;
};

// Ordered collection of zones with unique ids.  Invariants: at least two
// zones, population >= 0 per zone with a positive total, area > 0 per zone.
class ZoneSet {
public:
    explicit ZoneSet(std::vector<Zone> zones) : zones_(std::move(zones)) {
        if (zones_.size() < 2)
            throw ValidationError("a migration system needs at least two zones, got " +
                                  std::to_string(zones_.size()));
        double total = 0.0;
        for (std::size_t i = 0; i < zones_.size(); ++i) {
            const Zone& z = zones_[i];
            if (z.id.empty())
                throw ValidationError("zone at position " + std::to_string(i) + " has an empty id");
            if (!index_.emplace(z.id, i).second)
                throw ValidationError("duplicate zone id '" + z.id + "'");
            if (!std::isfinite(z.population) || z.population < 0.0)
                throw ValidationError("zone '" + z.id + "' has negative or non-finite population");
            if (!std::isfinite(z.area_km2) || z.area_km2 <= 0.0)
                throw ValidationError("zone '" + z.id + "' has non-positive or non-finite area");
            total += z.population;
        }
        if (total <= 0.0)
            throw ValidationError("total population must be positive");
        total_population_ = total;
    }

    std::size_t size() const { return zones_.size(); }
    const Zone& zone(std::size_t i) const { return zones_[i]; }
    const std::vector<Zone>& zones() const { return zones_; }
    double total_population() const { return total_population_; }

    std::optional<std::size_t> find(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    bool operator==(const ZoneSet& other) const { return zones_ == other.zones_; }

private:
    std::vector<Zone> zones_;
    std::unordered_map<std::string, std::size_t> index_;
    double total_population_ = 0.0;
};

// Population density in persons per square kilometre, zone order preserved.
inline std::vector<double> densities(const ZoneSet& zones) {
    std::vector<double> out;
    out.reserve(zones.size());
    for (const Zone& z : zones.zones()) out.push_back(z.population / z.area_km2);
    return out;
}

enum class FlowKind { FullMatrix, MarginalsOnly };

// Migration flows for one system.  A full matrix stores directed inter-zone
// counts with a structurally zero diagonal; marginals store only total
// inflow and outflow per zone.  Inflow, outflow, net and the migrant total
// are available for both kinds.
class FlowData {
public:
    // Builds from a dense n-by-n matrix in row-major order.  Within-zone
    // (diagonal) entries are dropped; the count of nonzero dropped entries
    // is kept so loaders can report them.
    static FlowData full_matrix(std::size_t n, std::vector<double> cells) {
        if (cells.size() != n * n)
            throw ValidationError("flow matrix size mismatch: expected " +
                                  std::to_string(n * n) + " cells, got " +
                                  std::to_string(cells.size()));
        FlowData f;
        f.kind_ = FlowKind::FullMatrix;
        f.n_ = n;
        f.diagonal_dropped_ = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double v = cells[i * n + j];
                if (!std::isfinite(v) || v < 0.0)
                    throw ValidationError("flow count at (" + std::to_string(i) + "," +
                                          std::to_string(j) + ") is negative or not finite");
                if (i == j && v != 0.0) {
                    ++f.diagonal_dropped_;
                    cells[i * n + j] = 0.0;
                }
            }
        }
        f.matrix_ = std::move(cells);
        f.inflow_.assign(n, 0.0);
        f.outflow_.assign(n, 0.0);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) f.inflow_[j] += f.matrix_[i * n + j];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) f.outflow_[i] += f.matrix_[i * n + j];
        f.total_migrants_ = 0.0;
        for (double d : f.inflow_) f.total_migrants_ += d;
        return f;
    }

    // Builds from per-zone inflow/outflow totals.  Totals must balance
    // exactly: every move recorded as an inflow somewhere is an outflow
    // somewhere else.
    static FlowData marginals(std::vector<double> inflow, std::vector<double> outflow) {
        if (inflow.size() != outflow.size())
            throw ValidationError("inflow and outflow vectors differ in length");
        FlowData f;
        f.kind_ = FlowKind::MarginalsOnly;
        f.n_ = inflow.size();
        double in_total = 0.0;
        double out_total = 0.0;
        for (std::size_t i = 0; i < f.n_; ++i) {
            if (!std::isfinite(inflow[i]) || inflow[i] < 0.0)
                throw ValidationError("inflow at position " + std::to_string(i) +
                                      " is negative or not finite");
            if (!std::isfinite(outflow[i]) || outflow[i] < 0.0)
                throw ValidationError("outflow at position " + std::to_string(i) +
                                      " is negative or not finite");
            in_total += inflow[i];
            out_total += outflow[i];
        }
        if (in_total != out_total)
            throw ValidationError("marginal totals do not balance: inflow sum " +
                                  std::to_string(in_total) + " vs outflow sum " +
                                  std::to_string(out_total));
        f.inflow_ = std::move(inflow);
        f.outflow_ = std::move(outflow);
        f.total_migrants_ = in_total;
        return f;
    }

    FlowKind kind() const { return kind_; }
    std::size_t size() const { return n_; }
    std::size_t diagonal_dropped() const { return diagonal_dropped_; }

    double flow(std::size_t origin, std::size_t destination) const {
        if (kind_ != FlowKind::FullMatrix)
            throw ValidationError("per-pair flows are unavailable for marginals-only data");
        return matrix_[origin * n_ + destination];
    }

    const std::vector<double>& matrix() const {
        if (kind_ != FlowKind::FullMatrix)
            throw ValidationError("per-pair flows are unavailable for marginals-only data");
        return matrix_;
    }

    double inflow(std::size_t i) const { return inflow_[i]; }
    double outflow(std::size_t i) const { return outflow_[i]; }
    double net(std::size_t i) const { return inflow_[i] - outflow_[i]; }
    double total_migrants() const { return total_migrants_; }

    bool operator==(const FlowData& other) const {
        return kind_ == other.kind_ && n_ == other.n_ && matrix_ == other.matrix_ &&
               inflow_ == other.inflow_ && outflow_ == other.outflow_;
    }

private:
    FlowData() = default;

    FlowKind kind_ = FlowKind::FullMatrix;
    std::size_t n_ = 0;
    std::vector<double> matrix_;
    std::vector<double> inflow_;
    std::vector<double> outflow_;
    double total_migrants_ = 0.0;
    std::size_t diagonal_dropped_ = 0;
};

// One observation period of one zonal system.
struct MigrationSystem {
    MigrationSystem(ZoneSet zones_in, FlowData flows_in, std::string label_in = "",
                    int year_in = 0, int interval_in = 1)
        : zones(std::move(zones_in)),
          flows(std::move(flows_in)),
          label(std::move(label_in)),
          year(year_in),
          interval(interval_in) {
        if (flows.size() != zones.size())
            throw ValidationError("flow data covers " + std::to_string(flows.size()) +
                                  " zones but the zone set has " + std::to_string(zones.size()));
        if (interval != 1 && interval != 5)
            throw ValidationError("measurement interval must be 1 or 5 years, got " +
                                  std::to_string(interval));
    }

    ZoneSet zones;
    FlowData flows;
    std::string label;
    int year = 0;
    int interval = 1;

    bool operator==(const MigrationSystem& other) const {
        return zones == other.zones && flows == other.flows && label == other.label &&
               year == other.year && interval == other.interval;
    }
};

// Undirected adjacency over a zone set.  Invariants: simple (no self loops,
// no duplicate edges kept), and connected, which random contiguous
// partitioning relies on.
class AdjacencyGraph {
public:
    // Edges given as zone index pairs.  Duplicate edges and both
    // orientations of the same edge collapse to one.
    static AdjacencyGraph from_edges(std::size_t n,
                                     const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
        if (n < 2) throw ValidationError("an adjacency graph needs at least two zones");
        AdjacencyGraph g;
        g.n_ = n;
        g.neighbors_.assign(n, {});
        for (const auto& [a, b] : edges) {
            if (a >= n || b >= n)
                throw ValidationError("adjacency edge endpoint out of range");
            if (a == b)
                throw ValidationError("adjacency edge joins a zone to itself");
            g.neighbors_[a].push_back(b);
            g.neighbors_[b].push_back(a);
        }
        g.edge_count_ = 0;
        for (auto& nb : g.neighbors_) {
            std::sort(nb.begin(), nb.end());
            nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
            g.edge_count_ += nb.size();
        }
        g.edge_count_ /= 2;
        g.check_connected();
        return g;
    }

    std::size_t size() const { return n_; }
    std::size_t edge_count() const { return edge_count_; }
    const std::vector<std::uint32_t>& neighbors(std::size_t i) const { return neighbors_[i]; }

private:
    void check_connected() const {
        std::vector<char> seen(n_, 0);
        std::vector<std::size_t> component_sizes;
        for (std::size_t start = 0; start < n_; ++start) {
            if (seen[start]) continue;
            std::size_t count = 0;
            std::queue<std::uint32_t> queue;
            queue.push(static_cast<std::uint32_t>(start));
            seen[start] = 1;
            while (!queue.empty()) {
                const std::uint32_t u = queue.front();
                queue.pop();
                ++count;
                for (std::uint32_t v : neighbors_[u]) {
                    if (!seen[v]) {
                        seen[v] = 1;
                        queue.push(v);
                    }
                }
            }
            component_sizes.push_back(count);
        }
        if (component_sizes.size() > 1) {
            std::string sizes;
            for (std::size_t s : component_sizes) {
                if (!sizes.empty()) sizes += ", ";
                sizes += std::to_string(s);
            }
            throw ValidationError("adjacency graph is disconnected (component sizes: " + sizes +
                                  ")");
        }
    }

    std::size_t n_ = 0;
    std::size_t edge_count_ = 0;
    std::vector<std::vector<std::uint32_t>> neighbors_;
};

}  // namespace netmig
