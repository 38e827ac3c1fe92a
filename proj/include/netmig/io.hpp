#pragma once

// File loading and serialization for zone tables, flow data and adjacency
// lists.  All loaders validate as they read and report problems with
// file:line context.  Writers emit files the loaders read back to an
// identical in-memory system.

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "netmig/csv.hpp"
#include "netmig/errors.hpp"
#include "netmig/impact.hpp"
#include "netmig/system.hpp"

namespace netmig {

inline ZoneSet load_zones(std::istream& in, const std::string& source) {
    csv::Reader reader(in, source);
    csv::Row row;
    if (!reader.next(row)) throw ValidationError(source + ": empty file");
    csv::expect_header(reader, row, {"zone_id", "name", "population", "area_km2"});
    std::vector<Zone> zones;
    std::unordered_set<std::string> seen;
    while (reader.next(row)) {
        csv::expect_columns(reader, row, 4);
        Zone z;
        z.id = row.fields[0];
        z.name = row.fields[1];
        if (z.id.empty())
            throw ValidationError(csv::where(reader, row) + ": empty zone id");
        if (!seen.insert(z.id).second)
            throw ValidationError(csv::where(reader, row) + ": duplicate zone id '" + z.id + "'");
        z.population = csv::parse_double(reader, row, 2, "population");
        if (z.population < 0.0)
            throw ValidationError(csv::where(reader, row) + ": zone '" + z.id +
                                  "' has negative population");
        z.area_km2 = csv::parse_double(reader, row, 3, "area_km2");
        if (z.area_km2 <= 0.0)
            throw ValidationError(csv::where(reader, row) + ": zone '" + z.id +
                                  "' has non-positive area");
        zones.push_back(std::move(z));
    }
    return ZoneSet(std::move(zones));
}

// Reads directed origin-destination rows.  Omitted pairs mean zero flow;
// within-zone rows are dropped (the returned FlowData keeps a count of the
// nonzero ones so callers can warn).
inline FlowData load_matrix_flows(std::istream& in, const ZoneSet& zones,
                                  const std::string& source) {
    csv::Reader reader(in, source);
    csv::Row row;
    if (!reader.next(row)) throw ValidationError(source + ": empty file");
    csv::expect_header(reader, row, {"origin", "destination", "count"});
    const std::size_t n = zones.size();
    std::vector<double> cells(n * n, 0.0);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    while (reader.next(row)) {
        csv::expect_columns(reader, row, 3);
        const auto origin = zones.find(row.fields[0]);
        if (!origin)
            throw ValidationError(csv::where(reader, row) + ": unknown zone id '" +
                                  row.fields[0] + "'");
        const auto destination = zones.find(row.fields[1]);
        if (!destination)
            throw ValidationError(csv::where(reader, row) + ": unknown zone id '" +
                                  row.fields[1] + "'");
        const double count = csv::parse_double(reader, row, 2, "count");
        if (count < 0.0)
            throw ValidationError(csv::where(reader, row) + ": negative flow count");
        if (!seen.insert({*origin, *destination}).second)
            throw ValidationError(csv::where(reader, row) + ": duplicate flow pair '" +
                                  row.fields[0] + "' -> '" + row.fields[1] + "'");
        cells[*origin * n + *destination] = count;
    }
    return FlowData::full_matrix(n, std::move(cells));
}

// Reads per-zone inflow/outflow totals.  Zones omitted from the file get
// zero totals, mirroring the sparse matrix convention.
inline FlowData load_marginal_flows(std::istream& in, const ZoneSet& zones,
                                    const std::string& source) {
    csv::Reader reader(in, source);
    csv::Row row;
    if (!reader.next(row)) throw ValidationError(source + ": empty file");
    csv::expect_header(reader, row, {"zone_id", "inflow", "outflow"});
    const std::size_t n = zones.size();
    std::vector<double> inflow(n, 0.0);
    std::vector<double> outflow(n, 0.0);
    std::unordered_set<std::size_t> seen;
    while (reader.next(row)) {
        csv::expect_columns(reader, row, 3);
        const auto idx = zones.find(row.fields[0]);
        if (!idx)
            throw ValidationError(csv::where(reader, row) + ": unknown zone id '" +
                                  row.fields[0] + "'");
        if (!seen.insert(*idx).second)
            throw ValidationError(csv::where(reader, row) + ": duplicate marginal row for zone '" +
                                  row.fields[0] + "'");
        inflow[*idx] = csv::parse_double(reader, row, 1, "inflow");
        outflow[*idx] = csv::parse_double(reader, row, 2, "outflow");
        if (inflow[*idx] < 0.0 || outflow[*idx] < 0.0)
            throw ValidationError(csv::where(reader, row) + ": negative marginal total");
    }
    return FlowData::marginals(std::move(inflow), std::move(outflow));
}

inline AdjacencyGraph load_adjacency(std::istream& in, const ZoneSet& zones,
                                     const std::string& source) {
    csv::Reader reader(in, source);
    csv::Row row;
    if (!reader.next(row)) throw ValidationError(source + ": empty file");
    csv::expect_header(reader, row, {"zone_a", "zone_b"});
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    while (reader.next(row)) {
        csv::expect_columns(reader, row, 2);
        const auto a = zones.find(row.fields[0]);
        if (!a)
            throw ValidationError(csv::where(reader, row) + ": unknown zone id '" +
                                  row.fields[0] + "'");
        const auto b = zones.find(row.fields[1]);
        if (!b)
            throw ValidationError(csv::where(reader, row) + ": unknown zone id '" +
                                  row.fields[1] + "'");
        if (*a == *b)
            throw ValidationError(csv::where(reader, row) + ": zone '" + row.fields[0] +
                                  "' adjacent to itself");
        edges.emplace_back(static_cast<std::uint32_t>(*a), static_cast<std::uint32_t>(*b));
    }
    return AdjacencyGraph::from_edges(zones.size(), edges);
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file '" + path.string() + "'");
    return in;
}

inline ZoneSet load_zones(const std::filesystem::path& path) {
    auto in = open_input(path);
    return load_zones(in, path.string());
}

inline MigrationSystem load_system(const std::filesystem::path& zones_path,
                                   const std::filesystem::path& flows_path, FlowKind kind,
                                   std::string label = "", int year = 0, int interval = 1) {
    ZoneSet zones = load_zones(zones_path);
    auto flows_in = open_input(flows_path);
    FlowData flows = kind == FlowKind::FullMatrix
                         ? load_matrix_flows(flows_in, zones, flows_path.string())
                         : load_marginal_flows(flows_in, zones, flows_path.string());
    return MigrationSystem(std::move(zones), std::move(flows), std::move(label), year, interval);
}

inline AdjacencyGraph load_adjacency(const std::filesystem::path& path, const ZoneSet& zones) {
    auto in = open_input(path);
    return load_adjacency(in, zones, path.string());
}

inline void write_zones_csv(std::ostream& out, const ZoneSet& zones) {
    out << "zone_id,name,population,area_km2\n";
    for (const Zone& z : zones.zones())
        out << csv::quote(z.id) << ',' << csv::quote(z.name) << ','
            << csv::fmt_exact(z.population) << ',' << csv::fmt_exact(z.area_km2) << '\n';
}

// Writes only nonzero pairs, origin-major order.
inline void write_flows_csv(std::ostream& out, const MigrationSystem& system) {
    out << "origin,destination,count\n";
    const std::size_t n = system.zones.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double v = system.flows.flow(i, j);
            if (v == 0.0) continue;
            out << csv::quote(system.zones.zone(i).id) << ','
                << csv::quote(system.zones.zone(j).id) << ',' << csv::fmt_exact(v) << '\n';
        }
}

inline void write_marginals_csv(std::ostream& out, const MigrationSystem& system) {
    out << "zone_id,inflow,outflow\n";
    for (std::size_t i = 0; i < system.zones.size(); ++i)
        out << csv::quote(system.zones.zone(i).id) << ','
            << csv::fmt_exact(system.flows.inflow(i)) << ','
            << csv::fmt_exact(system.flows.outflow(i)) << '\n';
}

// Benchmark JSON: {"avg_cmi_slope": .., "avg_mei": .., "sample_size": ..,
// "note": ".."}.  The note is optional.
inline Benchmark load_benchmark(std::istream& in, const std::string& source) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(source + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ValidationError(source + ": benchmark must be a JSON object");
    Benchmark b;
    auto number = [&doc, &source](const char* key) {
        if (!doc.contains(key) || !doc[key].is_number())
            throw ValidationError(source + ": missing numeric field '" + std::string(key) + "'");
        return doc[key].get<double>();
    };
    b.avg_cmi_slope = number("avg_cmi_slope");
    b.avg_mei = number("avg_mei");
    if (!doc.contains("sample_size") || !doc["sample_size"].is_number_unsigned())
        throw ValidationError(source + ": missing non-negative integer field 'sample_size'");
    b.sample_size = doc["sample_size"].get<std::uint64_t>();
    if (doc.contains("note")) {
        if (!doc["note"].is_string())
            throw ValidationError(source + ": field 'note' must be a string");
        b.note = doc["note"].get<std::string>();
    }
    validate_benchmark(b);
    return b;
}

inline Benchmark load_benchmark(const std::filesystem::path& path) {
    auto in = open_input(path);
    return load_benchmark(in, path.string());
}

// Per-system aggregation summaries: label,cmi_slope,mean_mei.
inline std::vector<CountrySummary> load_summaries(std::istream& in, const std::string& source) {
    csv::Reader reader(in, source);
    csv::Row row;
    if (!reader.next(row)) throw ValidationError(source + ": empty file");
    csv::expect_header(reader, row, {"label", "cmi_slope", "mean_mei"});
    std::vector<CountrySummary> out;
    std::unordered_set<std::string> seen;
    while (reader.next(row)) {
        csv::expect_columns(reader, row, 3);
        CountrySummary s;
        s.label = row.fields[0];
        if (s.label.empty())
            throw ValidationError(csv::where(reader, row) + ": empty label");
        if (!seen.insert(s.label).second)
            throw ValidationError(csv::where(reader, row) + ": duplicate label '" + s.label + "'");
        s.cmi_slope = csv::parse_double(reader, row, 1, "cmi_slope");
        s.mean_mei = csv::parse_double(reader, row, 2, "mean_mei");
        out.push_back(std::move(s));
    }
    if (out.empty()) throw ValidationError(source + ": no summary rows");
    return out;
}

inline std::vector<CountrySummary> load_summaries(const std::filesystem::path& path) {
    auto in = open_input(path);
    return load_summaries(in, path.string());
}

}  // namespace netmig
