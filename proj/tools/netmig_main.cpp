// netmig: command-line toolkit for migration redistribution analysis.
//
// Subcommands load zone/flow CSV data, compute migration indices, run the
// density regression and regime classification, profile scale sensitivity
// under random contiguous aggregation, compare systems against a benchmark
// (INMI), cluster system summaries, and fit multi-year slope series.
//
// All runs are deterministic: randomness comes only from --seed (default
// 1729), floats are formatted at 6 significant digits in CSV and full
// precision in JSON, and no timestamps are written.  Reports are buffered
// in memory and written only after the whole computation succeeds.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "netmig/netmig.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kDefaultSeed = 1729;

struct DataArgs {
    std::string zones_path;
    std::string flows_path;
    std::string marginals_path;
    std::string label;
    int year = 0;
    int interval = 1;
};

struct LadderArgs {
    std::uint32_t min_n = 0;  // 0 means derive the default
    std::uint32_t steps = 8;
    std::uint32_t samples = 30;
    std::uint32_t min_units = 20;
};

// Buffered output: nothing touches the filesystem or stdout until the
// subcommand has finished successfully.
struct Reports {
    std::string stdout_text;
    std::vector<std::pair<std::string, std::string>> files;  // name -> content

    void add_file(std::string name, std::string content) {
        files.emplace_back(std::move(name), std::move(content));
    }

    void flush(const std::optional<std::string>& out_dir) const {
        if (out_dir) {
            fs::create_directories(*out_dir);
            for (const auto& [name, content] : files) {
                std::ofstream out(fs::path(*out_dir) / name, std::ios::binary);
                if (!out)
                    throw netmig::ValidationError("cannot write output file '" + name + "' in '" +
                                                  *out_dir + "'");
                out << content;
            }
        }
        std::cout << stdout_text;
    }
};

void add_data_options(CLI::App* cmd, DataArgs& args, bool matrix_only) {
    cmd->add_option("--zones", args.zones_path, "Zone table CSV (zone_id,name,population,area_km2)")
        ->required()
        ->check(CLI::ExistingFile);
    auto* flows = cmd->add_option("--flows", args.flows_path,
                                  "Origin-destination flow CSV (origin,destination,count)")
                      ->check(CLI::ExistingFile);
    auto* marginals =
        cmd->add_option("--marginals", args.marginals_path,
                        "Per-zone inflow/outflow CSV (zone_id,inflow,outflow)")
            ->check(CLI::ExistingFile);
    flows->excludes(marginals);
    marginals->excludes(flows);
    if (matrix_only) {
        // Marginals are still accepted here so the aggregation layer can
        // report the full-matrix requirement itself.
    }
    cmd->add_option("--label", args.label, "System label for reports");
    cmd->add_option("--year", args.year, "Observation year");
    cmd->add_option("--interval", args.interval, "Measurement interval in years (1 or 5)")
        ->check(CLI::IsMember({1, 5}));
}

netmig::MigrationSystem load_from_args(const DataArgs& args) {
    if (args.flows_path.empty() && args.marginals_path.empty())
        throw netmig::ValidationError("one of --flows or --marginals is required");
    const bool matrix = !args.flows_path.empty();
    return netmig::load_system(args.zones_path,
                               matrix ? args.flows_path : args.marginals_path,
                               matrix ? netmig::FlowKind::FullMatrix
                                      : netmig::FlowKind::MarginalsOnly,
                               args.label, args.year, args.interval);
}

std::string dump_json(const ordered_json& doc) { return doc.dump(2) + "\n"; }

ordered_json indices_json(const netmig::MigrationSystem& system) {
    const netmig::SystemIndices idx = netmig::system_indices(system);
    const std::vector<netmig::ZoneRate> rates = netmig::net_migration_rates(system);
    ordered_json doc;
    doc["cmi"] = idx.cmi;
    doc["mei"] = idx.mei;
    doc["anmr"] = idx.anmr;
    doc["m"] = idx.m;
    doc["p"] = idx.p;
    doc["rates"] = ordered_json::array();
    for (const netmig::ZoneRate& r : rates) {
        ordered_json row;
        row["zone_id"] = r.zone_id;
        row["nmr_percent"] = r.nmr_percent;
        row["net_persons"] = r.net_persons;
        doc["rates"].push_back(std::move(row));
    }
    return doc;
}

std::string profile_csv(const netmig::ScaleProfile& profile) {
    std::ostringstream out;
    out << "n_units,samples,mean_cmi,sd_cmi,mean_mei,sd_mei,mean_anmr\n";
    for (const netmig::ScalePoint& pt : profile.points)
        out << pt.n_units << ',' << pt.samples << ',' << netmig::csv::fmt_sig6(pt.mean_cmi)
            << ',' << netmig::csv::fmt_sig6(pt.sd_cmi) << ','
            << netmig::csv::fmt_sig6(pt.mean_mei) << ',' << netmig::csv::fmt_sig6(pt.sd_mei)
            << ',' << netmig::csv::fmt_sig6(pt.mean_anmr) << '\n';
    return out.str();
}

std::uint32_t default_min_n(std::size_t base_n) {
    const auto floor20 = static_cast<std::uint32_t>((base_n + 19) / 20);
    const std::uint32_t min_n = std::max<std::uint32_t>(20, floor20);
    if (min_n >= base_n)
        throw netmig::ValidationError(
            "the default scale ladder needs more than 20 zones; pass --min-n below the zone "
            "count for small systems");
    return min_n;
}

struct ProfileOutput {
    netmig::ScaleProfile profile;
    netmig::CmiFit fit;
    double mean_mei = 0.0;
    std::vector<std::uint32_t> ladder;
};

ProfileOutput run_profile(const netmig::MigrationSystem& system,
                          const netmig::AdjacencyGraph& graph, const LadderArgs& ladder_args,
                          std::uint64_t seed) {
    ProfileOutput out;
    const std::uint32_t min_n =
        ladder_args.min_n > 0 ? ladder_args.min_n : default_min_n(system.zones.size());
    out.ladder = netmig::scale_ladder(static_cast<std::uint32_t>(system.zones.size()), min_n,
                                      ladder_args.steps);
    out.profile = netmig::scale_profile(system, graph, out.ladder, ladder_args.samples, seed);
    out.fit = netmig::fit_cmi_slope(out.profile);
    out.mean_mei = netmig::mean_mei(out.profile, ladder_args.min_units);
    return out;
}

ordered_json profile_json(const netmig::MigrationSystem& system, const ProfileOutput& po,
                          const LadderArgs& ladder_args, std::uint64_t seed) {
    ordered_json doc;
    doc["label"] = system.label;
    doc["base_n"] = po.profile.base_n;
    doc["master_seed"] = seed;
    doc["samples_per_scale"] = ladder_args.samples;
    doc["ladder"] = po.ladder;
    doc["cmi_fit"] = {{"slope", po.fit.slope},
                      {"intercept", po.fit.intercept},
                      {"r_squared", po.fit.r_squared}};
    doc["mean_mei"] = po.mean_mei;
    doc["min_units"] = ladder_args.min_units;
    return doc;
}

int run_command(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const netmig::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Migration redistribution analysis toolkit"};
    app.require_subcommand(1);

    DataArgs data;
    LadderArgs ladder_args;
    std::uint64_t seed = kDefaultSeed;
    double alpha = 0.05;
    std::string variant_name = "zscore";
    std::optional<std::string> out_dir;
    std::string adjacency_path;
    std::string benchmark_path;
    std::string summaries_path;
    std::string series_path;
    std::uint32_t cluster_k = 4;
    std::uint32_t cluster_restarts = 10;
    std::vector<std::uint32_t> candidate_ks;

    auto add_out = [&out_dir](CLI::App* cmd) {
        cmd->add_option("--out", out_dir, "Directory to write report files into");
    };
    auto add_seed = [&seed](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "Master seed for all randomized steps (default 1729)");
    };

    auto* cmd_validate = app.add_subcommand("validate", "Load and validate inputs, report shape");
    add_data_options(cmd_validate, data, false);
    cmd_validate->add_option("--adjacency", adjacency_path, "Contiguity CSV (zone_a,zone_b)")
        ->check(CLI::ExistingFile);
    add_out(cmd_validate);

    auto* cmd_indices = app.add_subcommand("indices", "System indices and per-zone rates");
    add_data_options(cmd_indices, data, false);
    add_out(cmd_indices);

    auto* cmd_regress =
        app.add_subcommand("regress", "Density regression, regime, and z-score table");
    add_data_options(cmd_regress, data, false);
    cmd_regress->add_option("--alpha", alpha, "Significance level (default 0.05)");
    cmd_regress->add_option("--variant", variant_name, "Response variant: raw or zscore")
        ->check(CLI::IsMember({"raw", "zscore"}));
    add_out(cmd_regress);

    auto add_ladder_options = [&ladder_args](CLI::App* cmd) {
        cmd->add_option("--min-n", ladder_args.min_n,
                        "Smallest group count in the scale ladder (default max(20, zones/20))");
        cmd->add_option("--steps", ladder_args.steps, "Ladder steps (default 8)");
        cmd->add_option("--samples", ladder_args.samples, "Partitions per scale (default 30)");
        cmd->add_option("--min-units", ladder_args.min_units,
                        "Smallest scale included in the MEI mean (default 20)");
    };

    auto* cmd_profile = app.add_subcommand("profile", "Scale-sensitivity profile of the indices");
    add_data_options(cmd_profile, data, true);
    cmd_profile->add_option("--adjacency", adjacency_path, "Contiguity CSV (zone_a,zone_b)")
        ->required()
        ->check(CLI::ExistingFile);
    add_ladder_options(cmd_profile);
    add_seed(cmd_profile);
    add_out(cmd_profile);

    auto* cmd_inmi = app.add_subcommand("inmi", "Net migration impact index against a benchmark");
    add_data_options(cmd_inmi, data, true);
    cmd_inmi->add_option("--adjacency", adjacency_path, "Contiguity CSV (zone_a,zone_b)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_inmi->add_option("--benchmark", benchmark_path, "Benchmark JSON")
        ->required()
        ->check(CLI::ExistingFile);
    add_ladder_options(cmd_inmi);
    add_seed(cmd_inmi);
    add_out(cmd_inmi);

    auto* cmd_cluster = app.add_subcommand("cluster", "k-means over system summaries");
    cmd_cluster->add_option("--summaries", summaries_path, "Summary CSV (label,cmi_slope,mean_mei)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_cluster->add_option("--benchmark", benchmark_path, "Benchmark JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_cluster->add_option("--k", cluster_k, "Cluster count (default 4)");
    cmd_cluster->add_option("--restarts", cluster_restarts, "Independent restarts (default 10)");
    cmd_cluster->add_option("--candidate-ks", candidate_ks,
                            "Extra cluster counts to report diagnostics for");
    add_seed(cmd_cluster);
    add_out(cmd_cluster);

    auto* cmd_timeseries = app.add_subcommand("timeseries", "Density-slope series across years");
    cmd_timeseries
        ->add_option("--zones", data.zones_path, "Zone table CSV shared by all years")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_timeseries
        ->add_option("--series", series_path,
                     "Manifest CSV (year,kind,path), kind matrix|marginals, paths relative to "
                     "the manifest")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_timeseries->add_option("--interval", data.interval, "Measurement interval (1 or 5)")
        ->check(CLI::IsMember({1, 5}));
    cmd_timeseries->add_option("--alpha", alpha, "Significance level (default 0.05)");
    cmd_timeseries->add_option("--variant", variant_name, "Response variant: raw or zscore")
        ->check(CLI::IsMember({"raw", "zscore"}));
    add_out(cmd_timeseries);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const auto variant = [&variant_name] {
        return variant_name == "raw" ? netmig::RateVariant::RawRate : netmig::RateVariant::ZScore;
    }();

    if (cmd_validate->parsed()) {
        return run_command([&] {
            const netmig::MigrationSystem system = load_from_args(data);
            ordered_json doc;
            doc["label"] = system.label;
            doc["year"] = system.year;
            doc["interval"] = system.interval;
            doc["zones"] = system.zones.size();
            doc["population"] = system.zones.total_population();
            doc["flow_kind"] =
                system.flows.kind() == netmig::FlowKind::FullMatrix ? "matrix" : "marginals";
            doc["migrants"] = system.flows.total_migrants();
            doc["diagonal_rows_dropped"] = system.flows.diagonal_dropped();
            if (!adjacency_path.empty()) {
                const netmig::AdjacencyGraph graph =
                    netmig::load_adjacency(adjacency_path, system.zones);
                doc["adjacency"] = {{"edges", graph.edge_count()}, {"connected", true}};
            }
            Reports reports;
            reports.stdout_text = dump_json(doc);
            reports.add_file("validation.json", reports.stdout_text);
            reports.flush(out_dir);
        });
    }

    if (cmd_indices->parsed()) {
        return run_command([&] {
            const netmig::MigrationSystem system = load_from_args(data);
            const ordered_json doc = indices_json(system);
            Reports reports;
            reports.stdout_text = dump_json(doc);
            reports.add_file("indices.json", reports.stdout_text);
            reports.flush(out_dir);
        });
    }

    if (cmd_regress->parsed()) {
        return run_command([&] {
            const netmig::MigrationSystem system = load_from_args(data);
            const netmig::DensityRegressionResult res =
                netmig::density_regression(system, variant);
            const netmig::RedistributionRegime regime =
                netmig::classify_redistribution(res.fit, alpha);

            ordered_json doc;
            doc["variant"] = netmig::to_string(res.variant);
            doc["slope"] = res.fit.slope;
            doc["intercept"] = res.fit.intercept;
            doc["robust_se_slope"] = res.fit.robust_se_slope;
            doc["t_slope"] = res.fit.t_slope;
            doc["p_slope"] = res.fit.p_slope;
            doc["adj_r2"] = res.fit.adj_r_squared;
            doc["n"] = res.fit.n;
            doc["regime"] = netmig::to_string(regime.label);
            std::vector<std::string> flags = res.warnings;
            if (regime.unusual_large_insignificant)
                flags.push_back("unusual: slope magnitude above 0.5 but not significant");

            Reports reports;
            std::ostringstream ztable;
            try {
                const netmig::ZScoreTable table =
                    netmig::zscore_table(netmig::net_migration_rates(system));
                ztable << "zone_id,nmr_percent,z,bin\n";
                for (const netmig::ZScoreRow& row : table.rows)
                    ztable << netmig::csv::quote(row.zone_id) << ','
                           << netmig::csv::fmt_sig6(row.nmr_percent) << ','
                           << netmig::csv::fmt_sig6(row.z) << ',' << row.bin << '\n';
                reports.add_file("zscores.csv", ztable.str());
            } catch (const netmig::DegenerateSpreadError&) {
                flags.push_back("z-score table unavailable: all zone rates identical");
            }
            doc["flags"] = flags;
            reports.stdout_text = dump_json(doc);
            reports.add_file("regression.json", reports.stdout_text);
            reports.flush(out_dir);
        });
    }

    if (cmd_profile->parsed()) {
        return run_command([&] {
            const netmig::MigrationSystem system = load_from_args(data);
            const netmig::AdjacencyGraph graph =
                netmig::load_adjacency(adjacency_path, system.zones);
            const ProfileOutput po = run_profile(system, graph, ladder_args, seed);
            Reports reports;
            reports.stdout_text = dump_json(profile_json(system, po, ladder_args, seed));
            reports.add_file("profile.json", reports.stdout_text);
            reports.add_file("profile.csv", profile_csv(po.profile));
            reports.flush(out_dir);
        });
    }

    if (cmd_inmi->parsed()) {
        return run_command([&] {
            const netmig::MigrationSystem system = load_from_args(data);
            const netmig::AdjacencyGraph graph =
                netmig::load_adjacency(adjacency_path, system.zones);
            const netmig::Benchmark benchmark = netmig::load_benchmark(benchmark_path);
            const ProfileOutput po = run_profile(system, graph, ladder_args, seed);
            const netmig::CountrySummary summary{system.label, po.fit.slope, po.mean_mei};
            const netmig::InmiResult inmi = netmig::compute_inmi(summary, benchmark);

            ordered_json doc;
            doc["label"] = system.label;
            doc["cmi_slope"] = po.fit.slope;
            doc["mean_mei"] = po.mean_mei;
            doc["min_units"] = ladder_args.min_units;
            doc["benchmark"] = {{"avg_cmi_slope", benchmark.avg_cmi_slope},
                                {"avg_mei", benchmark.avg_mei},
                                {"sample_size", benchmark.sample_size},
                                {"note", benchmark.note}};
            doc["c_ratio"] = inmi.c_ratio;
            doc["r_ratio"] = inmi.r_ratio;
            doc["inmi"] = inmi.inmi;

            Reports reports;
            reports.stdout_text = dump_json(doc);
            reports.add_file("inmi.json", reports.stdout_text);
            reports.add_file("profile.csv", profile_csv(po.profile));
            reports.flush(out_dir);
        });
    }

    if (cmd_cluster->parsed()) {
        return run_command([&] {
            const std::vector<netmig::CountrySummary> summaries =
                netmig::load_summaries(summaries_path);
            const netmig::Benchmark benchmark = netmig::load_benchmark(benchmark_path);
            std::vector<netmig::LabeledPoint> points;
            points.reserve(summaries.size());
            for (const netmig::CountrySummary& s : summaries) {
                const netmig::InmiResult r = netmig::compute_inmi(s, benchmark);
                points.push_back({s.label, r.c_ratio, r.r_ratio});
            }
            const netmig::ClusterResult result =
                netmig::kmeans_cluster(points, cluster_k, cluster_restarts, seed);

            std::ostringstream table;
            table << "label,C,R,inmi,cluster\n";
            for (std::size_t i = 0; i < result.labels.size(); ++i) {
                const netmig::LabeledPoint* point = nullptr;
                for (const netmig::LabeledPoint& p : points)
                    if (p.label == result.labels[i]) point = &p;
                table << netmig::csv::quote(result.labels[i]) << ','
                      << netmig::csv::fmt_sig6(point->c) << ','
                      << netmig::csv::fmt_sig6(point->r) << ','
                      << netmig::csv::fmt_sig6(point->c * point->r) << ','
                      << result.assignments[i] << '\n';
            }

            ordered_json doc;
            doc["k"] = result.k;
            doc["restarts"] = result.restarts;
            doc["seed"] = result.seed;
            doc["inertia"] = result.inertia;
            doc["centroids"] = ordered_json::array();
            for (const auto& c : result.centroids) doc["centroids"].push_back({c[0], c[1]});

            Reports reports;
            reports.stdout_text = dump_json(doc);
            reports.add_file("clusters.json", reports.stdout_text);
            reports.add_file("clusters.csv", table.str());
            if (!candidate_ks.empty()) {
                const auto diags =
                    netmig::evaluate_k(points, candidate_ks, cluster_restarts, seed);
                std::ostringstream ktable;
                ktable << "k,inertia,mean_silhouette\n";
                for (const auto& [k, diag] : diags) {
                    ktable << k << ',' << netmig::csv::fmt_sig6(diag.inertia) << ',';
                    if (diag.mean_silhouette) ktable << netmig::csv::fmt_sig6(*diag.mean_silhouette);
                    ktable << '\n';
                }
                reports.add_file("k_diagnostics.csv", ktable.str());
            }
            reports.flush(out_dir);
        });
    }

    if (cmd_timeseries->parsed()) {
        return run_command([&] {
            const netmig::ZoneSet zones = netmig::load_zones(data.zones_path);
            auto manifest_in = netmig::open_input(series_path);
            netmig::csv::Reader reader(manifest_in, series_path);
            netmig::csv::Row row;
            if (!reader.next(row))
                throw netmig::ValidationError(series_path + ": empty file");
            netmig::csv::expect_header(reader, row, {"year", "kind", "path"});
            std::vector<netmig::MigrationSystem> series;
            const fs::path base_dir = fs::path(series_path).parent_path();
            while (reader.next(row)) {
                netmig::csv::expect_columns(reader, row, 3);
                const int year =
                    static_cast<int>(netmig::csv::parse_int(reader, row, 0, "year"));
                const std::string& kind = row.fields[1];
                if (kind != "matrix" && kind != "marginals")
                    throw netmig::ValidationError(netmig::csv::where(reader, row) +
                                                  ": kind must be 'matrix' or 'marginals'");
                const fs::path flow_path = base_dir / row.fields[2];
                auto flow_in = netmig::open_input(flow_path);
                netmig::FlowData flows =
                    kind == "matrix"
                        ? netmig::load_matrix_flows(flow_in, zones, flow_path.string())
                        : netmig::load_marginal_flows(flow_in, zones, flow_path.string());
                series.emplace_back(zones, std::move(flows), data.label, year, data.interval);
            }
            const std::vector<netmig::YearFit> fits =
                netmig::time_series_slopes(series, variant, alpha);

            std::ostringstream table;
            table << "year,slope,robust_se,p,adj_r2,regime\n";
            for (const netmig::YearFit& yf : fits)
                table << yf.year << ',' << netmig::csv::fmt_sig6(yf.result.fit.slope) << ','
                      << netmig::csv::fmt_sig6(yf.result.fit.robust_se_slope) << ','
                      << netmig::csv::fmt_sig6(yf.result.fit.p_slope) << ','
                      << netmig::csv::fmt_sig6(yf.result.fit.adj_r_squared) << ','
                      << netmig::to_string(yf.regime.label) << '\n';

            Reports reports;
            reports.stdout_text = table.str();
            reports.add_file("timeseries.csv", table.str());
            reports.flush(out_dir);
        });
    }

    return 2;
}
