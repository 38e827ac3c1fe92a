#pragma once

// Cross-system comparison: the index of net migration impact (INMI) and
// k-means grouping of systems on the (C, R) plane, where C is the CMI
// slope relative to a benchmark average and R the mean effectiveness
// relative to the benchmark average.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "netmig/errors.hpp"
#include "netmig/rng.hpp"

namespace netmig {

// Reference averages the ratios are taken against, typically computed over
// a large multi-country sample.
struct Benchmark {
    double avg_cmi_slope = 0.0;
    double avg_mei = 0.0;
    std::uint64_t sample_size = 0;
    std::string note;
};

inline void validate_benchmark(const Benchmark& b) {
    if (!std::isfinite(b.avg_cmi_slope) || b.avg_cmi_slope <= 0.0)
        throw ValidationError("benchmark average CMI slope must be positive");
    if (!std::isfinite(b.avg_mei) || b.avg_mei <= 0.0 || b.avg_mei > 100.0)
        throw ValidationError("benchmark average MEI must lie in (0, 100]");
}

// One system's aggregation summary: fitted CMI slope and scale-stable mean
// effectiveness.
struct CountrySummary {
    std::string label;
    double cmi_slope = 0.0;
    double mean_mei = 0.0;
};

struct InmiResult {
    double c_ratio = 0.0;
    double r_ratio = 0.0;
    double inmi = 0.0;
};

// INMI = (slope / benchmark slope) * (mean MEI / benchmark MEI).  A value
// above 1 marks migration that redistributes more population than the
// benchmark sample average.
inline InmiResult compute_inmi(const CountrySummary& summary, const Benchmark& benchmark) {
    validate_benchmark(benchmark);
    if (!std::isfinite(summary.cmi_slope) || summary.cmi_slope < 0.0)
        throw ValidationError("summary '" + summary.label +
                              "' has a negative CMI slope; the impact ratio is undefined");
    if (!std::isfinite(summary.mean_mei) || summary.mean_mei < 0.0 || summary.mean_mei > 100.0)
        throw ValidationError("summary '" + summary.label +
                              "' has mean MEI outside [0, 100]");
    InmiResult r;
    r.c_ratio = summary.cmi_slope / benchmark.avg_cmi_slope;
    r.r_ratio = summary.mean_mei / benchmark.avg_mei;
    r.inmi = r.c_ratio * r.r_ratio;
    return r;
}

// A labeled point on the (C, R) plane.
struct LabeledPoint {
    std::string label;
    double c = 0.0;
    double r = 0.0;
};

struct ClusterResult {
    std::vector<std::string> labels;           // sorted by label
    std::vector<std::uint32_t> assignments;    // parallel to labels
    std::vector<std::array<double, 2>> centroids;
    double inertia = 0.0;
    std::vector<double> inertia_trace;         // winning restart, one entry per pass
    std::uint32_t k = 0;
    std::uint32_t restarts = 0;
    std::uint64_t seed = 0;
};

namespace detail {

inline double sq_dist(double ax, double ay, double bx, double by) {
    const double dx = ax - bx;
    const double dy = ay - by;
    return dx * dx + dy * dy;
}

struct KmeansRun {
    std::vector<std::uint32_t> assignment;
    std::vector<std::array<double, 2>> centroids;
    std::vector<double> trace;
    double inertia = std::numeric_limits<double>::infinity();
};

// One seeded k-means run: distance-weighted initialization, then Lloyd
// iterations until assignments stop changing (capped at 300 passes).
// Ties in nearest-centroid assignment go to the lowest centroid index, and
// an emptied cluster is re-seeded at the point farthest from its current
// centroid (ties again to the lowest point index), so the whole run is a
// pure function of the seed.
inline KmeansRun kmeans_once(const std::vector<std::array<double, 2>>& pts, std::uint32_t k,
                             std::uint64_t seed) {
    const std::size_t n = pts.size();
    Rng rng(seed);
    KmeansRun run;
    run.centroids.reserve(k);
    run.centroids.push_back(pts[rng.uniform_below(n)]);
    std::vector<double> d2(n, 0.0);
    while (run.centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : run.centroids)
                best = std::fmin(best, sq_dist(pts[i][0], pts[i][1], c[0], c[1]));
            d2[i] = best;
            total += best;
        }
        if (total == 0.0) {
            run.centroids.push_back(pts[rng.uniform_below(n)]);
            continue;
        }
        const double target = rng.uniform_double() * total;
        double cum = 0.0;
        std::size_t chosen = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            cum += d2[i];
            if (cum > target) {
                chosen = i;
                break;
            }
        }
        run.centroids.push_back(pts[chosen]);
    }

    run.assignment.assign(n, 0);
    std::vector<std::uint32_t> previous(n, 0xffffffffu);
    for (int pass = 0; pass < 300; ++pass) {
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::uint32_t who = 0;
            for (std::uint32_t c = 0; c < k; ++c) {
                const double d = sq_dist(pts[i][0], pts[i][1], run.centroids[c][0],
                                         run.centroids[c][1]);
                if (d < best) {
                    best = d;
                    who = c;
                }
            }
            run.assignment[i] = who;
            inertia += best;
        }
        run.trace.push_back(inertia);
        run.inertia = inertia;
        if (run.assignment == previous) break;
        previous = run.assignment;

        std::vector<std::array<double, 2>> sums(k, {0.0, 0.0});
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums[run.assignment[i]][0] += pts[i][0];
            sums[run.assignment[i]][1] += pts[i][1];
            ++counts[run.assignment[i]];
        }
        for (std::uint32_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                run.centroids[c] = {sums[c][0] / static_cast<double>(counts[c]),
                                    sums[c][1] / static_cast<double>(counts[c])};
            } else {
                double far = -1.0;
                std::size_t who = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d =
                        sq_dist(pts[i][0], pts[i][1], run.centroids[run.assignment[i]][0],
                                run.centroids[run.assignment[i]][1]);
                    if (d > far) {
                        far = d;
                        who = i;
                    }
                }
                if (far > 0.0) run.centroids[c] = pts[who];
            }
        }
    }
    return run;
}

}  // namespace detail

// Groups labeled (C, R) points into k clusters.  Points are processed in
// label order, so input order never matters.  The best of `restarts`
// independent runs (lowest inertia, ties to the earliest restart) wins, and
// cluster ids are renumbered in order of first appearance.
inline ClusterResult kmeans_cluster(const std::vector<LabeledPoint>& points, std::uint32_t k,
                                    std::uint32_t restarts, std::uint64_t seed) {
    const std::size_t n = points.size();
    if (n == 0) throw ValidationError("cannot cluster an empty point set");
    if (k < 1 || k > n)
        throw ValidationError("cluster count must lie in [1, " + std::to_string(n) + "], got " +
                              std::to_string(k));
    if (restarts < 1) throw ValidationError("clustering needs at least 1 restart");
    for (const LabeledPoint& p : points)
        if (!std::isfinite(p.c) || !std::isfinite(p.r))
            throw ValidationError("point '" + p.label + "' has non-finite coordinates");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&points](std::size_t a, std::size_t b) {
        return points[a].label < points[b].label;
    });
    std::vector<std::array<double, 2>> pts(n);
    ClusterResult result;
    result.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        pts[i] = {points[order[i]].c, points[order[i]].r};
        result.labels.push_back(points[order[i]].label);
    }
    // The label order is the canonical point order, so it must be unambiguous.
    for (std::size_t i = 1; i < n; ++i)
        if (result.labels[i] == result.labels[i - 1])
            throw ValidationError("duplicate point label '" + result.labels[i] + "'");

    detail::KmeansRun best;
    for (std::uint32_t r = 0; r < restarts; ++r) {
        detail::KmeansRun run = detail::kmeans_once(pts, k, derive_seed(seed, r, 0));
        if (run.inertia < best.inertia) best = std::move(run);
    }

    // Renumber clusters by first appearance; clusters that stayed empty
    // keep their relative order at the end.
    std::vector<std::uint32_t> relabel(k, 0xffffffffu);
    std::uint32_t next = 0;
    for (std::uint32_t a : best.assignment)
        if (relabel[a] == 0xffffffffu) relabel[a] = next++;
    for (std::uint32_t c = 0; c < k; ++c)
        if (relabel[c] == 0xffffffffu) relabel[c] = next++;
    result.assignments.resize(n);
    for (std::size_t i = 0; i < n; ++i) result.assignments[i] = relabel[best.assignment[i]];
    result.centroids.assign(k, {0.0, 0.0});
    for (std::uint32_t c = 0; c < k; ++c) result.centroids[relabel[c]] = best.centroids[c];
    result.inertia = best.inertia;
    result.inertia_trace = std::move(best.trace);
    result.k = k;
    result.restarts = restarts;
    result.seed = seed;
    return result;
}

// Chance-adjusted agreement between two flat partitions of the same items.
// 1 means identical grouping; values near 0 mean no better than chance.
// When the adjustment denominator vanishes (for example both partitions
// put everything in one group) the partitions agree trivially and the
// index is 1.
inline double adjusted_rand_index(const std::vector<std::uint32_t>& a,
                                  const std::vector<std::uint32_t>& b) {
    if (a.size() != b.size())
        throw ValidationError("partitions differ in length");
    const std::size_t n = a.size();
    if (n == 0) throw ValidationError("partitions are empty");
    auto comb2 = [](double m) { return m * (m - 1.0) / 2.0; };
    std::unordered_map<std::uint64_t, double> cells;
    std::unordered_map<std::uint32_t, double> rows, cols;
    for (std::size_t i = 0; i < n; ++i) {
        cells[(static_cast<std::uint64_t>(a[i]) << 32) | b[i]] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, count] : cells) sum_cells += comb2(count);
    for (const auto& [key, count] : rows) sum_rows += comb2(count);
    for (const auto& [key, count] : cols) sum_cols += comb2(count);
    const double total = comb2(static_cast<double>(n));
    const double expected = sum_rows * sum_cols / total;
    const double maximum = (sum_rows + sum_cols) / 2.0;
    const double denom = maximum - expected;
    if (denom == 0.0) return 1.0;
    return (sum_cells - expected) / denom;
}

namespace detail {

// Mean silhouette width over all points; absent when every point is its
// own cluster (k >= n) or there is only one cluster.
inline std::optional<double> mean_silhouette(const std::vector<std::array<double, 2>>& pts,
                                             const std::vector<std::uint32_t>& assignment,
                                             std::uint32_t k) {
    const std::size_t n = pts.size();
    if (k < 2 || k >= n) return std::nullopt;
    std::vector<std::size_t> sizes(k, 0);
    for (std::uint32_t a : assignment) ++sizes[a];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> mean_dist(k, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            mean_dist[assignment[j]] +=
                std::sqrt(sq_dist(pts[i][0], pts[i][1], pts[j][0], pts[j][1]));
        }
        const std::uint32_t own = assignment[i];
        double s = 0.0;
        if (sizes[own] > 1) {
            const double a_i = mean_dist[own] / static_cast<double>(sizes[own] - 1);
            double b_i = std::numeric_limits<double>::infinity();
            for (std::uint32_t c = 0; c < k; ++c) {
                if (c == own || sizes[c] == 0) continue;
                b_i = std::fmin(b_i, mean_dist[c] / static_cast<double>(sizes[c]));
            }
            if (std::isfinite(b_i)) {
                const double denom = std::fmax(a_i, b_i);
                if (denom > 0.0) s = (b_i - a_i) / denom;
            }
        }
        total += s;
    }
    return total / static_cast<double>(n);
}

}  // namespace detail

struct KDiagnostics {
    double inertia = 0.0;
    std::optional<double> mean_silhouette;
};

// Inertia and mean silhouette for each candidate cluster count, to support
// choosing k.  Each candidate gets its own derived seed, so extending the
// candidate list never changes earlier entries.
inline std::map<std::uint32_t, KDiagnostics> evaluate_k(const std::vector<LabeledPoint>& points,
                                                        const std::vector<std::uint32_t>& ks,
                                                        std::uint32_t restarts,
                                                        std::uint64_t seed) {
    if (ks.empty()) throw ValidationError("no candidate cluster counts given");
    // Rebuild the label-sorted point order kmeans_cluster uses, so the
    // silhouette sees points in the same order as the assignments.
    std::vector<std::size_t> order(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&points](std::size_t a, std::size_t b) {
        return points[a].label < points[b].label;
    });
    std::vector<std::array<double, 2>> pts(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        pts[i] = {points[order[i]].c, points[order[i]].r};

    std::map<std::uint32_t, KDiagnostics> out;
    for (std::uint32_t k : ks) {
        const ClusterResult r = kmeans_cluster(points, k, restarts, derive_seed(seed, k, 1));
        KDiagnostics diag;
        diag.inertia = r.inertia;
        diag.mean_silhouette = detail::mean_silhouette(pts, r.assignments, k);
        out[k] = diag;
    }
    return out;
}

struct StabilityResult {
    double mean_agreement = 0.0;
    bool degenerate = false;
};

// Mean pairwise assignment agreement across clustering runs with different
// seeds.  A point set with no variation at all cannot be grouped two ways,
// so it scores 1 and is flagged degenerate.
inline StabilityResult seed_stability(const std::vector<LabeledPoint>& points, std::uint32_t k,
                                      const std::vector<std::uint64_t>& seeds,
                                      std::uint32_t restarts = 1) {
    if (seeds.size() < 2)
        throw ValidationError("seed stability needs at least 2 seeds, got " +
                              std::to_string(seeds.size()));
    if (points.empty()) throw ValidationError("cannot cluster an empty point set");
    bool all_same = true;
    for (const LabeledPoint& p : points)
        if (p.c != points.front().c || p.r != points.front().r) all_same = false;
    if (all_same) return {1.0, true};

    std::vector<std::vector<std::uint32_t>> runs;
    runs.reserve(seeds.size());
    for (std::uint64_t s : seeds) runs.push_back(kmeans_cluster(points, k, restarts, s).assignments);
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < runs.size(); ++i)
        for (std::size_t j = i + 1; j < runs.size(); ++j) {
            sum += adjusted_rand_index(runs[i], runs[j]);
            ++pairs;
        }
    return {sum / static_cast<double>(pairs), false};
}

}  // namespace netmig
