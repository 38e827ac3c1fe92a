#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "netmig/aggregation.hpp"
#include "netmig/errors.hpp"
#include "netmig/indices.hpp"
#include "netmig/regression.hpp"
#include "netmig/rng.hpp"
#include "netmig/system.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace netmig;

namespace {

MigrationSystem balanced_system(std::size_t n) {
    std::vector<Zone> zones;
    std::vector<double> cells(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        zones.push_back({synthetic::zone_id(i), "", 100.0 + 10.0 * double(i),
                         1.0 + double(i % 7)});
        cells[i * n + (i + 1) % n] = 5.0;
        cells[i * n + (i + n - 1) % n] = 5.0;
    }
    return MigrationSystem(ZoneSet(std::move(zones)),
                           FlowData::full_matrix(n, std::move(cells)), "balanced", 2020, 1);
}

}  // namespace

TEST_CASE("an exact line fits with zero robust error") {
    const std::vector<double> x = {0, 1, 2}, y = {1, 3, 5}, w = {1, 1, 1};
    const WeightedOlsFit fit = weighted_ols(x, y, w);
    CHECK(fit.slope == 2.0);
    CHECK(fit.intercept == 1.0);
    CHECK(fit.robust_se_slope == 0.0);
    CHECK(fit.robust_se_intercept == 0.0);
    CHECK(fit.adj_r_squared == 1.0);
    CHECK(fit.p_slope == 0.0);
    CHECK(fit.n == 3);
}

TEST_CASE("three-point fit matches the hand-solved normal equations") {
    const std::vector<double> x = {0, 1, 2}, y = {0, 1, 1}, w = {1, 1, 1};
    const WeightedOlsFit fit = weighted_ols(x, y, w);
    CHECK(fit.slope == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(fit.intercept == Catch::Approx(1.0 / 6.0).epsilon(1e-14));
    // frozen hand sandwich: var_slope = 1/72, var_intercept = 7/216
    CHECK(fit.robust_se_slope == Catch::Approx(std::sqrt(1.0 / 72.0)).epsilon(1e-14));
    CHECK(fit.robust_se_intercept == Catch::Approx(std::sqrt(7.0 / 216.0)).epsilon(1e-14));
    CHECK(fit.t_slope == Catch::Approx(0.5 / std::sqrt(1.0 / 72.0)).epsilon(1e-14));
    CHECK(fit.adj_r_squared == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(fit.p_slope > 0.0);
    CHECK(fit.p_slope < 1.0);
}

TEST_CASE("weighted_ols rejects bad inputs") {
    const std::vector<double> x2 = {0, 1}, y2 = {1, 2}, w2 = {1, 1};
    const std::vector<double> x3 = {0, 1, 2}, y3 = {1, 2, 3}, w3 = {1, 1, 1};
    const std::vector<double> flat = {1, 1, 1}, zero_w = {1, 0, 1};
    CHECK_THROWS_AS(weighted_ols(x2, y2, w2), ValidationError);
    CHECK_THROWS_AS(weighted_ols(flat, y3, w3), ValidationError);
    CHECK_THROWS_AS(weighted_ols(x3, y3, zero_w), ValidationError);
    CHECK_THROWS_AS(weighted_ols(x3, y2, w3), ValidationError);
}

TEST_CASE("power-of-two weight scaling is exactly invariant") {
    Rng rng(derive_seed(601, 0, 0));
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 3 + rng.uniform_below(9);
        std::vector<double> x(n), y(n), w(n), w4(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = 10.0 * rng.uniform_double();
            y[i] = 5.0 - 10.0 * rng.uniform_double();
            w[i] = 0.5 + 9.5 * rng.uniform_double();
            w4[i] = 4.0 * w[i];
        }
        const double spread = *std::max_element(x.begin(), x.end()) -
                              *std::min_element(x.begin(), x.end());
        if (spread < 0.25) continue;
        const WeightedOlsFit a = weighted_ols(x, y, w);
        const WeightedOlsFit b = weighted_ols(x, y, w4);
        CHECK(a.slope == b.slope);
        CHECK(a.intercept == b.intercept);
        CHECK(a.robust_se_slope == b.robust_se_slope);
        CHECK(a.robust_se_intercept == b.robust_se_intercept);
        CHECK(a.t_slope == b.t_slope);
        CHECK(a.p_slope == b.p_slope);
        CHECK(a.adj_r_squared == b.adj_r_squared);
    }
}

TEST_CASE("general positive weight scaling is invariant to rounding noise") {
    Rng rng(derive_seed(602, 0, 0));
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 4 + rng.uniform_below(8);
        std::vector<double> x(n), y(n), w(n), w10(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = double(i) + rng.uniform_double();
            y[i] = 3.0 * rng.uniform_double();
            w[i] = 0.5 + rng.uniform_double();
            w10[i] = 10.0 * w[i];
        }
        const WeightedOlsFit a = weighted_ols(x, y, w);
        const WeightedOlsFit b = weighted_ols(x, y, w10);
        CHECK(b.slope == Catch::Approx(a.slope).epsilon(1e-13).margin(1e-13));
        CHECK(b.robust_se_slope ==
              Catch::Approx(a.robust_se_slope).epsilon(1e-13).margin(1e-13));
        CHECK(b.t_slope == Catch::Approx(a.t_slope).epsilon(1e-12).margin(1e-12));
        CHECK(b.p_slope == Catch::Approx(a.p_slope).epsilon(1e-12).margin(1e-12));
        CHECK(b.adj_r_squared == Catch::Approx(a.adj_r_squared).epsilon(1e-13).margin(1e-13));
    }
}

TEST_CASE("shifting the predictor moves only the intercept") {
    Rng rng(derive_seed(603, 0, 0));
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 5 + rng.uniform_below(6);
        std::vector<double> x(n), xs(n), y(n), w(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = double(i) + rng.uniform_double();
            xs[i] = x[i] + 3.25;
            y[i] = 2.0 * x[i] + rng.uniform_double();
            w[i] = 1.0 + rng.uniform_double();
        }
        const WeightedOlsFit a = weighted_ols(x, y, w);
        const WeightedOlsFit b = weighted_ols(xs, y, w);
        CHECK(b.slope == Catch::Approx(a.slope).epsilon(1e-10));
        CHECK(b.robust_se_slope == Catch::Approx(a.robust_se_slope).epsilon(1e-10));
        CHECK(b.t_slope == Catch::Approx(a.t_slope).epsilon(1e-10));
        CHECK(b.intercept == Catch::Approx(a.intercept - 3.25 * a.slope).margin(1e-9));
    }
}

TEST_CASE("weighted_ols agrees with the brute-force matrix oracle") {
    Rng rng(derive_seed(604, 0, 0));
    int checked = 0;
    while (checked < 200) {
        const std::size_t n = 3 + rng.uniform_below(10);
        std::vector<double> x(n), y(n), w(n);
        double lo = 1e9, hi = -1e9;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = 10.0 * rng.uniform_double();
            lo = std::min(lo, x[i]);
            hi = std::max(hi, x[i]);
            w[i] = 0.1 + 9.9 * rng.uniform_double();
        }
        if (hi - lo < 0.5) continue;
        const double b = (rng.uniform_double() < 0.5 ? -1.0 : 1.0) *
                         (0.5 + 2.5 * rng.uniform_double());
        const double a = (rng.uniform_double() < 0.5 ? -1.0 : 1.0) *
                         (1.0 + 4.0 * rng.uniform_double());
        for (std::size_t i = 0; i < n; ++i)
            y[i] = b * x[i] + a + (2.0 * rng.uniform_double() - 1.0);

        const WeightedOlsFit fit = weighted_ols(x, y, w);
        const oracles::BruteWls oracle = oracles::brute_wls(x, y, w);
        if (std::abs(oracle.slope) < 1e-3 || std::abs(oracle.intercept) < 1e-3 ||
            oracle.se_slope < 1e-6 || oracle.se_intercept < 1e-6)
            continue;  // keep relative comparisons meaningful
        ++checked;
        CHECK(oracles::relative_gap(fit.slope, oracle.slope) < 1e-10);
        CHECK(oracles::relative_gap(fit.intercept, oracle.intercept) < 1e-10);
        CHECK(oracles::relative_gap(fit.robust_se_slope, oracle.se_slope) < 1e-10);
        CHECK(oracles::relative_gap(fit.robust_se_intercept, oracle.se_intercept) < 1e-10);
        CHECK(oracles::relative_gap(fit.t_slope, oracle.t_slope) < 1e-10);
        CHECK(oracles::relative_gap(fit.adj_r_squared, oracle.adj_r_squared) < 1e-10);
    }
}

TEST_CASE("balanced flows regress to a flat spatial-equilibrium line") {
    const MigrationSystem system = balanced_system(12);
    const DensityRegressionResult res = density_regression(system, RateVariant::RawRate);
    CHECK(res.fit.slope == 0.0);
    CHECK(res.fit.adj_r_squared == 0.0);
    const RedistributionRegime regime = classify_redistribution(res.fit);
    CHECK(regime.label == RegimeLabel::SpatialEquilibrium);
}

TEST_CASE("density regression records per-zone predictors and weights") {
    const MigrationSystem system = balanced_system(8);
    const DensityRegressionResult res = density_regression(system, RateVariant::RawRate);
    REQUIRE(res.records.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        const Zone& z = system.zones.zone(i);
        CHECK(res.records[i].zone_id == z.id);
        CHECK(res.records[i].weight == z.population);
        CHECK(res.records[i].log10_density ==
              Catch::Approx(std::log10(z.population / z.area_km2)).epsilon(1e-14));
    }
    CHECK(res.variant == RateVariant::RawRate);
}

TEST_CASE("small systems carry an instability warning") {
    const MigrationSystem system = balanced_system(8);
    const DensityRegressionResult res = density_regression(system, RateVariant::RawRate);
    bool warned = false;
    for (const std::string& w : res.warnings)
        if (w.find("unstable") != std::string::npos) warned = true;
    CHECK(warned);

    const MigrationSystem big = balanced_system(31);
    CHECK(density_regression(big, RateVariant::RawRate).warnings.empty());
}

TEST_CASE("density regression rejects degenerate inputs") {
    // constant density: population proportional to area
    std::vector<Zone> zones;
    std::vector<double> cells(9, 0.0);
    for (std::size_t i = 0; i < 3; ++i)
        zones.push_back({synthetic::zone_id(i), "", 100.0 * (i + 1.0), 1.0 * (i + 1.0)});
    cells[1] = 2;
    cells[3] = 2;
    const MigrationSystem flat(ZoneSet(std::move(zones)),
                               FlowData::full_matrix(3, std::move(cells)), "flat", 2020, 1);
    CHECK_THROWS_AS(density_regression(flat, RateVariant::RawRate), ValidationError);

    // zero-population zone
    std::vector<Zone> zzones = {{"a", "", 10.0, 1.0}, {"b", "", 0.0, 2.0}, {"c", "", 9.0, 3.0}};
    std::vector<double> zcells = {0, 1, 0, 1, 0, 0, 0, 0, 0};
    const MigrationSystem zp(ZoneSet(std::move(zzones)),
                             FlowData::full_matrix(3, std::move(zcells)), "zp", 2020, 1);
    CHECK_THROWS_AS(density_regression(zp, RateVariant::RawRate), ValidationError);
}

TEST_CASE("planted coefficient is recovered from marginal data") {
    const MigrationSystem system =
        synthetic::planted_marginals(100, 0.5, 1.0, derive_seed(555, 3, 0));
    const DensityRegressionResult res = density_regression(system, RateVariant::RawRate);
    CHECK(std::abs(res.fit.slope - 0.5) <= 2.0 * res.fit.robust_se_slope);
    CHECK(res.fit.slope > 0.0);
}

TEST_CASE("raw and z-scored variants share t statistics and regimes") {
    for (std::uint64_t s = 0; s < 12; ++s) {
        const MigrationSystem system =
            synthetic::planted_marginals(40, (s % 3 == 0 ? 0.4 : -0.3), 1.5,
                                         derive_seed(606, s, 0));
        const DensityRegressionResult raw = density_regression(system, RateVariant::RawRate);
        const DensityRegressionResult zs = density_regression(system, RateVariant::ZScore);
        CHECK(oracles::relative_gap(raw.fit.t_slope, zs.fit.t_slope) < 1e-9);
        CHECK(classify_redistribution(raw.fit).label == classify_redistribution(zs.fit).label);
        CHECK((raw.fit.slope > 0) == (zs.fit.slope > 0));
    }
}

TEST_CASE("regime classification follows sign and significance") {
    WeightedOlsFit fit;
    fit.n = 26;
    fit.slope = 0.728;
    fit.p_slope = 0.0001;
    CHECK(classify_redistribution(fit).label == RegimeLabel::Concentration);

    fit.slope = -0.875;
    CHECK(classify_redistribution(fit).label == RegimeLabel::Deconcentration);

    fit.slope = 0.02;
    fit.p_slope = 0.62;
    CHECK(classify_redistribution(fit).label == RegimeLabel::SpatialEquilibrium);

    // exactly zero slope is equilibrium even when "significant"
    fit.slope = 0.0;
    fit.p_slope = 0.0;
    CHECK(classify_redistribution(fit).label == RegimeLabel::SpatialEquilibrium);
}

TEST_CASE("alpha boundary: p equal to alpha is not significant") {
    WeightedOlsFit fit;
    fit.n = 26;
    fit.slope = 0.3;
    fit.p_slope = 0.05;
    CHECK(classify_redistribution(fit, 0.05).label == RegimeLabel::SpatialEquilibrium);
    fit.p_slope = 0.0499;
    CHECK(classify_redistribution(fit, 0.05).label == RegimeLabel::Concentration);
    CHECK_THROWS_AS(classify_redistribution(fit, 0.0), ValidationError);
    CHECK_THROWS_AS(classify_redistribution(fit, 1.0), ValidationError);
}

TEST_CASE("large insignificant slopes are flagged as unusual") {
    WeightedOlsFit fit;
    fit.n = 26;
    fit.slope = 0.678;
    fit.p_slope = 0.21;
    const RedistributionRegime regime = classify_redistribution(fit);
    CHECK(regime.label == RegimeLabel::SpatialEquilibrium);
    CHECK(regime.unusual_large_insignificant);

    fit.slope = 0.3;
    CHECK_FALSE(classify_redistribution(fit).unusual_large_insignificant);
    fit.slope = 0.9;
    fit.p_slope = 0.001;
    CHECK_FALSE(classify_redistribution(fit).unusual_large_insignificant);
}

TEST_CASE("z-score table standardizes and bins the published way") {
    const std::vector<ZoneRate> rates = {{"a", 1.0, 0}, {"b", 2.0, 0}, {"c", 3.0, 0}};
    const ZScoreTable table = zscore_table(rates);
    REQUIRE(table.rows.size() == 3);
    CHECK(table.mean == 2.0);
    CHECK(table.sd == 1.0);
    CHECK(table.rows[0].z == -1.0);
    CHECK(table.rows[1].z == 0.0);
    CHECK(table.rows[2].z == 1.0);
    CHECK(table.rows[0].bin == "-2.0–0.0");
    CHECK(table.rows[1].bin == "-2.0–0.0");
    CHECK(table.rows[2].bin == "0.0–2.0");
}

TEST_CASE("z-score bins own their boundaries as stated") {
    // construct rates whose z-scores hit -2.5, -2, 0, 2, 2.5 through direct binning
    const std::vector<ZoneRate> rates = {{"a", -5.0, 0}, {"b", 0.0, 0}, {"c", 5.0, 0},
                                         {"d", -1.0, 0}, {"e", 1.0, 0}};
    const ZScoreTable table = zscore_table(rates);
    for (const ZScoreRow& row : table.rows) {
        if (row.z < -2.0) CHECK(row.bin == "<-2.0");
        else if (row.z <= 0.0) CHECK(row.bin == "-2.0–0.0");
        else if (row.z <= 2.0) CHECK(row.bin == "0.0–2.0");
        else CHECK(row.bin == ">2.0");
    }

    // mean 0 and sample sd 1 whenever the spread is positive
    double mean = 0.0;
    for (const ZScoreRow& row : table.rows) mean += row.z;
    mean /= double(table.rows.size());
    double var = 0.0;
    for (const ZScoreRow& row : table.rows) var += (row.z - mean) * (row.z - mean);
    var /= double(table.rows.size() - 1);
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(var - 1.0) < 1e-10);
}

TEST_CASE("z-score extremes land in the open bins") {
    // nine tight values and one far outlier push the outlier beyond two sd
    std::vector<ZoneRate> rates;
    for (int i = 0; i < 9; ++i) rates.push_back({"z" + std::to_string(i), double(i % 2), 0});
    rates.push_back({"far", 40.0, 0});
    const ZScoreTable table = zscore_table(rates);
    CHECK(table.rows.back().z > 2.0);
    CHECK(table.rows.back().bin == ">2.0");
}

TEST_CASE("identical rates make the z-score table degenerate") {
    const std::vector<ZoneRate> rates = {{"a", 3.0, 0}, {"b", 3.0, 0}, {"c", 3.0, 0}};
    CHECK_THROWS_AS(zscore_table(rates), DegenerateSpreadError);
}

TEST_CASE("zscore variant falls back to zero scores on flat systems") {
    const MigrationSystem system = balanced_system(10);
    const DensityRegressionResult res = density_regression(system, RateVariant::ZScore);
    CHECK(res.fit.slope == 0.0);
    bool warned = false;
    for (const std::string& w : res.warnings)
        if (w.find("identical") != std::string::npos) warned = true;
    CHECK(warned);
}

TEST_CASE("time series fits one regression per year in year order") {
    const MigrationSystem y1 = balanced_system(10);
    MigrationSystem y2 = y1;
    y2.year = 2021;
    const std::vector<YearFit> fits =
        time_series_slopes({y2, y1}, RateVariant::RawRate, 0.05);
    REQUIRE(fits.size() == 2);
    CHECK(fits[0].year == 2020);
    CHECK(fits[1].year == 2021);
    CHECK(fits[0].result.fit.slope == 0.0);
    CHECK(fits[1].result.fit.slope == 0.0);
    CHECK(fits[0].regime.label == RegimeLabel::SpatialEquilibrium);
}

TEST_CASE("transposing the flow matrix negates the slope exactly") {
    const MigrationSystem base =
        synthetic::planted_grid_matrix(8, 8, 0.5, 0.3, derive_seed(607, 0, 0)).system;
    const std::size_t n = base.zones.size();
    std::vector<double> cells(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cells[j * n + i] = base.flows.flow(i, j);
    MigrationSystem flipped(base.zones, FlowData::full_matrix(n, std::move(cells)), base.label,
                            2021, base.interval);

    const std::vector<YearFit> fits =
        time_series_slopes({base, flipped}, RateVariant::RawRate, 0.05);
    REQUIRE(fits.size() == 2);
    CHECK(fits[1].result.fit.slope == -fits[0].result.fit.slope);
    CHECK(fits[1].result.fit.robust_se_slope == fits[0].result.fit.robust_se_slope);
}

TEST_CASE("time series rejects mismatched zone sets naming the odd id") {
    const MigrationSystem a = balanced_system(5);
    std::vector<Zone> zones;
    for (std::size_t i = 0; i < 5; ++i)
        zones.push_back({i == 2 ? "other" : synthetic::zone_id(i), "", 50.0, 1.0});
    std::vector<double> cells(25, 0.0);
    cells[1] = 1;
    cells[5] = 1;
    MigrationSystem b(ZoneSet(std::move(zones)), FlowData::full_matrix(5, std::move(cells)),
                      "b", 2021, 1);
    try {
        time_series_slopes({a, b}, RateVariant::RawRate, 0.05);
        FAIL("expected a zone-set mismatch");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("zone sets differ") != std::string::npos);
        CHECK(msg.find("'") != std::string::npos);
    }
}

TEST_CASE("aggregated slopes stay near the base slope at coarse scales") {
    const synthetic::GridSystem planted =
        synthetic::planted_grid_matrix(20, 20, 0.5, 0.25, 777);
    const MigrationSystem& base = planted.system;
    const AdjacencyGraph graph = AdjacencyGraph::from_edges(400, planted.edges);
    const double base_slope = density_regression(base, RateVariant::RawRate).fit.slope;
    REQUIRE(base_slope > 0.1);

    int within = 0, total = 0;
    for (std::uint32_t target : {40u, 120u}) {
        for (std::uint32_t s = 0; s < 10; ++s) {
            const Partition part =
                random_contiguous_partition(graph, target, derive_seed(888, target, s));
            const MigrationSystem merged = aggregate_system(base, part);
            const double slope = density_regression(merged, RateVariant::RawRate).fit.slope;
            ++total;
            if (std::abs(slope - base_slope) <= 0.25 * std::abs(base_slope)) ++within;
        }
    }
    CHECK(total == 20);
    CHECK(within >= 18);
}
