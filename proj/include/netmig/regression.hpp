#pragma once

// Population-weighted least squares of net migration rates on log10
// population density, with heteroskedasticity-robust (Huber-White HC0)
// standard errors, redistribution regime classification, z-score tables
// and multi-year series.
//
// A positive density slope means net gains concentrate in dense zones
// (concentration); a negative slope means the opposite; an insignificant
// slope reads as spatial equilibrium.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "netmig/errors.hpp"
#include "netmig/indices.hpp"
#include "netmig/system.hpp"

namespace netmig {

struct WeightedOlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double robust_se_slope = 0.0;
    double robust_se_intercept = 0.0;
    double t_slope = 0.0;
    double t_intercept = 0.0;
    double p_slope = 1.0;
    double p_intercept = 1.0;
    double adj_r_squared = 0.0;
    std::size_t n = 0;
};

// Two-sided p-value for a t statistic with df degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
    if (std::isinf(t)) return 0.0;
    boost::math::students_t_distribution<double> dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

// Weighted least squares y = a + b*x with HC0 sandwich standard errors:
//   V = (X'WX)^-1 (X'W diag(e^2) WX) (X'WX)^-1
// computed in centered-x coordinates (where X'WX is diagonal) and mapped
// back.  Results are invariant to rescaling all weights by a constant.
// If the weighted residual sum of squares of the centered response is zero
// the R-squared is defined as zero (a constant response carries no
// explainable variation).
inline WeightedOlsFit weighted_ols(std::span<const double> x, std::span<const double> y,
                                   std::span<const double> w) {
    const std::size_t n = x.size();
    if (y.size() != n || w.size() != n)
        throw ValidationError("regression inputs differ in length");
    if (n < 3)
        throw ValidationError("regression needs at least 3 observations, got " +
                              std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw ValidationError("regression observation " + std::to_string(i) +
                                  " is not finite");
        if (!std::isfinite(w[i]) || w[i] <= 0.0)
            throw ValidationError("regression weight " + std::to_string(i) +
                                  " must be positive and finite");
    }

    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double xbar = sx / sw;
    const double ybar = sy / sw;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - xbar;
        const double dy = y[i] - ybar;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    if (sxx == 0.0)
        throw ValidationError("degenerate regression design: all predictor values are equal");

    WeightedOlsFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;

    // Sandwich pieces in centered coordinates: meat moments of w^2 e^2
    // against 1, dx, dx^2.
    double m0 = 0.0, m1 = 0.0, m2 = 0.0, ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - (fit.intercept + fit.slope * x[i]);
        const double dx = x[i] - xbar;
        const double we2 = w[i] * w[i] * e * e;
        m0 += we2;
        m1 += we2 * dx;
        m2 += we2 * dx * dx;
        ssr += w[i] * e * e;
    }
    const double var_slope = m2 / (sxx * sxx);
    const double cov_cs = m1 / (sw * sxx);
    const double var_center = m0 / (sw * sw);
    const double var_intercept = var_center + xbar * xbar * var_slope - 2.0 * xbar * cov_cs;
    fit.robust_se_slope = std::sqrt(std::fmax(var_slope, 0.0));
    fit.robust_se_intercept = std::sqrt(std::fmax(var_intercept, 0.0));

    const double df = static_cast<double>(n - 2);
    auto t_and_p = [df](double coef, double se, double& t_out, double& p_out) {
        if (se > 0.0) {
            t_out = coef / se;
            p_out = student_t_two_sided_p(t_out, df);
        } else {
            t_out = coef == 0.0 ? 0.0 : std::numeric_limits<double>::infinity() *
                                            (coef > 0.0 ? 1.0 : -1.0);
            p_out = coef == 0.0 ? 1.0 : 0.0;
        }
    };
    t_and_p(fit.slope, fit.robust_se_slope, fit.t_slope, fit.p_slope);
    t_and_p(fit.intercept, fit.robust_se_intercept, fit.t_intercept, fit.p_intercept);

    double r_squared = 0.0;
    if (syy > 0.0) {
        r_squared = 1.0 - ssr / syy;
        if (r_squared < 0.0) r_squared = 0.0;
        if (r_squared > 1.0) r_squared = 1.0;
        fit.adj_r_squared =
            1.0 - (1.0 - r_squared) * (static_cast<double>(n) - 1.0) / (static_cast<double>(n) - 2.0);
    } else {
        fit.adj_r_squared = 0.0;
    }
    return fit;
}

enum class RateVariant { RawRate, ZScore };

inline std::string to_string(RateVariant v) {
    return v == RateVariant::RawRate ? "raw" : "zscore";
}

enum class RegimeLabel { Concentration, SpatialEquilibrium, Deconcentration };

inline std::string to_string(RegimeLabel label) {
    switch (label) {
        case RegimeLabel::Concentration: return "concentration";
        case RegimeLabel::SpatialEquilibrium: return "spatial_equilibrium";
        case RegimeLabel::Deconcentration: return "deconcentration";
    }
    return "";
}

struct RedistributionRegime {
    RegimeLabel label = RegimeLabel::SpatialEquilibrium;
    int slope_sign = 0;
    double p_value = 1.0;
    double alpha = 0.05;
    // A steep but insignificant slope usually signals too few zones for a
    // verdict rather than true equilibrium.
    bool unusual_large_insignificant = false;
};

// Regime by slope sign and significance: insignificant slopes read as
// spatial equilibrium regardless of sign.
inline RedistributionRegime classify_redistribution(const WeightedOlsFit& fit,
                                                    double alpha = 0.05) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw ValidationError("significance level must lie in (0, 1)");
    RedistributionRegime regime;
    regime.p_value = fit.p_slope;
    regime.alpha = alpha;
    regime.slope_sign = fit.slope > 0.0 ? 1 : (fit.slope < 0.0 ? -1 : 0);
    if (fit.p_slope >= alpha || regime.slope_sign == 0)
        regime.label = RegimeLabel::SpatialEquilibrium;
    else
        regime.label = regime.slope_sign > 0 ? RegimeLabel::Concentration
                                             : RegimeLabel::Deconcentration;
    regime.unusual_large_insignificant =
        std::fabs(fit.slope) > 0.5 && fit.p_slope >= alpha;
    return regime;
}

struct ZoneRegressionRecord {
    std::string zone_id;
    double nmr = 0.0;     // percent of zone population
    double z_nmr = 0.0;   // rate standardized across zones (0 when spread is zero)
    double log10_density = 0.0;
    double weight = 0.0;
};

struct DensityRegressionResult {
    WeightedOlsFit fit;
    RateVariant variant = RateVariant::ZScore;
    std::vector<ZoneRegressionRecord> records;
    std::vector<std::string> warnings;
};

// Regression of per-zone net migration rates (raw, or standardized across
// zones) on log10 density, weighted by zone population.  Standardizing the
// response leaves t statistics, p-values and R-squared unchanged; only the
// scale of the coefficients moves.
inline DensityRegressionResult density_regression(const MigrationSystem& system,
                                                  RateVariant variant = RateVariant::ZScore) {
    const std::size_t n = system.zones.size();
    if (n < 3)
        throw ValidationError("density regression needs at least 3 zones, got " +
                              std::to_string(n));
    DensityRegressionResult result;
    result.variant = variant;
    if (n < 30)
        result.warnings.push_back("only " + std::to_string(n) +
                                  " zones; the slope may be unstable at this resolution");

    const std::vector<ZoneRate> rates = net_migration_rates(system);
    std::vector<double> x(n), y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Zone& z = system.zones.zone(i);
        x[i] = std::log10(z.population / z.area_km2);
        w[i] = z.population;
        y[i] = rates[i].nmr_percent;
    }
    bool all_equal = true;
    for (std::size_t i = 1; i < n; ++i)
        if (x[i] != x[0]) all_equal = false;
    if (all_equal)
        throw ValidationError("density regression is degenerate: all zones have equal density");

    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    std::vector<double> z(n, 0.0);
    if (sd > 0.0) {
        for (std::size_t i = 0; i < n; ++i) z[i] = (y[i] - mean) / sd;
    } else if (variant == RateVariant::ZScore) {
        // Identical rates everywhere: no spread to standardize against.
        // Regress an all-zero response so a balanced system still fits (to
        // a flat line) instead of failing.
        result.warnings.push_back("all zone rates are identical; z-scores set to zero");
    }

    result.fit = weighted_ols(x, variant == RateVariant::ZScore ? z : y, w);
    result.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        result.records.push_back({rates[i].zone_id, y[i], z[i], x[i], w[i]});
    return result;
}

struct ZScoreRow {
    std::string zone_id;
    double nmr_percent = 0.0;
    double z = 0.0;
    std::string bin;
};

struct ZScoreTable {
    std::vector<ZScoreRow> rows;
    double mean = 0.0;
    double sd = 0.0;
};

// Standardizes zone rates and bins them.  Bin edges are -2, 0 and 2; edge
// values fall into the inner bins ("-2.0–0.0" and "0.0–2.0").
inline ZScoreTable zscore_table(const std::vector<ZoneRate>& rates) {
    const std::size_t n = rates.size();
    if (n < 2)
        throw ValidationError("z-score table needs at least 2 zones, got " + std::to_string(n));
    ZScoreTable table;
    for (const ZoneRate& r : rates) table.mean += r.nmr_percent;
    table.mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const ZoneRate& r : rates) {
        const double d = r.nmr_percent - table.mean;
        ss += d * d;
    }
    table.sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (table.sd == 0.0)
        throw DegenerateSpreadError("all zone rates are identical; z-scores are undefined");
    table.rows.reserve(n);
    for (const ZoneRate& r : rates) {
        ZScoreRow row;
        row.zone_id = r.zone_id;
        row.nmr_percent = r.nmr_percent;
        row.z = (r.nmr_percent - table.mean) / table.sd;
        if (row.z < -2.0)
            row.bin = "<-2.0";
        else if (row.z <= 0.0)
            row.bin = "-2.0–0.0";
        else if (row.z <= 2.0)
            row.bin = "0.0–2.0";
        else
            row.bin = ">2.0";
        table.rows.push_back(std::move(row));
    }
    return table;
}

struct YearFit {
    int year = 0;
    DensityRegressionResult result;
    RedistributionRegime regime;
};

// Runs the density regression for every system of a multi-year series.
// All years must cover the same zone ids.  Output is ordered by year.
inline std::vector<YearFit> time_series_slopes(const std::vector<MigrationSystem>& series,
                                               RateVariant variant = RateVariant::ZScore,
                                               double alpha = 0.05) {
    if (series.empty()) throw ValidationError("time series is empty");
    std::vector<std::string> base_ids;
    for (const Zone& z : series.front().zones.zones()) base_ids.push_back(z.id);
    std::sort(base_ids.begin(), base_ids.end());
    for (std::size_t k = 1; k < series.size(); ++k) {
        std::vector<std::string> ids;
        for (const Zone& z : series[k].zones.zones()) ids.push_back(z.id);
        std::sort(ids.begin(), ids.end());
        if (ids != base_ids) {
            std::vector<std::string> diff;
            std::set_symmetric_difference(base_ids.begin(), base_ids.end(), ids.begin(),
                                          ids.end(), std::back_inserter(diff));
            throw ValidationError("zone sets differ across years: zone id '" + diff.front() +
                                  "' is not present in every year");
        }
    }
    std::vector<YearFit> fits;
    fits.reserve(series.size());
    for (const MigrationSystem& system : series) {
        YearFit yf;
        yf.year = system.year;
        yf.result = density_regression(system, variant);
        yf.regime = classify_redistribution(yf.result.fit, alpha);
        fits.push_back(std::move(yf));
    }
    std::stable_sort(fits.begin(), fits.end(),
                     [](const YearFit& a, const YearFit& b) { return a.year < b.year; });
    return fits;
}

}  // namespace netmig
