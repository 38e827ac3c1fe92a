#pragma once

// System-level migration indices and per-zone net migration rates.
//
// With D_i total inflow to zone i, O_i total outflow, M the migrant total
// and P the population total:
//   crude migration intensity        CMI  = 100 * M / P
//   migration effectiveness index    MEI  = 100 * (Σ|D_i - O_i| / 2) / M
//   aggregate net migration rate     ANMR = 100 * (Σ|D_i - O_i| / 2) / P
// so ANMR = CMI * MEI / 100 holds as an identity.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "netmig/errors.hpp"
#include "netmig/system.hpp"

namespace netmig {

struct SystemIndices {
    double cmi = 0.0;
    double mei = 0.0;
    double anmr = 0.0;
    double m = 0.0;             // migrant total
    double p = 0.0;             // population total
    double half_abs_net = 0.0;  // half the sum of absolute net balances, persons
};

struct ZoneRate {
    std::string zone_id;
    double nmr_percent = 0.0;  // 100 * net / population
    double net_persons = 0.0;
};

inline double half_sum_abs_net(const MigrationSystem& system) {
    double sum = 0.0;
    for (std::size_t i = 0; i < system.zones.size(); ++i)
        sum += std::fabs(system.flows.net(i));
    return sum / 2.0;
}

inline double crude_migration_intensity(const MigrationSystem& system) {
    return 100.0 * system.flows.total_migrants() / system.zones.total_population();
}

inline double migration_effectiveness_index(const MigrationSystem& system) {
    const double m = system.flows.total_migrants();
    if (m == 0.0)
        throw UndefinedIndexError("migration effectiveness is undefined: system '" +
                                  system.label + "' has zero migrants");
    return 100.0 * half_sum_abs_net(system) / m;
}

inline double aggregate_net_migration_rate(const MigrationSystem& system) {
    return 100.0 * half_sum_abs_net(system) / system.zones.total_population();
}

// Per-zone net migration rates, zone order preserved.  Requires positive
// population in every zone: a rate for an empty zone is undefined.
inline std::vector<ZoneRate> net_migration_rates(const MigrationSystem& system) {
    std::vector<ZoneRate> rates;
    rates.reserve(system.zones.size());
    for (std::size_t i = 0; i < system.zones.size(); ++i) {
        const Zone& z = system.zones.zone(i);
        if (z.population <= 0.0)
            throw ValidationError("net migration rate is undefined for zone '" + z.id +
                                  "' with zero population");
        const double net = system.flows.net(i);
        rates.push_back({z.id, 100.0 * net / z.population, net});
    }
    return rates;
}

inline SystemIndices system_indices(const MigrationSystem& system) {
    SystemIndices out;
    out.m = system.flows.total_migrants();
    out.p = system.zones.total_population();
    out.half_abs_net = half_sum_abs_net(system);
    out.cmi = crude_migration_intensity(system);
    out.mei = migration_effectiveness_index(system);
    out.anmr = aggregate_net_migration_rate(system);
    // The three indices are tied by construction; a violation here means a
    // programming error, not bad input.
    const double recomposed = out.cmi * out.mei / 100.0;
    const double scale = std::fmax(std::fabs(out.anmr), std::fabs(recomposed));
    if (std::fabs(recomposed - out.anmr) > 1e-12 * std::fmax(scale, 1.0))
        throw std::logic_error("index identity violated for system '" + system.label + "'");
    return out;
}

}  // namespace netmig
