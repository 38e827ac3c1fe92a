#pragma once

// Umbrella header for the whole toolkit.

#include "netmig/aggregation.hpp"
#include "netmig/csv.hpp"
#include "netmig/errors.hpp"
#include "netmig/impact.hpp"
#include "netmig/indices.hpp"
#include "netmig/io.hpp"
#include "netmig/regression.hpp"
#include "netmig/rng.hpp"
#include "netmig/system.hpp"
