#pragma once

#include "flightwp/random.hpp"
#include "flightwp/parallel.hpp"
#include "flightwp/stats.hpp"
#include "flightwp/stochastic_core.hpp"
#include "flightwp/path_space.hpp"
#include "flightwp/flight_builder.hpp"
#include "flightwp/limit_samplers.hpp"
#include "flightwp/transport.hpp"
#include "flightwp/verification.hpp"
#include "flightwp/experiments.hpp"
