#pragma once

// Everything except the command-line layer (cli.hpp, config.hpp), which
// pulls in the JSON dependency.

#include "rhp/error.hpp"
#include "rhp/surface.hpp"
#include "rhp/quadrature.hpp"
#include "rhp/series.hpp"
#include "rhp/differential.hpp"
#include "rhp/period_map.hpp"
#include "rhp/abelian.hpp"
#include "rhp/parametrix.hpp"
#include "rhp/second_row.hpp"
