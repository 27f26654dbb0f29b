#pragma once

#include "kse/directional_energy.hpp"
#include "kse/domain_grid.hpp"
#include "kse/energy_config.hpp"
#include "kse/error.hpp"
#include "kse/ks_energy.hpp"
#include "kse/map_model.hpp"
#include "kse/metric_space.hpp"
#include "kse/oracles.hpp"
#include "kse/parallel.hpp"
#include "kse/point.hpp"
#include "kse/quadrature.hpp"
