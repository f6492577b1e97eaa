#pragma once

#include "segue/bench.hpp"
#include "segue/core.hpp"
#include "segue/env_io.hpp"
#include "segue/explore.hpp"
#include "segue/map_export.hpp"
#include "segue/metrics.hpp"
#include "segue/occupancy.hpp"
#include "segue/parallel.hpp"
#include "segue/planner.hpp"
#include "segue/sampling.hpp"
#include "segue/semantics.hpp"
#include "segue/sim.hpp"
