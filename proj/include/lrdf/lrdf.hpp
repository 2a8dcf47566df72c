#pragma once

// Umbrella header.

#include "lrdf/core.hpp"
#include "lrdf/covariance.hpp"
#include "lrdf/field_sim.hpp"
#include "lrdf/geomprob.hpp"
#include "lrdf/grid.hpp"
#include "lrdf/harness.hpp"
#include "lrdf/hermite_chaos.hpp"
#include "lrdf/parallel.hpp"
#include "lrdf/quadrature.hpp"
#include "lrdf/rng.hpp"
#include "lrdf/sojourn.hpp"
#include "lrdf/sphere.hpp"
#include "lrdf/stats.hpp"
#include "lrdf/variance_engine.hpp"
