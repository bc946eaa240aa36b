#pragma once

// Sliced-Wasserstein flow engine: transports particles from a source Gaussian
// onto an arbitrary empirical target by averaging closed-form 1D optimal
// transport displacements over random projections, with optional entropic
// Brownian noise.

#include "swflow/core.hpp"
#include "swflow/rng.hpp"
#include "swflow/parallel.hpp"
#include "swflow/ot1d.hpp"
#include "swflow/geometry.hpp"
#include "swflow/io.hpp"
#include "swflow/sketch.hpp"
#include "swflow/metrics.hpp"
#include "swflow/flow.hpp"
#include "swflow/data.hpp"
#include "swflow/svg.hpp"
