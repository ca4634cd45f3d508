#pragma once

// Umbrella header: gradient-boosted Riesz representers, indirect nuisance
// baselines, doubly robust estimation, and the simulation harness.

#include "boosting.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "dgp.hpp"
#include "estimate.hpp"
#include "format.hpp"
#include "functional.hpp"
#include "kde.hpp"
#include "math.hpp"
#include "matrix.hpp"
#include "nuisance.hpp"
#include "riesz.hpp"
#include "rng.hpp"
#include "study.hpp"
#include "tree.hpp"
#include "tuning.hpp"
