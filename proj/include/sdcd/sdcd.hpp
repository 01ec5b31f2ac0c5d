#pragma once

// Umbrella header.
#include "sdcd/errors.hpp"
#include "sdcd/matrix.hpp"
#include "sdcd/linalg.hpp"
#include "sdcd/graph.hpp"
#include "sdcd/constraints.hpp"
#include "sdcd/dataset.hpp"
#include "sdcd/model.hpp"
#include "sdcd/metrics.hpp"
#include "sdcd/simulate.hpp"
#include "sdcd/training.hpp"
#include "sdcd/oracle.hpp"
#include "sdcd/io.hpp"
