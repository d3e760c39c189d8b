#pragma once

// Umbrella header: the whole library in dependency order.

#include "errors.hpp"
#include "util.hpp"
#include "word.hpp"
#include "model.hpp"
#include "jacobi.hpp"
#include "geometry.hpp"
#include "metric.hpp"
#include "density.hpp"
#include "cylfun.hpp"
#include "kernel.hpp"
#include "lattice.hpp"
#include "experiment.hpp"
