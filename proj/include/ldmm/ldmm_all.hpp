#pragma once

#include "ldmm/baselines.hpp"
#include "ldmm/datagen.hpp"
#include "ldmm/error.hpp"
#include "ldmm/grid.hpp"
#include "ldmm/io.hpp"
#include "ldmm/kdtree.hpp"
#include "ldmm/ldmm.hpp"
#include "ldmm/metrics.hpp"
#include "ldmm/patch_graph.hpp"
#include "ldmm/sampling.hpp"
#include "ldmm/sparse.hpp"
#include "ldmm/wgl.hpp"
