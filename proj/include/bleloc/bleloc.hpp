#pragma once

// BLE RSSI indoor positioning with GP-classifier NLOS mitigation.

#include "bleloc/common.hpp"
#include "bleloc/crlb.hpp"
#include "bleloc/gpc.hpp"
#include "bleloc/gpc_optimize.hpp"
#include "bleloc/io.hpp"
#include "bleloc/kdtree.hpp"
#include "bleloc/los_grid.hpp"
#include "bleloc/math.hpp"
#include "bleloc/metrics.hpp"
#include "bleloc/nelder_mead.hpp"
#include "bleloc/particle_filter.hpp"
#include "bleloc/pathloss.hpp"
#include "bleloc/pipeline.hpp"
#include "bleloc/preprocess.hpp"
#include "bleloc/simulate.hpp"
#include "bleloc/types.hpp"
