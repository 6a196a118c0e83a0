#pragma once

#include "certsync/types.hpp"
#include "certsync/pose.hpp"
#include "certsync/graph.hpp"
#include "certsync/g2o_io.hpp"
#include "certsync/data_matrices.hpp"
#include "certsync/cycle_space.hpp"
#include "certsync/stiefel.hpp"
#include "certsync/rtr.hpp"
#include "certsync/lanczos.hpp"
#include "certsync/certificate.hpp"
#include "certsync/staircase.hpp"
#include "certsync/solution.hpp"
#include "certsync/langevin.hpp"
#include "certsync/synthetic.hpp"
#include "certsync/metrics.hpp"
