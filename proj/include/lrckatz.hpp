#pragma once

// Umbrella header for the library. The dense verification oracles
// (lrckatz/oracle.hpp) and synthetic generators (lrckatz/synthetic.hpp) are
// included separately.

#include "lrckatz/cholesky.hpp"
#include "lrckatz/error.hpp"
#include "lrckatz/factor.hpp"
#include "lrckatz/graph.hpp"
#include "lrckatz/index.hpp"
#include "lrckatz/linkpred.hpp"
#include "lrckatz/parallel.hpp"
#include "lrckatz/partition.hpp"
#include "lrckatz/rng.hpp"
#include "lrckatz/serialize.hpp"
#include "lrckatz/solver.hpp"
#include "lrckatz/sparse.hpp"
