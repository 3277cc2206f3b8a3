#ifndef MOPART_MOPART_HPP
#define MOPART_MOPART_HPP

// Convenience umbrella: pulls in the whole library.

#include "mopart/benchmarks.hpp"
#include "mopart/cmaes.hpp"
#include "mopart/core.hpp"
#include "mopart/gp.hpp"
#include "mopart/harness.hpp"
#include "mopart/hypervolume.hpp"
#include "mopart/pareto.hpp"
#include "mopart/partition.hpp"
#include "mopart/rng.hpp"
#include "mopart/samplers.hpp"
#include "mopart/selection.hpp"
#include "mopart/svm.hpp"

#endif  // MOPART_MOPART_HPP
