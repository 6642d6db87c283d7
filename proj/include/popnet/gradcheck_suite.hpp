#pragma once

#include <vector>

#include "popnet/gradcheck.hpp"

namespace popnet {

// Runs the named loss (or all of them) against double-precision central
// differences on `instances` random 8x8 grids. Valid names: dep, loc, wtv,
// pop, sep, sem, separation, all.
std::vector<GradCheckResult> run_gradcheck_suite(const std::string& loss_name, bool use_f64,
                                                 uint64_t seed, int instances = 10);

bool known_gradcheck_loss(const std::string& name);

}  // namespace popnet
