#pragma once

// Built-in models for experiments and tests.

#include <string>
#include <vector>

#include "subfi/system.hpp"

namespace subfi {

/// Four-state, single-input, three-output benchmark with the printed
/// (rounded) matrices, innovation gain and covariance.
StateSpaceModel example_printed_model();

/// Same model with C rows 1 and 3 moved by the least-norm amount that puts
/// an exact input-to-output zero at `shared_zero` on both of them, so the
/// input and outputs {1, 3} share that zero.
StateSpaceModel example_model(double shared_zero = 0.95);

/// "example" or "example-printed"; NotFound otherwise.
StateSpaceModel model_preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace subfi
