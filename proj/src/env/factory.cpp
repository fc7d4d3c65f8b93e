#include "mbvd/env/factory.hpp"

#include "mbvd/core/errors.hpp"

namespace mbvd::env {

std::unique_ptr<Environment> make_environment(const EnvParams& params) {
  if (params.name == "matrix") return std::make_unique<MatrixGame>(params.matrix);
  if (params.name == "predator_prey") return std::make_unique<PredatorPrey>(params.predator_prey);
  if (params.name == "tabular") return std::make_unique<TabularPomdp>(params.tabular);
  throw UsageError("unknown environment '" + params.name + "' (expected matrix, predator_prey or tabular)");
}

}  // namespace mbvd::env
