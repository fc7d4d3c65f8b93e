#pragma once

#include <memory>
#include <string>

#include "mbvd/env/matrix_game.hpp"
#include "mbvd/env/predator_prey.hpp"
#include "mbvd/env/tabular_pomdp.hpp"

namespace mbvd::env {

struct EnvParams {
  std::string name = "matrix";  // matrix | predator_prey | tabular
  MatrixGameParams matrix;
  PredatorPreyParams predator_prey;
  TabularPomdpParams tabular;
};

std::unique_ptr<Environment> make_environment(const EnvParams& params);

}  // namespace mbvd::env
