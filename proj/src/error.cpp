#include "topo/error.hpp"

namespace topo {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::shape: return "shape";
    case ErrorKind::ill_posed: return "ill-posed-problem";
    case ErrorKind::solver_failure: return "solver-failure";
    case ErrorKind::numeric_failure: return "numeric-failure";
    case ErrorKind::sampling_failure: return "sampling-failure";
    case ErrorKind::format: return "format";
    case ErrorKind::io: return "io";
    case ErrorKind::training: return "training";
  }
  return "unknown";
}

}  // namespace topo
