#include "fdelab/errors.hpp"

namespace fdelab {

int exit_code_for(const std::exception& e) noexcept {
    if (dynamic_cast<const InputError*>(&e) != nullptr) {
        return 2;
    }
    if (dynamic_cast<const SolverError*>(&e) != nullptr) {
        return 3;
    }
    return 1;
}

} // namespace fdelab
