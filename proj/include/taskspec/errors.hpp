#pragma once

#include <stdexcept>
#include <string>

namespace taskspec {

// Unrecoverable I/O or environment failure (unreadable file, broken store).
struct FatalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A backend stayed unreachable after the configured retry budget.
struct BackendError : std::runtime_error {
    BackendError(const std::string& what, int attempts_)
        : std::runtime_error(what), attempts(attempts_) {}
    int attempts = 0;
};

// A backend answered but violated its wire contract (missing fields,
// inconsistent token counts, positive log-probs, ...).
struct ContractViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Artifacts produced under a different configuration hash were mixed.
struct ConfigMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace taskspec
