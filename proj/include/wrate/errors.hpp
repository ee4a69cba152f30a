// SPDX-License-Identifier: MIT
#pragma once

#include <stdexcept>

namespace wrate {

/// Malformed input file or configuration.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Exact LP oracle refused an instance larger than its entry cap.
struct CapExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Monte Carlo work (reps x max N) above the configured budget.
struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A simulation produced non-finite state.
struct NumericalAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace wrate
