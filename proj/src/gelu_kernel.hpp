#pragma once

#include "loglo/tensor.hpp"

namespace loglo::detail {

/// y = x Phi(x); dy (when non-null) = Phi(x) + x phi(x).
void gelu_kernel(const double* x, double* y, double* dy, Index n);

}  // namespace loglo::detail
