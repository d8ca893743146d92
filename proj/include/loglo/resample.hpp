#pragma once

#include <string_view>

#include "loglo/field.hpp"

namespace loglo {

enum class InterpMode { nearest, bilinear };

InterpMode parse_interp_mode(std::string_view name);
std::string_view to_string(InterpMode mode);

/// Output length of a valid (unpadded) pooling window sweep.
Index pooled_size(Index n, Index kernel, Index stride);

// Kernels over the last two axes of a tensor; leading axes are batch.
RealTensor avg_pool2(const RealTensor& x, Index kernel, Index stride);
RealTensor avg_pool2_adjoint(const RealTensor& grad_out, Index nx, Index ny, Index kernel,
                             Index stride);
/// Bilinear uses the half-pixel (align_corners = false) source mapping with
/// edge clamping; nearest uses src = floor(dst * in / out).
RealTensor interpolate2(const RealTensor& x, Index out_nx, Index out_ny, InterpMode mode);
RealTensor interpolate2_adjoint(const RealTensor& grad_out, Index in_nx, Index in_ny,
                                InterpMode mode);

Field avg_pool2(const Field& f, Index kernel, Index stride);
Field interpolate2(const Field& f, Index out_nx, Index out_ny, InterpMode mode);

}  // namespace loglo
