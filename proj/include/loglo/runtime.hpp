#pragma once

namespace loglo {

/// Raises glibc's mmap and trim thresholds so large short-lived tensors are
/// recycled from the heap instead of being mapped and zero-filled per op.
/// Returns false where unsupported. Call once at program start.
bool tune_allocator();

}  // namespace loglo
