#include "loglo/runtime.hpp"

#include <cstdlib>  // defines __GLIBC__

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace loglo {

bool tune_allocator() {
#if defined(__GLIBC__)
  bool ok = mallopt(M_MMAP_THRESHOLD, 1 << 30) == 1;
  ok = mallopt(M_TRIM_THRESHOLD, 1 << 30) == 1 && ok;
  ok = mallopt(M_TOP_PAD, 512 << 20) == 1 && ok;
  return ok;
#else
  return false;
#endif
}

}  // namespace loglo
