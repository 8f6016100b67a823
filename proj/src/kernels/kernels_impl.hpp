#pragma once

#include "qlab/kernels.hpp"

namespace qlab::kernels::detail {

extern const KernelTable kScalarTable;
#if defined(__x86_64__) || defined(_M_X64)
#define QLAB_HAVE_AVX2_TABLE 1
extern const KernelTable kAvx2Table;
#endif
#if defined(__aarch64__)
#define QLAB_HAVE_NEON_TABLE 1
extern const KernelTable kNeonTable;
#endif

}  // namespace qlab::kernels::detail
