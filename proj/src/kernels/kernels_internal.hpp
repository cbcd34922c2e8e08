#pragma once

#include <cmath>

#include "phantom/kernels/kernels.hpp"

namespace phantom::kernels::detail {

extern const KernelTable kScalarTable;

// Null when the variant was not compiled for this target.
const KernelTable* avx2_table();
const KernelTable* neon_table();
bool cpu_has_avx2_fma();

}  // namespace phantom::kernels::detail
