#pragma once

#include "ganspire/simd/kernels.hpp"

namespace ganspire::simd::detail {

#if defined(GANSPIRE_HAVE_AVX2)
const KernelTable<float>& avx2_table_f32();
const KernelTable<double>& avx2_table_f64();
#endif

#if defined(GANSPIRE_HAVE_NEON)
const KernelTable<float>& neon_table_f32();
const KernelTable<double>& neon_table_f64();
#endif

}  // namespace ganspire::simd::detail
