#include <cstdlib>
#include <string_view>

#include "ganspire/simd/kernels.hpp"
#include "variants.hpp"

namespace ganspire::simd {
namespace {

bool cpu_has_avx2_fma() {
#if defined(GANSPIRE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

bool forced_scalar() {
    const char* env = std::getenv("GANSPIRE_SIMD");
    return env != nullptr && std::string_view(env) == "scalar";
}

template <class T>
const KernelTable<T>& select() {
    if (forced_scalar()) return scalar_kernels<T>();
    if (const auto* t = avx2_kernels<T>()) return *t;
    if (const auto* t = neon_kernels<T>()) return *t;
    return scalar_kernels<T>();
}

}  // namespace

template <>
const KernelTable<float>* avx2_kernels<float>() {
#if defined(GANSPIRE_HAVE_AVX2)
    if (cpu_has_avx2_fma()) return &detail::avx2_table_f32();
#endif
    return nullptr;
}

template <>
const KernelTable<double>* avx2_kernels<double>() {
#if defined(GANSPIRE_HAVE_AVX2)
    if (cpu_has_avx2_fma()) return &detail::avx2_table_f64();
#endif
    return nullptr;
}

template <>
const KernelTable<float>* neon_kernels<float>() {
#if defined(GANSPIRE_HAVE_NEON)
    return &detail::neon_table_f32();
#else
    return nullptr;
#endif
}

template <>
const KernelTable<double>* neon_kernels<double>() {
#if defined(GANSPIRE_HAVE_NEON)
    return &detail::neon_table_f64();
#else
    return nullptr;
#endif
}

template <class T>
const KernelTable<T>& active_kernels() {
    static const KernelTable<T>& table = select<T>();
    return table;
}

template const KernelTable<float>& active_kernels<float>();
template const KernelTable<double>& active_kernels<double>();

}  // namespace ganspire::simd
