#pragma once

// Dense arithmetic kernels used by the network layers and distance code.
//
// Every kernel has a portable scalar reference implementation and, where the
// target supports it, a vectorized variant (AVX2+FMA on x86-64, NEON on
// AArch64). The variant is chosen once at startup from CPU features; setting
// GANSPIRE_SIMD=scalar in the environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace ganspire::simd {

template <class T>
struct KernelTable {
    std::string_view name;
    // sum_i a[i] * b[i]
    T (*dot)(const T* a, const T* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(T alpha, const T* x, T* y, std::size_t n);
    // sum_i (a[i] - b[i])^2
    T (*sum_sq_diff)(const T* a, const T* b, std::size_t n);
    // sum_i a[i]
    T (*sum)(const T* a, std::size_t n);
    // x[i] *= alpha
    void (*scale)(T alpha, T* x, std::size_t n);
};

template <class T>
const KernelTable<T>& scalar_kernels();

// nullptr when the variant was not compiled in or the CPU lacks the features.
template <class T>
const KernelTable<T>* avx2_kernels();
template <class T>
const KernelTable<T>* neon_kernels();

template <>
const KernelTable<float>* avx2_kernels<float>();
template <>
const KernelTable<double>* avx2_kernels<double>();
template <>
const KernelTable<float>* neon_kernels<float>();
template <>
const KernelTable<double>* neon_kernels<double>();

template <class T>
const KernelTable<T>& active_kernels();

inline float dot(std::span<const float> a, std::span<const float> b) {
    return active_kernels<float>().dot(a.data(), b.data(), a.size());
}
inline double dot(std::span<const double> a, std::span<const double> b) {
    return active_kernels<double>().dot(a.data(), b.data(), a.size());
}

template <class T>
inline T dot(const T* a, const T* b, std::size_t n) {
    return active_kernels<T>().dot(a, b, n);
}
template <class T>
inline void axpy(T alpha, const T* x, T* y, std::size_t n) {
    active_kernels<T>().axpy(alpha, x, y, n);
}
template <class T>
inline T sum_sq_diff(const T* a, const T* b, std::size_t n) {
    return active_kernels<T>().sum_sq_diff(a, b, n);
}
template <class T>
inline T sum(const T* a, std::size_t n) {
    return active_kernels<T>().sum(a, n);
}
template <class T>
inline void scale(T alpha, T* x, std::size_t n) {
    active_kernels<T>().scale(alpha, x, n);
}

}  // namespace ganspire::simd
