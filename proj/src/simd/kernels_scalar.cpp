#include "ganspire/simd/kernels.hpp"

namespace ganspire::simd {
namespace {

template <class T>
T dot_scalar(const T* a, const T* b, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <class T>
void axpy_scalar(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
T sum_sq_diff_scalar(const T* a, const T* b, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const T d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

template <class T>
T sum_scalar(const T* a, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

template <class T>
void scale_scalar(T alpha, T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

}  // namespace

template <class T>
const KernelTable<T>& scalar_kernels() {
    static const KernelTable<T> table{"scalar", &dot_scalar<T>, &axpy_scalar<T>,
                                      &sum_sq_diff_scalar<T>, &sum_scalar<T>, &scale_scalar<T>};
    return table;
}

template const KernelTable<float>& scalar_kernels<float>();
template const KernelTable<double>& scalar_kernels<double>();

}  // namespace ganspire::simd
