#pragma once

#include <cstddef>

// Data-parallel inner loops behind the matrix layer. Every operation has a
// scalar reference kernel and, on x86-64 builds, an AVX2+FMA variant chosen
// once at runtime. Variants must agree with the reference within 1e-10
// elementwise (exactly, for non-reduction ops); the equivalence suite in
// tests/test_kernels.cpp enforces this.
//
// Selection order: CUMI_SIMD=scalar forces the reference kernels,
// CUMI_SIMD=avx2 requests the vector kernels, anything else (or unset)
// auto-detects. Requests for an unavailable backend fall back to scalar.
namespace cumi::kern {

struct KernelTable {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*sqdist)(const double*, const double*, std::size_t);
    void (*add)(const double*, const double*, double*, std::size_t);
    void (*sub)(const double*, const double*, double*, std::size_t);
    void (*mul)(const double*, const double*, double*, std::size_t);
    void (*scale)(const double*, double, double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*relu)(const double*, double*, std::size_t);
    // out[i] = x[i] > 0 ? g[i] : 0
    void (*relu_mask)(const double*, const double*, double*, std::size_t);
};

// Reference kernels, always available.
const KernelTable& scalar_table();

// AVX2 kernels, or nullptr when not compiled in / not supported by the CPU.
const KernelTable* avx2_table();

// The table picked for this process (CUMI_SIMD override, else autodetect).
const KernelTable& active();
const char* backend_name();

inline double dot(const double* a, const double* b, std::size_t n) {
    return active().dot(a, b, n);
}
inline double sum(const double* a, std::size_t n) { return active().sum(a, n); }
inline double sqdist(const double* a, const double* b, std::size_t n) {
    return active().sqdist(a, b, n);
}
inline void add(const double* a, const double* b, double* out, std::size_t n) {
    active().add(a, b, out, n);
}
inline void sub(const double* a, const double* b, double* out, std::size_t n) {
    active().sub(a, b, out, n);
}
inline void mul(const double* a, const double* b, double* out, std::size_t n) {
    active().mul(a, b, out, n);
}
inline void scale(const double* a, double s, double* out, std::size_t n) {
    active().scale(a, s, out, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    active().axpy(alpha, x, y, n);
}
inline void relu(const double* x, double* out, std::size_t n) {
    active().relu(x, out, n);
}
inline void relu_mask(const double* x, const double* g, double* out, std::size_t n) {
    active().relu_mask(x, g, out, n);
}

}  // namespace cumi::kern
