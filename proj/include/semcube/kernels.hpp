#pragma once

// Data-parallel inner loops shared by ranking (dense double vectors) and the
// cube engine (bitset postings). Every kernel has a scalar reference version;
// an AVX2/FMA version is used when the CPU supports it. Set
// SEMCUBE_KERNELS=scalar in the environment to force the reference path.

#include <cstddef>
#include <cstdint>
#include <span>

namespace semcube::kernels {

struct KernelTable {
  const char* name;
  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // out[i] = s * x[i] * w[i]
  void (*scale_mul)(const double* x, const double* w, double s, double* out, std::size_t n);
  std::uint64_t (*popcount)(const std::uint64_t* a, std::size_t n);
  std::uint64_t (*and_popcount)(const std::uint64_t* a, const std::uint64_t* b, std::size_t n);
};

const KernelTable& scalar();
// nullptr when not compiled in or the CPU lacks AVX2+FMA.
const KernelTable* avx2();
// Chosen once on first use.
const KernelTable& active();

inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}
inline void scale_mul(std::span<const double> x, std::span<const double> w, double s, std::span<double> out) {
  active().scale_mul(x.data(), w.data(), s, out.data(), x.size());
}
inline std::uint64_t popcount(std::span<const std::uint64_t> a) { return active().popcount(a.data(), a.size()); }
inline std::uint64_t and_popcount(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  return active().and_popcount(a.data(), b.data(), a.size());
}

}  // namespace semcube::kernels
