#pragma once

// Dense double-precision kernels behind the embedding classifiers.
//
// Every ISA variant accumulates reductions in four interleaved lanes
// (element i goes to lane i % 4) and combines them as (l0 + l1) + (l2 + l3),
// with no fused multiply-add. The scalar reference follows the same order, so
// all variants return bit-identical results and trained models do not depend
// on which variant the host selected.

#include <cstddef>
#include <span>
#include <string_view>

namespace episodekit::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y *= alpha
  void (*scale)(double alpha, double* y, std::size_t n);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* y, std::size_t n);
}  // namespace scalar

// True when the variant was compiled in and the CPU supports it.
bool available(Isa isa);

// Table for a specific variant; throws std::invalid_argument if unavailable.
const KernelTable& table(Isa isa);

// The variant used by the library. Selected once: the best available, unless
// the EPISODEKIT_ISA environment variable names another ("scalar", "avx2",
// "neon").
const KernelTable& active();

// Overrides the active variant (tests, benchmarks).
void set_active(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), y.size());
}

inline void scale(double alpha, std::span<double> y) { active().scale(alpha, y.data(), y.size()); }

}  // namespace episodekit::kernels
