#pragma once

#include "episodekit/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define EPISODEKIT_HAVE_AVX2 1
#else
#define EPISODEKIT_HAVE_AVX2 0
#endif

#if defined(__aarch64__)
#define EPISODEKIT_HAVE_NEON 1
#else
#define EPISODEKIT_HAVE_NEON 0
#endif

namespace episodekit::kernels {

#if EPISODEKIT_HAVE_AVX2
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* y, std::size_t n);
}  // namespace avx2
#endif

#if EPISODEKIT_HAVE_NEON
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* y, std::size_t n);
}  // namespace neon
#endif

}  // namespace episodekit::kernels
