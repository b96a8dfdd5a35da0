// Compiled with -mavx2 only; called solely after a runtime CPU check.
#include <immintrin.h>

#include "kernels_internal.hpp"

namespace episodekit::kernels::avx2 {

namespace {

// Lane vector plus scalar tail, reduced in the canonical order.
double finish(__m256d acc, double tail0, double tail1, double tail2, std::size_t tail_n) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  if (tail_n > 0) lane[0] += tail0;
  if (tail_n > 1) lane[1] += tail1;
  if (tail_n > 2) lane[2] += tail2;
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  const std::size_t tail_n = n - i;
  double t[3] = {0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < tail_n; ++k) t[k] = a[i + k] * b[i + k];
  return finish(acc, t[0], t[1], t[2], tail_n);
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  const std::size_t tail_n = n - i;
  double t[3] = {0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < tail_n; ++k) {
    const double d = a[i + k] - b[i + k];
    t[k] = d * d;
  }
  return finish(acc, t[0], t[1], t[2], tail_n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] *= alpha;
}

}  // namespace episodekit::kernels::avx2
