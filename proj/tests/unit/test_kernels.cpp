#include <doctest.h>

#include <cstring>
#include <stdexcept>
#include <vector>

#include "episodekit/kernels.hpp"
#include "episodekit/rng.hpp"

using namespace episodekit;
namespace k = episodekit::kernels;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1e3, 1e3) * (rng.below(4) == 0 ? 1e-6 : 1.0);
  return v;
}

}  // namespace

TEST_CASE("scalar kernels match naive sums on exact inputs") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{2, 2, 2, 2, 2};
  CHECK(k::scalar::dot(a.data(), b.data(), 5) == 30.0);
  CHECK(k::scalar::squared_distance(a.data(), b.data(), 5) == 1 + 0 + 1 + 4 + 9);
  std::vector<double> y = b;
  k::scalar::axpy(2.0, a.data(), y.data(), 5);
  CHECK(y == std::vector<double>{4, 6, 8, 10, 12});
  k::scalar::scale(0.5, y.data(), 5);
  CHECK(y == std::vector<double>{2, 3, 4, 5, 6});
  CHECK(k::scalar::dot(a.data(), b.data(), 0) == 0.0);
}

TEST_CASE("every available variant is bit-identical to scalar") {
  Rng rng(99);
  const auto& ref = k::table(k::Isa::Scalar);
  for (auto isa : {k::Isa::Avx2, k::Isa::Neon}) {
    if (!k::available(isa)) {
      CHECK_THROWS_AS(k::table(isa), std::invalid_argument);
      continue;
    }
    const auto& t = k::table(isa);
    for (std::size_t n = 0; n < 70; ++n) {
      for (int rep = 0; rep < 5; ++rep) {
        const auto a = random_vector(rng, n);
        const auto b = random_vector(rng, n);
        CHECK(same_bits(t.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n)));
        CHECK(same_bits(t.squared_distance(a.data(), b.data(), n), ref.squared_distance(a.data(), b.data(), n)));
        auto y1 = b, y2 = b;
        const double alpha = rng.uniform(-2, 2);
        t.axpy(alpha, a.data(), y1.data(), n);
        ref.axpy(alpha, a.data(), y2.data(), n);
        CHECK(std::memcmp(y1.data(), y2.data(), n * sizeof(double)) == 0);
        t.scale(alpha, y1.data(), n);
        ref.scale(alpha, y2.data(), n);
        CHECK(std::memcmp(y1.data(), y2.data(), n * sizeof(double)) == 0);
      }
    }
  }
}

TEST_CASE("set_active switches the dispatch table") {
  const auto original = k::active().isa;
  k::set_active(k::Isa::Scalar);
  CHECK(k::active().isa == k::Isa::Scalar);
  k::set_active(original);
  CHECK(k::active().isa == original);
  CHECK(k::available(k::Isa::Scalar));
}
