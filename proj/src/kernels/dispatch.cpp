#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_internal.hpp"

namespace episodekit::kernels {

namespace {

constexpr KernelTable kScalar{Isa::Scalar, scalar::dot, scalar::squared_distance, scalar::axpy,
                              scalar::scale};
#if EPISODEKIT_HAVE_AVX2
constexpr KernelTable kAvx2{Isa::Avx2, avx2::dot, avx2::squared_distance, avx2::axpy, avx2::scale};
#endif
#if EPISODEKIT_HAVE_NEON
constexpr KernelTable kNeon{Isa::Neon, neon::dot, neon::squared_distance, neon::axpy, neon::scale};
#endif

const KernelTable* select_default() {
  if (const char* env = std::getenv("EPISODEKIT_ISA")) {
    const std::string name(env);
    if (name == "scalar") return &kScalar;
    if (name == "avx2" && available(Isa::Avx2)) return &table(Isa::Avx2);
    if (name == "neon" && available(Isa::Neon)) return &table(Isa::Neon);
  }
  if (available(Isa::Avx2)) return &table(Isa::Avx2);
  if (available(Isa::Neon)) return &table(Isa::Neon);
  return &kScalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> ptr{select_default()};
  return ptr;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "scalar";
}

bool available(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if EPISODEKIT_HAVE_AVX2
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon: return EPISODEKIT_HAVE_NEON != 0;
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!available(isa)) {
    throw std::invalid_argument("kernel variant " + std::string(to_string(isa)) + " unavailable");
  }
  switch (isa) {
#if EPISODEKIT_HAVE_AVX2
    case Isa::Avx2: return kAvx2;
#endif
#if EPISODEKIT_HAVE_NEON
    case Isa::Neon: return kNeon;
#endif
    default: return kScalar;
  }
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void set_active(Isa isa) { current().store(&table(isa), std::memory_order_release); }

}  // namespace episodekit::kernels
