#include "gte/kernels.hpp"

#include <atomic>
#include <stdexcept>

namespace gte::kernels {
namespace {

Isa detect() {
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2")) return Isa::Avx2;
#elif defined(__aarch64__) || defined(_M_ARM64)
  return Isa::Neon;
#endif
  return Isa::Scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

} // namespace

const char* isa_name(Isa isa) {
  switch (isa) {
  case Isa::Avx2: return "avx2";
  case Isa::Neon: return "neon";
  case Isa::Scalar: break;
  }
  return "scalar";
}

bool isa_supported(Isa isa) {
  if (isa == Isa::Scalar) return true;
  return detect() == isa;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (!isa_supported(isa)) throw std::invalid_argument(std::string("instruction set not supported: ") + isa_name(isa));
  current().store(isa, std::memory_order_relaxed);
}

void reset_isa() { current().store(detect(), std::memory_order_relaxed); }

double max_slope_to(double x0, double y0, std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  switch (active_isa()) {
  case Isa::Avx2: return avx2::max_slope_to(x0, y0, x.data(), y.data(), n);
  case Isa::Neon: return neon::max_slope_to(x0, y0, x.data(), y.data(), n);
  case Isa::Scalar: break;
  }
  return scalar::max_slope_to(x0, y0, x.data(), y.data(), n);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  switch (active_isa()) {
  case Isa::Avx2: return avx2::max_abs_diff(a.data(), b.data(), n);
  case Isa::Neon: return neon::max_abs_diff(a.data(), b.data(), n);
  case Isa::Scalar: break;
  }
  return scalar::max_abs_diff(a.data(), b.data(), n);
}

} // namespace gte::kernels
