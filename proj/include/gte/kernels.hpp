#pragma once

// Data-parallel inner loops with a scalar reference and SIMD variants. The
// dispatching entry points pick the widest instruction set the running CPU
// supports; every variant must agree bit-for-bit with the scalar one.

#include <cstddef>
#include <span>

namespace gte::kernels {

enum class Isa { Scalar, Avx2, Neon };

const char* isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
// Pins dispatch to a given variant (tests, benchmarks). Throws if unsupported.
void force_isa(Isa isa);
void reset_isa();

// max_j (y0 - y[j]) / (x0 - x[j]); -inf when empty. x[j] != x0 is assumed.
double max_slope_to(double x0, double y0, std::span<const double> x, std::span<const double> y);
// max_i |a[i] - b[i]|; 0 when empty.
double max_abs_diff(std::span<const double> a, std::span<const double> b);

namespace scalar {
double max_slope_to(double x0, double y0, const double* x, const double* y, std::size_t n);
double max_abs_diff(const double* a, const double* b, std::size_t n);
} // namespace scalar

namespace avx2 {
double max_slope_to(double x0, double y0, const double* x, const double* y, std::size_t n);
double max_abs_diff(const double* a, const double* b, std::size_t n);
} // namespace avx2

namespace neon {
double max_slope_to(double x0, double y0, const double* x, const double* y, std::size_t n);
double max_abs_diff(const double* a, const double* b, std::size_t n);
} // namespace neon

} // namespace gte::kernels
