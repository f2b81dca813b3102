#pragma once

// Data-parallel inner loops used by the network and the likelihood code.
//
// Every kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2+FMA variant. The variant is chosen once at startup from the CPU
// feature bits and can be pinned with set_isa() (tests, CLI --isa flag).
// Scalar and vector variants agree to rounding; results are bit-identical
// between runs for a fixed ISA.

#include <cstddef>
#include <span>
#include <string_view>

namespace tastenet::simd {

enum class Isa { scalar, avx2 };

/// Accumulators returned by the mixed-logit kernel for one observation.
/// Sums run over draws r with P_r the chosen-alternative probability at
/// taste mu + sigma * eps_r.
struct MixtureSums {
  double prob = 0.0;       // sum_r P_r
  double d_mu = 0.0;       // sum_r dP_r / dmu
  double d_sigma = 0.0;    // sum_r dP_r / dsigma
};

inline constexpr std::size_t kMaxMixtureAlternatives = 32;

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y = W x + b, W row-major rows x cols
  void (*affine)(const double* w, const double* b, const double* x, double* y,
                 std::size_t rows, std::size_t cols);
  // out += W^T g
  void (*affine_transpose_accumulate)(const double* w, const double* g,
                                      double* out, std::size_t rows,
                                      std::size_t cols);
  // out += g x^T
  void (*outer_accumulate)(const double* g, const double* x, double* out,
                           std::size_t rows, std::size_t cols);
  void (*exp)(const double* x, double* y, std::size_t n);
  // base/slope over the J available alternatives (J <= kMaxMixtureAlternatives);
  // d_base receives sum_r dP_r / dbase_j.
  MixtureSums (*logit_mixture)(const double* base, const double* slope,
                               std::size_t alternatives, std::size_t chosen,
                               double mu, double sigma, const double* eps,
                               std::size_t draws, double* d_base);
};

const KernelTable& scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_kernels();
#endif

bool isa_supported(Isa isa);
Isa best_isa();
Isa active_isa();
/// Throws tastenet::Error if the CPU lacks the requested extension.
void set_isa(Isa isa);
std::string_view isa_name(Isa isa);
Isa parse_isa(std::string_view name);

const KernelTable& kernels();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}

inline void exp(std::span<const double> x, std::span<double> y) {
  kernels().exp(x.data(), y.data(), x.size());
}

}  // namespace tastenet::simd
