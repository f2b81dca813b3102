#include <algorithm>
#include <cmath>
#include <limits>

#include "tastenet/simd/kernels.hpp"

namespace tastenet::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void affine_scalar(const double* w, const double* b, const double* x, double* y,
                   std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = b[r] + dot_scalar(w + r * cols, x, cols);
  }
}

void affine_transpose_accumulate_scalar(const double* w, const double* g,
                                        double* out, std::size_t rows,
                                        std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += gr * row[c];
  }
}

void outer_accumulate_scalar(const double* g, const double* x, double* out,
                             std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    double* row = out + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

void exp_scalar(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}

MixtureSums logit_mixture_scalar(const double* base, const double* slope,
                                 std::size_t alternatives, std::size_t chosen,
                                 double mu, double sigma, const double* eps,
                                 std::size_t draws, double* d_base) {
  MixtureSums sums;
  double u[kMaxMixtureAlternatives];
  std::fill(d_base, d_base + alternatives, 0.0);
  for (std::size_t r = 0; r < draws; ++r) {
    const double beta = mu + sigma * eps[r];
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < alternatives; ++j) {
      u[j] = base[j] + beta * slope[j];
      top = std::max(top, u[j]);
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < alternatives; ++j) {
      u[j] = std::exp(u[j] - top);
      denom += u[j];
    }
    double mean_slope = 0.0;
    for (std::size_t j = 0; j < alternatives; ++j) {
      u[j] /= denom;
      mean_slope += u[j] * slope[j];
    }
    const double p = u[chosen];
    const double dbeta = p * (slope[chosen] - mean_slope);
    sums.prob += p;
    sums.d_mu += dbeta;
    sums.d_sigma += dbeta * eps[r];
    for (std::size_t j = 0; j < alternatives; ++j) {
      d_base[j] += p * ((j == chosen ? 1.0 : 0.0) - u[j]);
    }
  }
  return sums;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      Isa::scalar,
      dot_scalar,
      affine_scalar,
      affine_transpose_accumulate_scalar,
      outer_accumulate_scalar,
      exp_scalar,
      logit_mixture_scalar,
  };
  return table;
}

}  // namespace tastenet::simd
