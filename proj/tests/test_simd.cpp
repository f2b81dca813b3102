#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "tastenet/error.hpp"
#include "tastenet/estimation.hpp"
#include "tastenet/simd/kernels.hpp"
#include "tastenet/synth.hpp"

using namespace tastenet;
using test::close_rel;
using test::uniform_vector;

namespace {

struct IsaGuard {
  simd::Isa saved = simd::active_isa();
  ~IsaGuard() { simd::set_isa(saved); }
};

bool have_avx2() { return simd::isa_supported(simd::Isa::avx2); }

}  // namespace

TEST_CASE("isa names round trip and dispatch honours set_isa") {
  IsaGuard guard;
  CHECK(simd::parse_isa("scalar") == simd::Isa::scalar);
  CHECK(simd::parse_isa("avx2") == simd::Isa::avx2);
  CHECK_THROWS_AS(simd::parse_isa("neon"), Error);
  simd::set_isa(simd::Isa::scalar);
  CHECK(simd::active_isa() == simd::Isa::scalar);
  CHECK(simd::kernels().isa == simd::Isa::scalar);
  if (have_avx2()) {
    simd::set_isa(simd::Isa::avx2);
    CHECK(simd::kernels().isa == simd::Isa::avx2);
  }
}

#if defined(__x86_64__)

TEST_CASE("avx2 dot and exp agree with the scalar reference") {
  if (!have_avx2()) return;
  const auto& s = simd::scalar_kernels();
  const auto& v = simd::avx2_kernels();
  std::mt19937_64 rng(11);
  for (std::size_t n = 0; n < 70; ++n) {
    const auto a = uniform_vector(rng, n, -3.0, 3.0);
    const auto b = uniform_vector(rng, n, -3.0, 3.0);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale += std::abs(a[i] * b[i]);
    CHECK(std::abs(s.dot(a.data(), b.data(), n) - v.dot(a.data(), b.data(), n)) <=
          1e-14 * (scale + 1.0));

    const auto x = uniform_vector(rng, n, -700.0, 700.0);
    std::vector<double> ys(n), yv(n);
    s.exp(x.data(), ys.data(), n);
    v.exp(x.data(), yv.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(close_rel(ys[i], yv[i], 1e-14, 0.0));
      CHECK(close_rel(yv[i], std::exp(x[i]), 1e-14, 0.0));
    }
  }
}

TEST_CASE("avx2 exp handles the edges of its range") {
  if (!have_avx2()) return;
  const auto& v = simd::avx2_kernels();
  const std::vector<double> x{-800.0, -745.0, -708.0, 0.0, 1e-300, 709.0, 710.0, 1000.0};
  std::vector<double> y(x.size());
  v.exp(x.data(), y.data(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ref = std::exp(x[i]);
    if (ref == 0.0 || std::isinf(ref)) {
      CHECK(y[i] == ref);
    } else if (ref < std::numeric_limits<double>::min()) {
      CHECK(y[i] >= 0.0);
      CHECK(y[i] < 1e-300);
    } else {
      CHECK(close_rel(y[i], ref, 1e-14, 0.0));
    }
  }
}

TEST_CASE("avx2 affine kernels agree with the scalar reference") {
  if (!have_avx2()) return;
  const auto& s = simd::scalar_kernels();
  const auto& v = simd::avx2_kernels();
  std::mt19937_64 rng(12);
  for (std::size_t rows = 1; rows < 12; ++rows) {
    for (std::size_t cols = 1; cols < 19; cols += 3) {
      const auto w = uniform_vector(rng, rows * cols, -1.0, 1.0);
      const auto b = uniform_vector(rng, rows, -1.0, 1.0);
      const auto x = uniform_vector(rng, cols, -2.0, 2.0);
      const auto g = uniform_vector(rng, rows, -2.0, 2.0);
      std::vector<double> ys(rows), yv(rows);
      s.affine(w.data(), b.data(), x.data(), ys.data(), rows, cols);
      v.affine(w.data(), b.data(), x.data(), yv.data(), rows, cols);
      for (std::size_t r = 0; r < rows; ++r) CHECK(close_rel(ys[r], yv[r], 1e-13, 1e-14));

      std::vector<double> ts(cols, 0.5), tv(cols, 0.5);
      s.affine_transpose_accumulate(w.data(), g.data(), ts.data(), rows, cols);
      v.affine_transpose_accumulate(w.data(), g.data(), tv.data(), rows, cols);
      for (std::size_t c = 0; c < cols; ++c) CHECK(close_rel(ts[c], tv[c], 1e-13, 1e-14));

      std::vector<double> os(rows * cols, -0.25), ov(rows * cols, -0.25);
      s.outer_accumulate(g.data(), x.data(), os.data(), rows, cols);
      v.outer_accumulate(g.data(), x.data(), ov.data(), rows, cols);
      for (std::size_t k = 0; k < os.size(); ++k) CHECK(close_rel(os[k], ov[k], 1e-13, 1e-14));
    }
  }
}

TEST_CASE("avx2 mixture kernel agrees with the scalar reference") {
  if (!have_avx2()) return;
  const auto& s = simd::scalar_kernels();
  const auto& v = simd::avx2_kernels();
  std::mt19937_64 rng(13);
  for (std::size_t alts : {2u, 3u, 5u}) {
    for (std::size_t draws : {1u, 3u, 4u, 7u, 200u}) {
      const auto base = uniform_vector(rng, alts, -2.0, 2.0);
      const auto slope = uniform_vector(rng, alts, -5.0, 5.0);
      std::vector<double> eps(draws);
      std::normal_distribution<double> normal;
      for (auto& e : eps) e = normal(rng);
      for (std::size_t chosen = 0; chosen < alts; ++chosen) {
        std::vector<double> ds(alts), dv(alts);
        const auto ms =
            s.logit_mixture(base.data(), slope.data(), alts, chosen, -0.4, 0.3, eps.data(), draws, ds.data());
        const auto mv =
            v.logit_mixture(base.data(), slope.data(), alts, chosen, -0.4, 0.3, eps.data(), draws, dv.data());
        CHECK(close_rel(ms.prob, mv.prob, 1e-13, 1e-14));
        CHECK(close_rel(ms.d_mu, mv.d_mu, 1e-12, 1e-13));
        CHECK(close_rel(ms.d_sigma, mv.d_sigma, 1e-12, 1e-13));
        for (std::size_t j = 0; j < alts; ++j) CHECK(close_rel(ds[j], dv[j], 1e-12, 1e-13));
      }
    }
  }
}

TEST_CASE("likelihood and gradient agree across instruction sets" * doctest::test_suite("property")) {
  if (!have_avx2()) return;
  IsaGuard guard;
  synth::GenConfig gen;
  gen.n_train = 300;
  gen.n_dev = 10;
  gen.n_test = 10;
  gen.seed = 5;
  const auto data = synth::generate_dataset(gen);
  MlpSpec mlp{{9}, {Activation::tanh}, {OutputTransform::negative_exp}};
  const auto schema = synth::synthetic_schema();
  std::vector<std::size_t> rows(data.train.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  TrainConfig cfg;
  cfg.reg_strength = 0.01;

  for (const auto& [utility, net] :
       {std::pair{synth::tastenet_spec(), true}, std::pair{synth::rcl_ii_spec(50), false}}) {
    auto model = make_model(schema, utility, net ? &mlp : nullptr, 21);
    if (!net) {
      for (std::size_t k = 0; k < model.beta.size(); ++k) model.beta[k] = -0.1 * (k % 3);
    }
    DrawTable draws(rows.size(), 50);
    const DrawTable* dp = net ? nullptr : &draws;
    simd::set_isa(simd::Isa::scalar);
    const auto a = regularized_loss(model, data.train, rows, cfg, dp);
    simd::set_isa(simd::Isa::avx2);
    const auto b = regularized_loss(model, data.train, rows, cfg, dp);
    CHECK(close_rel(a.loss, b.loss, 1e-12));
    for (std::size_t k = 0; k < a.grad.beta.size(); ++k) {
      CHECK(close_rel(a.grad.beta[k], b.grad.beta[k], 1e-10, 1e-13));
    }
    const auto ga = a.grad.mlp.values();
    const auto gb = b.grad.mlp.values();
    for (std::size_t k = 0; k < ga.size(); ++k) CHECK(close_rel(ga[k], gb[k], 1e-10, 1e-13));
  }
}

#endif
