#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "fixtures.hpp"
#include "sknn/exemplar_index.hpp"
#include "sknn/model.hpp"
#include "sknn/simd/kernels.hpp"

using namespace sknn;
using namespace sknn::testing;

namespace {

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> randoms(Rng& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<const simd::KernelTable*> tables() {
  std::vector<const simd::KernelTable*> out{&simd::scalar_kernels()};
  if (simd::avx2_kernels() && simd::cpu_supports(simd::Level::Avx2)) out.push_back(simd::avx2_kernels());
  return out;
}

}  // namespace

TEST_CASE("kernel dispatch") {
  CHECK(simd::scalar_kernels().level == simd::Level::Scalar);
  CHECK(simd::cpu_supports(simd::Level::Scalar));
  CHECK(&simd::kernels_for(simd::Level::Scalar) == &simd::scalar_kernels());
  if (!simd::avx2_kernels() || !simd::cpu_supports(simd::Level::Avx2)) {
    MESSAGE("AVX2 variant unavailable here; equivalence checks cover the scalar table only");
    CHECK_THROWS(simd::kernels_for(simd::Level::Avx2));
  } else {
    CHECK(simd::avx2_kernels()->level == simd::Level::Avx2);
  }
}

TEST_CASE("element-wise kernels are bit-identical across levels") {
  const auto ts = tables();
  const auto& ref = simd::scalar_kernels();
  Rng rng(42);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 31u, 64u, 257u}) {
    std::vector<std::int32_t> codes(n);
    for (auto& c : codes) c = static_cast<std::int32_t>(uniform(rng, 0, 5)) - 1;
    std::vector<double> reals = randoms(rng, n, -10.0, 10.0);
    std::vector<double> row = randoms(rng, 6, 0.0, 2.0);
    std::vector<std::int32_t> gcodes(n);
    for (auto& c : gcodes) c = static_cast<std::int32_t>(uniform(rng, 0, 5));
    const std::vector<double> base = randoms(rng, n, 0.0, 1.0);

    for (const auto* t : ts) {
      CAPTURE(n);
      CAPTURE(simd::to_string(t->level));
      auto a = base, b = base;
      ref.mismatch_accumulate(codes, 2, 0.37, a);
      t->mismatch_accumulate(codes, 2, 0.37, b);
      CHECK(bit_equal(a, b));

      a = base, b = base;
      ref.gather_accumulate(gcodes, row, 0.125, a);
      t->gather_accumulate(gcodes, row, 0.125, b);
      CHECK(bit_equal(a, b));

      a = base, b = base;
      ref.sqdiff_accumulate(reals, 1.5, 0.2, a);
      t->sqdiff_accumulate(reals, 1.5, 0.2, b);
      CHECK(bit_equal(a, b));

      a = base, b = base;
      ref.scale_sqrt(a, 1.0 / 3.0);
      t->scale_sqrt(b, 1.0 / 3.0);
      CHECK(bit_equal(a, b));
    }
  }
}

TEST_CASE("l1_rows agrees across levels to rounding") {
  const auto ts = tables();
  const auto& ref = simd::scalar_kernels();
  Rng rng(43);
  for (std::size_t stride : {4u, 8u, 12u, 24u}) {
    for (std::size_t rows : {0u, 1u, 5u, 33u}) {
      auto table = randoms(rng, rows * stride, 0.0, 1.0);
      auto probe = randoms(rng, stride, 0.0, 1.0);
      std::vector<double> expect(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t l = 0; l < stride; ++l) s += std::fabs(table[r * stride + l] - probe[l]);
        expect[r] = s;
      }
      for (const auto* t : ts) {
        std::vector<double> out(rows, -1.0);
        t->l1_rows(table, stride, probe, out);
        for (std::size_t r = 0; r < rows; ++r) CHECK(std::fabs(out[r] - expect[r]) <= 1e-12);
      }
      std::vector<double> out(rows);
      ref.l1_rows(table, stride, probe, out);
      CHECK(bit_equal(out, expect));
    }
  }
}

TEST_CASE("exemplar index matches the reference distance at every level") {
  Rng rng(44);
  for (int trial = 0; trial < 60; ++trial) {
    auto inst = random_decode_instance(rng, 5, 4, 20);
    for (const auto* t : tables()) {
      ExemplarIndex index(inst.model, inst.metric, *t);
      std::vector<double> out, scratch;
      for (const auto& e : inst.probe.elements) {
        auto probe = index.prepare(e);
        for (std::uint32_t v = 2; v < inst.model.vertex_count(); ++v) {
          auto ex = inst.model.exemplars(VertexId{v});
          index.distances(probe, VertexId{v}, out);
          REQUIRE(out.size() == ex.size());
          for (std::size_t i = 0; i < ex.size(); ++i) {
            CHECK(std::fabs(out[i] - inst.metric.distance(e, ex[i])) <= 1e-12);
          }
          double nd = index.n_dist(probe, VertexId{v}, inst.query, scratch);
          CHECK(std::fabs(nd - n_dist(e, ex, inst.query, inst.metric)) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("non-mvdm index distances are bit-identical across levels") {
  if (tables().size() < 2) return;
  Rng rng(45);
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = random_decode_instance(rng, 4, 4, 20);
    if (inst.metric.spec().kernel == Kernel::Mvdm) continue;
    ExemplarIndex scalar(inst.model, inst.metric, simd::scalar_kernels());
    ExemplarIndex vec(inst.model, inst.metric, *simd::avx2_kernels());
    std::vector<double> a, b;
    for (const auto& e : inst.probe.elements) {
      auto pa = scalar.prepare(e);
      auto pb = vec.prepare(e);
      for (std::uint32_t v = 2; v < inst.model.vertex_count(); ++v) {
        scalar.distances(pa, VertexId{v}, a);
        vec.distances(pb, VertexId{v}, b);
        CHECK(bit_equal(a, b));
      }
    }
  }
}
