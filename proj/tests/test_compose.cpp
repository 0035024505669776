#include <doctest.h>

#include "lgan/compose/compositor.hpp"
#include "lgan/core/rng.hpp"
#include "lgan/tensor/gradcheck.hpp"

using namespace lgan;
using Tf = Tensor<float>;
using Td = Tensor<double>;

namespace {

Tf rand_image(Rng& rng, Shape s, float lo = -1.f, float hi = 1.f) {
  std::vector<float> v(static_cast<size_t>(shape_numel(s)));
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return Tf::leaf(std::move(s), std::move(v));
}

}  // namespace

TEST_CASE("zero mask is the identity layer, bitwise") {
  Rng rng(10);
  Tf img = rand_image(rng, {3, 8, 8});
  LayerOutput<float> layer{rand_image(rng, {3, 8, 8}), Tf::zeros({1, 8, 8})};
  Tf out = composite(img, layer);
  CHECK(out.data() == img.data());
}

TEST_CASE("full mask replaces with the appearance") {
  Rng rng(11);
  Tf img = rand_image(rng, {2, 3, 4, 4});
  LayerOutput<float> layer{rand_image(rng, {2, 3, 4, 4}), Tf::full({2, 1, 4, 4}, 1.f)};
  Tf out = composite(img, layer);
  for (size_t i = 0; i < out.data().size(); ++i) CHECK(out.data()[i] == layer.appearance.data()[i]);
}

TEST_CASE("half mask between -1 and +1 gives zero") {
  Tf img = Tf::full({3, 4, 4}, -1.f);
  LayerOutput<float> layer{Tf::full({3, 4, 4}, 1.f), Tf::full({1, 4, 4}, 0.5f)};
  Tf out = composite(img, layer);
  for (float v : out.data()) CHECK(v == doctest::Approx(0.f));
}

TEST_CASE("composite is convex per pixel and local to the mask support") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    Tf img = rand_image(rng, {3, 6, 6});
    Tf app = rand_image(rng, {3, 6, 6});
    Tf m = rand_image(rng, {1, 6, 6}, 0.f, 1.f);
    // Force some exact zeros in the mask.
    for (int i = 0; i < 6; ++i) m.data()[static_cast<size_t>(rng.uniform_int(0, 35))] = 0.f;
    Tf out = composite(img, LayerOutput<float>{app, m});
    for (int64_t c = 0; c < 3; ++c) {
      for (int64_t p = 0; p < 36; ++p) {
        const float i = img.data()[c * 36 + p], a = app.data()[c * 36 + p];
        const float o = out.data()[c * 36 + p];
        CHECK(o >= std::min(i, a) - 1e-6f);
        CHECK(o <= std::max(i, a) + 1e-6f);
        if (m.data()[p] == 0.f) CHECK(o == i);  // bitwise pass-through
      }
    }
  }
}

TEST_CASE("composite gradients: dM = A - I and dA = M") {
  Rng rng(13);
  std::vector<double> mv(16), av(48), iv(48);
  for (auto& x : mv) x = rng.uniform(0.05, 0.95);
  for (auto& x : av) x = rng.uniform(-1, 1);
  for (auto& x : iv) x = rng.uniform(-1, 1);
  Td m = Td::leaf({1, 4, 4}, mv, true);
  Td a = Td::leaf({3, 4, 4}, av, true);
  Td img = Td::leaf({3, 4, 4}, iv);
  Td out = composite(img, LayerOutput<double>{a, m});
  sum_all(out).backward();
  for (int64_t p = 0; p < 16; ++p) {
    double want = 0;
    for (int64_t c = 0; c < 3; ++c) want += av[c * 16 + p] - iv[c * 16 + p];
    CHECK(m.grad()[p] == doctest::Approx(want));
  }
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t p = 0; p < 16; ++p) CHECK(a.grad()[c * 16 + p] == doctest::Approx(mv[p]));

  // And through grad_check on the mask leaf.
  Td m0 = Td::leaf({1, 4, 4}, mv);
  Td a0 = Td::leaf({3, 4, 4}, av);
  const double err = grad_check<double>(
      [&](const Td& t) { return mean_sq(composite(img, LayerOutput<double>{a0, t})); }, m0, 1e-5);
  CHECK(err < 1e-3);
}

TEST_CASE("soft_intersection basics") {
  Tf ones = Tf::full({1, 2, 2}, 1.f);
  CHECK(soft_intersection(ones, ones) == doctest::Approx(4.0));

  Tf m1 = Tf::leaf({4}, {1.f, 0.f, 1.f, 0.f});
  Tf m2 = Tf::leaf({4}, {0.f, 1.f, 0.f, 1.f});
  CHECK(soft_intersection(m1, m2) == doctest::Approx(0.0));

  Tf a = Tf::leaf({4}, {1.f, 0.5f, 0.f, 0.f});
  Tf b = Tf::leaf({4}, {0.5f, 0.5f, 0.f, 1.f});
  CHECK(soft_intersection(a, b) == doctest::Approx(0.75));
  CHECK(soft_intersection(b, a) == doctest::Approx(0.75));  // symmetric
  CHECK_THROWS_AS(soft_intersection(a, ones), std::invalid_argument);
}

TEST_CASE("soft_intersection is monotone in each argument") {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    Tf m1 = rand_image(rng, {1, 5, 5}, 0.f, 1.f);
    Tf m2 = rand_image(rng, {1, 5, 5}, 0.f, 1.f);
    Tf m1b = m1.detach();
    const int64_t idx = rng.uniform_int(0, 24);
    m1b.data()[idx] = std::min(1.f, m1b.data()[idx] + 0.25f);
    CHECK(soft_intersection(m1b, m2) >= soft_intersection(m1, m2) - 1e-9);
  }
}

TEST_CASE("threshold_mask boundary rules") {
  Tf m = Tf::leaf({5}, {0.f, 0.2f, 0.5f, 0.8f, 0.999f});
  Tf all = threshold_mask(m, 0.f);
  for (float v : all.data()) CHECK(v == 1.f);
  Tf none = threshold_mask(m, 1.f);
  for (float v : none.data()) CHECK(v == 0.f);
  Tf mid = threshold_mask(m, 0.5f);
  CHECK(mid.data() == std::vector<float>{0.f, 0.f, 1.f, 1.f, 1.f});  // inclusive at 0.5
  CHECK_THROWS_AS(threshold_mask(m, 1.5f), std::invalid_argument);
}
