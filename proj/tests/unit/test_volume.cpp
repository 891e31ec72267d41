#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "synthkit/volume.hpp"
#include "synthkit/volume_ops.hpp"

using namespace synthkit;

namespace {

Image random_image(Dims d, Vec3 sp, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<float> u(-50.f, 50.f);
  Image im(d, sp);
  for (auto& v : im.storage()) v = u(gen);
  return im;
}

// Ramp along x: value equals the voxel index.
Image ramp_x(Dims d) {
  Image im(d, {1, 1, 1});
  for (int k = 0; k < d[2]; ++k)
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i) im(i, j, k) = static_cast<float>(i);
  return im;
}

}  // namespace

TEST_CASE("volume construction checks dims and spacing") {
  CHECK_THROWS_AS(Image({0, 2, 2}, {1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(Image({2, 2, 2}, {1, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(Image({2, 2, 2}, {1, 1, -1}), std::invalid_argument);
  CHECK_THROWS_AS(Image({2, 2, 2}, {1, 1, 1}, std::vector<float>(7)), std::invalid_argument);
  Image im({3, 4, 5}, {1, 2, 3});
  CHECK(im.size() == 60);
  CHECK(im.index(1, 0, 0) == 1);
  CHECK(im.index(0, 1, 0) == 3);
  CHECK(im.index(0, 0, 1) == 12);
  CHECK(im.extent() == Vec3{3, 8, 15});
}

TEST_CASE("sample_at") {
  Image im({2, 1, 1}, {1, 1, 1}, std::vector<float>{0.f, 10.f});
  SUBCASE("grid point returns the stored value") {
    const Image r = random_image({4, 4, 4}, {1, 1, 1}, 3);
    CHECK(sample_at(r, {1, 2, 3}, Interp::trilinear) == doctest::Approx(r(1, 2, 3)).epsilon(1e-12));
    CHECK(sample_at(r, {1, 2, 3}, Interp::nearest) == r(1, 2, 3));
  }
  SUBCASE("midpoint interpolates linearly") { CHECK(sample_at(im, {0.5, 0, 0}, Interp::trilinear) == doctest::Approx(5.0)); }
  SUBCASE("outside the grid is background") {
    CHECK(sample_at(im, {-5, -5, -5}, Interp::trilinear) == 0.0);
    CHECK(sample_at(im, {-5, -5, -5}, Interp::nearest) == 0.0);
    LabelMap l({2, 2, 2}, {1, 1, 1}, 7);
    CHECK(sample_at(l, {-5, -5, -5}) == 0);
    CHECK(sample_at(l, {0.4, 0.6, 1.2}) == 7);
  }
  SUBCASE("clamp boundary replicates the edge") {
    CHECK(sample_at(im, {3.0, 0, 0}, Interp::trilinear, Boundary::clamp) == doctest::Approx(10.0));
  }
}

TEST_CASE("resample to the same grid is a bitwise copy") {
  const Image r = random_image({7, 5, 6}, {1, 1, 1}, 11);
  CHECK(resample(r, {1, 1, 1}, Interp::trilinear) == r);
  CHECK(resample(r, {1, 1, 1}, Interp::nearest) == r);
}

TEST_CASE("resample output dims use ceil") {
  // Slice spacing up to 9 mm.
  const Image r({64, 63, 10}, {1, 1, 1});
  const Image lr = resample(r, {9, 1, 1}, Interp::trilinear);
  CHECK(lr.dims() == Dims{8, 63, 10});
  CHECK(lr.spacing() == Vec3{9, 1, 1});
  CHECK(resample(r, {1, 9, 1}, Interp::nearest).dims() == Dims{64, 7, 10});
  CHECK(resampled_dims({18, 1, 1}, {1, 1, 1}, {9, 1, 1}) == Dims{2, 1, 1});
  CHECK(resampled_dims({19, 1, 1}, {1, 1, 1}, {9, 1, 1}) == Dims{3, 1, 1});
}

TEST_CASE("ramp survives 1 mm -> 2 mm -> 1 mm within one slope quantum") {
  const Dims d{32, 4, 4};
  const Image ramp = ramp_x(d);
  const Image lr = resample(ramp, {2, 1, 1}, Interp::trilinear);
  REQUIRE(lr.dims() == Dims{16, 4, 4});
  // Analytic oracle: the 2 mm voxel j is centred at (j + 0.5) * 2 mm, i.e. at
  // continuous 1 mm index 2j + 0.5, where the ramp takes that same value.
  for (int j = 0; j < 16; ++j) CHECK(lr(j, 1, 1) == doctest::Approx(2.0 * j + 0.5).epsilon(1e-6));
  const Image back = resample(lr, {1, 1, 1}, Interp::trilinear);
  REQUIRE(back.dims() == d);
  double worst = 0.0;
  for (std::size_t n = 0; n < back.size(); ++n) worst = std::max(worst, std::abs(double(back[n]) - ramp[n]));
  CHECK(worst <= 1.0);
}

TEST_CASE("resample of a constant is exact") {
  const Image c({9, 10, 11}, {1, 1, 1}, 4.25f);
  for (const Vec3& sp : {Vec3{2, 2, 2}, Vec3{0.7, 3, 1.3}}) {
    const Image r = resample(c, sp, Interp::trilinear);
    for (float v : r.data()) CHECK(v == 4.25f);
  }
}

TEST_CASE("resample argument checks") {
  const LabelMap l({4, 4, 4}, {1, 1, 1});
  CHECK_THROWS_AS(resample(l, {2, 2, 2}, Interp::trilinear), std::invalid_argument);
  const Image im({4, 4, 4}, {1, 1, 1});
  CHECK_THROWS_AS(resample(im, {0, 1, 1}, Interp::trilinear), std::invalid_argument);
  CHECK_THROWS_AS(resample(im, {1, -2, 1}, Interp::nearest), std::invalid_argument);
}

TEST_CASE("nearest label resampling never invents labels") {
  std::mt19937 gen(5);
  std::uniform_int_distribution<int> pick(0, 4);
  const Label alphabet[] = {0, 2, 3, 17, 41};
  LabelMap l({13, 11, 9}, {1, 1, 1});
  for (auto& v : l.storage()) v = alphabet[pick(gen)];
  for (const Vec3& sp : {Vec3{2, 1, 1}, Vec3{0.6, 1.7, 3.1}, Vec3{5, 5, 5}}) {
    const LabelMap r = resample(l, sp);
    for (Label v : r.data()) CHECK(std::count(std::begin(alphabet), std::end(alphabet), v) == 1);
  }
}

TEST_CASE("gaussian blur") {
  SUBCASE("zero sigma is the identity") {
    const Image r = random_image({6, 7, 8}, {1, 1, 1}, 2);
    CHECK(gaussian_blur(r, {0, 0, 0}) == r);
  }
  SUBCASE("constant stays constant away from the zero-padded border") {
    const Image c({24, 24, 24}, {1, 1, 1}, 3.0f);
    const Image b = gaussian_blur(c, {1.5, 1.5, 1.5});
    // ceil(3 * 1.5) = 5 voxels of support.
    for (int k = 5; k < 19; ++k)
      for (int j = 5; j < 19; ++j)
        for (int i = 5; i < 19; ++i) CHECK(b(i, j, k) == doctest::Approx(3.0).epsilon(1e-6));
  }
  SUBCASE("impulse matches a dense 3D kernel on a 17^3 patch") {
    const double s = 2.0;
    Image imp({17, 17, 17}, {1, 1, 1}, 0.f);
    imp(8, 8, 8) = 1.f;
    const Image b = gaussian_blur(imp, {s, s, s});
    // Dense oracle: exp(-r^2 / 2s^2) over the truncated cube |x|,|y|,|z| <= 6,
    // normalised over that cube.
    const int R = 6;
    double norm = 0.0;
    for (int z = -R; z <= R; ++z)
      for (int y = -R; y <= R; ++y)
        for (int x = -R; x <= R; ++x) norm += std::exp(-(x * x + y * y + z * z) / (2 * s * s));
    double worst = 0.0;
    for (int z = -R; z <= R; ++z)
      for (int y = -R; y <= R; ++y)
        for (int x = -R; x <= R; ++x) {
          const double want = std::exp(-(x * x + y * y + z * z) / (2 * s * s)) / norm;
          const double got = b(8 + x, 8 + y, 8 + z);
          worst = std::max(worst, std::abs(got - want) / want);
        }
    CHECK(worst < 1e-5);
    CHECK(std::abs(b(8, 8, 8) - 1.0 / norm) * norm < 1e-6);
    double sum = 0.0;
    for (float v : b.data()) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-4));
  }
  SUBCASE("per-axis sigma blurs only that axis") {
    Image imp({15, 15, 15}, {1, 1, 1}, 0.f);
    imp(7, 7, 7) = 1.f;
    const Image b = gaussian_blur(imp, {0, 0, 1.0});
    CHECK(b(7, 6, 7) == 0.f);
    CHECK(b(6, 7, 7) == 0.f);
    CHECK(b(7, 7, 6) > 0.f);
  }
  SUBCASE("label input is rejected") {
    CHECK_THROWS_AS(gaussian_blur(LabelMap({3, 3, 3}, {1, 1, 1}), Vec3{1, 1, 1}), std::invalid_argument);
  }
  SUBCASE("negative sigma is rejected") {
    CHECK_THROWS_AS(gaussian_blur(Image({3, 3, 3}, {1, 1, 1}), Vec3{-1, 0, 0}), std::invalid_argument);
  }
}

TEST_CASE("gaussian kernel is normalised and truncated at 3 sigma") {
  for (double s : {0.3, 1.0, 2.5}) {
    const auto k = gaussian_kernel(s);
    CHECK(k.size() == 2 * static_cast<std::size_t>(std::ceil(3 * s)) + 1);
    double sum = 0.0;
    for (double v : k) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("max and min filters match a brute-force cube search") {
  const Image r = random_image({9, 8, 7}, {1, 1, 1}, 9);
  for (int radius : {0, 1, 2}) {
    const Image mx = max_filter(r, radius);
    const Image mn = min_filter(r, radius);
    for (int k = 0; k < 7; ++k)
      for (int j = 0; j < 8; ++j)
        for (int i = 0; i < 9; ++i) {
          float hi = -1e30f, lo = 1e30f;
          for (int c = -radius; c <= radius; ++c)
            for (int b = -radius; b <= radius; ++b)
              for (int a = -radius; a <= radius; ++a)
                if (r.contains(i + a, j + b, k + c)) {
                  hi = std::max(hi, r(i + a, j + b, k + c));
                  lo = std::min(lo, r(i + a, j + b, k + c));
                }
          CHECK(mx(i, j, k) == hi);
          CHECK(mn(i, j, k) == lo);
        }
  }
}

TEST_CASE("operations leave their inputs untouched") {
  const Image r = random_image({8, 8, 8}, {1, 1, 1}, 21);
  const Image copy = r;
  (void)resample(r, {2, 1.5, 1}, Interp::trilinear);
  (void)gaussian_blur(r, {1, 2, 0.5});
  (void)max_filter(r, 1);
  CHECK(r == copy);
}
