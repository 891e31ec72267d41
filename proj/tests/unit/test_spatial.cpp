#include <doctest.h>

#include <cmath>
#include <set>

#include <Eigen/LU>

#include "phantoms.hpp"
#include "synthkit/spatial.hpp"

using namespace synthkit;

namespace {

double mean_norm(const DisplacementField& d) {
  double s = 0.0;
  const std::size_t n = d.comp[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 v = d.at(i);
    s += std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  }
  return s / static_cast<double>(n);
}

VelocityField negated(VelocityField vf) {
  for (auto& c : vf.control_grid.comp)
    for (float& x : c.data()) x = -x;
  return vf;
}

}  // namespace

TEST_CASE("sample_affine stays inside the preset ranges") {
  Rng rng(1);
  const auto gen = GenerationPriors::generative();
  const auto deg = GenerationPriors::degradation();
  for (int n = 0; n < 1000; ++n) {
    const AffineParams g = sample_affine(gen, rng);
    const AffineParams d = sample_affine(deg, rng);
    for (int a = 0; a < 3; ++a) {
      CHECK((g.rotations[a] >= -15 && g.rotations[a] <= 15));
      CHECK((g.scalings[a] >= 0.85 && g.scalings[a] <= 1.15));
      CHECK((g.shearings[a] >= -0.012 && g.shearings[a] <= 0.012));
      CHECK((g.translations[a] >= -20 && g.translations[a] <= 20));
      CHECK((d.rotations[a] >= -25 && d.rotations[a] <= 25));
      CHECK((d.translations[a] >= -50 && d.translations[a] <= 50));
      CHECK((d.scalings[a] >= 0.5 && d.scalings[a] <= 1.5));
    }
  }
}

TEST_CASE("degenerate priors give the identity matrix") {
  GenerationPriors p = GenerationPriors::generative();
  p.rotation = p.shearing = p.translation = {0, 0};
  p.scaling = {1, 1};
  Rng rng(3);
  const AffineParams a = sample_affine(p, rng);
  CHECK(a.matrix({5, 6, 7}).isApprox(Eigen::Matrix4d::Identity(), 0.0));
}

TEST_CASE("affine matrix composition order") {
  AffineParams a;
  a.scalings = {2, 1, 1};
  a.translations = {1, 0, 0};
  const Eigen::Matrix4d m = a.matrix({0, 0, 0});
  const Eigen::Vector4d p = m * Eigen::Vector4d(3, 0, 0, 1);
  CHECK(p[0] == doctest::Approx(7.0));
  a = AffineParams{};
  a.rotations = {0, 0, 90};
  const Eigen::Vector4d q = a.matrix({0, 0, 0}) * Eigen::Vector4d(1, 0, 0, 1);
  CHECK(q[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(q[1]) == doctest::Approx(1.0));
  CHECK(std::abs(a.matrix({4, 4, 4}).determinant()) == doctest::Approx(1.0));
}

TEST_CASE("sample_svf") {
  Rng rng(5);
  SUBCASE("zero variance gives a zero field") {
    const VelocityField vf = sample_svf(Range{0, 0}, {16, 16, 16}, rng);
    CHECK(vf.control_grid.max_norm() == 0.0);
    CHECK(vf.control_grid.dims() == Dims{kSvfControlSize, kSvfControlSize, kSvfControlSize});
    CHECK(integrate_svf(vf).max_norm() == 0.0);
  }
  SUBCASE("control-grid sample variance matches the drawn variance") {
    const double v = 0.8;
    double s = 0.0, s2 = 0.0;
    std::size_t n = 0;
    for (int rep = 0; rep < 8; ++rep) {
      const VelocityField vf = sample_svf(Range{v, v}, {16, 16, 16}, rng);
      CHECK(vf.sigma_v2 == v);
      for (const auto& c : vf.control_grid.comp)
        for (float x : c.data()) s += x, s2 += double(x) * x, ++n;
    }
    REQUIRE(n >= 10000);
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(var - v) / v < 0.10);
  }
  SUBCASE("generative preset draws sigma_v2 in [0, 1.5]") {
    for (int i = 0; i < 200; ++i) {
      const VelocityField vf = sample_svf(GenerationPriors::generative(), {8, 8, 8}, rng);
      CHECK((vf.sigma_v2 >= 0.0 && vf.sigma_v2 <= 1.5));
    }
  }
  SUBCASE("same seed, same field") {
    Rng a(99), b(99);
    const VelocityField x = sample_svf(GenerationPriors::generative(), {12, 12, 12}, a);
    const VelocityField y = sample_svf(GenerationPriors::generative(), {12, 12, 12}, b);
    for (int c = 0; c < 3; ++c) CHECK(x.control_grid.comp[c] == y.control_grid.comp[c]);
  }
}

TEST_CASE("squaring step count") {
  CHECK(squaring_steps(0.0) == 0);
  CHECK(squaring_steps(0.49) == 0);
  CHECK(squaring_steps(0.5) == 1);
  CHECK(squaring_steps(1.0) == 2);
  CHECK(squaring_steps(3.9) == 3);
  CHECK(squaring_steps(1e9) == kMaxSquarings);
}

TEST_CASE("constant velocity integrates to a translation") {
  const Vec3 v{1.3, -0.7, 2.1};
  VectorField vel({20, 20, 20}, {1, 1, 1});
  for (int a = 0; a < 3; ++a)
    for (float& x : vel.comp[a].data()) x = static_cast<float>(v[a]);
  const DisplacementField d = integrate_velocity(vel);
  double worst = 0.0;
  for (int k = 4; k < 16; ++k)
    for (int j = 4; j < 16; ++j)
      for (int i = 4; i < 16; ++i)
        for (int a = 0; a < 3; ++a) worst = std::max(worst, std::abs(d.comp[a](i, j, k) - v[a]));
  CHECK(worst < 1e-3);
}

TEST_CASE("integrate(v) composed with integrate(-v) is close to the identity") {
  Rng rng(17);
  for (int rep = 0; rep < 5; ++rep) {
    const VelocityField vf = sample_svf(GenerationPriors::generative(), {32, 32, 32}, rng);
    const DisplacementField fwd = integrate_svf(vf);
    const DisplacementField inv = integrate_svf(negated(vf));
    CHECK(mean_norm(compose(fwd, inv)) < 0.1);
  }
}

TEST_CASE("compose follows inner then outer") {
  // inner: +1 along x everywhere; outer: +x/10 along y.
  DisplacementField inner({10, 10, 10}, {1, 1, 1}), outer({10, 10, 10}, {1, 1, 1});
  for (float& x : inner.comp[0].data()) x = 1.f;
  for (int k = 0; k < 10; ++k)
    for (int j = 0; j < 10; ++j)
      for (int i = 0; i < 10; ++i) outer.comp[1](i, j, k) = static_cast<float>(i) / 10.f;
  const DisplacementField c = compose(outer, inner);
  CHECK(c.comp[0](3, 3, 3) == doctest::Approx(1.0));
  CHECK(c.comp[1](3, 3, 3) == doctest::Approx(0.4));
}

TEST_CASE("integrated fields from the generative prior rarely fold") {
  Rng rng(23);
  std::size_t positive = 0, total = 0;
  const Dims d{40, 40, 40};
  for (int rep = 0; rep < 100; ++rep) {
    const DisplacementField disp = integrate_svf(sample_svf(GenerationPriors::generative(), d, rng));
    const Image det = jacobian_determinant(disp);
    for (int k = 1; k < d[2] - 1; ++k)
      for (int j = 1; j < d[1] - 1; ++j)
        for (int i = 1; i < d[0] - 1; ++i) {
          ++total;
          if (det(i, j, k) > 0.f) ++positive;
        }
  }
  CHECK(static_cast<double>(positive) / total >= 0.999);
}

TEST_CASE("warp") {
  LabelMap cube({20, 20, 20}, {1, 1, 1}, 0);
  for (int k = 5; k < 10; ++k)
    for (int j = 5; j < 10; ++j)
      for (int i = 5; i < 10; ++i) cube(i, j, k) = 7;

  SUBCASE("identity leaves the input unchanged") {
    CHECK(warp(cube, AffineParams{}, zero_displacement(cube.dims())) == cube);
    Image im({6, 5, 4}, {1, 1, 1});
    for (std::size_t n = 0; n < im.size(); ++n) im[n] = static_cast<float>(n) * 0.5f;
    CHECK(warp(im, AffineParams{}, zero_displacement(im.dims()), Interp::trilinear) == im);
  }
  SUBCASE("+3 voxel translation shifts a cube by exactly 3 voxels") {
    AffineParams a;
    a.translations = {3, 0, 0};
    const LabelMap out = warp(cube, a, zero_displacement(cube.dims()));
    for (int k = 0; k < 20; ++k)
      for (int j = 0; j < 20; ++j)
        for (int i = 0; i < 20; ++i) {
          const Label want = (i >= 8 && i < 13 && j >= 5 && j < 10 && k >= 5 && k < 10) ? 7 : 0;
          CHECK(out(i, j, k) == want);
        }
  }
  SUBCASE("displacement field translation agrees with the affine one") {
    DisplacementField d(cube.dims(), {1, 1, 1});
    for (float& x : d.comp[1].data()) x = -2.f;
    AffineParams a;
    a.translations = {0, 2, 0};
    CHECK(warp(cube, AffineParams{}, d) == warp(cube, a, zero_displacement(cube.dims())));
  }
  SUBCASE("random warps never introduce labels") {
    const LabelMap head = test::head_phantom(32);
    std::set<Label> alphabet(head.data().begin(), head.data().end());
    Rng rng(4);
    for (int rep = 0; rep < 5; ++rep) {
      const SpatialTransform t = sample_transform(GenerationPriors::degradation(), head.dims(), rng);
      const LabelMap out = warp(head, t.affine, t.displacement);
      for (Label l : out.data()) CHECK(alphabet.count(l) == 1);
    }
  }
  SUBCASE("mismatched displacement dims are rejected") {
    CHECK_THROWS_AS(warp(cube, AffineParams{}, zero_displacement({10, 10, 10})), std::invalid_argument);
  }
}

TEST_CASE("sample_transform is reproducible") {
  Rng a(8), b(8);
  const SpatialTransform x = sample_transform(GenerationPriors::generative(), {16, 16, 16}, a);
  const SpatialTransform y = sample_transform(GenerationPriors::generative(), {16, 16, 16}, b);
  CHECK(x.affine.rotations == y.affine.rotations);
  CHECK(x.sigma_v2 == y.sigma_v2);
  for (int c = 0; c < 3; ++c) CHECK(x.displacement.comp[c] == y.displacement.comp[c]);
}
