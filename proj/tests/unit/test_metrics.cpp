#include <doctest.h>

#include <cmath>
#include <random>

#include "phantoms.hpp"
#include "synthkit/metrics.hpp"

using namespace synthkit;

namespace {

LabelMap box(Dims d, int x0, int x1, Label l) {
  LabelMap m(d, {1, 1, 1}, 0);
  for (int k = 0; k < d[2]; ++k)
    for (int j = 0; j < d[1]; ++j)
      for (int i = x0; i < x1; ++i) m(i, j, k) = l;
  return m;
}

}  // namespace

TEST_CASE("hard Dice") {
  const std::vector<Label> ids{0, 2, 3, 4};
  const LabelMap a = test::sphere_phantom(20, 9, 6, 3);

  SUBCASE("identical maps score 1 everywhere") {
    const DiceReport r = hard_dice(a, a, ids);
    for (Label l : ids) CHECK(*r.per_label.at(l) == 1.0);
    CHECK(r.mean == 1.0);
  }
  SUBCASE("disjoint foreground scores 0") {
    const LabelMap x = box({10, 4, 4}, 0, 5, 1), y = box({10, 4, 4}, 5, 10, 1);
    const std::vector<Label> one{1};
    CHECK(*hard_dice(x, y, one).per_label.at(1) == 0.0);
  }
  SUBCASE("half-overlapping boxes") {
    // |A| = |B| = 4 columns, overlap 2 columns: 2 * 2 / (4 + 4).
    const LabelMap x = box({10, 3, 3}, 0, 4, 1), y = box({10, 3, 3}, 2, 6, 1);
    const std::vector<Label> one{1};
    CHECK(*hard_dice(x, y, one).per_label.at(1) == doctest::Approx(0.5));
  }
  SUBCASE("labels absent from both maps are excluded from the mean") {
    const std::vector<Label> with_absent{2, 3, 99};
    const DiceReport r = hard_dice(a, a, with_absent);
    CHECK(!r.per_label.at(99).has_value());
    CHECK(r.mean == 1.0);
    const std::vector<Label> only_absent{99};
    CHECK(std::isnan(hard_dice(a, a, only_absent).mean));
  }
  SUBCASE("symmetric and invariant to relabelling") {
    const LabelMap b = test::sphere_phantom(20, 8, 5, 3);
    const DiceReport ab = hard_dice(a, b, ids), ba = hard_dice(b, a, ids);
    for (Label l : ids) CHECK(*ab.per_label.at(l) == *ba.per_label.at(l));
    // Permute label values consistently in both maps.
    const std::map<Label, Label> perm{{0, 10}, {2, 40}, {3, 20}, {4, 30}};
    LabelMap pa = a, pb = b;
    for (auto& v : pa.storage()) v = perm.at(v);
    for (auto& v : pb.storage()) v = perm.at(v);
    std::vector<Label> pids;
    for (Label l : ids) pids.push_back(perm.at(l));
    const DiceReport p = hard_dice(pa, pb, pids);
    for (Label l : ids) CHECK(*p.per_label.at(perm.at(l)) == *ab.per_label.at(l));
  }
  SUBCASE("matches direct counting on random maps") {
    std::mt19937 gen(3);
    std::uniform_int_distribution<int> pick(0, 3);
    LabelMap x({12, 12, 12}, {1, 1, 1}), y({12, 12, 12}, {1, 1, 1});
    for (auto& v : x.storage()) v = ids[pick(gen)];
    for (auto& v : y.storage()) v = ids[pick(gen)];
    const DiceReport r = hard_dice(x, y, ids);
    for (Label l : ids) {
      std::size_t nx = 0, ny = 0, both = 0;
      for (std::size_t n = 0; n < x.size(); ++n) nx += x[n] == l, ny += y[n] == l, both += x[n] == l && y[n] == l;
      CHECK(*r.per_label.at(l) == doctest::Approx(2.0 * both / double(nx + ny)));
    }
  }
  SUBCASE("dims must agree") {
    CHECK_THROWS_AS(hard_dice(a, LabelMap({3, 3, 3}, {1, 1, 1}), ids), std::invalid_argument);
  }
}

TEST_CASE("soft Dice") {
  const std::vector<Label> ids{0, 2, 3, 4};
  const LabelMap a = test::sphere_phantom(16, 7, 5, 2);
  const SoftSegMap pa = to_soft(a, ids);

  SUBCASE("identical maps score 1") { CHECK(soft_dice(pa, pa) == doctest::Approx(1.0).epsilon(1e-12)); }
  SUBCASE("uniform against one-hot has a closed form") {
    SoftSegMap u = pa;
    for (auto& ch : u.channels)
      for (float& v : ch.data()) v = 0.25f;
    double want = 0.0;
    const double N = static_cast<double>(a.size());
    for (Label l : ids) {
      const double count = static_cast<double>(std::count(a.data().begin(), a.data().end(), l));
      const double e = kSoftDiceEpsilon;
      want += (2.0 * 0.25 * count + e) / (0.0625 * N + count + e) / ids.size();
    }
    CHECK(soft_dice(u, pa) == doctest::Approx(want).epsilon(1e-9));
    CHECK(soft_dice(pa, u) == doctest::Approx(soft_dice(u, pa)).epsilon(1e-15));
  }
  SUBCASE("on one-hot maps it agrees with hard Dice") {
    const LabelMap b = test::sphere_phantom(16, 6, 4, 2);
    const DiceReport hard = hard_dice(a, b, ids);
    const auto per = soft_dice_per_channel(pa, to_soft(b, ids));
    for (std::size_t c = 0; c < ids.size(); ++c) CHECK(std::abs(per[c] - *hard.per_label.at(ids[c])) < 1e-6);
  }
  SUBCASE("mismatched channel lists are rejected") {
    const std::vector<Label> other{0, 2, 3, 5};
    LabelMap b = a;
    for (auto& v : b.storage()) v = v == 4 ? 5 : v;
    CHECK_THROWS_AS(soft_dice(pa, to_soft(b, other)), std::invalid_argument);
  }
}

TEST_CASE("region volumes") {
  LabelMap cube({20, 20, 20}, {1, 1, 1}, 0);
  for (int k = 0; k < 10; ++k)
    for (int j = 0; j < 10; ++j)
      for (int i = 0; i < 10; ++i) cube(i, j, k) = 5;
  auto v = region_volumes(cube);
  CHECK(v.at(5) == 1000.0);
  CHECK(v.at(0) == 7000.0);
  CHECK(region_volumes(cube, {2, 2, 2}).at(5) == 8000.0);
  CHECK(region_volumes(LabelMap({3, 3, 3}, {1, 1, 1}, 0)).count(5) == 0);

  const LabelMap head = test::head_phantom(24);
  double sum = 0.0;
  for (const auto& [l, vol] : region_volumes(head)) sum += vol;
  CHECK(sum == 24.0 * 24.0 * 24.0);
}

TEST_CASE("Dice CSV layout") {
  const LabelMap a = box({6, 2, 2}, 0, 3, 2);
  const std::vector<Label> ids{2, 3, 99};
  const LabelTaxonomy tax = LabelTaxonomy::default_taxonomy();
  const std::string csv = hard_dice(a, a, ids).to_csv(&tax);
  CHECK(csv.rfind("label,name,dice\n", 0) == 0);
  CHECK(csv.find("\n2," + tax.entry(2).name + ",1\n") != std::string::npos);
  CHECK(csv.find("\n99,,absent\n") != std::string::npos);
  CHECK(csv.find("\nmean,,1\n") != std::string::npos);
}
