#include <doctest.h>

#include <set>
#include <thread>

#include "phantoms.hpp"
#include "synthkit/hierarchy.hpp"
#include "synthkit/nifti.hpp"

using namespace synthkit;

namespace {

// Records what it was called with and returns a fixed map.
class Spy : public Predictor {
 public:
  Spy(SoftSegMap out, std::size_t in) : out_(std::move(out)), in_(in) {}
  SoftSegMap predict(const Image* image, const SoftSegMap* cond) override {
    ++calls;
    saw_image = image != nullptr;
    saw_cond = cond != nullptr;
    if (image) image_dims = image->dims(), image_spacing = image->spacing();
    if (cond) cond_channels = cond->channel_count();
    return out_;
  }
  std::size_t input_channels() const override { return in_; }
  const std::vector<Label>& classes() const override { return out_.class_ids; }

  int calls = 0;
  bool saw_image = false, saw_cond = false;
  Dims image_dims{};
  Vec3 image_spacing{};
  std::size_t cond_channels = 0;

 private:
  SoftSegMap out_;
  std::size_t in_;
};

class Throwing : public Predictor {
 public:
  explicit Throwing(std::vector<Label> c) : c_(std::move(c)) {}
  SoftSegMap predict(const Image*, const SoftSegMap*) override { throw std::runtime_error("network exploded"); }
  std::size_t input_channels() const override { return 1; }
  const std::vector<Label>& classes() const override { return c_; }

 private:
  std::vector<Label> c_;
};

struct Fixture {
  LabelMap tissues = test::sphere_phantom(16, 7, 5, 2);  // labels 0, 2, 3, 4
  std::vector<Label> tissue_ids = tissue_class_ids();
  std::vector<Label> fine_ids{0, 2, 3, 4};
  Image image{tissues.dims(), tissues.spacing(), 1.f};

  std::shared_ptr<OraclePredictor> s1() const { return std::make_shared<OraclePredictor>(tissues, tissue_ids, 1); }
  std::shared_ptr<OraclePredictor> s2() const {
    return std::make_shared<OraclePredictor>(tissues, fine_ids, 1 + tissue_ids.size());
  }
};

}  // namespace

TEST_CASE("variant and role names") {
  for (Variant v : {Variant::synthseg, Variant::cascade, Variant::postdenoise, Variant::synthseg_plus})
    CHECK(parse_variant(to_string(v)) == v);
  CHECK(parse_variant("synthseg+") == Variant::synthseg_plus);
  CHECK_THROWS_AS(parse_variant("unet"), std::invalid_argument);
  CHECK(to_string(Role::S2) == "S2");
}

TEST_CASE("required roles per variant") {
  PipelineSpec spec;
  spec.variant = Variant::synthseg;
  CHECK(spec.required_roles() == std::vector<Role>{Role::S});
  spec.variant = Variant::cascade;
  CHECK(spec.required_roles() == std::vector<Role>{Role::S1, Role::S2});
  spec.variant = Variant::synthseg_plus;
  CHECK(spec.required_roles() == std::vector<Role>{Role::S1, Role::D, Role::S2});
  spec.variant = Variant::postdenoise;
  CHECK(spec.required_roles() == std::vector<Role>{Role::S1, Role::S2, Role::D});
  spec.predictors[Role::S] = std::make_shared<IdentityDenoiser>(std::vector<Label>{0});
  CHECK(spec.required_roles() == std::vector<Role>{Role::S, Role::D});
}

TEST_CASE("missing roles are rejected with the role named") {
  Fixture f;
  PipelineSpec spec;
  spec.variant = Variant::synthseg_plus;
  spec.predictors[Role::S1] = f.s1();
  spec.predictors[Role::S2] = f.s2();
  try {
    run_pipeline(spec, f.image);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("D predictor") != std::string::npos);
  }
  spec.variant = Variant::cascade;
  CHECK_NOTHROW(run_pipeline(spec, f.image));
}

TEST_CASE("oracle chains reproduce the truth for every variant") {
  Fixture f;
  auto d = std::make_shared<IdentityDenoiser>(f.tissue_ids);
  for (Variant v : {Variant::synthseg, Variant::cascade, Variant::synthseg_plus, Variant::postdenoise}) {
    PipelineSpec spec;
    spec.variant = v;
    if (v == Variant::synthseg) spec.predictors[Role::S] = std::make_shared<OraclePredictor>(f.tissues, f.fine_ids, 1);
    if (v != Variant::synthseg) spec.predictors[Role::S1] = f.s1();
    if (v == Variant::cascade || v == Variant::synthseg_plus) spec.predictors[Role::S2] = f.s2();
    if (v == Variant::synthseg_plus) spec.predictors[Role::D] = d;
    if (v == Variant::postdenoise) {
      spec.predictors[Role::S2] = std::make_shared<OraclePredictor>(f.tissues, f.tissue_ids, 1 + f.tissue_ids.size());
      spec.predictors[Role::D] = d;
    }
    const PipelineResult r = run_pipeline(spec, f.image);
    CHECK(r.final == f.tissues);
    for (Role role : spec.required_roles()) CHECK(r.intermediates.count(role) == 1);
  }
}

TEST_CASE("inputs are wired role to role") {
  Fixture f;
  auto s1 = std::make_shared<Spy>(to_soft(f.tissues, f.tissue_ids), 1);
  auto d = std::make_shared<Spy>(to_soft(f.tissues, f.tissue_ids), f.tissue_ids.size());
  auto s2 = std::make_shared<Spy>(to_soft(f.tissues, f.fine_ids), 1 + f.tissue_ids.size());
  PipelineSpec spec;
  spec.predictors = {{Role::S1, s1}, {Role::D, d}, {Role::S2, s2}};
  run_pipeline(spec, f.image);
  CHECK((s1->calls == 1 && s1->saw_image && !s1->saw_cond));
  CHECK((d->calls == 1 && !d->saw_image && d->saw_cond && d->cond_channels == 5));
  CHECK((s2->calls == 1 && s2->saw_image && s2->saw_cond && s2->cond_channels == 5));
}

TEST_CASE("channel count mismatches are rejected") {
  Fixture f;
  PipelineSpec spec;
  spec.variant = Variant::cascade;
  spec.predictors[Role::S1] = f.s1();
  spec.predictors[Role::S2] = std::make_shared<OraclePredictor>(f.tissues, f.fine_ids, 1);
  CHECK_THROWS_AS(run_pipeline(spec, f.image), std::invalid_argument);
  spec.predictors[Role::S1] = std::make_shared<OraclePredictor>(f.tissues, f.tissue_ids, 2);
  spec.predictors[Role::S2] = f.s2();
  CHECK_THROWS_AS(run_pipeline(spec, f.image), std::invalid_argument);
}

TEST_CASE("synthseg_plus needs tissue maps between stages") {
  Fixture f;
  PipelineSpec spec;
  spec.predictors[Role::S1] = std::make_shared<OraclePredictor>(f.tissues, f.fine_ids, 1);
  spec.predictors[Role::D] = std::make_shared<IdentityDenoiser>(f.fine_ids);
  spec.predictors[Role::S2] = std::make_shared<OraclePredictor>(f.tissues, f.fine_ids, 1 + f.fine_ids.size());
  CHECK_THROWS_AS(run_pipeline(spec, f.image), std::invalid_argument);
}

TEST_CASE("predictor failures carry the role") {
  Fixture f;
  PipelineSpec spec;
  spec.variant = Variant::synthseg;
  spec.predictors[Role::S] = std::make_shared<Throwing>(f.fine_ids);
  try {
    run_pipeline(spec, f.image);
    FAIL("expected an exception");
  } catch (const PredictorError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("predictor S:") != std::string::npos);
    CHECK(msg.find("network exploded") != std::string::npos);
  }
}

TEST_CASE("predictor output is validated") {
  Fixture f;
  SoftSegMap bad = to_soft(f.tissues, f.fine_ids);
  SoftSegMap small = to_soft(LabelMap({4, 4, 4}, {1, 1, 1}, 0), f.fine_ids);
  PipelineSpec spec;
  spec.variant = Variant::synthseg;
  spec.predictors[Role::S] = std::make_shared<ConstantPredictor>(small, 1);
  CHECK_THROWS_AS(run_pipeline(spec, f.image), PredictorError);
  bad.channels[0][0] = 0.7f;  // no longer sums to one
  CHECK_THROWS_AS(ConstantPredictor(bad, 1), std::invalid_argument);
}

TEST_CASE("pipeline is deterministic and stays within the class alphabet") {
  Fixture f;
  PipelineSpec spec;
  spec.predictors[Role::S1] = f.s1();
  spec.predictors[Role::D] = std::make_shared<MajorityDenoiser>(f.tissue_ids, 1);
  spec.predictors[Role::S2] = f.s2();
  const PipelineResult a = run_pipeline(spec, f.image);
  const PipelineResult b = run_pipeline(spec, f.image);
  CHECK(a.final == b.final);
  std::set<Label> seen(a.final.data().begin(), a.final.data().end());
  for (Label l : seen) CHECK(std::count(f.fine_ids.begin(), f.fine_ids.end(), l) == 1);
}

TEST_CASE("images off the working grid are resampled first") {
  Fixture f;
  const Image coarse({8, 8, 8}, {2, 2, 2}, 1.f);
  auto s = std::make_shared<Spy>(to_soft(f.tissues, f.fine_ids), 1);
  PipelineSpec spec;
  spec.variant = Variant::synthseg;
  spec.predictors[Role::S] = s;
  const PipelineResult r = run_pipeline(spec, coarse);
  CHECK(s->image_dims == Dims{16, 16, 16});
  CHECK(s->image_spacing == Vec3{1, 1, 1});
  CHECK(r.final.dims() == Dims{16, 16, 16});
}

TEST_CASE("majority denoiser") {
  const std::vector<Label> ids{0, 1};
  LabelMap l({9, 9, 9}, {1, 1, 1}, 0);
  for (int k = 2; k < 7; ++k)
    for (int j = 2; j < 7; ++j)
      for (int i = 2; i < 7; ++i) l(i, j, k) = 1;
  LabelMap noisy = l;
  noisy(4, 4, 4) = 0;  // hole inside the cube
  noisy(0, 0, 8) = 1;  // speck outside
  MajorityDenoiser d(ids, 1);
  const SoftSegMap in = to_soft(noisy, ids);
  const LabelMap out = argmax(d.predict(nullptr, &in));
  CHECK(out(4, 4, 4) == 1);
  CHECK(out(0, 0, 8) == 0);
  MajorityDenoiser zero(ids, 0);
  CHECK(argmax(zero.predict(nullptr, &in)) == noisy);
  CHECK_THROWS_AS(d.predict(nullptr, nullptr), std::invalid_argument);
  CHECK_THROWS_AS(MajorityDenoiser(ids, -1), std::invalid_argument);
}

TEST_CASE("external predictor file protocol") {
  test::TempDir dir("ext");
  Fixture f;
  const SoftSegMap stored = to_soft(f.tissues, f.fine_ids);
  const std::string stored_path = (dir / "stored.nii").string();
  write_soft(stored_path, stored);

  SUBCASE("output file is read back verbatim") {
    ExternalPredictor p("test -f {image} && cp " + stored_path + " {output}", f.fine_ids, 1, "S");
    const SoftSegMap out = p.predict(&f.image, nullptr);
    CHECK(out.class_ids == stored.class_ids);
    for (std::size_t c = 0; c < stored.channel_count(); ++c) CHECK(out.channels[c] == stored.channels[c]);
  }
  SUBCASE("conditioning is written as a 4D map") {
    ExternalPredictor p("cp {cond} {output}", f.fine_ids, 1 + f.fine_ids.size(), "S2");
    SoftSegMap soft = stored;
    for (std::size_t n = 0; n < soft.channels[0].size(); ++n) {
      const float a = soft.channels[0][n], b = soft.channels[1][n];
      soft.channels[0][n] = 0.3f * a + 0.7f * b;
      soft.channels[1][n] = 0.7f * a + 0.3f * b;
    }
    const SoftSegMap out = p.predict(&f.image, &soft);
    for (std::size_t c = 0; c < soft.channel_count(); ++c)
      for (std::size_t n = 0; n < soft.channels[c].size(); ++n)
        CHECK(std::abs(out.channels[c][n] - soft.channels[c][n]) < 1e-6);
  }
  SUBCASE("nonzero exit raises with status and log") {
    ExternalPredictor p("echo model-missing {image} {output}; exit 3", f.fine_ids, 1, "S1");
    try {
      p.predict(&f.image, nullptr);
      FAIL("expected an exception");
    } catch (const PredictorError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("S1") != std::string::npos);
      CHECK(msg.find("status 3") != std::string::npos);
      CHECK(msg.find("model-missing") != std::string::npos);
    }
  }
  SUBCASE("malformed output raises") {
    ExternalPredictor garbage("echo junk > {output} # {image}", f.fine_ids, 1);
    CHECK_THROWS_AS(garbage.predict(&f.image, nullptr), PredictorError);
    ExternalPredictor silent("true {image} {output}", f.fine_ids, 1);
    CHECK_THROWS_AS(silent.predict(&f.image, nullptr), PredictorError);
    const std::string wrong = (dir / "wrong.nii").string();
    write_soft(wrong, to_soft(LabelMap({4, 4, 4}, {1, 1, 1}, 0), f.fine_ids));
    ExternalPredictor dims("cp " + wrong + " {output} # {image}", f.fine_ids, 1);
    CHECK_THROWS_AS(dims.predict(&f.image, nullptr), PredictorError);
  }
  SUBCASE("template placeholders are checked") {
    CHECK_THROWS_AS(ExternalPredictor("run {image}", f.fine_ids, 1), std::invalid_argument);
    CHECK_THROWS_AS(ExternalPredictor("run {output}", f.fine_ids, 1), std::invalid_argument);
    CHECK_NOTHROW(external_predictor("run {cond} {output}", f.fine_ids, 5));
  }
  SUBCASE("concurrent calls on one instance are serialised") {
    ExternalPredictor p("test -f {image} && cp " + stored_path + " {output}", f.fine_ids, 1);
    std::vector<std::thread> threads;
    std::atomic<int> ok{0};
    for (int t = 0; t < 4; ++t)
      threads.emplace_back([&] {
        for (int rep = 0; rep < 3; ++rep)
          if (argmax(p.predict(&f.image, nullptr)) == f.tissues) ++ok;
      });
    for (auto& t : threads) t.join();
    CHECK(ok == 12);
  }
  SUBCASE("works as a pipeline stage") {
    PipelineSpec spec;
    spec.variant = Variant::synthseg;
    spec.predictors[Role::S] = external_predictor("cp " + stored_path + " {output} # {image}", f.fine_ids, 1);
    CHECK(run_pipeline(spec, f.image).final == f.tissues);
  }
}
