#include "synthkit/generator.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "synthkit/volume_ops.hpp"
#include "text_util.hpp"

namespace synthkit {

namespace {

// GMM and noise priors live on a [0, 255] intensity scale; the image is in
// [0, 1] by the time noise is injected.
constexpr double kIntensityScale = 255.0;

std::string join(const Vec3& v) {
  return detail::format_double(v[0]) + "," + detail::format_double(v[1]) + "," + detail::format_double(v[2]);
}

void record_draw(SampleMeta& meta, const GenerationPriors& priors, const ParameterDraw& p) {
  meta.set("preset", to_string(priors.preset));
  meta.set("rotation", p.affine.rotations);
  meta.set("scaling", p.affine.scalings);
  meta.set("shearing", p.affine.shearings);
  meta.set("translation", p.affine.translations);
  meta.set("nonlinear_sigma_v2", p.sigma_v2);
  meta.set("bias_sigma_B2", p.sigma_B2);
  meta.set("gamma", p.gamma);
  meta.set("slice_spacing", p.r_sp);
  meta.set("slice_thickness", p.sigma_th);
  meta.set("noise_sigma", p.sigma_E);
  meta.set("lr_axis", std::to_string(p.lr_axis));
}

SpatialTransform transform_for(const ParameterDraw& p, const Dims& dims, Rng& rng) {
  SpatialTransform t;
  t.affine = p.affine;
  t.sigma_v2 = p.sigma_v2;
  const VelocityField vf = sample_svf(Range{p.sigma_v2, p.sigma_v2}, dims, rng);
  t.displacement = p.sigma_v2 == 0.0 ? zero_displacement(dims) : integrate_svf(vf);
  return t;
}

// normalise -> gamma -> blur -> subsample -> noise -> upsample
Image degrade_intensities(const Image& biased, const ParameterDraw& p, Rng& rng, SampleMeta& meta) {
  Image img = normalize_01(biased);
  meta.stage(kStageNormalize);
  img = gamma_augment(img, p.gamma);
  meta.stage(kStageGamma);
  const LrGeometry geo = lr_geometry(p, img.spacing());
  meta.set("lr_spacing", geo.spacing);
  const Image lr = simulate_lr(img, geo.sigma_th, geo.spacing, p.sigma_E / kIntensityScale, rng, &meta);
  Image out = resample_to(lr, img.dims(), img.spacing(), Interp::trilinear);
  meta.stage(kStageUpsample);
  return out;
}

struct SynthResult {
  LabelMap deformed;
  Image image;
  SampleMeta meta;
};

SynthResult synthesize_sample(const LabelMap& label_map, const LabelTaxonomy& taxonomy,
                              const GenerationPriors& priors, Rng& rng) {
  taxonomy.validate(label_map);
  if (priors.preset != Preset::generative || !priors.gmm_mean) {
    throw std::invalid_argument("training pairs need the generative preset (GMM ranges)");
  }
  priors.validate();
  SynthResult r;
  const ParameterDraw p = sample_parameters(priors, rng);
  record_draw(r.meta, priors, p);

  const SpatialTransform t = transform_for(p, label_map.dims(), rng);
  r.deformed = warp(label_map, t.affine, t.displacement);
  r.meta.stage(kStageDeform);

  const std::vector<Label> alphabet = taxonomy.labels();
  const GmmDraw gmm = sample_gmm(alphabet, priors, rng);
  for (Label l : alphabet) {
    const std::size_t c = gmm.component(l);
    r.meta.set("gmm." + std::to_string(l),
               detail::format_double(gmm.means[c]) + "," + detail::format_double(gmm.variances[c]));
  }
  const BiasField bias = sample_bias(p.sigma_B2, rng);
  const Image bias_field = bias.field(label_map.dims(), label_map.spacing());
  // GMM sample and bias division happen in one pass.
  Image g = synthesize(r.deformed, gmm, bias_field, rng);
  r.meta.stage(kStageGmm);
  r.meta.stage(kStageBias);

  r.image = degrade_intensities(g, p, rng, r.meta);
  return r;
}

}  // namespace

void SampleMeta::set(const std::string& key, const std::string& value) {
  for (auto& kv : params) {
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  }
  params.emplace_back(key, value);
}

void SampleMeta::set(const std::string& key, double value) { set(key, detail::format_double(value)); }

void SampleMeta::set(const std::string& key, const Vec3& value) { set(key, join(value)); }

std::optional<std::string> SampleMeta::get(const std::string& key) const {
  for (const auto& kv : params)
    if (kv.first == key) return kv.second;
  return std::nullopt;
}

std::string SampleMeta::serialize() const {
  std::ostringstream os;
  os << "stages=";
  for (std::size_t n = 0; n < stages.size(); ++n) os << (n ? "," : "") << stages[n];
  os << "\n";
  for (const auto& [k, v] : params) os << k << "=" << v << "\n";
  return os.str();
}

SampleMeta SampleMeta::parse(const std::string& text) {
  SampleMeta m;
  for (auto& [k, v] : detail::parse_key_values(text)) {
    if (k == "stages") {
      if (!v.empty()) m.stages = detail::split(v, ',');
    } else {
      m.params.emplace_back(k, v);
    }
  }
  return m;
}

ParameterDraw sample_parameters(const GenerationPriors& priors, Rng& rng) {
  ParameterDraw p;
  p.affine = sample_affine(priors, rng);
  p.sigma_v2 = draw(rng, priors.sigma_v2);
  p.sigma_B2 = draw(rng, priors.sigma_B2);
  p.gamma = draw(rng, priors.gamma);
  p.r_sp = draw(rng, priors.r_sp);
  p.sigma_th = draw(rng, priors.sigma_th);
  p.sigma_E = draw(rng, priors.sigma_E);
  const double u = draw(rng, Range{0.0, 1.0});
  p.lr_axis = u < priors.single_axis_probability ? draw_int(rng, 0, 2) : -1;
  return p;
}

LrGeometry lr_geometry(const ParameterDraw& draw, const Vec3& hr_spacing) {
  LrGeometry g;
  g.axis = draw.lr_axis;
  g.sigma_th = draw.sigma_th;
  for (int a = 0; a < 3; ++a) {
    const bool low = draw.lr_axis < 0 || draw.lr_axis == a;
    g.spacing[a] = low ? std::max(draw.r_sp, hr_spacing[a]) : hr_spacing[a];
  }
  return g;
}

Image simulate_lr(const Image& hr, double sigma_th_mm, const Vec3& r_sp, double sigma_E, Rng& rng, SampleMeta* meta) {
  if (!(sigma_th_mm >= 0.0)) throw std::invalid_argument("simulate_lr: slice thickness must be >= 0");
  if (!(sigma_E >= 0.0)) throw std::invalid_argument("simulate_lr: noise sigma must be >= 0");
  Vec3 sigma_vox{0.0, 0.0, 0.0};
  for (int a = 0; a < 3; ++a) {
    if (!(r_sp[a] >= hr.spacing()[a])) {
      throw std::invalid_argument("simulate_lr: slice spacing must not be finer than the input spacing");
    }
    if (r_sp[a] > hr.spacing()[a]) sigma_vox[a] = sigma_th_mm / hr.spacing()[a];
  }
  Image img = gaussian_blur(hr, sigma_vox);
  if (meta) meta->stage(kStageBlur);
  img = resample(img, r_sp, Interp::trilinear);
  if (meta) meta->stage(kStageSubsample);
  if (sigma_E > 0.0) {
    img = add_noise(img, sigma_E, rng);
    for (float& v : img.data()) v = std::max(v, 0.0f);
  }
  if (meta) meta->stage(kStageNoise);
  return img;
}

std::string to_string(PairRole r) { return r == PairRole::s1 ? "s1" : "s2"; }

PairRole parse_pair_role(const std::string& s) {
  if (s == "s1") return PairRole::s1;
  if (s == "s2") return PairRole::s2;
  throw std::invalid_argument("unknown pair role '" + s + "' (expected s1 or s2)");
}

TrainingPair generate_pair_s1(const LabelMap& label_map, const LabelTaxonomy& taxonomy,
                              const GenerationPriors& priors, Rng& rng) {
  SynthResult r = synthesize_sample(label_map, taxonomy, priors, rng);
  TrainingPair pair;
  pair.image = std::move(r.image);
  pair.target = group_tissues(r.deformed, taxonomy);
  pair.meta = std::move(r.meta);
  pair.meta.set("role", "s1");
  return pair;
}

TrainingPair generate_pair_s2(const LabelMap& label_map, const LabelTaxonomy& taxonomy,
                              const GenerationPriors& priors, const CorruptionPriors& corruption, Rng& rng) {
  SynthResult r = synthesize_sample(label_map, taxonomy, priors, rng);
  TrainingPair pair;
  pair.image = std::move(r.image);
  pair.target = predicted_only(r.deformed, taxonomy);
  const std::vector<Label> tissues = tissue_class_ids();
  pair.conditioning = corrupt_soft(to_soft(group_tissues(r.deformed, taxonomy), tissues), corruption, rng);
  pair.meta = std::move(r.meta);
  pair.meta.set("role", "s2");
  pair.meta.set("corruption_radius", std::to_string(corruption.radius_lo) + "," + std::to_string(corruption.radius_hi));
  pair.meta.set("corruption_sigma_v2",
                detail::format_double(corruption.sigma_v2.lo) + "," + detail::format_double(corruption.sigma_v2.hi));
  return pair;
}

TrainingPair generate_pair(PairRole role, const LabelMap& label_map, const LabelTaxonomy& taxonomy,
                           const GenerationPriors& priors, const CorruptionPriors& corruption, Rng& rng) {
  return role == PairRole::s1 ? generate_pair_s1(label_map, taxonomy, priors, rng)
                              : generate_pair_s2(label_map, taxonomy, priors, corruption, rng);
}

DegradedPair degrade_image(const Image& image, const LabelMap& labels, const GenerationPriors& priors, Rng& rng) {
  if (image.dims() != labels.dims()) throw std::invalid_argument("degrade_image: image and labels differ in dims");
  priors.validate();
  DegradedPair out;
  const ParameterDraw p = sample_parameters(priors, rng);
  record_draw(out.meta, priors, p);

  const SpatialTransform t = transform_for(p, image.dims(), rng);
  const Image moved = warp(image, t.affine, t.displacement, Interp::trilinear);
  out.labels = warp(labels, t.affine, t.displacement);
  out.meta.stage(kStageDeform);

  const BiasField bias = sample_bias(p.sigma_B2, rng);
  const Image biased = apply_bias(moved, bias.field(image.dims(), image.spacing()));
  out.meta.stage(kStageBias);

  out.image = degrade_intensities(biased, p, rng, out.meta);
  return out;
}

}  // namespace synthkit
