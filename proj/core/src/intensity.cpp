#include "synthkit/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "synthkit/volume_ops.hpp"

namespace synthkit {

std::size_t GmmDraw::component(Label l) const {
  const auto it = label_index.find(l);
  if (it == label_index.end()) {
    throw std::invalid_argument("GMM has no component for label " + std::to_string(l));
  }
  return it->second;
}

Image BiasField::field(const Dims& dims, const Vec3& spacing) const {
  const Vec3 grid_spacing{dims[0] * spacing[0] / kBiasControlSize, dims[1] * spacing[1] / kBiasControlSize,
                          dims[2] * spacing[2] / kBiasControlSize};
  const Image coarse(control_grid.dims(), grid_spacing, control_grid.storage());
  Image out = resample_to(coarse, dims, spacing, Interp::trilinear);
  for (float& v : out.data()) v = std::exp(v);
  return out;
}

GmmDraw sample_gmm(std::span<const Label> labels, const GenerationPriors& priors, Rng& rng) {
  if (labels.empty()) throw std::invalid_argument("sample_gmm: label set is empty");
  if (!priors.gmm_mean || !priors.gmm_variance) {
    throw std::invalid_argument("sample_gmm: priors carry no GMM ranges (degradation preset?)");
  }
  GmmDraw g;
  for (Label l : labels) {
    if (g.has(l)) continue;
    g.label_index.emplace(l, g.means.size());
    g.means.push_back(draw(rng, *priors.gmm_mean));
    g.variances.push_back(draw(rng, *priors.gmm_variance));
  }
  return g;
}

BiasField sample_bias(const GenerationPriors& priors, Rng& rng) {
  const double sigma_B2 = draw(rng, priors.sigma_B2);
  return sample_bias(sigma_B2, rng);
}

BiasField sample_bias(double sigma_B2, Rng& rng) {
  if (!(sigma_B2 >= 0.0)) throw std::invalid_argument("sample_bias: variance must be >= 0");
  BiasField b;
  b.sigma_B2 = sigma_B2;
  b.control_grid = Image({kBiasControlSize, kBiasControlSize, kBiasControlSize}, {1.0, 1.0, 1.0});
  if (b.sigma_B2 == 0.0) return b;
  std::normal_distribution<double> normal(0.0, std::sqrt(b.sigma_B2));
  for (float& v : b.control_grid.data()) v = static_cast<float>(normal(rng));
  return b;
}

Image synthesize(const LabelMap& labels, const GmmDraw& gmm, const Image& bias, Rng& rng) {
  if (!bias.same_dims(labels)) throw std::invalid_argument("synthesize: bias field dims differ from labels");
  // Resolve components up front so a missing label fails before any sampling.
  std::vector<std::size_t> comp(labels.size());
  for (std::size_t n = 0; n < labels.size(); ++n) comp[n] = gmm.component(labels[n]);
  std::vector<double> stds(gmm.size());
  for (std::size_t c = 0; c < gmm.size(); ++c) {
    if (gmm.variances[c] < 0.0) throw std::invalid_argument("synthesize: negative GMM variance");
    stds[c] = std::sqrt(gmm.variances[c]);
  }
  Image out(labels.dims(), labels.spacing());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const double s = gmm.means[comp[n]] + stds[comp[n]] * normal(rng);
    out[n] = static_cast<float>(s / static_cast<double>(bias[n]));
  }
  return out;
}

Image synthesize(const LabelMap& labels, const GmmDraw& gmm, const BiasField& bias, Rng& rng) {
  return synthesize(labels, gmm, bias.field(labels.dims(), labels.spacing()), rng);
}

Image synthesize(const LabelMap& labels, const GmmDraw& gmm, Rng& rng) {
  return synthesize(labels, gmm, Image(labels.dims(), labels.spacing(), 1.0f), rng);
}

Image apply_bias(const Image& image, const Image& bias) {
  if (!bias.same_dims(image)) throw std::invalid_argument("apply_bias: bias field dims differ from image");
  Image out = image;
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] = static_cast<float>(static_cast<double>(image[n]) / static_cast<double>(bias[n]));
  }
  return out;
}

Image normalize_01(const Image& image) {
  const auto [lo_it, hi_it] = std::minmax_element(image.data().begin(), image.data().end());
  const double lo = *lo_it, hi = *hi_it;
  Image out(image.dims(), image.spacing());
  if (!(hi > lo)) return out;
  const double inv = 1.0 / (hi - lo);
  for (std::size_t n = 0; n < image.size(); ++n) {
    out[n] = static_cast<float>(std::clamp((image[n] - lo) * inv, 0.0, 1.0));
  }
  return out;
}

Image gamma_augment(const Image& image, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma_augment: gamma must be > 0");
  if (gamma == 1.0) return image;
  Image out = image;
  for (float& v : out.data()) v = static_cast<float>(std::pow(static_cast<double>(v), gamma));
  return out;
}

Image add_noise(const Image& image, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("add_noise: sigma must be >= 0");
  if (sigma == 0.0) return image;
  Image out = image;
  std::normal_distribution<double> normal(0.0, sigma);
  for (float& v : out.data()) v = static_cast<float>(v + normal(rng));
  return out;
}

}  // namespace synthkit
