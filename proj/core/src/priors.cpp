#include "synthkit/priors.hpp"

#include <array>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "text_util.hpp"

namespace synthkit {

std::string to_string(Preset p) { return p == Preset::generative ? "generative" : "degradation"; }

Preset parse_preset(const std::string& s) {
  if (s == "generative") return Preset::generative;
  if (s == "degradation") return Preset::degradation;
  throw std::invalid_argument("unknown preset '" + s + "' (expected generative or degradation)");
}

GenerationPriors GenerationPriors::generative() {
  GenerationPriors p;
  p.preset = Preset::generative;
  p.rotation = {-15.0, 15.0};
  p.scaling = {0.85, 1.15};
  p.shearing = {-0.012, 0.012};
  p.translation = {-20.0, 20.0};
  p.sigma_v2 = {0.0, 1.5};
  p.gmm_mean = Range{0.0, 255.0};
  p.gmm_variance = Range{0.0, 6.0};
  p.sigma_B2 = {0.0, 0.25};
  p.gamma = {0.9, 1.1};
  p.sigma_th = {0.5, 5.0};
  p.r_sp = {1.0, 9.0};
  p.sigma_E = {0.0, 10.0};
  return p;
}

GenerationPriors GenerationPriors::degradation() {
  GenerationPriors p;
  p.preset = Preset::degradation;
  p.rotation = {-25.0, 25.0};
  p.scaling = {0.5, 1.5};
  // Published as "[0.02, 0.02]"; read as the symmetric range.
  p.shearing = {-0.02, 0.02};
  p.translation = {-50.0, 50.0};
  p.sigma_v2 = {0.0, 4.0};
  p.sigma_B2 = {0.0, 3.0};
  p.gamma = {0.3, 3.0};
  p.sigma_th = {0.5, 8.0};
  p.r_sp = {1.0, 12.0};
  p.sigma_E = {0.0, 50.0};
  return p;
}

GenerationPriors GenerationPriors::for_preset(Preset p) {
  return p == Preset::generative ? generative() : degradation();
}

namespace {

struct Field {
  const char* key;
  Range GenerationPriors::*member;
  double min_lo;  // legal lower bound for lo
  bool strict;    // lo must be > min_lo rather than >=
};

constexpr double kNoBound = -1e300;

const std::array<Field, 10> kFields{{
    {"rotation", &GenerationPriors::rotation, -180.0, false},
    {"scaling", &GenerationPriors::scaling, 0.0, true},
    {"shearing", &GenerationPriors::shearing, kNoBound, false},
    {"translation", &GenerationPriors::translation, kNoBound, false},
    {"nonlinear_sigma_v2", &GenerationPriors::sigma_v2, 0.0, false},
    {"bias_sigma_B2", &GenerationPriors::sigma_B2, 0.0, false},
    {"gamma", &GenerationPriors::gamma, 0.0, true},
    {"slice_thickness", &GenerationPriors::sigma_th, 0.0, false},
    {"slice_spacing", &GenerationPriors::r_sp, 0.0, true},
    {"noise_sigma", &GenerationPriors::sigma_E, 0.0, false},
}};

void check_range(const std::string& key, const Range& r, double min_lo, bool strict) {
  if (!r.valid()) throw std::invalid_argument("priors: " + key + " has lo > hi");
  const bool bad = strict ? !(r.lo > min_lo) : !(r.lo >= min_lo);
  if (bad) throw std::invalid_argument("priors: " + key + " lower bound out of legal range");
}

std::string format_range(const Range& r) { return detail::format_double(r.lo) + "," + detail::format_double(r.hi); }

Range parse_range(const std::string& key, const std::string& value) {
  const auto parts = detail::split(value, ',');
  if (parts.size() != 2) throw std::invalid_argument("priors: " + key + " expects 'lo,hi'");
  return {detail::parse_double(parts[0], key), detail::parse_double(parts[1], key)};
}

}  // namespace

void GenerationPriors::validate() const {
  for (const auto& f : kFields) check_range(f.key, this->*f.member, f.min_lo, f.strict);
  if (rotation.hi > 180.0) throw std::invalid_argument("priors: rotation upper bound out of legal range");
  if (gmm_mean.has_value() != gmm_variance.has_value()) {
    throw std::invalid_argument("priors: gmm_mean and gmm_variance must be set together");
  }
  if (gmm_mean) check_range("gmm_mean", *gmm_mean, kNoBound, false);
  if (gmm_variance) check_range("gmm_variance", *gmm_variance, 0.0, false);
  if (preset == Preset::degradation && gmm_mean) {
    throw std::invalid_argument("priors: degradation preset has no GMM ranges");
  }
  if (!(single_axis_probability >= 0.0 && single_axis_probability <= 1.0)) {
    throw std::invalid_argument("priors: single_axis_probability must lie in [0, 1]");
  }
}

std::string serialize_priors(const GenerationPriors& p) {
  std::ostringstream os;
  os << "preset=" << to_string(p.preset) << "\n";
  for (const auto& f : kFields) os << f.key << "=" << format_range(p.*f.member) << "\n";
  if (p.gmm_mean) os << "gmm_mean=" << format_range(*p.gmm_mean) << "\n";
  if (p.gmm_variance) os << "gmm_variance=" << format_range(*p.gmm_variance) << "\n";
  os << "single_axis_probability=" << detail::format_double(p.single_axis_probability) << "\n";
  return os.str();
}

GenerationPriors parse_priors(const std::string& text, const GenerationPriors& base) {
  GenerationPriors p = base;
  for (const auto& [key, value] : detail::parse_key_values(text)) {
    if (key == "preset") {
      p = GenerationPriors::for_preset(parse_preset(value));
      continue;
    }
    if (key == "gmm_mean") {
      p.gmm_mean = parse_range(key, value);
      continue;
    }
    if (key == "gmm_variance") {
      p.gmm_variance = parse_range(key, value);
      continue;
    }
    if (key == "single_axis_probability") {
      p.single_axis_probability = detail::parse_double(value, key);
      continue;
    }
    bool found = false;
    for (const auto& f : kFields) {
      if (key == f.key) {
        p.*f.member = parse_range(key, value);
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("priors: unknown key '" + key + "'");
  }
  p.validate();
  return p;
}

}  // namespace synthkit
