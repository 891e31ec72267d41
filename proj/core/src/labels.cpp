#include "synthkit/labels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "default_taxonomy.hpp"
#include "synthkit/volume_ops.hpp"
#include "text_util.hpp"

namespace synthkit {

namespace {

constexpr std::array<const char*, kTissueClassCount> kTissueNames{"background", "white_matter", "grey_matter",
                                                                  "csf", "cerebellum"};

}  // namespace

std::string to_string(TissueClass t) { return kTissueNames[static_cast<int>(t)]; }

TissueClass parse_tissue_class(const std::string& s) {
  for (int c = 0; c < kTissueClassCount; ++c) {
    if (s == kTissueNames[c]) return static_cast<TissueClass>(c);
  }
  throw std::invalid_argument("unknown tissue class '" + s + "'");
}

std::string to_string(Laterality l) {
  switch (l) {
    case Laterality::left:
      return "left";
    case Laterality::right:
      return "right";
    default:
      return "none";
  }
}

Laterality parse_laterality(const std::string& s) {
  if (s == "none") return Laterality::none;
  if (s == "left") return Laterality::left;
  if (s == "right") return Laterality::right;
  throw std::invalid_argument("unknown laterality '" + s + "'");
}

LabelTaxonomy::LabelTaxonomy(std::vector<LabelEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t n = 0; n < entries_.size(); ++n) {
    const Label v = entries_[n].value;
    if (v < 0) throw std::invalid_argument("taxonomy: negative label value " + std::to_string(v));
    if (!index_.emplace(v, n).second) {
      throw std::invalid_argument("taxonomy: duplicate label value " + std::to_string(v));
    }
  }
}

LabelTaxonomy LabelTaxonomy::default_taxonomy() { return parse(detail::kDefaultTaxonomyCsv); }

LabelTaxonomy LabelTaxonomy::parse(const std::string& text) {
  std::vector<LabelEntry> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 5) {
      throw std::invalid_argument("taxonomy line " + std::to_string(line_no) +
                                  ": expected value,name,laterality,predicted,group");
    }
    LabelEntry e;
    e.value = static_cast<Label>(detail::parse_int(f[0], "taxonomy value"));
    e.name = f[1];
    e.laterality = parse_laterality(f[2]);
    if (f[3] != "0" && f[3] != "1") {
      throw std::invalid_argument("taxonomy line " + std::to_string(line_no) + ": predicted must be 0 or 1");
    }
    e.predicted = f[3] == "1";
    e.group = parse_tissue_class(f[4]);
    entries.push_back(std::move(e));
  }
  return LabelTaxonomy(std::move(entries));
}

LabelTaxonomy LabelTaxonomy::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open taxonomy file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string LabelTaxonomy::serialize() const {
  std::ostringstream os;
  os << "# value,name,laterality,predicted,group\n";
  for (const auto& e : entries_) {
    os << e.value << ',' << e.name << ',' << to_string(e.laterality) << ',' << (e.predicted ? 1 : 0) << ','
       << to_string(e.group) << '\n';
  }
  return os.str();
}

void LabelTaxonomy::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write taxonomy file " + path);
  out << serialize();
}

const LabelEntry& LabelTaxonomy::entry(Label l) const {
  const auto it = index_.find(l);
  if (it == index_.end()) throw std::invalid_argument("label " + std::to_string(l) + " is not in the taxonomy");
  return entries_[it->second];
}

std::vector<Label> LabelTaxonomy::labels() const {
  std::vector<Label> out;
  for (const auto& e : entries_) out.push_back(e.value);
  return out;
}

std::vector<Label> LabelTaxonomy::predicted_labels() const {
  std::vector<Label> out;
  for (const auto& e : entries_)
    if (e.predicted) out.push_back(e.value);
  return out;
}

void LabelTaxonomy::validate(const LabelMap& map) const {
  for (Label l : map.data()) {
    if (!contains(l)) throw std::invalid_argument("label map contains unknown label " + std::to_string(l));
  }
}

LabelMap group_tissues(const LabelMap& labels, const LabelTaxonomy& taxonomy) {
  LabelMap out(labels.dims(), labels.spacing());
  // Label maps typically hold a few dozen distinct values; cache lookups.
  std::map<Label, Label> cache;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const Label l = labels[n];
    auto it = cache.find(l);
    if (it == cache.end()) it = cache.emplace(l, tissue_code(taxonomy.group_of(l))).first;
    out[n] = it->second;
  }
  return out;
}

LabelMap predicted_only(const LabelMap& labels, const LabelTaxonomy& taxonomy) {
  LabelMap out(labels.dims(), labels.spacing());
  for (std::size_t n = 0; n < labels.size(); ++n) out[n] = taxonomy.entry(labels[n]).predicted ? labels[n] : 0;
  return out;
}

void SoftSegMap::validate(double tol) const {
  if (channels.empty()) throw std::invalid_argument("soft map has no channels");
  if (channels.size() != class_ids.size()) {
    throw std::invalid_argument("soft map channel count does not match its class list");
  }
  for (const auto& c : channels) {
    if (!c.same_grid(channels[0])) throw std::invalid_argument("soft map channels live on different grids");
  }
  const std::size_t n_vox = channels[0].size();
  for (std::size_t n = 0; n < n_vox; ++n) {
    double sum = 0.0;
    for (const auto& c : channels) {
      const double v = c[n];
      if (!(v >= -tol && v <= 1.0 + tol)) {
        throw std::invalid_argument("soft map value " + std::to_string(v) + " outside [0, 1] at voxel " +
                                    std::to_string(n));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) {
      throw std::invalid_argument("soft map channels sum to " + std::to_string(sum) + " at voxel " +
                                  std::to_string(n));
    }
  }
}

SoftSegMap to_soft(const LabelMap& labels, std::span<const Label> class_ids) {
  if (class_ids.empty()) throw std::invalid_argument("to_soft: empty class list");
  std::map<Label, std::size_t> index;
  for (std::size_t c = 0; c < class_ids.size(); ++c) {
    if (!index.emplace(class_ids[c], c).second) throw std::invalid_argument("to_soft: duplicate class id");
  }
  SoftSegMap soft;
  soft.class_ids.assign(class_ids.begin(), class_ids.end());
  soft.channels.assign(class_ids.size(), Image(labels.dims(), labels.spacing()));
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const auto it = index.find(labels[n]);
    if (it == index.end()) {
      throw std::invalid_argument("to_soft: label " + std::to_string(labels[n]) + " is not in the class list");
    }
    soft.channels[it->second][n] = 1.0f;
  }
  return soft;
}

LabelMap argmax(const SoftSegMap& soft) {
  if (soft.channels.empty()) throw std::invalid_argument("argmax: soft map has no channels");
  LabelMap out(soft.dims(), soft.spacing());
  for (std::size_t n = 0; n < out.size(); ++n) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < soft.channels.size(); ++c) {
      if (soft.channels[c][n] > soft.channels[best][n]) best = c;
    }
    out[n] = soft.class_ids[best];
  }
  return out;
}

SoftSegMap renormalize(SoftSegMap soft) {
  const std::size_t n_ch = soft.channels.size();
  const float uniform = 1.0f / static_cast<float>(n_ch);
  for (std::size_t n = 0; n < soft.channels[0].size(); ++n) {
    double sum = 0.0;
    for (auto& c : soft.channels) {
      c[n] = std::max(c[n], 0.0f);
      sum += c[n];
    }
    if (sum == 1.0) continue;
    if (sum <= 0.0) {
      for (auto& c : soft.channels) c[n] = uniform;
      continue;
    }
    for (auto& c : soft.channels) c[n] = static_cast<float>(c[n] / sum);
  }
  return soft;
}

SoftSegMap corrupt_soft(const SoftSegMap& soft, std::span<const MorphOp> ops, const DisplacementField* deformation) {
  if (ops.size() != soft.channels.size()) {
    throw std::invalid_argument("corrupt_soft: need one morphological op per channel");
  }
  SoftSegMap out;
  out.class_ids = soft.class_ids;
  out.channels.reserve(soft.channels.size());
  for (std::size_t c = 0; c < soft.channels.size(); ++c) {
    const MorphOp& op = ops[c];
    out.channels.push_back(op.dilate ? max_filter(soft.channels[c], op.radius)
                                     : min_filter(soft.channels[c], op.radius));
  }
  if (deformation != nullptr) {
    for (auto& ch : out.channels) ch = warp(ch, AffineParams{}, *deformation, Interp::trilinear);
  }
  return renormalize(std::move(out));
}

SoftSegMap corrupt_soft(const SoftSegMap& soft, const CorruptionPriors& priors, Rng& rng) {
  if (priors.radius_lo < 0 || priors.radius_lo > priors.radius_hi) {
    throw std::invalid_argument("corrupt_soft: invalid radius range");
  }
  std::vector<MorphOp> ops(soft.channels.size());
  for (auto& op : ops) {
    switch (priors.mode) {
      case MorphMode::dilate:
        op.dilate = true;
        break;
      case MorphMode::erode:
        op.dilate = false;
        break;
      default:
        op.dilate = draw_int(rng, 0, 1) == 1;
    }
    op.radius = draw_int(rng, priors.radius_lo, priors.radius_hi);
  }
  const VelocityField vf = sample_svf(priors.sigma_v2, soft.dims(), rng);
  if (vf.sigma_v2 == 0.0) return corrupt_soft(soft, ops, nullptr);
  const DisplacementField disp = integrate_svf(vf);
  return corrupt_soft(soft, ops, &disp);
}

}  // namespace synthkit
