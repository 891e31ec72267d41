#include "synthkit/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "text_util.hpp"

namespace synthkit {

std::string DiceReport::to_csv(const LabelTaxonomy* taxonomy) const {
  std::ostringstream os;
  os << "label,name,dice\n";
  for (Label l : label_set) {
    std::string name;
    if (taxonomy != nullptr && taxonomy->contains(l)) name = taxonomy->entry(l).name;
    const auto& d = per_label.at(l);
    os << l << ',' << name << ',' << (d ? detail::format_double(*d) : std::string("absent")) << '\n';
  }
  os << "mean,," << detail::format_double(mean) << '\n';
  return os.str();
}

DiceReport hard_dice(const LabelMap& a, const LabelMap& b, std::span<const Label> labels) {
  if (a.dims() != b.dims()) throw std::invalid_argument("hard_dice: label maps differ in dims");
  std::map<Label, std::size_t> slot;
  for (Label l : labels) slot.emplace(l, slot.size());
  std::vector<std::size_t> count_a(slot.size()), count_b(slot.size()), both(slot.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    const auto ia = slot.find(a[n]);
    const auto ib = slot.find(b[n]);
    if (ia != slot.end()) ++count_a[ia->second];
    if (ib != slot.end()) ++count_b[ib->second];
    if (a[n] == b[n] && ia != slot.end()) ++both[ia->second];
  }
  DiceReport r;
  double sum = 0.0;
  int present = 0;
  for (const auto& [label, s] : slot) {
    r.label_set.push_back(label);
    const std::size_t denom = count_a[s] + count_b[s];
    if (denom == 0) {
      r.per_label[label] = std::nullopt;
      continue;
    }
    const double d = 2.0 * static_cast<double>(both[s]) / static_cast<double>(denom);
    r.per_label[label] = d;
    sum += d;
    ++present;
  }
  r.mean = present > 0 ? sum / present : std::numeric_limits<double>::quiet_NaN();
  return r;
}

std::vector<double> soft_dice_per_channel(const SoftSegMap& p, const SoftSegMap& q) {
  if (p.class_ids != q.class_ids) throw std::invalid_argument("soft_dice: channel lists differ");
  if (p.channels.empty()) throw std::invalid_argument("soft_dice: no channels");
  if (p.dims() != q.dims()) throw std::invalid_argument("soft_dice: dims differ");
  std::vector<double> out;
  for (std::size_t c = 0; c < p.channels.size(); ++c) {
    double pq = 0.0, pp = 0.0, qq = 0.0;
    const auto& pc = p.channels[c];
    const auto& qc = q.channels[c];
    for (std::size_t n = 0; n < pc.size(); ++n) {
      const double x = pc[n], y = qc[n];
      pq += x * y;
      pp += x * x;
      qq += y * y;
    }
    out.push_back((2.0 * pq + kSoftDiceEpsilon) / (pp + qq + kSoftDiceEpsilon));
  }
  return out;
}

double soft_dice(const SoftSegMap& p, const SoftSegMap& q) {
  const auto per = soft_dice_per_channel(p, q);
  double sum = 0.0;
  for (double d : per) sum += d;
  return sum / static_cast<double>(per.size());
}

std::map<Label, double> region_volumes(const LabelMap& labels, const Vec3& spacing) {
  const double voxel = spacing[0] * spacing[1] * spacing[2];
  std::map<Label, std::size_t> counts;
  for (Label l : labels.data()) ++counts[l];
  std::map<Label, double> out;
  for (const auto& [l, c] : counts) out[l] = static_cast<double>(c) * voxel;
  return out;
}

std::map<Label, double> region_volumes(const LabelMap& labels) { return region_volumes(labels, labels.spacing()); }

}  // namespace synthkit
