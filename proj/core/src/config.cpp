#include "synthkit/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "text_util.hpp"

namespace synthkit {

std::string to_string(MorphMode m) {
  switch (m) {
    case MorphMode::dilate:
      return "dilate";
    case MorphMode::erode:
      return "erode";
    default:
      return "random";
  }
}

MorphMode parse_morph_mode(const std::string& s) {
  if (s == "random") return MorphMode::random_per_class;
  if (s == "dilate") return MorphMode::dilate;
  if (s == "erode") return MorphMode::erode;
  throw std::invalid_argument("unknown corruption mode '" + s + "'");
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return a.priors == b.priors && a.corruption.radius_lo == b.corruption.radius_lo &&
         a.corruption.radius_hi == b.corruption.radius_hi && a.corruption.sigma_v2 == b.corruption.sigma_v2 &&
         a.corruption.mode == b.corruption.mode && a.taxonomy_path == b.taxonomy_path && a.seed == b.seed &&
         a.workers == b.workers && a.output_dir == b.output_dir;
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  os << "seed=" << seed << "\n";
  os << "workers=" << workers << "\n";
  os << "taxonomy=" << taxonomy_path << "\n";
  os << "output=" << output_dir << "\n";
  os << "corruption_radius=" << corruption.radius_lo << "," << corruption.radius_hi << "\n";
  os << "corruption_sigma_v2=" << detail::format_double(corruption.sigma_v2.lo) << ","
     << detail::format_double(corruption.sigma_v2.hi) << "\n";
  os << "corruption_mode=" << to_string(corruption.mode) << "\n";
  os << serialize_priors(priors);
  return os.str();
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::ostringstream prior_rows;
  for (const auto& [key, value] : detail::parse_key_values(text)) {
    if (key == "seed") {
      try {
        std::size_t pos = 0;
        if (value.empty() || value.front() < '0' || value.front() > '9') throw std::invalid_argument(value);
        cfg.seed = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw std::invalid_argument("config: seed must be an unsigned 64-bit integer");
      }
    } else if (key == "workers") {
      cfg.workers = static_cast<int>(detail::parse_int(value, "workers"));
      if (cfg.workers < 1) throw std::invalid_argument("config: workers must be >= 1");
    } else if (key == "taxonomy") {
      cfg.taxonomy_path = value;
    } else if (key == "output") {
      cfg.output_dir = value;
    } else if (key == "corruption_radius") {
      const auto p = detail::split(value, ',');
      if (p.size() != 2) throw std::invalid_argument("config: corruption_radius expects lo,hi");
      cfg.corruption.radius_lo = static_cast<int>(detail::parse_int(p[0], key));
      cfg.corruption.radius_hi = static_cast<int>(detail::parse_int(p[1], key));
      if (cfg.corruption.radius_lo < 0 || cfg.corruption.radius_lo > cfg.corruption.radius_hi) {
        throw std::invalid_argument("config: corruption_radius must satisfy 0 <= lo <= hi");
      }
    } else if (key == "corruption_sigma_v2") {
      const auto p = detail::split(value, ',');
      if (p.size() != 2) throw std::invalid_argument("config: corruption_sigma_v2 expects lo,hi");
      cfg.corruption.sigma_v2 = {detail::parse_double(p[0], key), detail::parse_double(p[1], key)};
      if (!(cfg.corruption.sigma_v2.lo >= 0.0) || !cfg.corruption.sigma_v2.valid()) {
        throw std::invalid_argument("config: corruption_sigma_v2 must satisfy 0 <= lo <= hi");
      }
    } else if (key == "corruption_mode") {
      cfg.corruption.mode = parse_morph_mode(value);
    } else {
      prior_rows << key << "=" << value << "\n";
    }
  }
  cfg.priors = parse_priors(prior_rows.str());
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace synthkit
