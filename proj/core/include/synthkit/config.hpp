#pragma once

#include <cstdint>
#include <string>

#include "synthkit/labels.hpp"
#include "synthkit/priors.hpp"

namespace synthkit {

/**
 * Settings for a generation run, stored as flat key=value text.
 *
 * Run keys: seed, workers, taxonomy, output, corruption_radius (lo,hi),
 * corruption_sigma_v2 (lo,hi), corruption_mode (random|dilate|erode).
 * Every other key is a prior row understood by parse_priors().
 */
struct RunConfig {
  GenerationPriors priors = GenerationPriors::generative();
  CorruptionPriors corruption;
  std::string taxonomy_path;  ///< empty: built-in taxonomy
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output_dir;

  std::string serialize() const;
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);

  friend bool operator==(const RunConfig& a, const RunConfig& b);
};

std::string to_string(MorphMode m);
MorphMode parse_morph_mode(const std::string& s);

}  // namespace synthkit
