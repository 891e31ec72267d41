#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "synthkit/generator.hpp"

namespace synthkit {

/// Batch generation onto disk.
///
/// Sample `i` draws from the stream stream_for(seed, i), so the files do not
/// depend on the worker count or scheduling. Layout per sample:
/// `<i>_image.nii.gz`, `<i>_target.nii.gz`, `<i>_cond.nii.gz` (S2 only) and
/// `<i>_meta.txt`, with `<i>` zero-padded to six digits.
struct BatchRequest {
  std::vector<std::filesystem::path> label_maps;
  std::size_t count = 1;
  PairRole role = PairRole::s1;
  GenerationPriors priors = GenerationPriors::generative();
  CorruptionPriors corruption;
  LabelTaxonomy taxonomy = LabelTaxonomy::default_taxonomy();
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path output_dir;
};

std::string sample_stem(std::size_t index);

/// `.nii` / `.nii.gz` files in `dir`, sorted by name.
std::vector<std::filesystem::path> list_label_maps(const std::filesystem::path& dir);

/// Generates one sample of the batch in memory.
TrainingPair generate_sample(const BatchRequest& request, const std::vector<LabelMap>& maps, std::size_t index);

void generate_batch(const BatchRequest& request);

}  // namespace synthkit
