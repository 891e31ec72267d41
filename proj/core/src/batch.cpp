#include "synthkit/batch.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "synthkit/nifti.hpp"

namespace synthkit {

namespace fs = std::filesystem;

std::string sample_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

std::vector<fs::path> list_label_maps(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    const bool nii = name.size() > 4 && name.ends_with(".nii");
    const bool niigz = name.size() > 7 && name.ends_with(".nii.gz");
    if (nii || niigz) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

TrainingPair generate_sample(const BatchRequest& request, const std::vector<LabelMap>& maps, std::size_t index) {
  Rng rng = stream_for(request.seed, index);
  const int pick = draw_int(rng, 0, static_cast<int>(maps.size()) - 1);
  TrainingPair pair =
      generate_pair(request.role, maps[static_cast<std::size_t>(pick)], request.taxonomy, request.priors,
                    request.corruption, rng);
  pair.meta.set("seed", std::to_string(request.seed));
  pair.meta.set("index", std::to_string(index));
  pair.meta.set("label_map", request.label_maps[static_cast<std::size_t>(pick)].filename().string());
  return pair;
}

void generate_batch(const BatchRequest& request) {
  if (request.label_maps.empty()) throw std::invalid_argument("generate_batch: no label maps given");
  if (request.workers < 1) throw std::invalid_argument("generate_batch: workers must be >= 1");
  request.priors.validate();
  fs::create_directories(request.output_dir);

  std::vector<LabelMap> maps;
  maps.reserve(request.label_maps.size());
  for (const auto& p : request.label_maps) {
    maps.push_back(read_labels(p));
    request.taxonomy.validate(maps.back());
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= request.count) return;
      try {
        const TrainingPair pair = generate_sample(request, maps, i);
        const fs::path stem = request.output_dir / sample_stem(i);
        write_image(stem.string() + "_image.nii.gz", pair.image);
        write_labels(stem.string() + "_target.nii.gz", pair.target);
        if (pair.conditioning) write_soft(stem.string() + "_cond.nii.gz", *pair.conditioning);
        std::ofstream meta(stem.string() + "_meta.txt", std::ios::trunc);
        meta << pair.meta.serialize();
        if (!meta) throw std::runtime_error("cannot write meta for sample " + std::to_string(i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(request.count);
        return;
      }
    }
  };

  const int n_threads = static_cast<int>(std::min<std::size_t>(request.workers, request.count));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace synthkit
