#include "synthkit/hierarchy.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "synthkit/nifti.hpp"
#include "synthkit/volume_ops.hpp"

namespace synthkit {

namespace fs = std::filesystem;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::synthseg: return "synthseg";
    case Variant::cascade: return "cascade";
    case Variant::postdenoise: return "postdenoise";
    case Variant::synthseg_plus: return "synthseg_plus";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "synthseg") return Variant::synthseg;
  if (s == "cascade") return Variant::cascade;
  if (s == "postdenoise") return Variant::postdenoise;
  if (s == "synthseg_plus" || s == "synthseg+") return Variant::synthseg_plus;
  throw std::invalid_argument("unknown variant: " + s);
}

std::string to_string(Role r) {
  switch (r) {
    case Role::S: return "S";
    case Role::S1: return "S1";
    case Role::D: return "D";
    case Role::S2: return "S2";
  }
  return "?";
}

std::vector<Role> PipelineSpec::required_roles() const {
  switch (variant) {
    case Variant::synthseg: return {Role::S};
    case Variant::cascade: return {Role::S1, Role::S2};
    case Variant::synthseg_plus: return {Role::S1, Role::D, Role::S2};
    case Variant::postdenoise:
      if (has(Role::S)) return {Role::S, Role::D};
      return {Role::S1, Role::S2, Role::D};
  }
  return {};
}

void PipelineSpec::validate() const {
  for (Role r : required_roles())
    if (!has(r)) throw std::invalid_argument(to_string(variant) + " pipeline needs a " + to_string(r) + " predictor");
}

namespace {

void expect_channels(Role role, const Predictor& p, std::size_t given) {
  if (p.input_channels() != given)
    throw std::invalid_argument("predictor " + to_string(role) + " declares " + std::to_string(p.input_channels()) +
                                " input channels but would receive " + std::to_string(given));
}

SoftSegMap call(Role role, Predictor& p, const Image* image, const SoftSegMap* cond, const Dims& dims) {
  SoftSegMap out;
  try {
    out = p.predict(image, cond);
  } catch (const PredictorError& e) {
    throw PredictorError("predictor " + to_string(role) + ": " + e.what());
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    throw PredictorError("predictor " + to_string(role) + ": " + e.what());
  }
  if (out.channels.empty() || out.class_ids != p.classes())
    throw PredictorError("predictor " + to_string(role) + ": output channels do not match its declared classes");
  if (out.dims() != dims) throw PredictorError("predictor " + to_string(role) + ": output dims differ from input");
  try {
    out.validate();
  } catch (const std::exception& e) {
    throw PredictorError("predictor " + to_string(role) + ": " + e.what());
  }
  return out;
}

}  // namespace

PipelineResult run_pipeline(const PipelineSpec& spec, const Image& image) {
  spec.validate();
  const Image hr = image.spacing() == spec.hr_spacing ? image : resample(image, spec.hr_spacing, Interp::trilinear);
  const Dims& dims = hr.dims();
  PipelineResult result;

  auto pred = [&](Role r) -> Predictor& { return *spec.predictors.at(r); };
  auto run_segmenter = [&](Role r) {
    expect_channels(r, pred(r), 1);
    return result.intermediates[r] = call(r, pred(r), &hr, nullptr, dims);
  };
  auto run_denoiser = [&](const SoftSegMap& in) {
    expect_channels(Role::D, pred(Role::D), in.channel_count());
    return result.intermediates[Role::D] = call(Role::D, pred(Role::D), nullptr, &in, dims);
  };
  auto run_conditional = [&](const SoftSegMap& cond) {
    expect_channels(Role::S2, pred(Role::S2), 1 + cond.channel_count());
    return result.intermediates[Role::S2] = call(Role::S2, pred(Role::S2), &hr, &cond, dims);
  };
  auto check_tissue_map = [](Role r, const SoftSegMap& m) {
    if (m.channel_count() != static_cast<std::size_t>(kTissueClassCount))
      throw std::invalid_argument("predictor " + to_string(r) + " must output " + std::to_string(kTissueClassCount) +
                                  " tissue channels, got " + std::to_string(m.channel_count()));
  };

  SoftSegMap last;
  switch (spec.variant) {
    case Variant::synthseg: last = run_segmenter(Role::S); break;
    case Variant::cascade: last = run_conditional(run_segmenter(Role::S1)); break;
    case Variant::synthseg_plus: {
      const SoftSegMap s1 = run_segmenter(Role::S1);
      check_tissue_map(Role::S1, s1);
      const SoftSegMap d = run_denoiser(s1);
      check_tissue_map(Role::D, d);
      last = run_conditional(d);
      break;
    }
    case Variant::postdenoise: {
      const SoftSegMap seg = spec.has(Role::S) ? run_segmenter(Role::S) : run_conditional(run_segmenter(Role::S1));
      last = run_denoiser(seg);
      break;
    }
  }
  result.final = argmax(last);
  return result;
}

ConstantPredictor::ConstantPredictor(SoftSegMap output, std::size_t input_channels)
    : output_(std::move(output)), input_channels_(input_channels) {
  output_.validate();
}

SoftSegMap ConstantPredictor::predict(const Image*, const SoftSegMap*) { return output_; }

OraclePredictor::OraclePredictor(const LabelMap& truth, std::vector<Label> classes, std::size_t input_channels)
    : ConstantPredictor(to_soft(truth, classes), input_channels) {}

IdentityDenoiser::IdentityDenoiser(std::vector<Label> classes) : classes_(std::move(classes)) {}

SoftSegMap IdentityDenoiser::predict(const Image*, const SoftSegMap* conditioning) {
  if (conditioning == nullptr) throw std::invalid_argument("identity denoiser needs a conditioning map");
  return *conditioning;
}

MajorityDenoiser::MajorityDenoiser(std::vector<Label> classes, int radius)
    : classes_(std::move(classes)), radius_(radius) {
  if (radius < 0) throw std::invalid_argument("majority denoiser radius must be >= 0");
}

namespace {

// Zero-padded box sum of half-width r along one axis.
Image box_sum_axis(const Image& in, int axis, int r) {
  Image out(in.dims(), in.spacing());
  const Dims& d = in.dims();
  const int len = d[axis];
  std::array<int, 3> stride{1, d[0], d[0] * d[1]};
  const int s = stride[axis];
  const int o1 = (axis + 1) % 3, o2 = (axis + 2) % 3;
  std::vector<double> prefix(static_cast<std::size_t>(len) + 1);
  for (int b = 0; b < d[o2]; ++b)
    for (int a = 0; a < d[o1]; ++a) {
      const std::size_t base = static_cast<std::size_t>(a) * stride[o1] + static_cast<std::size_t>(b) * stride[o2];
      prefix[0] = 0.0;
      for (int i = 0; i < len; ++i) prefix[i + 1] = prefix[i] + in[base + static_cast<std::size_t>(i) * s];
      for (int i = 0; i < len; ++i) {
        const int lo = std::max(0, i - r), hi = std::min(len, i + r + 1);
        out[base + static_cast<std::size_t>(i) * s] = static_cast<float>(prefix[hi] - prefix[lo]);
      }
    }
  return out;
}

}  // namespace

SoftSegMap MajorityDenoiser::predict(const Image*, const SoftSegMap* conditioning) {
  if (conditioning == nullptr) throw std::invalid_argument("majority denoiser needs a conditioning map");
  if (conditioning->class_ids != classes_)
    throw std::invalid_argument("majority denoiser: conditioning classes differ from its own");
  SoftSegMap votes;
  votes.class_ids = classes_;
  for (const Image& ch : conditioning->channels) {
    Image v = ch;
    for (int axis = 0; axis < 3; ++axis) v = box_sum_axis(v, axis, radius_);
    votes.channels.push_back(std::move(v));
  }
  return to_soft(argmax(votes), classes_);
}

ExternalPredictor::ExternalPredictor(std::string command_template, std::vector<Label> classes,
                                     std::size_t input_channels, std::string role_name)
    : template_(std::move(command_template)),
      classes_(std::move(classes)),
      input_channels_(input_channels),
      role_name_(std::move(role_name)) {
  if (template_.find("{output}") == std::string::npos)
    throw std::invalid_argument("predictor command template lacks an {output} placeholder");
  if (template_.find("{image}") == std::string::npos && template_.find("{cond}") == std::string::npos)
    throw std::invalid_argument("predictor command template lacks an {image} or {cond} placeholder");
  if (classes_.empty()) throw std::invalid_argument("external predictor needs a class list");
}

namespace {

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) s.replace(pos, from.size(), to);
  return s;
}

fs::path make_scratch_dir() {
  static std::atomic<unsigned> counter{0};
  const fs::path dir = fs::temp_directory_path() / ("synthkit-pred-" + std::to_string(::getpid()) + "-" +
                                                    std::to_string(counter.fetch_add(1)));
  fs::create_directories(dir);
  return dir;
}

struct ScratchGuard {
  fs::path dir;
  ~ScratchGuard() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

}  // namespace

SoftSegMap ExternalPredictor::predict(const Image* image, const SoftSegMap* conditioning) {
  std::lock_guard lock(mutex_);
  if (image == nullptr && conditioning == nullptr)
    throw std::invalid_argument(role_name_ + ": external predictor called without inputs");
  const ScratchGuard scratch{make_scratch_dir()};
  const fs::path image_path = scratch.dir / "image.nii";
  const fs::path cond_path = scratch.dir / "cond.nii";
  const fs::path out_path = scratch.dir / "output.nii";
  if (image != nullptr) write_image(image_path, *image);
  if (conditioning != nullptr) write_soft(cond_path, *conditioning);

  std::string cmd = template_;
  cmd = replace_all(cmd, "{image}", image_path.string());
  cmd = replace_all(cmd, "{cond}", cond_path.string());
  cmd = replace_all(cmd, "{output}", out_path.string());
  cmd += " 2>&1";

  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) throw PredictorError(role_name_ + ": cannot start command: " + cmd);
  std::string log;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) log += buf.data();
  const int status = ::pclose(pipe);
  const int code = (status != -1 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  if (code != 0)
    throw PredictorError(role_name_ + ": command exited with status " + std::to_string(code) + ": " + template_ +
                         (log.empty() ? std::string() : "\n" + log));

  SoftSegMap out;
  try {
    out = read_soft(out_path, classes_);
    const Dims& want = image != nullptr ? image->dims() : conditioning->dims();
    if (out.dims() != want) throw std::runtime_error("output dims differ from input dims");
    out.validate();
  } catch (const std::exception& e) {
    throw PredictorError(role_name_ + ": malformed output: " + e.what() + (log.empty() ? std::string() : "\n" + log));
  }
  return out;
}

std::shared_ptr<Predictor> external_predictor(const std::string& command_template, std::vector<Label> classes,
                                              std::size_t input_channels) {
  return std::make_shared<ExternalPredictor>(command_template, std::move(classes), input_channels);
}

}  // namespace synthkit
