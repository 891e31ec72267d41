#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "synthkit/batch.hpp"
#include "synthkit/config.hpp"
#include "synthkit/generator.hpp"
#include "synthkit/hierarchy.hpp"
#include "synthkit/labels.hpp"
#include "synthkit/metrics.hpp"
#include "synthkit/nifti.hpp"
#include "synthkit/volumetry.hpp"

namespace synthkit {

namespace fs = std::filesystem;

namespace {

// Bad combination of otherwise well-formed flags.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

LabelTaxonomy taxonomy_from(const std::string& path) {
  return path.empty() ? LabelTaxonomy::default_taxonomy() : LabelTaxonomy::load(path);
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::trunc);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path);
}

std::vector<Label> parse_label_list(const std::string& spec, const LabelTaxonomy& taxonomy) {
  if (spec.empty() || spec == "predicted") {
    std::vector<Label> out;
    for (Label l : taxonomy.predicted_labels())
      if (l != 0) out.push_back(l);
    return out;
  }
  if (spec == "tissues") return {kTissueCodes.begin() + 1, kTissueCodes.end()};
  std::vector<Label> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(static_cast<Label>(std::stol(item, &pos)));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--labels: '" + item + "' is not an integer label");
    }
  }
  return out;
}

struct GenerateArgs {
  std::string labels_dir, out_dir = "generated", preset = "generative", role = "s1", config, taxonomy;
  std::size_t n = 1;
  std::uint64_t seed = 0;
  int workers = 1;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// The preset flag goes first so rows in the config file override its ranges.
RunConfig config_for(const std::string& preset, const std::string& config_path) {
  return RunConfig::parse("preset=" + preset + "\n" + (config_path.empty() ? std::string() : read_file(config_path)));
}

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const RunConfig cfg = config_for(a.preset, a.config);
  BatchRequest req;
  req.label_maps = list_label_maps(a.labels_dir);
  if (req.label_maps.empty()) throw std::runtime_error("no .nii/.nii.gz label maps in " + a.labels_dir);
  req.count = a.n;
  req.role = parse_pair_role(a.role);
  req.priors = cfg.priors;
  req.corruption = cfg.corruption;
  req.taxonomy = taxonomy_from(a.taxonomy.empty() ? cfg.taxonomy_path : a.taxonomy);
  req.seed = a.seed;
  req.workers = a.workers;
  req.output_dir = a.out_dir;
  generate_batch(req);
  out << "wrote " << a.n << " " << a.role << " samples to " << a.out_dir << "\n";
  return kExitOk;
}

struct DegradeArgs {
  std::string image, labels, out_dir = "degraded", config;
  std::uint64_t seed = 0;
};

int cmd_degrade(const DegradeArgs& a, std::ostream& out) {
  const GenerationPriors priors = config_for("degradation", a.config).priors;
  const Image image = read_image(a.image);
  const LabelMap labels = read_labels(a.labels);
  Rng rng = stream_for(a.seed, 0);
  const DegradedPair pair = degrade_image(image, labels, priors, rng);
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  write_image(dir / "degraded_image.nii.gz", pair.image);
  write_labels(dir / "degraded_labels.nii.gz", pair.labels);
  SampleMeta meta = pair.meta;
  meta.set("seed", std::to_string(a.seed));
  write_text((dir / "degraded_meta.txt").string(), meta.serialize(), out);
  out << "wrote degraded pair to " << a.out_dir << "\n";
  return kExitOk;
}

int cmd_group(const std::string& in, const std::string& out_path, const std::string& taxonomy, std::ostream& out) {
  const LabelMap labels = read_labels(in);
  write_labels(out_path, group_tissues(labels, taxonomy_from(taxonomy)));
  out << "wrote " << out_path << "\n";
  return kExitOk;
}

struct SegmentArgs {
  std::string variant = "synthseg_plus", s_cmd, s1_cmd, d_cmd, s2_cmd, in, out, taxonomy, intermediates;
};

int cmd_segment(const SegmentArgs& a, std::ostream& out) {
  Variant variant;
  try {
    variant = parse_variant(a.variant);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const LabelTaxonomy taxonomy = taxonomy_from(a.taxonomy);
  const std::vector<Label> labels = taxonomy.predicted_labels();
  const std::vector<Label> tissues = tissue_class_ids();

  PipelineSpec spec;
  spec.variant = variant;
  // S1 always segments tissues and S2 is conditioned on them; D cleans the
  // tissue map in synthseg_plus and the full segmentation in postdenoise.
  const bool d_on_tissues = variant == Variant::synthseg_plus;
  if (!a.s_cmd.empty()) spec.predictors[Role::S] = std::make_shared<ExternalPredictor>(a.s_cmd, labels, 1, "S");
  if (!a.s1_cmd.empty()) spec.predictors[Role::S1] = std::make_shared<ExternalPredictor>(a.s1_cmd, tissues, 1, "S1");
  if (!a.d_cmd.empty()) {
    const auto& cls = d_on_tissues ? tissues : labels;
    spec.predictors[Role::D] = std::make_shared<ExternalPredictor>(a.d_cmd, cls, cls.size(), "D");
  }
  if (!a.s2_cmd.empty())
    spec.predictors[Role::S2] = std::make_shared<ExternalPredictor>(a.s2_cmd, labels, 1 + tissues.size(), "S2");
  for (Role r : spec.required_roles()) {
    if (!spec.has(r)) {
      std::string flag = r == Role::S ? "--s-cmd" : r == Role::S1 ? "--s1-cmd" : r == Role::D ? "--d-cmd" : "--s2-cmd";
      throw UsageError("--variant " + to_string(variant) + " requires " + flag);
    }
  }

  const Image image = read_image(a.in);
  const PipelineResult result = run_pipeline(spec, image);
  write_labels(a.out, result.final);
  if (!a.intermediates.empty()) {
    fs::create_directories(a.intermediates);
    for (const auto& [role, soft] : result.intermediates)
      write_soft(fs::path(a.intermediates) / (to_string(role) + ".nii.gz"), soft);
  }
  out << "wrote " << a.out << "\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& pred, const std::string& gt, const std::string& label_spec,
                 const std::string& taxonomy_path, const std::string& out_path, std::ostream& out) {
  const LabelTaxonomy taxonomy = taxonomy_from(taxonomy_path);
  const std::vector<Label> labels = parse_label_list(label_spec, taxonomy);
  const DiceReport report = hard_dice(read_labels(pred), read_labels(gt), labels);
  write_text(out_path, report.to_csv(&taxonomy), out);
  return kExitOk;
}

int cmd_volumes(const std::string& in, const std::string& taxonomy_path, const std::string& out_path,
                std::ostream& out) {
  const LabelTaxonomy taxonomy = taxonomy_from(taxonomy_path);
  const auto vols = region_volumes(read_labels(in));
  std::ostringstream os;
  os << "label,name,volume_mm3\n";
  for (const auto& [label, v] : vols) {
    os << label << ',' << (taxonomy.contains(label) ? taxonomy.entry(label).name : std::string()) << ','
       << std::setprecision(17) << v << '\n';
  }
  write_text(out_path, os.str(), out);
  return kExitOk;
}

struct FitArgs {
  std::string csv, region, lambda = "auto", direction = "decreasing", out_prefix;
  int points = 101;
};

int cmd_fit_ageing(const FitArgs& a, std::ostream& out) {
  Direction direction;
  try {
    direction = parse_direction(a.direction);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::optional<double> lambda;
  if (a.lambda != "auto") {
    try {
      std::size_t pos = 0;
      lambda = std::stod(a.lambda, &pos);
      if (pos != a.lambda.size() || *lambda < 0) throw std::invalid_argument(a.lambda);
    } catch (const std::exception&) {
      throw UsageError("--lambda must be 'auto' or a number >= 0");
    }
  }
  const auto samples = filter_region(read_volume_csv(a.csv), a.region);
  if (samples.empty()) throw std::runtime_error("no samples for region '" + a.region + "' in " + a.csv);

  std::string selection;
  if (!lambda) {
    const LambdaSelection sel = select_lambda(samples, direction);
    lambda = sel.lambda;
    std::ostringstream os;
    os << "lambda,heldout_mse,std_error\n";
    for (const auto& s : sel.scores) os << s.lambda << ',' << s.mean_sq_error << ',' << s.std_error << '\n';
    selection = os.str();
  }
  const AgeingModel model = fit_ageing(samples, *lambda, direction);
  if (a.out_prefix.empty()) {
    out << coefficients_csv(model);
  } else {
    write_text(a.out_prefix + "_coefficients.csv", coefficients_csv(model), out);
    write_text(a.out_prefix + "_trajectory.csv", trajectory_csv(model, a.points), out);
    if (!selection.empty()) write_text(a.out_prefix + "_lambda.csv", selection, out);
    out << "region " << a.region << ": lambda " << *lambda << ", " << model.iterations << " iterations, rss "
        << model.rss << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic training data, hierarchical segmentation and volumetry tools", "synthkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Synthesise training pairs from label maps");
  generate->add_option("--labels", gen.labels_dir, "Directory of label maps")->required()->check(CLI::ExistingDirectory);
  generate->add_option("--n", gen.n, "Number of samples")->check(CLI::PositiveNumber);
  generate->add_option("--preset", gen.preset, "Prior preset")->check(CLI::IsMember({"generative", "degradation"}));
  generate->add_option("--for", gen.role, "Network the pairs train")->check(CLI::IsMember({"s1", "s2"}));
  generate->add_option("--seed", gen.seed, "Random seed");
  generate->add_option("--workers", gen.workers, "Worker threads")->check(CLI::PositiveNumber);
  generate->add_option("--out", gen.out_dir, "Output directory");
  generate->add_option("--config", gen.config, "key=value config file")->check(CLI::ExistingFile);
  generate->add_option("--taxonomy", gen.taxonomy, "Label taxonomy CSV")->check(CLI::ExistingFile);

  DegradeArgs deg;
  auto* degrade = app.add_subcommand("degrade", "Degrade a real image and its labels");
  degrade->add_option("--image", deg.image, "Input image")->required()->check(CLI::ExistingFile);
  degrade->add_option("--labels", deg.labels, "Input label map")->required()->check(CLI::ExistingFile);
  degrade->add_option("--seed", deg.seed, "Random seed");
  degrade->add_option("--out", deg.out_dir, "Output directory");
  degrade->add_option("--config", deg.config, "key=value prior overrides")->check(CLI::ExistingFile);

  std::string group_in, group_out, group_tax;
  auto* group = app.add_subcommand("group", "Collapse a label map to tissue classes");
  group->add_option("--in", group_in, "Input label map")->required()->check(CLI::ExistingFile);
  group->add_option("--out", group_out, "Output label map")->required();
  group->add_option("--taxonomy", group_tax, "Label taxonomy CSV")->check(CLI::ExistingFile);

  SegmentArgs seg;
  auto* segment = app.add_subcommand("segment", "Run a predictor pipeline on an image");
  segment->add_option("--variant", seg.variant, "synthseg, cascade, postdenoise or synthseg_plus");
  segment->add_option("--s-cmd", seg.s_cmd, "Command template for S");
  segment->add_option("--s1-cmd", seg.s1_cmd, "Command template for S1");
  segment->add_option("--d-cmd", seg.d_cmd, "Command template for D");
  segment->add_option("--s2-cmd", seg.s2_cmd, "Command template for S2");
  segment->add_option("--in", seg.in, "Input image")->required()->check(CLI::ExistingFile);
  segment->add_option("--out", seg.out, "Output label map")->required();
  segment->add_option("--taxonomy", seg.taxonomy, "Label taxonomy CSV")->check(CLI::ExistingFile);
  segment->add_option("--intermediates", seg.intermediates, "Directory for per-role soft maps");

  std::string ev_pred, ev_gt, ev_labels, ev_tax, ev_out;
  auto* evaluate = app.add_subcommand("evaluate", "Per-label Dice between two label maps");
  evaluate->add_option("--pred", ev_pred, "Predicted label map")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--gt", ev_gt, "Reference label map")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--labels", ev_labels, "Comma-separated labels, 'predicted' or 'tissues'");
  evaluate->add_option("--taxonomy", ev_tax, "Label taxonomy CSV")->check(CLI::ExistingFile);
  evaluate->add_option("--out", ev_out, "CSV report (default stdout)");

  std::string vol_in, vol_tax, vol_out;
  auto* volumes = app.add_subcommand("volumes", "Region volumes of a label map in mm³");
  volumes->add_option("--in", vol_in, "Label map")->required()->check(CLI::ExistingFile);
  volumes->add_option("--taxonomy", vol_tax, "Label taxonomy CSV")->check(CLI::ExistingFile);
  volumes->add_option("--out", vol_out, "CSV output (default stdout)");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit-ageing", "Fit the age trajectory of one region");
  fit_cmd->add_option("--csv", fit.csv, "Volume table")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--region", fit.region, "Region name as in the table")->required();
  fit_cmd->add_option("--lambda", fit.lambda, "Monotonicity weight, or 'auto'");
  fit_cmd->add_option("--direction", fit.direction, "decreasing or increasing");
  fit_cmd->add_option("--out-prefix", fit.out_prefix, "Write <prefix>_coefficients.csv and _trajectory.csv");
  fit_cmd->add_option("--points", fit.points, "Trajectory rows")->check(CLI::Range(2, 100000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    // Help for the subcommand the user was trying to run, if any.
    const auto used = app.get_subcommands();
    err << (used.empty() ? app.help() : used.front()->help());
    return kExitUsage;
  }

  try {
    if (*generate) return cmd_generate(gen, out);
    if (*degrade) return cmd_degrade(deg, out);
    if (*group) return cmd_group(group_in, group_out, group_tax, out);
    if (*segment) return cmd_segment(seg, out);
    if (*evaluate) return cmd_evaluate(ev_pred, ev_gt, ev_labels, ev_tax, ev_out, out);
    if (*volumes) return cmd_volumes(vol_in, vol_tax, vol_out, out);
    if (*fit_cmd) return cmd_fit_ageing(fit, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"synthkit"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace synthkit
