#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "alcnet/contrast.hpp"
#include "alcnet/data.hpp"
#include "alcnet/eval.hpp"
#include "alcnet/log.hpp"
#include "alcnet/net.hpp"
#include "alcnet/parallel.hpp"
#include "alcnet/train.hpp"

namespace fs = std::filesystem;
using namespace alcnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Raised for failures that happen after the inputs were accepted.
struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelArgs {
  std::string arch = "alcnet";
  int blocks = 3;
  std::string profile = "desk";
  std::vector<int> dilations;
  std::string reduction = "min";
  std::uint64_t seed = 0;

  net::Profile parsed_profile() const { return net::parse_profile(profile); }

  net::ArchSpec spec() const {
    net::ArchSpec s;
    if (arch.find('|') != std::string::npos) {
      s = net::ArchSpec::parse(arch);
    } else {
      std::optional<std::vector<int>> d;
      if (!dilations.empty()) d = dilations;
      s = net::named_arch(arch, blocks, parsed_profile(), d);
    }
    if (reduction == "max") {
      s.same_layer.reduction = nn::Reduction::Max;
    } else if (reduction != "min") {
      throw std::invalid_argument("reduction must be min or max");
    }
    s.validate();
    return s;
  }

  net::BackboneConfig backbone(int blocks_override) const {
    return net::BackboneConfig::for_profile(parsed_profile(), blocks_override);
  }

  void add_to(CLI::App* cmd) {
    cmd->add_option("--arch", arch,
                    "Architecture name (plainfcn, fpn, dlc-fpn, mlc-fpn, max-fpn, "
                    "tla-fpn, bga-fpn, alcnet) or canonical spec string")
        ->capture_default_str();
    cmd->add_option("--b", blocks, "Residual blocks per stage (1-4)")
        ->capture_default_str();
    cmd->add_option("--profile", profile, "desk or paper")->capture_default_str();
    cmd->add_option("--dilation", dilations,
                    "Contrast dilation rate(s); defaults depend on the profile");
    cmd->add_option("--reduction", reduction, "Reduction over directions: min or max")
        ->capture_default_str();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  }
};

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  localtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return os.str();
}

fs::path make_run_dir(const fs::path& root, std::uint64_t seed) {
  fs::path dir = root / (timestamp() + "-seed" + std::to_string(seed));
  for (int k = 1; fs::exists(dir); ++k)
    dir = root / (timestamp() + "-seed" + std::to_string(seed) + "-" + std::to_string(k));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create run directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::vector<data::Sample> load_split(const fs::path& manifest) {
  auto samples = data::load_samples(data::load_manifest(manifest));
  return samples;
}

void print_report(const eval::MetricReport& r, const std::string& label) {
  std::cout << std::fixed << std::setprecision(3);
  std::cout << "Method\tIoU\tnIoU\n" << label << '\t' << r.iou << '\t' << r.niou << '\n';
  std::cout << "images " << r.records.size() << ", missed targets "
            << r.diagnosis.missed_targets << ", split detections "
            << r.diagnosis.split_detections << ", boundary error px "
            << r.diagnosis.boundary_error_px << '\n';
  std::cout.unsetf(std::ios::floatfield);
}

// ---- synth -------------------------------------------------------------------

struct SynthArgs {
  data::SynthConfig cfg;
  fs::path out;
  std::string background = "cloud";
  std::vector<int> splits;
};

void setup_synth(CLI::App& app, SynthArgs& a) {
  auto* cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  cmd->add_option("--out", a.out, "Output directory")->required();
  cmd->add_option("--count", a.cfg.count, "Total samples (split 50/20/30)")
      ->capture_default_str();
  cmd->add_option("--splits", a.splits, "Explicit train val test counts")->expected(3);
  cmd->add_option("--size", a.cfg.size, "Image side length")->capture_default_str();
  cmd->add_option("--seed", a.cfg.seed, "Random seed")->capture_default_str();
  cmd->add_option("--targets-min", a.cfg.targets_min)->capture_default_str();
  cmd->add_option("--targets-max", a.cfg.targets_max)->capture_default_str();
  cmd->add_option("--amplitude-min", a.cfg.amplitude_min)->capture_default_str();
  cmd->add_option("--amplitude-max", a.cfg.amplitude_max)->capture_default_str();
  cmd->add_option("--sigma-min", a.cfg.sigma_min)->capture_default_str();
  cmd->add_option("--sigma-max", a.cfg.sigma_max)->capture_default_str();
  cmd->add_option("--background", a.background, "flat, gradient or cloud")
      ->capture_default_str();
  cmd->add_option("--background-level", a.cfg.background_level)->capture_default_str();
  cmd->add_option("--clutter", a.cfg.clutter)->capture_default_str();
  cmd->add_option("--noise", a.cfg.noise_sigma)->capture_default_str();
}

int run_synth(SynthArgs& a) {
  a.cfg.background = data::parse_background(a.background);
  if (!a.splits.empty()) a.cfg.split_counts = std::array<int, 3>{a.splits[0], a.splits[1], a.splits[2]};
  a.cfg.validate();
  data::SynthSummary s;
  try {
    s = data::synth_dataset(a.cfg, a.out);
  } catch (const std::runtime_error& e) {
    throw RuntimeFailure(e.what());
  }
  std::cout << "wrote " << a.out.string() << ": train " << s.counts[0] << ", val "
            << s.counts[1] << ", test " << s.counts[2] << " (" << s.targets
            << " targets)\n";
  return kExitOk;
}

// ---- train -------------------------------------------------------------------

struct TrainArgs {
  ModelArgs model;
  objective::TrainConfig cfg;
  fs::path data_dir;
  fs::path train_manifest;
  fs::path val_manifest;
  fs::path run_root = "runs";
  bool no_augment = false;
  int patience = 0;
};

void setup_train(CLI::App& app, TrainArgs& a) {
  auto* cmd = app.add_subcommand("train", "Train a network");
  a.model.add_to(cmd);
  cmd->add_option("--data", a.data_dir, "Dataset directory holding train.tsv and val.tsv");
  cmd->add_option("--train-manifest", a.train_manifest, "Training manifest");
  cmd->add_option("--val-manifest", a.val_manifest, "Validation manifest");
  cmd->add_option("--lr", a.cfg.lr)->capture_default_str();
  cmd->add_option("--epochs", a.cfg.epochs)->capture_default_str();
  cmd->add_option("--weight-decay", a.cfg.weight_decay)->capture_default_str();
  cmd->add_option("--batch-size", a.cfg.batch_size)->capture_default_str();
  cmd->add_flag("--no-augment", a.no_augment, "Disable resize and random crop");
  cmd->add_option("--patience", a.patience, "Stop after this many epochs without a new best (0: never)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--run-root", a.run_root, "Parent of the run directory")
      ->capture_default_str();
}

int run_train(TrainArgs& a, const std::string& config_dump) {
  const net::ArchSpec spec = a.model.spec();
  a.cfg.seed = a.model.seed;
  a.cfg.validate();

  fs::path train_path = a.train_manifest, val_path = a.val_manifest;
  if (!a.data_dir.empty()) {
    if (train_path.empty()) train_path = a.data_dir / "train.tsv";
    if (val_path.empty() && fs::exists(a.data_dir / "val.tsv")) val_path = a.data_dir / "val.tsv";
  }
  if (train_path.empty()) throw std::invalid_argument("train: give --data or --train-manifest");
  if (!fs::exists(train_path))
    throw std::invalid_argument("manifest not found: " + train_path.string());

  const auto train_set = load_split(train_path);
  std::vector<data::Sample> val_set;
  if (!val_path.empty()) val_set = load_split(val_path);
  if (train_set.empty()) throw std::invalid_argument("empty dataset requested");

  net::Network model(spec, a.model.backbone(spec.blocks), a.model.seed);
  const fs::path run = make_run_dir(a.run_root, a.model.seed);
  {
    std::ofstream cfg(run / "config.ini");
    cfg << config_dump;
  }

  objective::TrainOptions opts;
  opts.config = a.cfg;
  if (!a.no_augment) opts.augment = data::AugmentConfig::for_profile(a.model.parsed_profile());
  opts.log_csv = run / "train_log.csv";
  opts.checkpoint = run / "best.ckpt";
  opts.patience = a.patience;
  opts.on_epoch = [](const objective::EpochLog& r) {
    std::cout << "epoch " << r.epoch << " loss " << r.mean_loss << " val IoU "
              << r.val_iou << " nIoU " << r.val_niou << std::endl;
  };
  std::cout << "run " << run.string() << "\narch " << spec.canonical() << ", "
            << model.num_params() << " parameters, " << train_set.size()
            << " training samples\n";
  const auto result = objective::train(model, train_set, val_set, opts);
  if (result.diverged) {
    std::cerr << "error: training diverged (" << result.failure
              << "); last good checkpoint: " << opts.checkpoint.string() << '\n';
    return kExitRuntime;
  }
  std::cout << "best epoch " << result.best_epoch << ", checkpoint "
            << opts.checkpoint.string() << '\n';
  return kExitOk;
}

// ---- eval --------------------------------------------------------------------

struct EvalArgs {
  fs::path checkpoint;
  fs::path manifest;
  fs::path out;
  std::string arch;
  double threshold = 0.5;
};

std::unique_ptr<net::Network> load_model(const fs::path& ckpt, const std::string& expected_arch) {
  if (!fs::exists(ckpt)) throw std::invalid_argument("checkpoint not found: " + ckpt.string());
  const net::ArchSpec header = net::read_checkpoint_arch(ckpt);
  if (!expected_arch.empty()) {
    const net::ArchSpec want = net::ArchSpec::parse(expected_arch);
    if (!(want == header))
      throw std::invalid_argument("checkpoint holds " + header.canonical() +
                                  " but --arch asks for " + want.canonical());
  }
  try {
    return net::load_checkpoint(ckpt);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("checkpoint/arch mismatch: ") + e.what());
  }
}

void setup_eval(CLI::App& app, EvalArgs& a) {
  auto* cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  cmd->add_option("--checkpoint", a.checkpoint)->required();
  cmd->add_option("--manifest", a.manifest, "Manifest to evaluate")->required();
  cmd->add_option("--out", a.out, "Directory for metrics.csv, metrics.jsonl and roc.csv");
  cmd->add_option("--arch", a.arch, "Expected canonical arch; must match the checkpoint");
  cmd->add_option("--threshold", a.threshold, "Probability threshold")->capture_default_str();
}

int run_eval(EvalArgs& a) {
  auto model = load_model(a.checkpoint, a.arch);
  if (!fs::exists(a.manifest))
    throw std::invalid_argument("manifest not found: " + a.manifest.string());
  const auto samples = data::load_samples(data::load_manifest(a.manifest, data::Split::Test));
  if (samples.empty()) throw std::invalid_argument("empty dataset requested");
  const auto ev = objective::evaluate(*model, samples, a.threshold, true);
  const fs::path out = a.out.empty() ? a.checkpoint.parent_path() : a.out;
  fs::create_directories(out);
  {
    std::ofstream f(out / "metrics.csv");
    eval::write_metrics_csv(f, ev.report);
  }
  {
    std::ofstream f(out / "metrics.jsonl");
    eval::write_metrics_jsonl(f, ev.report);
  }
  {
    std::ofstream f(out / "roc.csv");
    eval::write_roc_csv(f, ev.report.roc);
  }
  print_report(ev.report, model->arch().canonical());
  std::cout << "wrote metrics.csv, metrics.jsonl, roc.csv (pixel-level) to " << out.string() << '\n';
  return kExitOk;
}

// ---- detect ------------------------------------------------------------------

struct DetectArgs {
  fs::path checkpoint;
  fs::path image;
  fs::path out;
  fs::path gt;
  double threshold = 0.5;
};

void setup_detect(CLI::App& app, DetectArgs& a) {
  auto* cmd = app.add_subcommand("detect", "Segment one image");
  cmd->add_option("--checkpoint", a.checkpoint)->required();
  cmd->add_option("--image", a.image)->required();
  cmd->add_option("--out", a.out, "Output mask (P5)")->required();
  cmd->add_option("--gt", a.gt, "Ground-truth mask; prints IoU when given");
  cmd->add_option("--threshold", a.threshold)->capture_default_str();
}

int run_detect(DetectArgs& a) {
  auto model = load_model(a.checkpoint, "");
  const GrayImage img = data::read_image(a.image);
  const BinaryMask mask = eval::binarize(objective::predict(*model, img), a.threshold);
  data::write_mask_pgm(a.out, mask);
  std::cout << "wrote " << a.out.string() << " (" << mask.count() << " foreground px)\n";
  if (!a.gt.empty()) {
    const BinaryMask gt = data::read_mask(a.gt);
    std::cout << "IoU " << eval::iou(mask, gt) << '\n';
  }
  return kExitOk;
}

// ---- bench -------------------------------------------------------------------

struct BenchArgs {
  std::string impl = "both";
  std::vector<int> sizes{256};
  int frames = 5;
  int warmup = 1;
  std::uint64_t seed = 1;
  fs::path out;
};

void setup_bench(CLI::App& app, BenchArgs& a) {
  auto* cmd = app.add_subcommand("bench", "Time kernel vs cyclic-shift MPCM");
  cmd->add_option("--impl", a.impl, "kernel, cyclic or both")->capture_default_str();
  cmd->add_option("--size", a.sizes, "Square frame size(s)")->capture_default_str();
  cmd->add_option("--frames", a.frames)->capture_default_str();
  cmd->add_option("--warmup", a.warmup)->capture_default_str();
  cmd->add_option("--seed", a.seed)->capture_default_str();
  cmd->add_option("--out", a.out, "CSV path; stdout when omitted");
}

int run_bench(BenchArgs& a) {
  contrast::BenchOptions o;
  o.sizes.clear();
  for (int s : a.sizes) o.sizes.emplace_back(s, s);
  if (a.impl == "both") {
    o.impls = {contrast::MpcmImpl::Kernel, contrast::MpcmImpl::Cyclic};
  } else if (a.impl == "kernel") {
    o.impls = {contrast::MpcmImpl::Kernel};
  } else if (a.impl == "cyclic") {
    o.impls = {contrast::MpcmImpl::Cyclic};
  } else {
    throw std::invalid_argument("--impl must be kernel, cyclic or both");
  }
  if (a.frames < 1 || a.warmup < 0) throw std::invalid_argument("--frames must be >= 1");
  o.frames = a.frames;
  o.warmup = a.warmup;
  o.seed = a.seed;
  contrast::BenchReport report;
  try {
    report = contrast::mpcm_bench(o);
  } catch (const std::runtime_error& e) {
    throw RuntimeFailure(e.what());
  }
  if (a.out.empty()) {
    contrast::write_bench_csv(std::cout, report);
  } else {
    std::ofstream f(a.out);
    if (!f) throw RuntimeFailure("cannot write " + a.out.string());
    contrast::write_bench_csv(f, report);
    std::cout << "wrote " << a.out.string() << '\n';
  }
  return kExitOk;
}

// ---- census ------------------------------------------------------------------

int run_census(ModelArgs& a) {
  const net::ArchSpec spec = a.spec();
  net::Network model(spec, a.backbone(spec.blocks), a.seed);
  std::cout << spec.canonical() << '\n';
  for (const auto& row : model.census()) std::cout << row.module << '\t' << row.params << '\n';
  std::cout << "total\t" << model.num_params() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attentional local contrast networks for infrared small targets"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Read key=value options from a file");
  bool print_config = false;
  bool verbose = false;
  app.add_flag("--print-config", print_config, "Print the resolved configuration and exit");
  app.add_flag("-v,--verbose", verbose, "Verbose logging");

  SynthArgs synth;
  TrainArgs train;
  EvalArgs evala;
  DetectArgs detect;
  BenchArgs bench;
  ModelArgs census;
  setup_synth(app, synth);
  setup_train(app, train);
  setup_eval(app, evala);
  setup_detect(app, detect);
  setup_bench(app, bench);
  census.add_to(app.add_subcommand("census", "Print the parameter census of an architecture"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (verbose) log::set_level(log::Level::Info);

  CLI::App* active = app.get_subcommands().front();
  const std::string dump =
      "[" + active->get_name() + "]\n" + active->config_to_str(true, false);
  if (print_config) {
    std::cout << dump;
    return kExitOk;
  }

  try {
    if (app.got_subcommand("synth")) return run_synth(synth);
    if (app.got_subcommand("train")) return run_train(train, dump);
    if (app.got_subcommand("eval")) return run_eval(evala);
    if (app.got_subcommand("detect")) return run_detect(detect);
    if (app.got_subcommand("bench")) return run_bench(bench);
    if (app.got_subcommand("census")) return run_census(census);
  } catch (const RuntimeFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
