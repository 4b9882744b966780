#include "trires_cli/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "trires/checkpoint.hpp"
#include "trires/evaluation.hpp"
#include "trires/heatmap.hpp"
#include "trires/sampler.hpp"
#include "trires/synthetic.hpp"
#include "trires/training.hpp"
#include "trires_cli/verify.hpp"

namespace trires::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kOutputRootEnv = "TRIRES_OUTPUT_ROOT";

fs::path output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return env && *env ? fs::path(env) : fs::path("trires-out");
}

// Relative output paths live under the output root when it is set.
fs::path resolve_output(const std::string& given, const std::string& fallback) {
  if (given.empty()) return output_root() / fallback;
  fs::path p(given);
  const char* env = std::getenv(kOutputRootEnv);
  if (p.is_relative() && env && *env) return fs::path(env) / p;
  return p;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

// Options shared by every command that builds or feeds a network.
struct ModelOptions {
  std::string depths = "3,4,6,3";
  int base_width = 64;
  std::string scale = "1/1";
  std::string dtype = "f32";
  int input_side = 0;

  StreamConfig stream_config() const {
    std::vector<int> d;
    std::stringstream ss(depths);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        d.push_back(std::stoi(item));
      } catch (const std::exception&) {
        throw ConfigError("malformed stage depth '" + item + "'");
      }
    }
    if (d.size() != 4) throw ConfigError("--depths needs exactly four comma-separated values");
    StreamConfig c;
    std::copy(d.begin(), d.end(), c.stage_depths.begin());
    c.base_width = base_width;
    c.scale = parse_width_scale(scale);
    validate(c);
    return c;
  }
};

void add_model_options(CLI::App* cmd, ModelOptions& m) {
  cmd->add_option("--depths", m.depths, "Residual blocks per stage, e.g. 3,4,6,3")->capture_default_str();
  cmd->add_option("--base-width", m.base_width, "Channels of the first stage")->capture_default_str();
  cmd->add_option("--scale", m.scale, "Width multiplier p/q")->capture_default_str();
  cmd->add_option("--dtype", m.dtype, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}))->capture_default_str();
  cmd->add_option("--input-side", m.input_side, "Resize tiles to this side (0 keeps the tile side)")
      ->capture_default_str();
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("malformed split fraction '" + item + "'");
    }
  }
  return out;
}

Split parse_split_arg(const std::string& s) {
  try {
    return parse_split(s);
  } catch (const FormatError&) {
    throw ConfigError("unknown split '" + s + "' (train, val or test)");
  }
}

// Writes the effective option values of a subcommand as key=value lines.
void echo_config(const CLI::App* cmd, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  std::istringstream lines(cmd->config_to_str(true, false));
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind("config=", 0) == 0) continue;
    out << line << '\n';
  }
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string spec_file;
  std::string out;
  std::uint64_t seed = 1;
  bool seed_given = false;
  int count = 1;
};

Region region_from_json(const nlohmann::json& j) {
  Region r;
  const std::string kind = j.value("kind", "ellipse");
  if (kind == "rect") {
    r.kind = Region::Kind::rect;
  } else if (kind == "ellipse") {
    r.kind = Region::Kind::ellipse;
  } else {
    throw SpecError("region kind must be rect or ellipse");
  }
  r.x = j.at("x").get<double>();
  r.y = j.at("y").get<double>();
  r.w = j.at("w").get<double>();
  r.h = j.at("h").get<double>();
  return r;
}

Rgb rgb_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<int>>();
  if (v.size() != 3) throw SpecError("colours need three components");
  for (int c : v) {
    if (c < 0 || c > 255) throw SpecError("colour components must lie in 0..255");
  }
  return {static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]), static_cast<std::uint8_t>(v[2])};
}

SyntheticSlideSpec load_spec(const std::string& file) {
  SyntheticSlideSpec spec;
  if (file.empty()) return spec;
  std::ifstream in(file);
  if (!in) throw SpecError("cannot open spec file " + file);
  try {
    const auto j = nlohmann::json::parse(in);
    spec.slide_id = j.value("slide_id", spec.slide_id);
    spec.width = j.value("width", spec.width);
    spec.height = j.value("height", spec.height);
    if (j.contains("background")) spec.background = rgb_from_json(j.at("background"));
    if (j.contains("tissue")) spec.tissue = region_from_json(j.at("tissue"));
    if (j.contains("malignant")) {
      spec.malignant.clear();
      for (const auto& r : j.at("malignant")) spec.malignant.push_back(region_from_json(r));
    }
    if (j.contains("benign_color")) spec.benign_color = rgb_from_json(j.at("benign_color"));
    if (j.contains("malignant_color")) spec.malignant_color = rgb_from_json(j.at("malignant_color"));
    if (j.contains("nucleus_color")) spec.nucleus_color = rgb_from_json(j.at("nucleus_color"));
    spec.texture_amplitude = j.value("texture_amplitude", spec.texture_amplitude);
    spec.seed = j.value("seed", spec.seed);
  } catch (const nlohmann::json::exception& e) {
    throw SpecError("malformed spec " + file + ": " + e.what());
  }
  return spec;
}

int cmd_synth(const SynthArgs& a, const CLI::App* cmd, std::ostream& out) {
  SyntheticSlideSpec spec = load_spec(a.spec_file);
  if (a.seed_given) spec.seed = a.seed;
  if (a.count < 1) throw ConfigError("--count must be at least 1");
  const fs::path dir = resolve_output(a.out, "slides");
  const std::string base_id = spec.slide_id;
  for (int i = 0; i < a.count; ++i) {
    SyntheticSlideSpec s = spec;
    fs::path target = dir;
    if (a.count > 1) {
      s.slide_id = base_id + "_" + std::to_string(i);
      s.seed = spec.seed + static_cast<std::uint64_t>(i);
      target = dir / s.slide_id;
    }
    const auto synth = generate_synthetic_slide(s);
    ensure_directory(target);
    save_synthetic_slide(synth, target);
    out << "wrote slide '" << s.slide_id << "' (" << s.width << "x" << s.height << ", levels 1/4/16) to "
        << target.string() << '\n';
  }
  echo_config(cmd, dir / "synth_config.ini");
  return kOk;
}

// ---------------------------------------------------------------- tile

struct TileArgs {
  std::string slides;
  int n = 100;
  std::uint64_t seed = 0;
  int side = kDefaultTileSide;
  int budget = kDefaultSamplingBudget;
  std::string out;
  std::string split;
  bool by_slide = false;
};

int cmd_tile(const TileArgs& a, std::ostream& out, std::ostream& err) {
  if (a.n < 0 || a.n % 2 != 0) {
    err << "error: --n must be a non-negative even number\n";
    return kUsage;
  }
  const SlideSet slides = load_slides(a.slides);
  if (slides.empty()) throw FormatError("no slides found under " + a.slides);
  const auto tissue = tissue_masks(slides);
  SamplerOptions so;
  so.tile_side = a.side;
  so.max_attempts = a.budget;

  DatasetManifest manifest;
  if (a.split.empty()) {
    manifest = sample_balanced_tiles(slides, tissue, a.n, a.seed, so);
  } else if (!a.by_slide) {
    const auto fractions = parse_fractions(a.split);
    manifest = split_manifest(sample_balanced_tiles(slides, tissue, a.n, a.seed, so), fractions, false, a.seed);
  } else {
    // Slides are split first and every group is sampled on its own, so each
    // split stays class balanced.
    const auto fractions = parse_fractions(a.split);
    std::vector<std::string> ids;
    for (const auto& [id, _] : slides) ids.push_back(id);
    const auto assignment = assign_slides_to_splits(ids, fractions, a.seed);
    const auto pairs = allocate_counts(static_cast<std::size_t>(a.n / 2), fractions);
    constexpr Split kOrder[] = {Split::train, Split::val, Split::test};
    manifest.seed = a.seed;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
      SlideSet group;
      std::map<std::string, TissueMask> group_tissue;
      for (const auto& [id, split] : assignment) {
        if (split != kOrder[i]) continue;
        group.emplace(id, slides.at(id));
        group_tissue.emplace(id, tissue.at(id));
      }
      if (group.empty() || pairs[i] == 0) continue;
      auto part = sample_balanced_tiles(group, group_tissue, static_cast<int>(pairs[i] * 2),
                                        a.seed + i, so);
      for (auto& r : part.records) {
        r.split = kOrder[i];
        manifest.records.push_back(std::move(r));
      }
    }
    manifest.config = "n=" + std::to_string(a.n) + ";side=" + std::to_string(a.side) +
                      ";split=" + a.split + ";by_slide=1";
  }
  const fs::path path = resolve_output(a.out, "manifest.csv");
  if (path.has_parent_path()) ensure_directory(path.parent_path());
  write_manifest(manifest, path);
  out << "wrote " << manifest.records.size() << " records to " << path.string() << '\n';
  for (Split s : {Split::train, Split::val, Split::test}) {
    const auto mal = manifest.count(s, kMalignantClass), ben = manifest.count(s, kBenignClass);
    if (mal + ben == 0) continue;
    out << "  " << split_name(s) << ": malignant " << mal << ", benign " << ben << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string manifest;
  std::string slides;
  std::string out;
  ModelOptions model;
  TrainConfig cfg;
  bool single_stream = false;
};

std::array<std::uint64_t, kStreamCount> stream_seeds(std::uint64_t seed) {
  return {seed + 101, seed + 102, seed + 103};
}

int cmd_train(TrainArgs a, const CLI::App* cmd, std::ostream& out) {
  validate(a.cfg);
  const StreamConfig sc = a.model.stream_config();
  const Dtype dtype = parse_dtype(a.model.dtype);
  const DatasetManifest manifest = read_manifest(a.manifest);
  const SlideSet slides = load_slides(a.slides);
  const TrainingData data = load_training_data(slides, manifest, dtype, a.model.input_side);
  if (data.train.size() == 0) throw ConfigError("manifest holds no train records");
  const fs::path dir = resolve_output(a.out, "train");
  ensure_directory(dir);
  echo_config(cmd, dir / "effective_config.ini");

  std::ofstream report_file(dir / "reports.jsonl");
  if (!report_file) throw IoError("cannot write " + (dir / "reports.jsonl").string());
  PolicyHooks hooks;
  hooks.on_epoch = [&](const std::string& stage, const EpochRecord& e) {
    out << stage << " epoch " << e.epoch << ": loss " << std::fixed << std::setprecision(4) << e.loss
        << ", train acc " << e.train_acc;
    if (e.val_acc) out << ", val acc " << *e.val_acc;
    out << '\n';
  };

  if (a.single_stream) {
    SingleStreamModel m = build_single_stream(sc, 2, stream_seeds(a.cfg.seed)[0], a.cfg.seed + 105, dtype);
    save_checkpoint(m, dir / "initial.trn");
    const StageReport r = train_single_stream(m, data, a.cfg, hooks);
    save_checkpoint(m, dir / "baseline.trn");
    write_report_lines(report_file, r);
    out << "baseline: " << r.epochs.size() << " epochs at lr " << r.lr << ", checkpoint "
        << (dir / "baseline.trn").string() << '\n';
    return kOk;
  }

  TriResNetModel m = build_triresnet(sc, 2, stream_seeds(a.cfg.seed), a.cfg.seed + 104, dtype);
  save_checkpoint(m, dir / "initial.trn");
  hooks.after_stage = [&](const StageReport& r, const TriResNetModel& model) {
    save_checkpoint(model, dir / (r.stage + ".trn"));
    write_report_lines(report_file, r);
    report_file.flush();
    out << r.stage << ": " << r.epochs.size() << " epochs at lr " << r.lr << ", " << r.updated_tensors
        << " tensors updated, " << r.frozen_tensors << " frozen\n";
  };
  run_policy(m, data, a.cfg, hooks);
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::string manifest;
  std::string slides;
  std::string split = "val";
  double threshold = kDefaultDecisionThreshold;
  int batch_size = 32;
  int input_side = 0;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Split split = parse_split_arg(a.split);
  const DatasetManifest manifest = read_manifest(a.manifest);
  if (manifest.records_in(split).empty()) {
    throw EmptyEvaluation("split '" + a.split + "' of " + a.manifest + " holds no records");
  }
  const SlideSet slides = load_slides(a.slides);
  std::vector<std::pair<std::string, MetricsReport>> rows;
  for (const auto& path : a.checkpoints) {
    AnyModel model = load_any_checkpoint(path);
    EvaluationOptions eo;
    eo.threshold = a.threshold;
    eo.batch_size = a.batch_size;
    eo.input_side = a.input_side;
    std::string label;
    EvaluationResult r;
    if (auto* tri = std::get_if<TriResNetModel>(&model)) {
      eo.dtype = tri->dtype;
      TriResNetPredictor p(*tri);
      r = evaluate(p, manifest, split, slides, eo);
      label = "TriResNet";
    } else {
      auto& single = std::get<SingleStreamModel>(model);
      eo.dtype = single.dtype;
      SingleStreamPredictor p(single);
      r = evaluate(p, manifest, split, slides, eo);
      label = "ResNet (single stream)";
    }
    rows.emplace_back(label + " [" + fs::path(path).filename().string() + "]", r.metrics);
  }
  out << format_metrics_table(rows);
  return kOk;
}

// ---------------------------------------------------------------- heatmap

struct HeatmapArgs {
  std::string checkpoint;
  bool oracle = false;
  std::string slide;
  int side = kDefaultTileSide;
  int stride = 0;
  int input_side = 0;
  std::string out;
};

int cmd_heatmap(const HeatmapArgs& a, std::ostream& out) {
  const PyramidalSlide slide = load_slide(a.slide);
  HeatmapOptions ho;
  ho.side = a.side;
  ho.stride = a.stride;
  ho.input_side = a.input_side;
  const fs::path path = resolve_output(a.out, "heatmap.pgm");
  if (path.has_parent_path()) ensure_directory(path.parent_path());

  Heatmap h;
  if (a.oracle) {
    SlideSet one;
    one.emplace(slide.id(), slide);
    MaskOraclePredictor p(one);
    h = assemble_heatmap(p, slide, ho);
  } else {
    AnyModel model = load_any_checkpoint(a.checkpoint);
    if (auto* tri = std::get_if<TriResNetModel>(&model)) {
      ho.dtype = tri->dtype;
      TriResNetPredictor p(*tri);
      h = assemble_heatmap(p, slide, ho);
    } else {
      auto& single = std::get<SingleStreamModel>(model);
      ho.dtype = single.dtype;
      SingleStreamPredictor p(single);
      h = assemble_heatmap(p, slide, ho);
    }
  }
  export_heatmap_image(h, path);
  fs::path sidecar = path;
  sidecar.replace_extension(".json");
  write_heatmap_sidecar(h, sidecar);
  out << "wrote " << h.rows << "x" << h.cols << " heatmap to " << path.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- verify

int cmd_verify(const VerifyOptions& o, std::ostream& out) {
  const auto results = run_verification(o);
  print_verification(out, results);
  int failed = 0;
  for (const auto& r : results) failed += !r.ok();
  out << (failed == 0 ? "all suites passed\n" : std::to_string(failed) + " suite(s) failed\n");
  return failed == 0 ? kOk : kVerification;
}

// Expands "--config FILE" after a subcommand into leading flags so explicit
// flags, parsed later, take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::size_t sub = 1;
  while (sub < args.size() && args[sub].rfind("-", 0) == 0) ++sub;
  if (sub >= args.size()) return args;
  for (std::size_t i = sub + 1; i < args.size(); ++i) {
    std::string file;
    std::size_t erase = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[i + 1];
      erase = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      erase = 1;
    } else {
      continue;
    }
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file);
    const auto items = CLI::ConfigBase().from_config(in);
    std::vector<std::string> injected;
    for (const auto& item : items) {
      if (item.name == "++" || item.name == "--") continue;
      std::string key = item.name;
      std::replace(key.begin(), key.end(), '_', '-');
      std::string value;
      for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
      injected.push_back("--" + key + "=" + value);
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + erase));
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub + 1), injected.begin(), injected.end());
    break;
  }
  return args;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Triple-stream residual network tile grading for whole-slide images", "trires"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic pyramidal slide");
  s->add_option("--spec", synth.spec_file, "JSON slide spec (defaults apply when omitted)");
  s->add_option("--out", synth.out, "Slide directory");
  s->add_option("--seed", synth.seed, "Override the spec seed")->each([&](const std::string&) { synth.seed_given = true; });
  s->add_option("--count", synth.count, "Number of slides (seeds seed..seed+count-1)")->capture_default_str();

  TileArgs tile;
  auto* t = app.add_subcommand("tile", "Sample a class-balanced tile manifest");
  t->add_option("--slides", tile.slides, "Slide directory or directory of slides")->required();
  t->add_option("--n", tile.n, "Number of tiles (even)")->capture_default_str();
  t->add_option("--seed", tile.seed)->capture_default_str();
  t->add_option("--side", tile.side, "Tile side in level-0 pixels")->capture_default_str();
  t->add_option("--budget", tile.budget, "Rejection attempts per tile")->capture_default_str();
  t->add_option("--split", tile.split, "Split fractions, e.g. 0.8,0.2 or 0.7,0.15,0.15");
  t->add_flag("--by-slide", tile.by_slide, "Keep every slide inside one split");
  t->add_option("--out", tile.out, "Manifest path");
  t->add_option("--config", "Flat key = value option file");

  TrainArgs train;
  auto* tr = app.add_subcommand("train", "Run the staged training policy");
  tr->add_option("--manifest", train.manifest)->required();
  tr->add_option("--slides", train.slides)->required();
  tr->add_option("--out", train.out, "Output directory");
  tr->add_option("--config", "Flat key = value option file");
  add_model_options(tr, train.model);
  auto& c = train.cfg;
  tr->add_option("--base-lr", c.base_lr)->capture_default_str();
  tr->add_option("--batch-size", c.batch_size)->capture_default_str();
  tr->add_option("--epochs-stage1", c.epochs_stage1)->capture_default_str();
  tr->add_option("--epochs-stage2", c.epochs_stage2)->capture_default_str();
  tr->add_option("--epochs-stage3", c.epochs_stage3)->capture_default_str();
  tr->add_option("--epochs-baseline", c.epochs_baseline)->capture_default_str();
  tr->add_option("--beta1", c.adam.beta1)->capture_default_str();
  tr->add_option("--beta2", c.adam.beta2)->capture_default_str();
  tr->add_option("--adam-eps", c.adam.eps)->capture_default_str();
  tr->add_option("--seed", c.seed)->capture_default_str();
  tr->add_flag("--hflip,!--no-hflip", c.augment.horizontal_flip)->capture_default_str();
  tr->add_flag("--vflip,!--no-vflip", c.augment.vertical_flip)->capture_default_str();
  tr->add_flag("--rotate,!--no-rotate", c.augment.rotation)->capture_default_str();
  tr->add_option("--brightness", c.augment.brightness)->capture_default_str();
  tr->add_option("--flip-probability", c.augment.flip_probability)->capture_default_str();
  tr->add_flag("--disjoint-stream-subsets", c.disjoint_stream_subsets)->capture_default_str();
  tr->add_flag("--single-stream", train.single_stream, "Train the single-stream baseline instead");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Print accuracy / sensitivity / specificity");
  e->add_option("--checkpoint", ev.checkpoints, "One or more checkpoints")->required()->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  e->add_option("--manifest", ev.manifest)->required();
  e->add_option("--slides", ev.slides)->required();
  e->add_option("--split", ev.split)->capture_default_str();
  e->add_option("--threshold", ev.threshold)->capture_default_str();
  e->add_option("--batch-size", ev.batch_size)->capture_default_str();
  e->add_option("--input-side", ev.input_side)->capture_default_str();

  HeatmapArgs hm;
  auto* h = app.add_subcommand("heatmap", "Assemble a malignancy probability heatmap");
  auto* source = h->add_option_group("predictor", "Exactly one of --checkpoint and --oracle");
  source->add_option("--checkpoint", hm.checkpoint);
  source->add_flag("--oracle", hm.oracle, "Use the slide's malignancy mask as the predictor");
  source->require_option(1);
  h->add_option("--slide", hm.slide)->required();
  h->add_option("--side", hm.side)->capture_default_str();
  h->add_option("--stride", hm.stride, "Grid stride (0: tile side)")->capture_default_str();
  h->add_option("--input-side", hm.input_side)->capture_default_str();
  h->add_option("--out", hm.out, "Graymap path; a .json sidecar is written next to it");

  VerifyOptions vo;
  auto* v = app.add_subcommand("verify", "Run the built-in property suites");
  v->add_option("--seed", vo.seed)->capture_default_str();
  v->add_option("--inject-fault", vo.inject_fault, "Corrupt the backward rule of an operation")->group("");

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(std::move(args));
    std::vector<const char*> ptrs;
    for (const auto& a : args) ptrs.push_back(a.c_str());
    app.parse(static_cast<int>(ptrs.size()), ptrs.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& pe) {
    err << "error: " << pe.what() << '\n';
    return kUsage;
  } catch (const ConfigError& ce) {
    err << "error: " << ce.what() << '\n';
    return kSpec;
  }

  try {
    if (*s) return cmd_synth(synth, s, out);
    if (*t) return cmd_tile(tile, out, err);
    if (*tr) return cmd_train(train, tr, out);
    if (*e) return cmd_eval(ev, out);
    if (*h) return cmd_heatmap(hm, out);
    if (*v) return cmd_verify(vo, out);
  } catch (const SpecError& x) {
    err << "spec error: " << x.what() << '\n';
    return kSpec;
  } catch (const ConfigError& x) {
    err << "config error: " << x.what() << '\n';
    return kSpec;
  } catch (const SplitError& x) {
    err << "split error: " << x.what() << '\n';
    return kSpec;
  } catch (const SamplingExhausted& x) {
    err << "sampling error: " << x.what() << '\n';
    return kSampling;
  } catch (const EmptyEvaluation& x) {
    err << "evaluation error: " << x.what() << '\n';
    return kEvaluation;
  } catch (const IoError& x) {
    err << "I/O error: " << x.what() << '\n';
    return kIo;
  } catch (const FormatError& x) {
    err << "format error: " << x.what() << '\n';
    return kIo;
  } catch (const std::exception& x) {
    err << "error: " << x.what() << '\n';
    return kIo;
  }
  return kUsage;
}

}  // namespace trires::cli
