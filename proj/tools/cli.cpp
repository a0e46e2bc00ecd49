#include "cli.hpp"

#include "clam/bag_io.hpp"
#include "clam/binary_io.hpp"
#include "clam/checkpoint.hpp"
#include "clam/config.hpp"
#include "clam/error.hpp"
#include "clam/features.hpp"
#include "clam/heatmap.hpp"
#include "clam/metrics.hpp"
#include "clam/patching.hpp"
#include "clam/segmentation.hpp"
#include "clam/synth.hpp"
#include "clam/training.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

namespace fs = std::filesystem;

namespace clam::cli {

namespace {

// Thrown for bad flag combinations that CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// Files in dir whose name ends with suffix, sorted by name; returns (stem, path).
std::vector<std::pair<std::string, std::string>> list_files(const std::string& dir, const std::string& suffix) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "not a directory: '" + dir + "'");
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
    out.emplace_back(name.substr(0, name.size() - suffix.size()), entry.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<FeatureBag> load_bags(const std::string& dir) {
  std::vector<FeatureBag> bags;
  for (const auto& [stem, path] : list_files(dir, ".bag")) bags.push_back(load_bag(path));
  if (bags.empty()) throw Error(ErrorKind::Io, "no .bag files in '" + dir + "'");
  for (const auto& b : bags) {
    if (b.dim() != bags.front().dim()) throw Error(ErrorKind::Dimension, "bags have differing feature dimensions");
  }
  return bags;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream s(line);
  while (std::getline(s, field, ',')) out.push_back(field);
  return out;
}

// "slide_id,label" per line; '#' comments and an optional "slide_id,label" header.
std::map<std::string, int> read_labels(const std::string& path) {
  std::map<std::string, int> out;
  std::istringstream lines(read_file(path));
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#' || line == "slide_id,label") continue;
    const auto f = split_csv_line(line);
    int label = -1;
    try {
      if (f.size() == 2) label = std::stoi(f[1]);
    } catch (const std::logic_error&) {
    }
    if (f.size() != 2 || label < 0) throw Error(ErrorKind::Format, path + ":" + std::to_string(line_no) + ": expected slide_id,label");
    out[f[0]] = label;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Split files: "case_id,class,assignment" with assignment train / val / test.

std::string format_split(const Fold& fold, const std::map<std::string, int>& case_class) {
  std::string out = "case_id,class,assignment\n";
  auto emit = [&](const std::vector<std::string>& ids, const char* tag) {
    for (const auto& id : ids) out += id + "," + std::to_string(case_class.at(id)) + "," + tag + "\n";
  };
  emit(fold.train, "train");
  emit(fold.val, "val");
  emit(fold.test, "test");
  return out;
}

Fold parse_split(const std::string& path) {
  Fold fold;
  std::istringstream lines(read_file(path));
  std::string line;
  int line_no = 0;
  std::set<std::string> seen;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#' || line == "case_id,class,assignment") continue;
    const auto f = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (f.size() != 3) throw Error(ErrorKind::Format, where + ": expected case_id,class,assignment");
    if (!seen.insert(f[0]).second) throw Error(ErrorKind::Split, where + ": case '" + f[0] + "' listed twice");
    if (f[2] == "train") fold.train.push_back(f[0]);
    else if (f[2] == "val") fold.val.push_back(f[0]);
    else if (f[2] == "test") fold.test.push_back(f[0]);
    else throw Error(ErrorKind::Format, where + ": assignment must be train, val or test");
  }
  return fold;
}

std::vector<FeatureBag> select(const std::vector<FeatureBag>& bags, const std::vector<std::string>& ids) {
  std::map<std::string, const FeatureBag*> by_id;
  for (const auto& b : bags) by_id[b.slide_id] = &b;
  std::vector<FeatureBag> out;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(ErrorKind::Split, "split names unknown case '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

std::string format_metrics(const FoldEvaluation& ev, std::size_t n_checkpoints) {
  std::ostringstream s;
  const auto n_classes = ev.probs.cols();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ev.labels.size(); ++i) correct += ev.predictions[i] == ev.labels[i] ? 1 : 0;
  s << "n_slides=" << ev.labels.size() << "\n";
  s << "n_classes=" << n_classes << "\n";
  s << "n_checkpoints=" << n_checkpoints << "\n";
  s << "mean_loss=" << num(ev.mean_loss) << "\n";
  s << "accuracy=" << num(ev.labels.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(ev.labels.size()))
    << "\n";
  if (ev.auc) s << "auc=" << num(*ev.auc) << "\n";
  if (ev.macro) {
    s << "macro_auc=" << num(ev.macro->macro) << "\n";
    for (std::size_t c = 0; c < ev.macro->per_class.size(); ++c) {
      s << "auc_class_" << c << "=" << num(ev.macro->per_class[c]) << "\n";
    }
  }
  const auto& cs = ev.confidence;
  s << "n_correct=" << cs.n_correct << "\n";
  s << "n_incorrect=" << cs.n_incorrect << "\n";
  if (cs.mean_correct) s << "mean_conf_correct=" << num(*cs.mean_correct) << "\nstd_conf_correct=" << num(*cs.std_correct) << "\n";
  if (cs.mean_incorrect) {
    s << "mean_conf_incorrect=" << num(*cs.mean_incorrect) << "\nstd_conf_incorrect=" << num(*cs.std_incorrect) << "\n";
  }
  return s.str();
}

std::string format_predictions(const FoldEvaluation& ev) {
  std::string out = "slide_id,label,prediction";
  for (Eigen::Index c = 0; c < ev.probs.cols(); ++c) out += ",p" + std::to_string(c);
  out += "\n";
  for (std::size_t i = 0; i < ev.slide_ids.size(); ++i) {
    out += ev.slide_ids[i] + "," + std::to_string(ev.labels[i]) + "," + std::to_string(ev.predictions[i]);
    for (Eigen::Index c = 0; c < ev.probs.cols(); ++c) out += "," + num(ev.probs(static_cast<Eigen::Index>(i), c));
    out += "\n";
  }
  return out;
}

using AnyModel = std::variant<ClamParams, MilParams>;

AnyModel load_any_checkpoint(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() >= 8 && bytes.compare(0, 8, "MILCKPT", 8) == 0) return decode_mil_checkpoint(bytes);
  return decode_checkpoint(bytes);
}

int model_classes(const AnyModel& m) {
  return std::visit([](const auto& p) { return p.n_classes; }, m);
}

int model_dim(const AnyModel& m) {
  return std::visit([](const auto& p) { return p.feature_dim; }, m);
}

// ---------------------------------------------------------------------------
// Subcommands

struct SegmentArgs {
  std::string images, out, params;
};

void cmd_segment(const SegmentArgs& a) {
  std::map<std::string, SegParams> per_slide;
  if (!a.params.empty()) per_slide = parse_seg_param_file(read_file(a.params));
  ensure_dir(a.out);
  const auto images = list_files(a.images, ".ppm");
  if (images.empty()) throw Error(ErrorKind::Io, "no .ppm images in '" + a.images + "'");
  std::string param_text = "# one line per slide; edit and pass back with --params\n";
  for (const auto& [slide, path] : images) {
    const auto it = per_slide.find(slide);
    const SegParams params = it == per_slide.end() ? SegParams{} : it->second;
    const SegmentationMask mask = segment_tissue(read_ppm(path), params);
    write_file_atomic(join(a.out, slide + ".mask.ppm"), encode_mask_ppm(mask));
    param_text += format_seg_params_line(slide, params) + "\n";
    std::int64_t area = 0;
    for (const auto& c : mask.contours) area += c.area;
    std::cout << slide << " contours=" << mask.contours.size() << " area=" << area << "\n";
  }
  write_file_atomic(join(a.out, "seg_params.txt"), param_text);
}

struct PatchArgs {
  std::string masks, out, images, magnification = "20x";
  double overlap = 0.0;
  int patch_size = 256;
  bool save_patches = false;
};

void cmd_patch(const PatchArgs& a) {
  if (a.save_patches && a.images.empty()) throw UsageError("--save-patches needs --images");
  patch_step(a.patch_size, a.overlap);
  ensure_dir(a.out);
  const auto masks = list_files(a.masks, ".mask.ppm");
  if (masks.empty()) throw Error(ErrorKind::Io, "no .mask.ppm files in '" + a.masks + "'");
  for (const auto& [slide, path] : masks) {
    const SegmentationMask mask = decode_mask_ppm(read_file(path));
    PatchGrid grid = extract_patch_grid(mask, a.patch_size, a.overlap);
    grid.magnification = a.magnification;
    write_file_atomic(join(a.out, slide + ".patches.txt"), format_patch_grid(grid));
    if (a.save_patches) {
      const RgbImage image = read_ppm(join(a.images, slide + ".ppm"));
      const std::string dir = join(a.out, slide);
      ensure_dir(dir);
      for (const auto& c : grid.coords) {
        write_ppm(join(dir, std::to_string(c[0]) + "_" + std::to_string(c[1]) + ".ppm"),
                  crop(image, c[0], c[1], grid.patch_size));
      }
    }
    std::cout << slide << " patches=" << grid.coords.size() << " step=" << grid.step << "\n";
  }
}

struct FeaturizeArgs {
  std::string patches, images, csv, labels, out;
  int dim = kDefaultFeatureDim;
  std::uint64_t seed = 0;
};

void cmd_featurize(const FeaturizeArgs& a) {
  if (a.csv.empty() == a.images.empty()) throw UsageError("give exactly one of --images (stub features) or --csv");
  if (!a.images.empty() && a.patches.empty()) throw UsageError("--images needs --patches");
  const auto labels = read_labels(a.labels);
  auto label_of = [&](const std::string& slide) {
    const auto it = labels.find(slide);
    if (it == labels.end()) throw Error(ErrorKind::Label, "no label for slide '" + slide + "'");
    return it->second;
  };
  ensure_dir(a.out);
  if (!a.csv.empty()) {
    const auto files = list_files(a.csv, ".csv");
    if (files.empty()) throw Error(ErrorKind::Io, "no .csv files in '" + a.csv + "'");
    for (const auto& [slide, path] : files) {
      const FeatureBag bag = import_feature_csv(read_file(path), slide, label_of(slide));
      save_bag(join(a.out, slide + ".bag"), bag);
      std::cout << slide << " K=" << bag.size() << " D=" << bag.dim() << "\n";
    }
    return;
  }
  const StubExtractor extractor(a.dim, a.seed);
  const auto grids = list_files(a.patches, ".patches.txt");
  if (grids.empty()) throw Error(ErrorKind::Io, "no .patches.txt files in '" + a.patches + "'");
  for (const auto& [slide, path] : grids) {
    const PatchGrid grid = parse_patch_grid(read_file(path));
    const RgbImage image = read_ppm(join(a.images, slide + ".ppm"));
    const FeatureBag bag = featurize(image, grid, extractor, slide, label_of(slide));
    save_bag(join(a.out, slide + ".bag"), bag);
    std::cout << slide << " K=" << bag.size() << " D=" << bag.dim() << "\n";
  }
}

struct SynthArgs {
  std::string out, config;
  std::size_t count = 100;
  std::size_t first_index = 0;
  std::optional<std::uint64_t> seed;
};

void cmd_synth(const SynthArgs& a) {
  SynthSpec spec = a.config.empty() ? SynthSpec{} : parse_synth_spec(read_file(a.config));
  if (a.seed) spec.seed = *a.seed;
  spec.validate();
  ensure_dir(a.out);
  const auto bags = generate_bags(spec, a.count, a.first_index);
  std::string labels = "slide_id,label\n", evidence = "slide_id,instance\n";
  for (const auto& s : bags) {
    save_bag(join(a.out, s.bag.slide_id + ".bag"), s.bag);
    labels += s.bag.slide_id + "," + std::to_string(s.bag.label) + "\n";
    for (std::size_t e : s.evidence) evidence += s.bag.slide_id + "," + std::to_string(e) + "\n";
  }
  write_file_atomic(join(a.out, "labels.csv"), labels);
  write_file_atomic(join(a.out, "evidence.csv"), evidence);
  write_file_atomic(join(a.out, "spec.txt"), format_synth_spec(spec));
  std::cout << "wrote " << bags.size() << " bags to " << a.out << "\n";
}

struct TrainArgs {
  std::string bags, out, config, model = "clam";
  std::vector<std::string> splits;
  int folds = 1;
  std::optional<std::uint64_t> seed;
};

void cmd_train(const TrainArgs& a) {
  if (a.model != "clam" && a.model != "mil") throw UsageError("--model must be clam or mil");
  TrainConfig cfg = a.config.empty() ? TrainConfig{} : parse_train_config(read_file(a.config));
  if (a.seed) cfg.seed = *a.seed;
  cfg.validate();
  const auto bags = load_bags(a.bags);

  int n_classes = 0;
  std::vector<CaseRecord> cases;
  std::map<std::string, int> case_class;
  for (const auto& b : bags) {
    if (b.label < 0) throw Error(ErrorKind::Label, "negative label on slide '" + b.slide_id + "'");
    n_classes = std::max(n_classes, b.label + 1);
    cases.push_back({b.slide_id, b.label, {b.slide_id}});
    case_class[b.slide_id] = b.label;
  }
  n_classes = std::max(n_classes, 2);

  std::vector<Fold> folds;
  if (!a.splits.empty()) {
    for (const auto& path : a.splits) folds.push_back(parse_split(path));
  } else {
    SeededRng split_rng(cfg.seed);
    folds = monte_carlo_split(cases, a.folds, SplitFractions{}, split_rng).folds;
  }

  ensure_dir(a.out);
  std::string summary;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::string tag = "fold_" + std::to_string(f);
    write_file_atomic(join(a.out, "split_" + std::to_string(f) + ".csv"), format_split(folds[f], case_class));
    const auto train = select(bags, folds[f].train);
    const auto val = select(bags, folds[f].val);
    const auto test = select(bags, folds[f].test);

    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = cfg.seed + f;
    SeededRng init_rng(fold_cfg.seed ^ 0x5851f42d4c957f2dULL);
    std::string log;
    auto on_epoch = [&](const EpochRecord& r) { log += format_epoch_record(r) + "\n"; };
    const auto dim = static_cast<int>(bags.front().dim());
    std::optional<FoldEvaluation> ev;
    int best_epoch = 0, epochs_run = 0;
    double best_val = 0.0;
    if (a.model == "clam") {
      auto res = fit_clam(train, val, init_params(n_classes, init_rng, ScaleRule::UniformFanIn, dim), fold_cfg, on_epoch);
      save_checkpoint(join(a.out, tag + ".ckpt"), res.best);
      if (!test.empty()) ev = evaluate_fold(res.best, test);
      best_epoch = res.best_epoch, epochs_run = res.epochs_run, best_val = res.best_val_loss;
    } else {
      auto res = fit_mil(train, val, init_mil_params(n_classes, init_rng, ScaleRule::UniformFanIn, dim), fold_cfg, on_epoch);
      save_mil_checkpoint(join(a.out, tag + ".ckpt"), res.best);
      if (!test.empty()) ev = evaluate_fold(res.best, test);
      best_epoch = res.best_epoch, epochs_run = res.epochs_run, best_val = res.best_val_loss;
    }
    log += "best_epoch=" + std::to_string(best_epoch) + " best_val_loss=" + num(best_val) +
           " epochs_run=" + std::to_string(epochs_run) + "\n";
    write_file_atomic(join(a.out, tag + ".log"), log);
    std::string line = tag + " best_epoch=" + std::to_string(best_epoch) + " epochs_run=" + std::to_string(epochs_run);
    if (ev) {
      write_file_atomic(join(a.out, tag + "_metrics.txt"), format_metrics(*ev, 1));
      write_file_atomic(join(a.out, tag + "_predictions.csv"), format_predictions(*ev));
      if (ev->auc) line += " test_auc=" + num(*ev->auc);
      if (ev->macro) line += " test_macro_auc=" + num(ev->macro->macro);
    }
    line += "\n";
    std::cout << line;
    summary += line;
  }
  write_file_atomic(join(a.out, "config.txt"), format_train_config(cfg));
  write_file_atomic(join(a.out, "summary.txt"), summary);
}

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::string bags, split, out;
  bool pca = false;
  std::optional<std::uint64_t> seed;  // accepted for uniformity; evaluation is deterministic
};

void cmd_eval(const EvalArgs& a) {
  auto bags = load_bags(a.bags);
  if (!a.split.empty()) bags = select(bags, parse_split(a.split).test);
  if (bags.empty()) throw Error(ErrorKind::Evaluation, "no slides to evaluate");

  std::vector<AnyModel> models;
  for (const auto& path : a.checkpoints) models.push_back(load_any_checkpoint(path));
  const int n = model_classes(models.front());
  for (const auto& m : models) {
    if (model_classes(m) != n) throw Error(ErrorKind::Dimension, "checkpoints disagree on the number of classes");
    if (model_dim(m) != bags.front().dim()) throw Error(ErrorKind::Dimension, "checkpoint feature dim differs from bags");
  }

  // Ensemble: average the per-slide probability vectors.
  Matrix probs = Matrix::Zero(static_cast<Eigen::Index>(bags.size()), n);
  for (const auto& m : models) {
    probs += std::visit([&](const auto& p) { return evaluate_fold(p, bags).probs; }, m);
  }
  probs /= static_cast<double>(models.size());
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const auto& b : bags) {
    ids.push_back(b.slide_id);
    labels.push_back(b.label);
  }
  const FoldEvaluation ev = summarize_predictions(ids, labels, probs);

  ensure_dir(a.out);
  write_file_atomic(join(a.out, "metrics.txt"), format_metrics(ev, models.size()));
  write_file_atomic(join(a.out, "predictions.csv"), format_predictions(ev));

  if (a.pca) {
    const auto* clam = std::get_if<ClamParams>(&models.front());
    if (clam == nullptr) throw UsageError("--pca needs a CLAM checkpoint first");
    // Slide representation of the predicted-class branch.
    Matrix reps(static_cast<Eigen::Index>(bags.size()), kEmbedDim);
    for (std::size_t i = 0; i < bags.size(); ++i) {
      const auto fwd = clam_forward(bags[i], *clam);
      reps.row(static_cast<Eigen::Index>(i)) = fwd.attention.slide_repr.row(ev.predictions[i]);
    }
    const Matrix xy = pca_project(reps, 50, 2);
    std::string csv = "slide_id,label,pc1,pc2\n";
    for (std::size_t i = 0; i < bags.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      csv += ids[i] + "," + std::to_string(labels[i]) + "," + num(xy(r, 0)) + "," + num(xy.cols() > 1 ? xy(r, 1) : 0.0) + "\n";
    }
    write_file_atomic(join(a.out, "pca.csv"), csv);
  }
  std::cout << format_metrics(ev, models.size());
}

struct HeatmapArgs {
  std::string checkpoint, bag, out, image, mask;
  double overlap = 0.0;
  double alpha = 0.5;
  int branch = -1;
  int downsample = 32;
  std::uint64_t seed = 0;  // stub-feature seed for overlap patches; must match featurize
};

void cmd_heatmap(const HeatmapArgs& a) {
  const AnyModel model = load_any_checkpoint(a.checkpoint);
  const auto* params = std::get_if<ClamParams>(&model);
  if (params == nullptr) throw Error(ErrorKind::Format, "heatmaps need a CLAM checkpoint (attention scores)");
  const FeatureBag bag = load_bag(a.bag);
  if (bag.size() == 0) throw Error(ErrorKind::DegenerateBag, "bag has no patches");
  if (bag.dim() != params->feature_dim) throw Error(ErrorKind::Dimension, "checkpoint feature dim differs from bag");
  if (!a.mask.empty() && a.image.empty()) throw UsageError("--mask needs --image");
  if (a.overlap > 0.0 && a.mask.empty()) throw UsageError("--overlap needs --image and --mask");

  const auto fwd = clam_forward(bag, *params);
  Eigen::Index predicted = 0;
  fwd.attention.probs.maxCoeff(&predicted);
  const int branch = a.branch >= 0 ? a.branch : static_cast<int>(predicted);
  if (branch >= params->n_classes) throw UsageError("--branch out of range");

  // Reference: raw attention of the bag's own (non-overlapping) patches.
  const Vector ref_row = fwd.attention.raw_attention.row(branch).transpose();
  std::vector<double> reference(ref_row.data(), ref_row.data() + ref_row.size());

  std::vector<std::array<std::int32_t, 2>> coords = bag.coords;
  std::vector<double> raw = reference;
  std::optional<RgbImage> image;
  if (!a.image.empty()) image = read_ppm(a.image);
  if (a.overlap > 0.0) {
    const SegmentationMask mask = decode_mask_ppm(read_file(a.mask));
    const PatchGrid grid = extract_patch_grid(mask, static_cast<int>(bag.patch_size), a.overlap);
    const StubExtractor extractor(static_cast<int>(bag.dim()), a.seed);
    const FeatureBag dense = featurize(*image, grid, extractor, bag.slide_id, bag.label);
    if (dense.size() == 0) throw Error(ErrorKind::DegenerateBag, "overlap grid has no patches");
    const Matrix h = embed_instances(dense.features, *params);
    const Vector row = attention_forward(h, *params).raw_attention.row(branch).transpose();
    raw.assign(row.data(), row.data() + row.size());
    coords = dense.coords;
  }
  const auto normalized = percentile_normalize(raw, reference);

  int full_w = 0, full_h = 0;
  if (image) {
    full_w = image->width, full_h = image->height;
  } else {
    for (const auto& c : coords) {
      full_w = std::max(full_w, c[0] + static_cast<int>(bag.patch_size));
      full_h = std::max(full_h, c[1] + static_cast<int>(bag.patch_size));
    }
  }
  const int ds = a.downsample;
  HeatmapGrid grid((full_w + ds - 1) / ds, (full_h + ds - 1) / ds, ds);
  std::vector<PatchScore> scores;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    accumulate(grid, coords[i], static_cast<int>(bag.patch_size), normalized[i]);
    scores.push_back({coords[i], raw[i], normalized[i]});
  }
  std::optional<RgbImage> base;
  if (image) base = downsample(*image, ds);
  ensure_dir(a.out);
  write_ppm(join(a.out, bag.slide_id + ".heatmap.ppm"), render(grid, base, a.alpha));
  write_file_atomic(join(a.out, bag.slide_id + ".scores.csv"), format_patch_scores(scores));
  std::cout << bag.slide_id << " branch=" << branch << " patches=" << coords.size() << "\n";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
      return kUsage;
    case ErrorKind::Numeric:
    case ErrorKind::Training:
      return kNumericError;
    default:
      return kDataError;
  }
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Attention-based multiple-instance learning toolkit"};
  app.require_subcommand(1);

  SegmentArgs seg;
  std::uint64_t unused_seed = 0;
  auto* segment = app.add_subcommand("segment", "Tissue masks for every .ppm image in a directory");
  segment->add_option("--images", seg.images, "Directory of full-resolution .ppm images")->required();
  segment->add_option("--out", seg.out, "Output directory for masks and seg_params.txt")->required();
  segment->add_option("--params", seg.params, "Per-slide segmentation parameter file");
  segment->add_option("--seed", unused_seed, "Accepted for uniformity; segmentation is deterministic");

  PatchArgs pat;
  auto* patch = app.add_subcommand("patch", "Patch grids from tissue masks");
  patch->add_option("--masks", pat.masks, "Directory of .mask.ppm files")->required();
  patch->add_option("--out", pat.out, "Output directory")->required();
  patch->add_option("--overlap", pat.overlap, "Overlap fraction in [0, 1)");
  patch->add_option("--patch-size", pat.patch_size, "Patch side in pixels");
  patch->add_option("--magnification", pat.magnification, "Magnification tag stored with the grid");
  patch->add_option("--images", pat.images, "Image directory (needed for --save-patches)");
  patch->add_flag("--save-patches", pat.save_patches, "Also write every patch as a .ppm");
  patch->add_option("--seed", unused_seed, "Accepted for uniformity; patching is deterministic");

  FeaturizeArgs feat;
  auto* featurize_cmd = app.add_subcommand("featurize", "Feature bags from patch grids or feature CSVs");
  featurize_cmd->add_option("--labels", feat.labels, "slide_id,label file")->required();
  featurize_cmd->add_option("--out", feat.out, "Output directory for .bag files")->required();
  featurize_cmd->add_option("--patches", feat.patches, "Directory of .patches.txt grids");
  featurize_cmd->add_option("--images", feat.images, "Directory of .ppm images (stub extractor)");
  featurize_cmd->add_option("--csv", feat.csv, "Directory of per-slide x,y,features CSVs (import)");
  featurize_cmd->add_option("--dim", feat.dim, "Stub feature dimension");
  featurize_cmd->add_option("--seed", feat.seed, "Stub projection seed");

  SynthArgs syn;
  auto* synth = app.add_subcommand("synth", "Synthetic Gaussian-mixture bags");
  synth->add_option("--out", syn.out, "Output directory")->required();
  synth->add_option("--config", syn.config, "key=value synthetic spec");
  synth->add_option("--count", syn.count, "Number of bags");
  synth->add_option("--first-index", syn.first_index, "Index of the first bag");
  synth->add_option("--seed", syn.seed, "Overrides the spec seed");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train one model per fold");
  train->add_option("--bags", tr.bags, "Directory of .bag files")->required();
  train->add_option("--out", tr.out, "Output directory")->required();
  train->add_option("--config", tr.config, "key=value training config");
  train->add_option("--model", tr.model, "clam or mil");
  train->add_option("--split", tr.splits, "case_id,class,assignment file (repeat for several folds)");
  train->add_option("--folds", tr.folds, "Monte-Carlo folds when no split file is given")->check(CLI::PositiveNumber);
  train->add_option("--seed", tr.seed, "Overrides the config seed");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Metrics for one checkpoint or an ensemble");
  eval->add_option("--checkpoint", ev.checkpoints, "Checkpoint file (repeat to ensemble)")->required();
  eval->add_option("--bags", ev.bags, "Directory of .bag files")->required();
  eval->add_option("--out", ev.out, "Output directory")->required();
  eval->add_option("--split", ev.split, "Restrict to the test cases of this split file");
  eval->add_flag("--pca", ev.pca, "Write a 2-D PCA of slide representations");
  eval->add_option("--seed", ev.seed, "Accepted for uniformity; evaluation is deterministic");

  HeatmapArgs hm;
  auto* heatmap = app.add_subcommand("heatmap", "Attention heatmap for one bag");
  heatmap->add_option("--checkpoint", hm.checkpoint, "CLAM checkpoint")->required();
  heatmap->add_option("--bag", hm.bag, "Bag file")->required();
  heatmap->add_option("--out", hm.out, "Output directory")->required();
  heatmap->add_option("--image", hm.image, "Full-resolution .ppm used as the overlay base");
  heatmap->add_option("--mask", hm.mask, "Tissue .mask.ppm (needed with --overlap)");
  heatmap->add_option("--overlap", hm.overlap, "Overlap fraction for dense re-patching");
  heatmap->add_option("--alpha", hm.alpha, "Overlay opacity");
  heatmap->add_option("--branch", hm.branch, "Attention branch (default: predicted class)");
  heatmap->add_option("--downsample", hm.downsample, "Render-space downsample factor");
  heatmap->add_option("--seed", hm.seed, "Stub feature seed for overlap patches");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*segment) cmd_segment(seg);
    else if (*patch) cmd_patch(pat);
    else if (*featurize_cmd) cmd_featurize(feat);
    else if (*synth) cmd_synth(syn);
    else if (*train) cmd_train(tr);
    else if (*eval) cmd_eval(ev);
    else if (*heatmap) cmd_heatmap(hm);
    return kOk;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
}

}  // namespace clam::cli
