// Command-line entry point: preprocess | edges | stylize | segment | train | eval | bench.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "edgeadain/config.hpp"
#include "edgeadain/metrics.hpp"
#include "edgeadain/pipeline.hpp"
#include "edgeadain/png_io.hpp"
#include "edgeadain/trainer.hpp"

namespace fs = std::filesystem;
using namespace edgeadain;

namespace {

constexpr const char* kMethod = "Edge-AdaIN";

struct Flags {
  std::string input, input_dir, style, edge, edge_provider, edge_file, weights, out, overlay, gt,
      config, report, encoder, encoder_weights;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters, crop, repeat, batch, checkpoint_every;
  std::optional<double> lr, lr_decay, alpha, beta, gamma;
  std::optional<float> edge_weight;
  bool edge_on_raw = false;
};

// Removes every registered output unless commit() is reached.
class OutputGuard {
 public:
  void add(const fs::path& p) { paths_.push_back(p); }
  void commit() { committed_ = true; }
  ~OutputGuard() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : paths_) fs::remove_all(p, ec);
  }

 private:
  std::vector<fs::path> paths_;
  bool committed_ = false;
};

RunConfig resolve_config(const Flags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (!f.style.empty()) cfg.style = f.style;
  if (!f.weights.empty()) {
    cfg.weights = f.weights;
  } else if (cfg.weights.empty()) {
    if (const char* env = std::getenv("EDGEADAIN_WEIGHTS")) cfg.weights = env;
  }
  if (!f.edge_provider.empty()) {
    if (f.edge_provider == "file") cfg.edge.provider = EdgeProvider::external_file;
    else if (f.edge_provider == "fallback") cfg.edge.provider = EdgeProvider::classical_fallback;
    else throw Error("--edge-provider must be fallback or file");
  }
  if (!f.edge_file.empty()) cfg.edge.file = f.edge_file;
  if (!f.edge.empty()) {
    cfg.edge.file = f.edge;
    cfg.edge.provider = EdgeProvider::external_file;
  }
  if (f.edge_on_raw) cfg.edge_on_raw = true;
  if (f.edge_weight) cfg.stylize.edge_weight = cfg.train.edge_weight = *f.edge_weight;

  TrainConfig& t = cfg.train;
  if (f.seed) t.seed = *f.seed;
  if (f.iters) t.iterations = *f.iters;
  if (f.lr) t.learning_rate = *f.lr;
  if (f.lr_decay) t.lr_decay = *f.lr_decay;
  if (f.alpha) t.weights.alpha = *f.alpha;
  if (f.beta) t.weights.beta = *f.beta;
  if (f.gamma) t.weights.gamma = *f.gamma;
  if (f.crop) t.crop = *f.crop;
  if (f.batch) t.batch = *f.batch;
  if (f.checkpoint_every) t.checkpoint_every = *f.checkpoint_every;
  if (!f.encoder.empty()) t.encoder_variant = parse_variant(f.encoder);
  if (!f.encoder_weights.empty()) t.encoder_weights = f.encoder_weights;
  if (cfg.edge.provider == EdgeProvider::external_file && !cfg.edge.file.empty()) {
    t.edge_provider = EdgeProvider::external_file;
    t.edge_dir = cfg.edge.file;
  }
  return cfg;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(std::string("missing required flag ") + flag);
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw Error(std::string(what) + " not found: " + p.string());
}

StyleNetWeights load_weights(const RunConfig& cfg) {
  if (cfg.weights.empty()) throw Error("no weights given (--weights or EDGEADAIN_WEIGHTS)");
  fs::path dir = cfg.weights;
  if (!fs::exists(dir / "checkpoint.json") && fs::exists(dir / "final" / "checkpoint.json")) {
    dir /= "final";
  }
  return load_checkpoint(dir).weights;
}

Image load_style(const RunConfig& cfg) {
  if (cfg.style.empty()) throw Error("missing required flag --style");
  require_file(cfg.style, "style image");
  return read_png(cfg.style);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

int cmd_preprocess(const Flags& f) {
  require(f.input, "--input");
  require(f.out, "--out");
  const RunConfig cfg = resolve_config(f);
  require_file(f.input, "input image");
  OutputGuard guard;
  guard.add(f.out);
  write_png(f.out, preprocess(read_png(f.input), cfg.preprocess));
  guard.commit();
  return 0;
}

int cmd_edges(const Flags& f) {
  require(f.input, "--input");
  require(f.out, "--out");
  const RunConfig cfg = resolve_config(f);
  require_file(f.input, "input image");
  Image img = read_png(f.input);
  if (!cfg.edge_on_raw) img = preprocess(img, cfg.preprocess);
  OutputGuard guard;
  guard.add(f.out);
  write_png(f.out, detect_edges(img, cfg.edge).strength);
  guard.commit();
  return 0;
}

int cmd_stylize(const Flags& f) {
  require(f.input, "--input");
  require(f.out, "--out");
  const RunConfig cfg = resolve_config(f);
  require_file(f.input, "input image");
  const StyleNetWeights weights = load_weights(cfg);
  const Image style = load_style(cfg);
  const Image content = read_png(f.input);
  const EdgeMap edge = detect_edges(content, cfg.edge);
  OutputGuard guard;
  guard.add(f.out);
  write_png(f.out, clamp01(stylize(content, style, edge, weights, cfg.stylize)));
  guard.commit();
  return 0;
}

int cmd_segment(const Flags& f) {
  require(f.input, "--input");
  require(f.out, "--out");
  const RunConfig cfg = resolve_config(f);
  require_file(f.input, "input image");
  if (!f.gt.empty()) require_file(f.gt, "ground truth");
  if (!f.overlay.empty() && f.gt.empty()) throw Error("--overlay requires --gt");
  const StyleNetWeights weights = load_weights(cfg);
  const Image style = load_style(cfg);
  const SegmentResult result = segment(read_png(f.input), style, weights, cfg);

  OutputGuard guard;
  guard.add(f.out);
  write_mask_png(f.out, result.mask);
  if (!f.gt.empty()) {
    const BinaryMask gt = read_mask_png(f.gt);
    if (!f.overlay.empty()) {
      guard.add(f.overlay);
      write_png(f.overlay, overlay(result.mask, gt));
    }
    const ConfusionCounts c = confusion(result.mask, gt);
    const SegMetrics m = compute_metrics(c);
    std::printf("tp=%llu fp=%llu tn=%llu fn=%llu\n", static_cast<unsigned long long>(c.tp),
                static_cast<unsigned long long>(c.fp), static_cast<unsigned long long>(c.tn),
                static_cast<unsigned long long>(c.fn));
    std::printf("accuracy=%.6f sensitivity=%.6f specificity=%.6f precision=%.6f dice=%.6f\n",
                m.accuracy, m.sensitivity, m.specificity, m.precision, m.dice);
  }
  guard.commit();
  return 0;
}

int cmd_train(const Flags& f) {
  require(f.input_dir, "--input-dir");
  require(f.style, "--style");
  require(f.out, "--out");
  const RunConfig cfg = resolve_config(f);
  const fs::path out = f.out;
  const bool existed = fs::exists(out);
  OutputGuard guard;
  if (!existed) guard.add(out);
  const Checkpoint ckpt = train(f.input_dir, f.style, cfg.train, out);
  std::printf("trained %d iterations; checkpoint written to %s\n", ckpt.iteration,
              (out / "final").c_str());
  guard.commit();
  return 0;
}

int cmd_eval(const Flags& f) {
  require(f.input_dir, "--input-dir");
  require(f.gt, "--gt");
  const EvalReport report = evaluate_batch(f.input_dir, f.gt);
  const std::string csv = report_csv(report);
  const std::string md = report_markdown(report, kMethod);
  OutputGuard guard;
  if (!f.report.empty()) {
    const fs::path csv_path = f.report;
    fs::path md_path = csv_path;
    md_path.replace_extension(".md");
    guard.add(csv_path);
    guard.add(md_path);
    write_text(csv_path, csv);
    write_text(md_path, md);
  } else {
    std::cout << csv << "\n";
  }
  std::cout << md;
  guard.commit();
  return 0;
}

int cmd_bench(const Flags& f) {
  require(f.input_dir, "--input-dir");
  const RunConfig cfg = resolve_config(f);
  const StyleNetWeights weights = load_weights(cfg);
  const Image style = load_style(cfg);
  const int repeat = f.repeat.value_or(10);
  const auto rows = bench(f.input_dir, style, weights, cfg, repeat);
  OutputGuard guard;
  const std::string csv = bench_csv(rows);
  if (!f.report.empty()) {
    guard.add(f.report);
    write_text(f.report, csv);
  }
  std::cout << csv << "\n" << bench_table(rows, kMethod);
  guard.commit();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge-AdaIN vessel segmentation: style-transfer segmentation of angiograms"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON run configuration");
  };
  auto add_edge = [&](CLI::App* sub) {
    sub->add_option("--edge-provider", f.edge_provider, "fallback or file")
        ->check(CLI::IsMember({"fallback", "file"}));
    sub->add_option("--edge-file", f.edge_file, "Precomputed edge map (PNG, 255 = edge)");
    sub->add_option("--edge", f.edge, "Precomputed edge map; implies --edge-provider file");
    sub->add_flag("--edge-on-raw", f.edge_on_raw, "Detect edges on the raw input");
  };
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--weights", f.weights, "Checkpoint directory (default $EDGEADAIN_WEIGHTS)");
    sub->add_option("--style", f.style, "Style image (PNG)");
    sub->add_option("--edge-weight", f.edge_weight, "Weight of the encoded edge map in the fusion");
  };

  auto* pre = app.add_subcommand("preprocess", "Denoise and top-hat enhance an image");
  pre->add_option("--input", f.input, "Input PNG");
  pre->add_option("--out", f.out, "Output PNG");
  add_common(pre);

  auto* edges = app.add_subcommand("edges", "Compute the edge map of an image");
  edges->add_option("--input", f.input, "Input PNG");
  edges->add_option("--out", f.out, "Output PNG");
  add_edge(edges);
  add_common(edges);

  auto* sty = app.add_subcommand("stylize", "Run the style-transfer network on one image");
  sty->add_option("--input", f.input, "Content PNG");
  sty->add_option("--out", f.out, "Stylized PNG");
  add_model(sty);
  add_edge(sty);
  add_common(sty);

  auto* seg = app.add_subcommand("segment", "Segment vessels of one image");
  seg->add_option("--input", f.input, "Input angiogram PNG");
  seg->add_option("--out", f.out, "Output mask PNG (255 = vessel)");
  seg->add_option("--gt", f.gt, "Ground-truth mask; prints metrics");
  seg->add_option("--overlay", f.overlay, "Overlay PNG (prediction green over ground truth white)");
  add_model(seg);
  add_edge(seg);
  add_common(seg);

  auto* tr = app.add_subcommand("train", "Train the decoder and attention module");
  tr->add_option("--input-dir", f.input_dir, "Content image directory");
  tr->add_option("--style", f.style, "Style image directory");
  tr->add_option("--out", f.out, "Output directory");
  tr->add_option("--seed", f.seed, "Random seed");
  tr->add_option("--iters", f.iters, "Iterations");
  tr->add_option("--lr", f.lr, "Learning rate");
  tr->add_option("--lr-decay", f.lr_decay, "Learning-rate decay coefficient");
  tr->add_option("--alpha", f.alpha, "Content loss weight");
  tr->add_option("--beta", f.beta, "Style loss weight");
  tr->add_option("--gamma", f.gamma, "Edge loss weight");
  tr->add_option("--crop", f.crop, "Random crop size");
  tr->add_option("--batch", f.batch, "Batch size");
  tr->add_option("--checkpoint-every", f.checkpoint_every, "Checkpoint interval (0 = final only)");
  tr->add_option("--encoder", f.encoder, "Encoder variant")->check(CLI::IsMember({"tiny", "vgg19"}));
  tr->add_option("--encoder-weights", f.encoder_weights, "Encoder weight container");
  tr->add_option("--edge-weight", f.edge_weight, "Weight of the encoded edge map in the fusion");
  tr->add_option("--edge-provider", f.edge_provider, "fallback or file")
      ->check(CLI::IsMember({"fallback", "file"}));
  tr->add_option("--edge-file", f.edge_file, "Directory of edge maps named like the content images");
  add_common(tr);

  auto* ev = app.add_subcommand("eval", "Score predicted masks against ground truth");
  ev->add_option("--input-dir", f.input_dir, "Predicted mask directory");
  ev->add_option("--gt", f.gt, "Ground-truth mask directory");
  ev->add_option("--report", f.report, "CSV report path (a .md summary is written next to it)");

  auto* be = app.add_subcommand("bench", "Time the segmentation pipeline per image");
  be->add_option("--input-dir", f.input_dir, "Input image directory");
  be->add_option("--repeat", f.repeat, "Timed runs per image")->check(CLI::PositiveNumber);
  be->add_option("--report", f.report, "CSV report path");
  add_model(be);
  add_edge(be);
  add_common(be);

  CLI11_PARSE(app, argc, argv);

  try {
    if (pre->parsed()) return cmd_preprocess(f);
    if (edges->parsed()) return cmd_edges(f);
    if (sty->parsed()) return cmd_stylize(f);
    if (seg->parsed()) return cmd_segment(f);
    if (tr->parsed()) return cmd_train(f);
    if (ev->parsed()) return cmd_eval(f);
    if (be->parsed()) return cmd_bench(f);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}
