#include "edgeadain/config.hpp"

#include <fstream>
#include <set>

namespace edgeadain {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& section) {
  if (!j.is_object()) throw Error("config section '" + section + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw Error("unknown config key '" + section + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

const char* provider_name(EdgeProvider p) {
  return p == EdgeProvider::external_file ? "file" : "fallback";
}

EdgeProvider parse_provider(const std::string& s) {
  if (s == "file") return EdgeProvider::external_file;
  if (s == "fallback") return EdgeProvider::classical_fallback;
  throw Error("unknown edge provider: " + s);
}

const char* polarity_name(Polarity p) {
  switch (p) {
    case Polarity::dark_strokes: return "dark-strokes";
    case Polarity::bright_strokes: return "bright-strokes";
    case Polarity::automatic: break;
  }
  return "auto";
}

Polarity parse_polarity(const std::string& s) {
  if (s == "dark-strokes") return Polarity::dark_strokes;
  if (s == "bright-strokes") return Polarity::bright_strokes;
  if (s == "auto") return Polarity::automatic;
  throw Error("unknown polarity: " + s);
}

}  // namespace

json to_json(const TrainConfig& c) {
  return {
      {"iterations", c.iterations},
      {"learning_rate", c.learning_rate},
      {"lr_decay", c.lr_decay},
      {"crop", c.crop},
      {"batch", c.batch},
      {"alpha", c.weights.alpha},
      {"beta", c.weights.beta},
      {"gamma", c.weights.gamma},
      {"seed", c.seed},
      {"checkpoint_every", c.checkpoint_every},
      {"encoder_variant", variant_name(c.encoder_variant)},
      {"encoder_weights", c.encoder_weights.string()},
      {"edge_weight", c.edge_weight},
      {"edge_provider", provider_name(c.edge_provider)},
      {"edge_dir", c.edge_dir.string()},
  };
}

void apply_json(const json& j, TrainConfig& c) {
  check_keys(j,
             {"iterations", "learning_rate", "lr_decay", "crop", "batch", "alpha", "beta", "gamma",
              "seed", "checkpoint_every", "encoder_variant", "encoder_weights", "edge_weight",
              "edge_provider", "edge_dir"},
             "train.");
  read(j, "iterations", c.iterations);
  read(j, "learning_rate", c.learning_rate);
  read(j, "lr_decay", c.lr_decay);
  read(j, "crop", c.crop);
  read(j, "batch", c.batch);
  read(j, "alpha", c.weights.alpha);
  read(j, "beta", c.weights.beta);
  read(j, "gamma", c.weights.gamma);
  read(j, "seed", c.seed);
  read(j, "checkpoint_every", c.checkpoint_every);
  read(j, "edge_weight", c.edge_weight);
  if (j.contains("encoder_variant")) c.encoder_variant = parse_variant(j.at("encoder_variant"));
  if (j.contains("encoder_weights")) c.encoder_weights = j.at("encoder_weights").get<std::string>();
  if (j.contains("edge_provider")) c.edge_provider = parse_provider(j.at("edge_provider"));
  if (j.contains("edge_dir")) c.edge_dir = j.at("edge_dir").get<std::string>();
}

json to_json(const RunConfig& c) {
  const auto& p = c.preprocess;
  return {
      {"preprocess",
       {{"median_radius", p.median_radius},
        {"nlm_patch", p.nlm_patch},
        {"nlm_search", p.nlm_search},
        {"nlm_h", p.nlm_h},
        {"nlm_neighbours", p.nlm_neighbours},
        {"tophat_radii", p.tophat_radii},
        {"stages", {{"median", p.stages.median}, {"nlm", p.stages.nlm}, {"tophat", p.stages.tophat}}}}},
      {"edge",
       {{"provider", provider_name(c.edge.provider)},
        {"file", c.edge.file.string()},
        {"on_raw", c.edge_on_raw}}},
      {"stylize", {{"edge_weight", c.stylize.edge_weight}}},
      {"post",
       {{"threshold_mode", c.post.threshold_mode == ThresholdMode::otsu ? "otsu" : "fixed"},
        {"fixed_threshold", c.post.fixed_threshold},
        {"polarity", polarity_name(c.post.polarity)},
        {"close_radius", c.post.close_radius},
        {"open_radius", c.post.open_radius},
        {"min_component", c.post.min_component}}},
      {"train", to_json(c.train)},
      {"weights", c.weights.string()},
      {"style", c.style.string()},
  };
}

void apply_json(const json& j, RunConfig& c) {
  check_keys(j, {"preprocess", "edge", "stylize", "post", "train", "weights", "style"}, "");
  try {
    if (j.contains("preprocess")) {
      const json& p = j.at("preprocess");
      check_keys(p,
                 {"median_radius", "nlm_patch", "nlm_search", "nlm_h", "nlm_neighbours",
                  "tophat_radii", "stages"},
                 "preprocess.");
      read(p, "median_radius", c.preprocess.median_radius);
      read(p, "nlm_patch", c.preprocess.nlm_patch);
      read(p, "nlm_search", c.preprocess.nlm_search);
      read(p, "nlm_h", c.preprocess.nlm_h);
      read(p, "nlm_neighbours", c.preprocess.nlm_neighbours);
      read(p, "tophat_radii", c.preprocess.tophat_radii);
      if (p.contains("stages")) {
        const json& s = p.at("stages");
        check_keys(s, {"median", "nlm", "tophat"}, "preprocess.stages.");
        read(s, "median", c.preprocess.stages.median);
        read(s, "nlm", c.preprocess.stages.nlm);
        read(s, "tophat", c.preprocess.stages.tophat);
      }
    }
    if (j.contains("edge")) {
      const json& e = j.at("edge");
      check_keys(e, {"provider", "file", "on_raw"}, "edge.");
      if (e.contains("provider")) c.edge.provider = parse_provider(e.at("provider"));
      if (e.contains("file")) c.edge.file = e.at("file").get<std::string>();
      read(e, "on_raw", c.edge_on_raw);
    }
    if (j.contains("stylize")) {
      check_keys(j.at("stylize"), {"edge_weight"}, "stylize.");
      read(j.at("stylize"), "edge_weight", c.stylize.edge_weight);
    }
    if (j.contains("post")) {
      const json& p = j.at("post");
      check_keys(p,
                 {"threshold_mode", "fixed_threshold", "polarity", "close_radius", "open_radius",
                  "min_component"},
                 "post.");
      if (p.contains("threshold_mode")) {
        const auto mode = p.at("threshold_mode").get<std::string>();
        if (mode != "otsu" && mode != "fixed") throw Error("unknown threshold_mode: " + mode);
        c.post.threshold_mode = mode == "otsu" ? ThresholdMode::otsu : ThresholdMode::fixed;
      }
      read(p, "fixed_threshold", c.post.fixed_threshold);
      if (p.contains("polarity")) c.post.polarity = parse_polarity(p.at("polarity"));
      read(p, "close_radius", c.post.close_radius);
      read(p, "open_radius", c.post.open_radius);
      read(p, "min_component", c.post.min_component);
    }
    if (j.contains("train")) apply_json(j.at("train"), c.train);
    if (j.contains("weights")) c.weights = j.at("weights").get<std::string>();
    if (j.contains("style")) c.style = j.at("style").get<std::string>();
  } catch (const json::exception& ex) {
    throw Error(std::string("invalid config value: ") + ex.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& ex) {
    throw Error("cannot parse config " + path.string() + ": " + ex.what());
  }
  RunConfig cfg;
  apply_json(j, cfg);
  return cfg;
}

}  // namespace edgeadain
