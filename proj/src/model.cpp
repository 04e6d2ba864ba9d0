#include "gda/model.hpp"

#include <algorithm>

#include "json.hpp"

namespace gda::model {

namespace {

using nlohmann::json;

std::string task_name(Task t) {
  return t == Task::Classification ? "classification" : "segmentation";
}

Task task_from(const std::string& s) {
  if (s == "classification") return Task::Classification;
  if (s == "segmentation") return Task::Segmentation;
  throw ConfigError("unknown task '" + s + "'");
}

std::string fuse_name(FuseMode m) {
  switch (m) {
    case FuseMode::SharpGentle: return "sharp_gentle";
    case FuseMode::Self: return "self";
    case FuseMode::SharpOnly: return "sharp_only";
    case FuseMode::GentleOnly: return "gentle_only";
    case FuseMode::None: return "none";
  }
  throw ConfigError("unknown fuse mode");
}

FuseMode fuse_from(const std::string& s) {
  if (s == "sharp_gentle") return FuseMode::SharpGentle;
  if (s == "self") return FuseMode::Self;
  if (s == "sharp_only") return FuseMode::SharpOnly;
  if (s == "gentle_only") return FuseMode::GentleOnly;
  if (s == "none") return FuseMode::None;
  throw ConfigError("unknown fuse mode '" + s + "'");
}

std::string kernel_name(Kernel k) {
  return k == Kernel::Gaussian ? "gaussian" : "inverse_distance";
}

Kernel kernel_from(const std::string& s) {
  if (s == "gaussian") return Kernel::Gaussian;
  if (s == "inverse_distance") return Kernel::InverseDistance;
  throw ConfigError("unknown graph kernel '" + s + "'");
}

}  // namespace

void ModelConfig::validate() const {
  if (block_widths.size() != 4)
    throw ConfigError("block_widths must list 4 stage widths, got " +
                      std::to_string(block_widths.size()));
  for (long w : block_widths)
    if (w < 1) throw ConfigError("block widths must be >= 1");
  if (n_classes < 2) throw ConfigError("n_classes must be >= 2");
  if (n_seg_heads < 1) throw ConfigError("n_seg_heads must be >= 1");
  if (k_local < 1) throw ConfigError("k_local must be >= 1");
  if (m < 0) throw ConfigError("m must be >= 0 (0 selects N/4)");
  if (attention.d_k < 1) throw ConfigError("attention d_k must be >= 1");
  if (graph.k_graph < 1) throw ConfigError("k_graph must be >= 1");
}

long ModelConfig::effective_m(long n) const {
  long v = m > 0 ? m : n / 4;
  v = std::min(v, n / 2);
  return std::max<long>(v, 1);
}

std::string to_json(const ModelConfig& cfg) {
  json j;
  j["task"] = task_name(cfg.task);
  j["n_classes"] = cfg.n_classes;
  j["n_seg_heads"] = cfg.n_seg_heads;
  j["k_local"] = cfg.k_local;
  j["m"] = cfg.m;
  j["block_widths"] = cfg.block_widths;
  j["d_k"] = cfg.attention.d_k;
  j["softmax_attention"] = cfg.attention.softmax_rows;
  j["fuse_mode"] = fuse_name(cfg.fuse_mode);
  j["use_knn_local"] = cfg.use_knn_local;
  j["graph"] = {
      {"k_graph", cfg.graph.k_graph},
      {"kernel", kernel_name(cfg.graph.kernel)},
      {"bandwidth",
       cfg.graph.bandwidth_mode == BandwidthMode::Fixed ? "fixed" : "mean_sq_neighbor_dist"},
      {"sigma", cfg.graph.sigma},
      {"epsilon", cfg.graph.epsilon},
  };
  j["seed"] = cfg.seed;
  // nlohmann keeps object keys sorted, so this dump is canonical for a given
  // config — checkpoints of identical configs are byte-identical.
  return j.dump();
}

ModelConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config JSON parse failed: ") + e.what());
  }
  ModelConfig cfg;
  try {
    cfg.task = task_from(j.at("task").get<std::string>());
    cfg.n_classes = j.at("n_classes").get<int>();
    cfg.n_seg_heads = j.at("n_seg_heads").get<int>();
    cfg.k_local = j.at("k_local").get<int>();
    cfg.m = j.at("m").get<long>();
    cfg.block_widths = j.at("block_widths").get<std::vector<long>>();
    cfg.attention.d_k = j.at("d_k").get<long>();
    cfg.attention.softmax_rows = j.at("softmax_attention").get<bool>();
    cfg.fuse_mode = fuse_from(j.at("fuse_mode").get<std::string>());
    cfg.use_knn_local = j.at("use_knn_local").get<bool>();
    const json& g = j.at("graph");
    cfg.graph.k_graph = g.at("k_graph").get<int>();
    cfg.graph.kernel = kernel_from(g.at("kernel").get<std::string>());
    const std::string bw = g.at("bandwidth").get<std::string>();
    if (bw == "fixed") cfg.graph.bandwidth_mode = BandwidthMode::Fixed;
    else if (bw == "mean_sq_neighbor_dist")
      cfg.graph.bandwidth_mode = BandwidthMode::MeanSqNeighborDist;
    else
      throw ConfigError("unknown bandwidth mode '" + bw + "'");
    cfg.graph.sigma = g.at("sigma").get<double>();
    cfg.graph.epsilon = g.at("epsilon").get<double>();
    cfg.seed = j.at("seed").get<uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field missing or mistyped: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace gda::model
