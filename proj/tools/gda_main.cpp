// gda — geometry-disentangled point-cloud analysis, one binary with
// subcommands. Exit codes are stable API: 0 success, 2 I/O, 3 config,
// 4 numeric, 5 training divergence (1 = a check command reported FAIL).

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gda/gdm.hpp"
#include "gda/graph.hpp"
#include "gda/model.hpp"
#include "gda/parallel.hpp"
#include "gda/pointcloud.hpp"
#include "gda/sgcam.hpp"
#include "gda/training.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;
using namespace gda;

// ---------------------------------------------------------------- plumbing

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

/// Every file-producing command drops a run.json next to its outputs with
/// the complete effective flag set, so the run can be repeated from the
/// manifest alone.
void write_manifest(const std::string& dir_or_prefix, const std::string& command, json flags) {
  json m;
  m["command"] = command;
  m["flags"] = std::move(flags);
  m["format_version"] = 1;
  std::string path = dir_or_prefix;
  if (!path.empty() && path.back() != '/') path += '.';
  write_text(path + "run.json", m.dump(2) + "\n");
}

std::string dirname_of(const std::string& path) {
  auto pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string() : path.substr(0, pos + 1);
}

ShapeFamily family_from_string(const std::string& s) {
  if (s == "sphere") return ShapeFamily::Sphere;
  if (s == "cube") return ShapeFamily::Cube;
  if (s == "cylinder") return ShapeFamily::CylinderWithCaps;
  if (s == "l-bracket") return ShapeFamily::LBracket;
  if (s == "plane-crease") return ShapeFamily::PlaneWithCrease;
  if (s == "chair") return ShapeFamily::ChairLike;
  throw ConfigError("unknown shape family '" + s + "'");
}

model::ModelConfig load_model_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return model::config_from_json(text);
}

/// --format beats the file extension; an empty flag means "look at the name".
CloudFormat resolve_format(const std::string& flag, const std::string& path) {
  if (!flag.empty()) return format_from_string(flag);
  const auto dot = path.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "ply") return CloudFormat::Ply;
  if (ext == "off") return CloudFormat::Off;
  return CloudFormat::Xyz;
}

void write_xyz(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  char buf[64];
  for (long i = 0; i < cloud.n_points(); ++i) {
    for (long j = 0; j < 3; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", cloud.points(i, j));
      out << (j ? " " : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------- commands

struct DisentangleOpts {
  std::string input, format, out_prefix = "split";
  long off_samples = 1024;
  int k_graph = 20;
  long m = 0;  // 0 -> N/4
  std::string space = "coords";
  uint64_t seed = 1;
};

int cmd_disentangle(const DisentangleOpts& o) {
  LoadOptions lo;
  lo.off_samples = o.off_samples;
  lo.seed = o.seed;
  PointCloud cloud = load_cloud(o.input, resolve_format(o.format, o.input), lo);
  const long n = cloud.n_points();
  const long m = o.m > 0 ? o.m : std::max<long>(1, n / 4);
  if (m > n / 2)
    throw ConfigError("selection overlap: m = " + std::to_string(m) +
                      " exceeds N/2 = " + std::to_string(n / 2) +
                      "; the sharp and gentle components would share points");

  GraphConfig gc;
  gc.k_graph = o.k_graph;
  Tensor<double> coords(n, 3);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < 3; ++j) coords(i, j) = cloud.points(i, j);
  const NeighborGraph g = build_adjacency(coords, gc);
  const VariationSplit split = disentangle(g, coords, m);

  auto select = [&](const std::vector<int>& idx) {
    PointCloud part;
    part.points = Tensor<double>(static_cast<long>(idx.size()), 3);
    for (size_t i = 0; i < idx.size(); ++i)
      for (long j = 0; j < 3; ++j) part.points(static_cast<long>(i), j) = coords(idx[i], j);
    return part;
  };
  PointCloud all;
  all.points = coords;
  export_ply(select(split.sharp_idx), nullptr, o.out_prefix + ".sharp.ply");
  export_ply(select(split.gentle_idx), nullptr, o.out_prefix + ".gentle.ply");
  export_ply(all, &split.scores, o.out_prefix + ".scores.ply");

  json side;
  side["n_points"] = n;
  side["m"] = m;
  side["k_graph"] = o.k_graph;
  side["space"] = o.space;
  side["sharp_idx"] = split.sharp_idx;
  side["gentle_idx"] = split.gentle_idx;
  write_text(o.out_prefix + ".split.json", side.dump(2) + "\n");

  write_manifest(o.out_prefix, "disentangle",
                 {{"input", o.input},
                  {"format", o.format},
                  {"off_samples", o.off_samples},
                  {"k_graph", o.k_graph},
                  {"m", m},
                  {"space", o.space},
                  {"seed", o.seed},
                  {"out_prefix", o.out_prefix}});
  std::printf("wrote %s.{sharp,gentle,scores}.ply + split.json  (N=%ld, m=%ld)\n",
              o.out_prefix.c_str(), n, m);
  return 0;
}

struct SpectralOpts {
  long n = 32;
  int k_graph = 8;
  int trials = 10;
  uint64_t seed = 1;
  std::string out;
};

int cmd_spectral_check(const SpectralOpts& o) {
  constexpr double kTol = 1e-8;
  GraphConfig gc;
  gc.k_graph = o.k_graph;
  Rng rng(o.seed);
  bool all_pass = true;
  json report = json::array();
  for (int t = 0; t < o.trials; ++t) {
    Rng r = rng.fork(uint64_t(t) + 1);
    Tensor<double> pts(o.n, 3);
    for (auto& v : pts.data) v = r.normal();
    const NeighborGraph g = build_adjacency(pts, gc);
    const SpectralReport rep = spectral_check(g);
    double lo = rep.eigenvalues_A.front(), hi = rep.eigenvalues_A.front();
    for (double ev : rep.eigenvalues_A) {
      lo = std::min(lo, ev);
      hi = std::max(hi, ev);
    }
    const bool in_range = lo >= -kTol && hi <= 1.0 + kTol;
    const bool pass = rep.max_response_error <= kTol && in_range;
    all_pass = all_pass && pass;
    std::printf("trial %d: max_response_error=%.3e  spectrum=[%.6f, %.6f]  %s\n", t,
                rep.max_response_error, lo, hi, pass ? "PASS" : "FAIL");
    report.push_back({{"trial", t},
                      {"max_response_error", rep.max_response_error},
                      {"spectrum_min", lo},
                      {"spectrum_max", hi},
                      {"pass", pass}});
  }
  std::printf("%s\n", all_pass ? "PASS" : "FAIL");
  if (!o.out.empty()) {
    write_text(o.out, report.dump(2) + "\n");
    write_manifest(o.out, "spectral-check",
                   {{"n", o.n},
                    {"k_graph", o.k_graph},
                    {"trials", o.trials},
                    {"seed", o.seed},
                    {"out", o.out}});
  }
  return all_pass ? 0 : 1;
}

struct DataOpts {
  long per_class = 200;
  long count = 200;  // segmentation shapes
  long n_points = 512;
  uint64_t data_seed = 101;
};

train::Dataset build_dataset(const model::ModelConfig& cfg, const DataOpts& d) {
  return cfg.task == model::Task::Classification
             ? train::make_classification_dataset(d.per_class, d.n_points, d.data_seed)
             : train::make_segmentation_dataset(d.count, d.n_points, d.data_seed);
}

struct TrainOpts {
  std::string task = "classification";
  std::string config;  // optional model-config JSON
  DataOpts data;
  train::TrainConfig tc;
  std::string optimizer = "adam", schedule = "cosine";
  uint64_t seed = 1;
  std::string out = "model.ckpt";
  std::string curve;  // default: <out dir>curve.csv
};

model::ModelConfig resolve_model_config(const std::string& config_path, const std::string& task,
                                        uint64_t seed) {
  model::ModelConfig cfg;
  if (!config_path.empty()) cfg = load_model_config(config_path);
  cfg.task = task == "segmentation" ? model::Task::Segmentation : model::Task::Classification;
  if (cfg.task == model::Task::Segmentation && config_path.empty()) cfg.n_classes = 2;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

train::TrainConfig resolve_train_config(const TrainOpts& o) {
  train::TrainConfig tc = o.tc;
  tc.optimizer =
      o.optimizer == "sgd" ? train::Optimizer::SgdMomentum : train::Optimizer::Adam;
  tc.lr_schedule =
      o.schedule == "constant" ? train::LrSchedule::Constant : train::LrSchedule::Cosine;
  tc.seed = o.seed;
  tc.validate();
  return tc;
}

int cmd_train(const TrainOpts& o) {
  if (o.optimizer != "adam" && o.optimizer != "sgd")
    throw ConfigError("unknown optimizer '" + o.optimizer + "'");
  if (o.schedule != "constant" && o.schedule != "cosine")
    throw ConfigError("unknown schedule '" + o.schedule + "'");
  const model::ModelConfig cfg = resolve_model_config(o.config, o.task, o.seed);
  const train::TrainConfig tc = resolve_train_config(o);
  const train::Dataset ds = build_dataset(cfg, o.data);

  auto params = model::make_params<float>(cfg);
  const auto curve = train::train(cfg, params, ds, tc);
  model::save_checkpoint(params, cfg, o.out);

  const std::string curve_path = o.curve.empty() ? dirname_of(o.out) + "curve.csv" : o.curve;
  std::string csv = "epoch,loss,acc\n";
  char buf[96];
  for (const auto& e : curve) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", e.epoch, e.loss, e.acc);
    csv += buf;
  }
  write_text(curve_path, csv);

  write_manifest(o.out, "train",
                 {{"task", o.task},
                  {"config", o.config},
                  {"model_config", json::parse(model::to_json(cfg))},
                  {"per_class", o.data.per_class},
                  {"count", o.data.count},
                  {"n_points", o.data.n_points},
                  {"data_seed", o.data.data_seed},
                  {"optimizer", o.optimizer},
                  {"schedule", o.schedule},
                  {"lr", o.tc.lr},
                  {"epochs", o.tc.epochs},
                  {"batch_size", o.tc.batch_size},
                  {"weight_decay", o.tc.weight_decay},
                  {"early_stop_train_acc", o.tc.early_stop_train_acc},
                  {"seed", o.seed},
                  {"out", o.out}});
  const auto& last = curve.back();
  std::printf("trained %zu epoch(s); final loss %.4f acc %.4f; checkpoint %s\n", curve.size(),
              last.loss, last.acc, o.out.c_str());
  return 0;
}

struct EvalOpts {
  std::string checkpoint;
  DataOpts data{50, 50, 512, 202};
  int votes = 1;
  std::vector<double> scale{1.0, 1.0};
  uint64_t seed = 1;
  std::string out;
};

void print_report(const train::EvalReport& rep, const train::Dataset& ds, bool seg) {
  std::printf("overall accuracy: %.4f\n", rep.overall_accuracy);
  for (int c = 0; c < ds.n_classes; ++c)
    std::printf("  class %d (%s): %.4f\n", c,
                c < int(ds.class_names.size()) ? ds.class_names[c].c_str() : "?",
                rep.per_class_accuracy[c]);
  if (seg)
    std::printf("instance mIoU: %.4f  class mIoU: %.4f\n", rep.instance_miou, rep.class_miou);
}

json report_json(const train::EvalReport& rep, bool seg) {
  json j;
  j["overall_accuracy"] = rep.overall_accuracy;
  j["per_class_accuracy"] = rep.per_class_accuracy;
  j["confusion"] = rep.confusion;
  if (seg) {
    j["instance_miou"] = rep.instance_miou;
    j["class_miou"] = rep.class_miou;
  }
  return j;
}

int cmd_eval(const EvalOpts& o) {
  if (o.scale.size() != 2 || o.scale[0] > o.scale[1])
    throw ConfigError("--scale wants LO HI with LO <= HI");
  auto [params, cfg] = model::load_checkpoint<float>(o.checkpoint);
  const train::Dataset ds = build_dataset(cfg, o.data);
  const train::EvalReport rep =
      train::evaluate(cfg, params, ds, o.votes, o.scale[0], o.scale[1], o.seed);
  const bool seg = cfg.task == model::Task::Segmentation;
  print_report(rep, ds, seg);
  if (!o.out.empty()) {
    write_text(o.out, report_json(rep, seg).dump(2) + "\n");
    write_manifest(o.out, "eval",
                   {{"checkpoint", o.checkpoint},
                    {"per_class", o.data.per_class},
                    {"count", o.data.count},
                    {"n_points", o.data.n_points},
                    {"data_seed", o.data.data_seed},
                    {"votes", o.votes},
                    {"scale", o.scale},
                    {"seed", o.seed},
                    {"out", o.out}});
  }
  return 0;
}

struct AblateOpts {
  DataOpts data{64, 64, 256, 101};
  uint64_t test_data_seed = 202;
  long test_per_class = 24;
  train::TrainConfig tc;
  std::vector<uint64_t> seeds{1, 2, 3};
  std::string rows = "standard";
  std::string out = "ablation.csv";
  uint64_t seed = 1;
};

int cmd_ablate(const AblateOpts& o) {
  model::ModelConfig base;
  base.seed = o.seed;
  std::vector<train::AblationToggles> rows;
  if (o.rows == "standard") rows = train::standard_ablation_rows();
  else if (o.rows == "minimal")
    rows = {{true, false, false, false, false}, {true, false, true, true, false}};
  else
    throw ConfigError("unknown row set '" + o.rows + "' (standard|minimal)");

  const auto tr = train::make_classification_dataset(o.data.per_class, o.data.n_points,
                                                     o.data.data_seed);
  const auto te =
      train::make_classification_dataset(o.test_per_class, o.data.n_points, o.test_data_seed);
  train::TrainConfig tc = o.tc;
  tc.validate();
  const auto table = train::run_ablation(base, tr, te, tc, rows, o.seeds);

  std::string csv = "name,knn,self,sharp,gentle,voting,mean_accuracy";
  for (size_t s = 0; s < o.seeds.size(); ++s) csv += ",seed" + std::to_string(o.seeds[s]);
  csv += "\n";
  char buf[64];
  for (const auto& row : table) {
    csv += row.name;
    const auto& t = row.toggles;
    for (bool b : {t.use_knn_local, t.use_self_attention, t.use_sharp, t.use_gentle,
                   t.use_voting})
      csv += b ? ",1" : ",0";
    std::snprintf(buf, sizeof buf, ",%.17g", row.mean_accuracy);
    csv += buf;
    for (double a : row.seed_accuracies) {
      std::snprintf(buf, sizeof buf, ",%.17g", a);
      csv += buf;
    }
    csv += "\n";
    std::printf("%-24s mean acc %.4f\n", row.name.c_str(), row.mean_accuracy);
  }
  write_text(o.out, csv);
  write_manifest(o.out, "ablate",
                 {{"per_class", o.data.per_class},
                  {"test_per_class", o.test_per_class},
                  {"n_points", o.data.n_points},
                  {"data_seed", o.data.data_seed},
                  {"test_data_seed", o.test_data_seed},
                  {"rows", o.rows},
                  {"seeds", o.seeds},
                  {"epochs", o.tc.epochs},
                  {"batch_size", o.tc.batch_size},
                  {"lr", o.tc.lr},
                  {"early_stop_train_acc", o.tc.early_stop_train_acc},
                  {"seed", o.seed},
                  {"out", o.out}});
  return 0;
}

struct RobustOpts {
  std::string checkpoint;
  std::string mode = "dropout";
  std::vector<double> grid;
  DataOpts data{25, 25, 512, 202};
  uint64_t seed = 1;
  std::string out = "robustness.csv";
};

int cmd_robustness(const RobustOpts& o) {
  train::RobustnessMode mode;
  if (o.mode == "dropout") mode = train::RobustnessMode::Dropout;
  else if (o.mode == "rotate") mode = train::RobustnessMode::Rotate;
  else if (o.mode == "noise") mode = train::RobustnessMode::Noise;
  else
    throw ConfigError("unknown robustness mode '" + o.mode + "' (dropout|rotate|noise)");
  if (o.grid.empty()) throw ConfigError("--grid wants at least one value");

  auto [params, cfg] = model::load_checkpoint<float>(o.checkpoint);
  const train::Dataset ds = build_dataset(cfg, o.data);
  const auto curve = train::run_robustness(cfg, params, ds, mode, o.grid, o.seed);

  std::string csv = "grid_value,accuracy\n";
  char buf[64];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.grid_value, p.accuracy);
    csv += buf;
    std::printf("%s %g -> accuracy %.4f\n", o.mode.c_str(), p.grid_value, p.accuracy);
  }
  write_text(o.out, csv);
  write_manifest(o.out, "robustness",
                 {{"checkpoint", o.checkpoint},
                  {"mode", o.mode},
                  {"grid", o.grid},
                  {"per_class", o.data.per_class},
                  {"count", o.data.count},
                  {"n_points", o.data.n_points},
                  {"data_seed", o.data.data_seed},
                  {"seed", o.seed},
                  {"out", o.out}});
  return 0;
}

struct AttentionOpts {
  std::string input, format;
  std::string family = "plane-crease";
  long n_points = 256;
  int k_graph = 20;
  long m = 0;
  long anchor = 0;
  int d_k = 64;
  uint64_t seed = 1;
  std::string out = "attention.csv";
};

int cmd_attention_export(const AttentionOpts& o) {
  PointCloud cloud;
  if (!o.input.empty()) {
    LoadOptions lo;
    lo.seed = o.seed;
    cloud = load_cloud(o.input, resolve_format(o.format, o.input), lo);
  } else {
    SyntheticSpec spec;
    spec.family = family_from_string(o.family);
    spec.n_points = o.n_points;
    spec.seed = o.seed;
    cloud = generate_synthetic(spec);
  }
  const long n = cloud.n_points();
  const long m = o.m > 0 ? o.m : std::max<long>(1, n / 4);
  Tensor<double> coords(n, 3);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < 3; ++j) coords(i, j) = cloud.points(i, j);

  GraphConfig gc;
  gc.k_graph = o.k_graph;
  const NeighborGraph g = build_adjacency(coords, gc);
  const VariationSplit split = disentangle(g, coords, m);

  // A seeded, untrained module: the export inspects attention geometry,
  // not learned weights.
  sgcam::SgcamConfig sc;
  sc.d_k = o.d_k;
  ad::ParamStore<double> store;
  Rng rng(o.seed);
  sgcam::make_params(store, "sgcam", 3, sc, rng);
  const sgcam::AttentionRecord rec =
      sgcam::record_attention(store, "sgcam", sc, coords, split, coords);
  const auto [ws, wg] = sgcam::export_attention(rec, o.anchor);

  std::string csv = "component,slot,point_index,weight\n";
  char buf[96];
  for (size_t j = 0; j < ws.size(); ++j) {
    std::snprintf(buf, sizeof buf, "sharp,%zu,%d,%.17g\n", j, split.sharp_idx[j], ws[j]);
    csv += buf;
  }
  for (size_t j = 0; j < wg.size(); ++j) {
    std::snprintf(buf, sizeof buf, "gentle,%zu,%d,%.17g\n", j, split.gentle_idx[j], wg[j]);
    csv += buf;
  }
  write_text(o.out, csv);
  write_manifest(o.out, "attention-export",
                 {{"input", o.input},
                  {"format", o.format},
                  {"family", o.family},
                  {"n_points", o.n_points},
                  {"k_graph", o.k_graph},
                  {"m", m},
                  {"anchor", o.anchor},
                  {"d_k", o.d_k},
                  {"seed", o.seed},
                  {"out", o.out}});
  std::printf("wrote %s (anchor %ld, %ld sharp + %ld gentle weights)\n", o.out.c_str(),
              o.anchor, long(ws.size()), long(wg.size()));
  return 0;
}

struct ParamsOpts {
  std::string config;
  std::string task = "classification";
  uint64_t seed = 1;
  std::string out;
};

int cmd_params(const ParamsOpts& o) {
  const model::ModelConfig cfg = resolve_model_config(o.config, o.task, o.seed);
  const auto params = model::make_params<float>(cfg);
  const long count = model::count_params(params);
  std::printf("parameters: %ld\n", count);
  if (!o.out.empty()) {
    json j;
    j["parameters"] = count;
    j["model_config"] = json::parse(model::to_json(cfg));
    write_text(o.out, j.dump(2) + "\n");
    write_manifest(o.out, "params",
                   {{"config", o.config}, {"task", o.task}, {"seed", o.seed}, {"out", o.out}});
  }
  return 0;
}

struct GenDataOpts {
  std::string family = "sphere";
  long n_points = 512;
  bool part_labels = false;
  bool normalize = false;
  uint64_t seed = 1;
  std::string out = "cloud.ply";
};

int cmd_gen_data(const GenDataOpts& o) {
  SyntheticSpec spec;
  spec.family = family_from_string(o.family);
  spec.n_points = o.n_points;
  spec.seed = o.seed;
  spec.part_labels = o.part_labels;
  PointCloud cloud = generate_synthetic(spec);
  if (o.normalize) cloud = normalize_unit_sphere(cloud);

  const bool xyz = o.out.size() >= 4 && o.out.substr(o.out.size() - 4) == ".xyz";
  if (xyz) write_xyz(cloud, o.out);
  else export_ply(cloud, nullptr, o.out);
  write_manifest(o.out, "gen-data",
                 {{"family", o.family},
                  {"n_points", o.n_points},
                  {"part_labels", o.part_labels},
                  {"normalize", o.normalize},
                  {"seed", o.seed},
                  {"out", o.out}});
  std::printf("wrote %s (%ld points)\n", o.out.c_str(), cloud.n_points());
  return 0;
}

// ---------------------------------------------------------------- wiring

void add_data_flags(CLI::App* c, DataOpts& d, bool classification_only = false) {
  c->add_option("--per-class", d.per_class, "classification samples per class");
  if (!classification_only)
    c->add_option("--count", d.count, "segmentation shape count");
  c->add_option("--n-points", d.n_points, "points per cloud");
  c->add_option("--data-seed", d.data_seed, "dataset generation seed");
}

void add_train_flags(CLI::App* c, train::TrainConfig& tc) {
  c->add_option("--epochs", tc.epochs, "training epochs");
  c->add_option("--batch-size", tc.batch_size, "samples per optimizer step");
  c->add_option("--lr", tc.lr, "learning rate");
  c->add_option("--momentum", tc.momentum, "sgd momentum");
  c->add_option("--weight-decay", tc.weight_decay, "L2 coefficient");
  c->add_option("--early-stop-acc", tc.early_stop_train_acc,
                "stop when train accuracy reaches this (0 = never)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geometry-disentangled point-cloud analysis"};
  app.require_subcommand(1);

  int threads = 0;
  bool deterministic = false;
  app.add_option("--threads", threads, "worker cap for parallel kernels (env: GDA_THREADS)");
  app.add_flag("--deterministic", deterministic,
               "single-ordered execution (kernels are order-fixed at any width; this also "
               "pins the worker count to 1)");

  DisentangleOpts dis;
  auto* c_dis = app.add_subcommand("disentangle",
                                   "split a cloud into sharp/gentle variation components");
  c_dis->add_option("--input", dis.input, "point-cloud file")->required();
  c_dis->add_option("--format", dis.format, "xyz|ply|off (default: by extension)");
  c_dis->add_option("--off-samples", dis.off_samples, "surface samples for OFF input");
  c_dis->add_option("--k-graph", dis.k_graph, "neighbors per point");
  c_dis->add_option("--m", dis.m, "selection count (0 = N/4)");
  c_dis->add_option("--space", dis.space, "feature space for the split")
      ->check(CLI::IsMember({"coords"}));
  c_dis->add_option("--seed", dis.seed, "seed");
  c_dis->add_option("--out-prefix,--out", dis.out_prefix, "output prefix");

  SpectralOpts spec;
  auto* c_spec = app.add_subcommand("spectral-check",
                                    "verify the high-pass frequency-response identity");
  c_spec->add_option("--n", spec.n, "points per trial graph");
  c_spec->add_option("--k-graph", spec.k_graph, "neighbors per point");
  c_spec->add_option("--trials", spec.trials, "number of random graphs");
  c_spec->add_option("--seed", spec.seed, "seed");
  c_spec->add_option("--out", spec.out, "JSON report path");

  TrainOpts tr;
  auto* c_tr = app.add_subcommand("train", "train a model on the synthetic datasets");
  c_tr->add_option("--task", tr.task, "classification|segmentation")
      ->check(CLI::IsMember({"classification", "segmentation"}));
  c_tr->add_option("--config", tr.config, "model-config JSON path");
  add_data_flags(c_tr, tr.data);
  add_train_flags(c_tr, tr.tc);
  c_tr->add_option("--optimizer", tr.optimizer, "adam|sgd");
  c_tr->add_option("--schedule", tr.schedule, "constant|cosine");
  c_tr->add_option("--seed", tr.seed, "model init + training seed");
  c_tr->add_option("--out", tr.out, "checkpoint path");
  c_tr->add_option("--curve", tr.curve, "loss-curve CSV path");

  EvalOpts ev;
  auto* c_ev = app.add_subcommand("eval", "evaluate a checkpoint, optionally with voting");
  c_ev->add_option("--checkpoint", ev.checkpoint, "checkpoint path")->required();
  add_data_flags(c_ev, ev.data);
  c_ev->add_option("--votes", ev.votes, "forward passes to average");
  c_ev->add_option("--scale", ev.scale, "voting rescale range LO HI")->expected(2);
  c_ev->add_option("--seed", ev.seed, "voting seed");
  c_ev->add_option("--out", ev.out, "JSON report path");

  AblateOpts ab;
  auto* c_ab = app.add_subcommand("ablate", "train/evaluate one model per component toggle row");
  add_data_flags(c_ab, ab.data, /*classification_only=*/true);
  c_ab->add_option("--test-per-class", ab.test_per_class, "test samples per class");
  c_ab->add_option("--test-data-seed", ab.test_data_seed, "test-set seed");
  add_train_flags(c_ab, ab.tc);
  c_ab->add_option("--rows", ab.rows, "standard|minimal");
  c_ab->add_option("--seeds", ab.seeds, "training seeds (mean over them)");
  c_ab->add_option("--seed", ab.seed, "base model seed");
  c_ab->add_option("--out", ab.out, "ablation CSV path");

  RobustOpts rb;
  auto* c_rb = app.add_subcommand("robustness", "accuracy under dropout/rotation/noise sweeps");
  c_rb->add_option("--checkpoint", rb.checkpoint, "checkpoint path")->required();
  c_rb->add_option("--mode", rb.mode, "dropout|rotate|noise");
  c_rb->add_option("--grid", rb.grid, "sweep values")->required();
  add_data_flags(c_rb, rb.data);
  c_rb->add_option("--seed", rb.seed, "seed");
  c_rb->add_option("--out", rb.out, "CSV path");

  AttentionOpts at;
  auto* c_at = app.add_subcommand("attention-export",
                                  "dump one anchor's attention over the two components");
  c_at->add_option("--input", at.input, "point-cloud file (default: synthetic)");
  c_at->add_option("--format", at.format, "xyz|ply|off (default: by extension)");
  c_at->add_option("--family", at.family, "synthetic family when no input");
  c_at->add_option("--n-points", at.n_points, "synthetic point count");
  c_at->add_option("--k-graph", at.k_graph, "neighbors per point");
  c_at->add_option("--m", at.m, "selection count (0 = N/4)");
  c_at->add_option("--anchor", at.anchor, "point whose attention row is exported");
  c_at->add_option("--d-k", at.d_k, "attention key width");
  c_at->add_option("--seed", at.seed, "module init seed");
  c_at->add_option("--out", at.out, "CSV path");

  ParamsOpts pa;
  auto* c_pa = app.add_subcommand("params", "print the model's parameter count");
  c_pa->add_option("--config", pa.config, "model-config JSON path");
  c_pa->add_option("--task", pa.task, "classification|segmentation");
  c_pa->add_option("--seed", pa.seed, "seed");
  c_pa->add_option("--out", pa.out, "JSON report path");

  GenDataOpts gd;
  auto* c_gd = app.add_subcommand("gen-data", "write a synthetic cloud to PLY or XYZ");
  c_gd->add_option("--family", gd.family,
                   "sphere|cube|cylinder|l-bracket|plane-crease|chair");
  c_gd->add_option("--n-points", gd.n_points, "point count");
  c_gd->add_flag("--part-labels", gd.part_labels, "attach per-point part labels");
  c_gd->add_flag("--normalize", gd.normalize, "normalize to the unit sphere");
  c_gd->add_option("--seed", gd.seed, "seed");
  c_gd->add_option("--out", gd.out, "output file (.ply or .xyz)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Unknown/malformed flags are config violations; --help stays 0.
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  }

  try {
    if (deterministic) gda::par::set_threads(1);
    else if (threads > 0) gda::par::set_threads(threads);

    if (c_dis->parsed()) return cmd_disentangle(dis);
    if (c_spec->parsed()) return cmd_spectral_check(spec);
    if (c_tr->parsed()) return cmd_train(tr);
    if (c_ev->parsed()) return cmd_eval(ev);
    if (c_ab->parsed()) return cmd_ablate(ab);
    if (c_rb->parsed()) return cmd_robustness(rb);
    if (c_at->parsed()) return cmd_attention_export(at);
    if (c_pa->parsed()) return cmd_params(pa);
    if (c_gd->parsed()) return cmd_gen_data(gd);
  } catch (const gda::TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const gda::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const gda::ConfigError& e) {  // includes ShapeError
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const gda::CheckpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const gda::Error& e) {  // IoError, FormatError, InvalidInputError
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
