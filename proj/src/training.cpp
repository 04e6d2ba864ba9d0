#include "gda/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace gda::train {

namespace {

constexpr double kPi = 3.14159265358979323846;

int argmax_row(const float* row, long c) {
  int best = 0;
  for (long j = 1; j < c; ++j)
    if (row[j] > row[best]) best = static_cast<int>(j);
  return best;
}

Tensor<float> scaled(const Tensor<float>& pts, float s) {
  if (s == 1.0f) return pts;
  Tensor<float> out = pts;
  for (float& v : out.data) v *= s;
  return out;
}

int forward_logits(ad::Tape<float>& tp, ad::Binding<float>& bind,
                   const model::ModelConfig& cfg, const Sample& smp,
                   const Tensor<float>& pts) {
  if (cfg.task == model::Task::Classification)
    return model::forward_classify(tp, bind, cfg, pts);
  return model::forward_segment(tp, bind, cfg, pts, smp.category);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr >= 0)) throw ConfigError("train: lr must be >= 0");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(momentum >= 0 && momentum < 1)) throw ConfigError("train: momentum must be in [0, 1)");
  if (!(beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1))
    throw ConfigError("train: adam betas must be in (0, 1)");
  if (!(early_stop_train_acc >= 0 && early_stop_train_acc <= 1))
    throw ConfigError("train: early_stop_train_acc must be in [0, 1]");
}

void AblationToggles::validate() const {
  if (use_self_attention && (use_sharp || use_gentle))
    throw ConfigError(
        "ablation: self-attention fusion and the sharp/gentle branches are alternative paths; "
        "enable one or the other");
}

std::string AblationToggles::name() const {
  std::string n;
  auto tag = [&n](const char* t) {
    if (!n.empty()) n += "+";
    n += t;
  };
  if (use_knn_local) tag("knn");
  if (use_self_attention) tag("self");
  if (use_sharp) tag("sharp");
  if (use_gentle) tag("gentle");
  if (use_voting) tag("voting");
  return n.empty() ? "baseline" : n;
}

model::ModelConfig AblationToggles::apply(const model::ModelConfig& base) const {
  validate();
  model::ModelConfig cfg = base;
  cfg.use_knn_local = use_knn_local;
  if (use_self_attention) cfg.fuse_mode = model::FuseMode::Self;
  else if (use_sharp && use_gentle) cfg.fuse_mode = model::FuseMode::SharpGentle;
  else if (use_sharp) cfg.fuse_mode = model::FuseMode::SharpOnly;
  else if (use_gentle) cfg.fuse_mode = model::FuseMode::GentleOnly;
  else cfg.fuse_mode = model::FuseMode::None;
  return cfg;
}

Dataset make_classification_dataset(long per_class, long n_points, uint64_t seed) {
  const ShapeFamily families[] = {ShapeFamily::Sphere, ShapeFamily::Cube,
                                  ShapeFamily::CylinderWithCaps, ShapeFamily::LBracket};
  Dataset ds;
  ds.n_classes = 4;
  ds.class_names = {"sphere", "cube", "cylinder", "l_bracket"};
  Rng rng(seed);
  for (int cls = 0; cls < 4; ++cls)
    for (long i = 0; i < per_class; ++i) {
      SyntheticSpec spec;
      spec.family = families[cls];
      spec.n_points = n_points;
      spec.seed = rng.fork(uint64_t(cls) * 1000003u + uint64_t(i) + 1).seed();
      PointCloud cloud = normalize_unit_sphere(generate_synthetic(spec));
      Sample smp;
      smp.points = cloud.points.cast<float>();
      smp.label = cls;
      ds.samples.push_back(std::move(smp));
    }
  return ds;
}

Dataset make_segmentation_dataset(long count, long n_points, uint64_t seed) {
  Dataset ds;
  ds.n_classes = 2;
  ds.class_names = {"body", "cap"};
  Rng rng(seed);
  for (long i = 0; i < count; ++i) {
    SyntheticSpec spec;
    spec.family = ShapeFamily::CylinderWithCaps;
    spec.n_points = n_points;
    spec.seed = rng.fork(uint64_t(i) + 1).seed();
    spec.part_labels = true;
    PointCloud cloud = normalize_unit_sphere(generate_synthetic(spec));
    Sample smp;
    smp.points = cloud.points.cast<float>();
    smp.point_labels = cloud.point_labels;
    smp.category = 0;
    ds.samples.push_back(std::move(smp));
  }
  return ds;
}

std::vector<EpochLog> train(const model::ModelConfig& cfg, ad::ParamStore<float>& params,
                            const Dataset& data, const TrainConfig& tcfg) {
  cfg.validate();
  tcfg.validate();
  if (data.samples.empty()) throw InvalidInputError("train: dataset is empty");
  const bool seg = cfg.task == model::Task::Segmentation;
  const long n = data.size();

  // Optimizer state, one slot per parameter in store order.
  std::map<std::string, Tensor<float>> m1, m2;
  for (const auto& name : params.order) {
    Tensor<float> z;
    z.shape = params.at(name).shape;
    z.data.assign(params.at(name).data.size(), 0.0f);
    m1.emplace(name, z);
    if (tcfg.optimizer == Optimizer::Adam) m2.emplace(name, std::move(z));
  }

  Rng rng(tcfg.seed);
  std::vector<EpochLog> curve;
  long opt_step = 0;
  long adam_t = 0;
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    double lr = tcfg.lr;
    if (tcfg.lr_schedule == LrSchedule::Cosine)
      lr *= 0.5 * (1.0 + std::cos(kPi * double(epoch) / double(tcfg.epochs)));

    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffler = rng.fork(uint64_t(epoch) + 1);
    shuffler.shuffle(order);

    double ep_loss = 0;
    long correct = 0, total = 0;
    for (long start = 0; start < n; start += tcfg.batch_size) {
      const long bs = std::min<long>(tcfg.batch_size, n - start);
      std::map<std::string, Tensor<float>> acc;
      double batch_loss = 0;
      for (long b = 0; b < bs; ++b) {
        const Sample& smp = data.samples[order[start + b]];
        ad::Tape<float> tp;
        ad::Binding<float> bind(tp, params);
        const int logits = forward_logits(tp, bind, cfg, smp, smp.points);
        const std::vector<int> labels =
            seg ? smp.point_labels : std::vector<int>{smp.label};
        const int loss = tp.cross_entropy(logits, labels);
        const double lv = tp.value(loss).data[0];
        if (!std::isfinite(lv))
          throw TrainingError("training diverged: non-finite loss at optimizer step " +
                              std::to_string(opt_step) + " (epoch " + std::to_string(epoch) +
                              ")");
        tp.backward(loss);
        batch_loss += lv;

        const Tensor<float>& lv_t = tp.value(logits);
        for (long r = 0; r < lv_t.rows(); ++r) {
          correct += argmax_row(lv_t.row(r), lv_t.cols()) == labels[r] ? 1 : 0;
          ++total;
        }
        // Accumulate into the batch gradient; bind.ids is name-ordered, so
        // the summation order is fixed.
        for (const auto& [name, id] : bind.ids) {
          auto it = acc.find(name);
          if (it == acc.end()) it = acc.emplace(name, tp.grad(id)).first;
          else {
            const Tensor<float>& g = tp.grad(id);
            for (size_t i = 0; i < g.data.size(); ++i) it->second.data[i] += g.data[i];
          }
        }
      }
      ep_loss += batch_loss;

      ++opt_step;
      ++adam_t;
      const float inv_bs = 1.0f / float(bs);
      for (const auto& name : params.order) {
        auto it = acc.find(name);
        if (it == acc.end()) continue;  // parameter unused this batch
        Tensor<float>& w = params.at(name);
        Tensor<float>& g = it->second;
        for (size_t i = 0; i < g.data.size(); ++i)
          g.data[i] = g.data[i] * inv_bs + float(tcfg.weight_decay) * w.data[i];
        if (tcfg.optimizer == Optimizer::Adam) {
          Tensor<float>& m = m1.at(name);
          Tensor<float>& v = m2.at(name);
          const float b1 = float(tcfg.beta1), b2 = float(tcfg.beta2);
          const float c1 = 1.0f - float(std::pow(tcfg.beta1, double(adam_t)));
          const float c2 = 1.0f - float(std::pow(tcfg.beta2, double(adam_t)));
          for (size_t i = 0; i < g.data.size(); ++i) {
            m.data[i] = b1 * m.data[i] + (1.0f - b1) * g.data[i];
            v.data[i] = b2 * v.data[i] + (1.0f - b2) * g.data[i] * g.data[i];
            const float mh = m.data[i] / c1;
            const float vh = v.data[i] / c2;
            w.data[i] -= float(lr) * mh / (std::sqrt(vh) + float(tcfg.adam_eps));
          }
        } else {
          Tensor<float>& buf = m1.at(name);
          for (size_t i = 0; i < g.data.size(); ++i) {
            buf.data[i] = float(tcfg.momentum) * buf.data[i] + g.data[i];
            w.data[i] -= float(lr) * buf.data[i];
          }
        }
      }
    }
    const double acc_frac = total ? double(correct) / double(total) : 0.0;
    curve.push_back({epoch, ep_loss / double(n), acc_frac});
    if (tcfg.early_stop_train_acc > 0 && acc_frac >= tcfg.early_stop_train_acc) break;
  }
  return curve;
}

EvalReport evaluate(const model::ModelConfig& cfg, const ad::ParamStore<float>& params,
                    const Dataset& data, int votes, double scale_lo, double scale_hi,
                    uint64_t seed, std::vector<Tensor<float>>* logits_out) {
  if (votes < 1) throw ConfigError("evaluate: votes must be >= 1");
  if (logits_out) logits_out->clear();
  const bool seg = cfg.task == model::Task::Segmentation;
  const int k = data.n_classes;
  EvalReport rep;
  rep.confusion.assign(static_cast<size_t>(k) * k, 0);
  long correct = 0, total = 0;

  std::vector<std::vector<int>> all_preds, all_labels;
  std::vector<int> categories;

  // Unit scale makes every vote the identity transform; their average is the
  // single-pass logits exactly, so run one pass.
  const bool unit = scale_lo == 1.0 && scale_hi == 1.0;
  Rng base(seed);
  for (long s = 0; s < data.size(); ++s) {
    const Sample& smp = data.samples[s];
    Tensor<float> avg;
    Rng r = base.fork(uint64_t(s) + 1);
    const int n_pass = unit ? 1 : votes;
    for (int v = 0; v < n_pass; ++v) {
      const float sc = unit ? 1.0f : float(r.uniform(scale_lo, scale_hi));
      ad::Tape<float> tp;
      ad::Binding<float> bind(tp, params);
      const int logits = forward_logits(tp, bind, cfg, smp, scaled(smp.points, sc));
      const Tensor<float>& lv = tp.value(logits);
      if (v == 0) avg = lv;
      else
        for (size_t i = 0; i < avg.data.size(); ++i) avg.data[i] += lv.data[i];
    }
    if (n_pass > 1)
      for (float& v : avg.data) v /= float(n_pass);
    if (logits_out) logits_out->push_back(avg);

    const std::vector<int> labels = seg ? smp.point_labels : std::vector<int>{smp.label};
    std::vector<int> preds(avg.rows());
    for (long r2 = 0; r2 < avg.rows(); ++r2) {
      preds[r2] = argmax_row(avg.row(r2), avg.cols());
      rep.confusion[static_cast<size_t>(labels[r2]) * k + preds[r2]]++;
      correct += preds[r2] == labels[r2] ? 1 : 0;
      ++total;
    }
    if (seg) {
      all_preds.push_back(std::move(preds));
      all_labels.push_back(labels);
      categories.push_back(smp.category);
    }
  }
  rep.overall_accuracy = total ? double(correct) / double(total) : 0.0;
  rep.per_class_accuracy.assign(k, 0.0);
  for (int c = 0; c < k; ++c) {
    long row = 0;
    for (int p = 0; p < k; ++p) row += rep.confusion[static_cast<size_t>(c) * k + p];
    if (row) rep.per_class_accuracy[c] =
        double(rep.confusion[static_cast<size_t>(c) * k + c]) / double(row);
  }
  if (seg) {
    auto [inst, cls] = miou(all_preds, all_labels, categories, k);
    rep.instance_miou = inst;
    rep.class_miou = cls;
  }
  return rep;
}

std::pair<double, double> miou(const std::vector<std::vector<int>>& preds,
                               const std::vector<std::vector<int>>& labels,
                               const std::vector<int>& shape_category, int n_parts) {
  if (preds.size() != labels.size() || preds.size() != shape_category.size())
    throw ShapeError("miou: preds/labels/categories disagree in shape count");
  if (preds.empty()) return {0.0, 0.0};
  std::map<int, std::vector<double>> by_category;
  double inst_sum = 0;
  for (size_t s = 0; s < preds.size(); ++s) {
    if (preds[s].size() != labels[s].size())
      throw ShapeError("miou: shape " + std::to_string(s) + " has " +
                       std::to_string(preds[s].size()) + " predictions for " +
                       std::to_string(labels[s].size()) + " labels");
    double iou_sum = 0;
    for (int p = 0; p < n_parts; ++p) {
      long inter = 0, uni = 0;
      for (size_t i = 0; i < preds[s].size(); ++i) {
        const bool in_p = preds[s][i] == p, in_l = labels[s][i] == p;
        inter += (in_p && in_l) ? 1 : 0;
        uni += (in_p || in_l) ? 1 : 0;
      }
      iou_sum += uni == 0 ? 1.0 : double(inter) / double(uni);
    }
    const double shape_miou = iou_sum / double(n_parts);
    inst_sum += shape_miou;
    by_category[shape_category[s]].push_back(shape_miou);
  }
  double cls_sum = 0;
  for (const auto& [cat, vals] : by_category) {
    double m = 0;
    for (double v : vals) m += v;
    cls_sum += m / double(vals.size());
  }
  return {inst_sum / double(preds.size()), cls_sum / double(by_category.size())};
}

std::vector<AblationToggles> standard_ablation_rows() {
  // none / knn / knn+self / knn+sharp / knn+gentle / full — the Table-4 shape.
  return {
      {false, false, false, false, false},
      {true, false, false, false, false},
      {true, true, false, false, false},
      {true, false, true, false, false},
      {true, false, false, true, false},
      {true, false, true, true, false},
  };
}

std::vector<AblationRow> run_ablation(const model::ModelConfig& base, const Dataset& train_set,
                                      const Dataset& test_set, const TrainConfig& tcfg,
                                      const std::vector<AblationToggles>& rows,
                                      const std::vector<uint64_t>& seeds) {
  if (seeds.empty()) throw ConfigError("run_ablation: need at least one seed");
  std::vector<AblationRow> out;
  for (const AblationToggles& t : rows) {
    AblationRow row;
    row.name = t.name();
    row.toggles = t;
    for (uint64_t seed : seeds) {
      model::ModelConfig mcfg = t.apply(base);
      mcfg.seed = seed;
      ad::ParamStore<float> params = model::make_params<float>(mcfg);
      TrainConfig tc = tcfg;
      tc.seed = seed;
      train(mcfg, params, train_set, tc);
      const EvalReport rep =
          t.use_voting ? evaluate(mcfg, params, test_set, 10, 0.8, 1.2, seed)
                       : evaluate(mcfg, params, test_set, 1, 1.0, 1.0, seed);
      row.seed_accuracies.push_back(rep.overall_accuracy);
    }
    double m = 0;
    for (double a : row.seed_accuracies) m += a;
    row.mean_accuracy = m / double(row.seed_accuracies.size());
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<RobustnessPoint> run_robustness(const model::ModelConfig& cfg,
                                            const ad::ParamStore<float>& params,
                                            const Dataset& test_set, RobustnessMode mode,
                                            const std::vector<double>& grid, uint64_t seed) {
  std::vector<RobustnessPoint> out;
  Rng base(seed);
  for (double gv : grid) {
    Dataset modified;
    modified.n_classes = test_set.n_classes;
    modified.class_names = test_set.class_names;
    for (long s = 0; s < test_set.size(); ++s) {
      const Sample& smp = test_set.samples[s];
      Sample m = smp;
      Rng r = base.fork(uint64_t(s) + 1);
      switch (mode) {
        case RobustnessMode::Dropout: {
          const long keep = std::min<long>(static_cast<long>(gv), smp.points.rows());
          if (keep < 1) throw ConfigError("robustness: dropout grid value must be >= 1");
          std::vector<long> idx(smp.points.rows());
          std::iota(idx.begin(), idx.end(), 0);
          r.shuffle(idx);
          idx.resize(keep);
          std::sort(idx.begin(), idx.end());
          Tensor<float> pts(keep, smp.points.cols());
          for (long i = 0; i < keep; ++i)
            for (long j = 0; j < smp.points.cols(); ++j) pts(i, j) = smp.points(idx[i], j);
          m.points = std::move(pts);
          if (!smp.point_labels.empty()) {
            m.point_labels.resize(keep);
            for (long i = 0; i < keep; ++i) m.point_labels[i] = smp.point_labels[idx[i]];
          }
          break;
        }
        case RobustnessMode::Rotate: {
          const double a = gv * kPi / 180.0;
          const Tensor<double> rot = rotation_z(a);
          for (long i = 0; i < m.points.rows(); ++i) {
            const double x = m.points(i, 0), y = m.points(i, 1);
            m.points(i, 0) = float(rot(0, 0) * x + rot(0, 1) * y);
            m.points(i, 1) = float(rot(1, 0) * x + rot(1, 1) * y);
          }
          break;
        }
        case RobustnessMode::Noise: {
          for (long i = 0; i < m.points.rows(); ++i)
            for (long j = 0; j < 3; ++j)
              m.points(i, j) += float(r.normal(0.0, gv));
          break;
        }
      }
      modified.samples.push_back(std::move(m));
    }
    const EvalReport rep = evaluate(cfg, params, modified, 1, 1.0, 1.0, seed);
    out.push_back({gv, rep.overall_accuracy});
  }
  return out;
}

}  // namespace gda::train
