#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gda/model.hpp"
#include "gda/pointcloud.hpp"

namespace gda::train {

enum class Optimizer { Adam, SgdMomentum };
enum class LrSchedule { Constant, Cosine };

struct TrainConfig {
  Optimizer optimizer = Optimizer::Adam;
  double lr = 1e-3;
  double momentum = 0.9;       // SGD only
  double weight_decay = 0.0;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  int epochs = 30;
  int batch_size = 8;
  LrSchedule lr_schedule = LrSchedule::Cosine;
  uint64_t seed = 1;
  bool deterministic = true;
  /// Stop once the train-set accuracy for an epoch reaches this; 0 disables.
  /// Never looks at held-out data.
  double early_stop_train_acc = 0.0;

  void validate() const;
};

/// One training/eval example. Classification uses `label`; segmentation uses
/// `point_labels` plus the category head id.
struct Sample {
  Tensor<float> points;  // N x 3
  int label = -1;
  std::vector<int> point_labels;
  int category = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  int n_classes = 0;
  std::vector<std::string> class_names;

  long size() const { return static_cast<long>(samples.size()); }
};

struct EpochLog {
  int epoch;
  double loss;
  double acc;
};

struct EvalReport {
  double overall_accuracy = 0;
  std::vector<double> per_class_accuracy;
  std::vector<long> confusion;  // n_classes x n_classes, row = true label
  double instance_miou = 0;     // segmentation only
  double class_miou = 0;

  long confusion_at(int truth, int pred, int n_classes) const {
    return confusion[static_cast<size_t>(truth) * n_classes + pred];
  }
};

/// Table-4-style row: which pieces of the architecture are active.
/// use_self_attention replaces the sharp/gentle split and excludes both.
struct AblationToggles {
  bool use_knn_local = true;
  bool use_self_attention = false;
  bool use_sharp = true;
  bool use_gentle = true;
  bool use_voting = false;

  void validate() const;
  std::string name() const;
  /// The model realizing this row, derived from `base`.
  model::ModelConfig apply(const model::ModelConfig& base) const;
};

// ---- datasets ----

/// 4-class classification set: sphere, cube, cylinder-with-caps, L-bracket,
/// each normalized to the unit sphere. Deterministic in seed.
Dataset make_classification_dataset(long per_class, long n_points, uint64_t seed);

/// Cylinder cap/body segmentation set (2 part classes, one category head).
Dataset make_segmentation_dataset(long count, long n_points, uint64_t seed);

// ---- core loops ----

/// Minimize cross entropy over the dataset; updates `params` in place and
/// returns the per-epoch loss/accuracy curve. Gradients are accumulated over
/// each batch in a fixed order, so identical seeds give identical bytes.
/// A non-finite loss raises TrainingError naming the step.
std::vector<EpochLog> train(const model::ModelConfig& cfg, ad::ParamStore<float>& params,
                            const Dataset& data, const TrainConfig& tcfg);

/// Voting evaluation: average logits over `votes` forward passes of the
/// cloud rescaled by uniform draws from [scale_lo, scale_hi]. votes=1 with
/// unit range is plain evaluation. Segmentation datasets additionally get
/// per-point accuracy + mIoU in the report. `logits_out`, when given, is
/// filled with the per-sample averaged logits the predictions came from.
EvalReport evaluate(const model::ModelConfig& cfg, const ad::ParamStore<float>& params,
                    const Dataset& data, int votes = 1, double scale_lo = 1.0,
                    double scale_hi = 1.0, uint64_t seed = 0,
                    std::vector<Tensor<float>>* logits_out = nullptr);

/// IoU per part with the absent-part convention (IoU = 1 when a part occurs
/// in neither prediction nor label), averaged per shape. Returns
/// {instance_miou, class_miou}: instance averages over shapes, class
/// averages shape values within each category first.
std::pair<double, double> miou(const std::vector<std::vector<int>>& preds,
                               const std::vector<std::vector<int>>& labels,
                               const std::vector<int>& shape_category, int n_parts);

// ---- experiment harnesses ----

struct AblationRow {
  std::string name;
  AblationToggles toggles;
  std::vector<double> seed_accuracies;
  double mean_accuracy = 0;
};

/// Train + evaluate one model per toggle row, sharing data and budget across
/// rows; every row is repeated for each seed in `seeds`.
std::vector<AblationRow> run_ablation(const model::ModelConfig& base, const Dataset& train_set,
                                      const Dataset& test_set, const TrainConfig& tcfg,
                                      const std::vector<AblationToggles>& rows,
                                      const std::vector<uint64_t>& seeds);

/// The six standard rows: none, knn, self, sharp, gentle, full.
std::vector<AblationToggles> standard_ablation_rows();

enum class RobustnessMode { Dropout, Rotate, Noise };

struct RobustnessPoint {
  double grid_value;
  double accuracy;
};

/// Stress a trained model: Dropout evaluates at reduced point counts (grid =
/// kept points), Rotate at z-axis angles in degrees, Noise at jitter sigmas.
std::vector<RobustnessPoint> run_robustness(const model::ModelConfig& cfg,
                                            const ad::ParamStore<float>& params,
                                            const Dataset& test_set, RobustnessMode mode,
                                            const std::vector<double>& grid, uint64_t seed);

}  // namespace gda::train
