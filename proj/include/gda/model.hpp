#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gda/graph.hpp"
#include "gda/params.hpp"
#include "gda/pointcloud.hpp"
#include "gda/sgcam.hpp"

namespace gda::model {

enum class Task { Classification, Segmentation };

/// What each block fuses. SharpGentle is the full module; the others exist
/// for the ablation harness: Self attends to the whole cloud, SharpOnly /
/// GentleOnly keep one branch (the other concat half is the raw input), and
/// None removes the block entirely.
enum class FuseMode { SharpGentle, Self, SharpOnly, GentleOnly, None };

struct ModelConfig {
  Task task = Task::Classification;
  int n_classes = 4;
  int n_seg_heads = 1;   // per-category segmentation heads
  int k_local = 20;      // local-operator neighborhood
  long m = 0;            // selection count; 0 means N/4 at forward time
  // trunk width, second lift, pre-pool width, head hidden width
  std::vector<long> block_widths = {48, 96, 256, 128};
  sgcam::SgcamConfig attention;
  FuseMode fuse_mode = FuseMode::SharpGentle;
  bool use_knn_local = true;
  GraphConfig graph;  // carries k_graph and the kernel settings
  uint64_t seed = 1;

  long width(int i) const { return block_widths[i]; }
  void validate() const;

  /// Effective selection count for an N-point cloud: m, or N/4 when m = 0,
  /// clamped to [1, N/2].
  long effective_m(long n) const;
};

std::string to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const std::string& text);

/// All learned tensors for this architecture, deterministically initialized
/// from cfg.seed. Creation order is fixed; names are dotted paths.
template <class T>
ad::ParamStore<T> make_params(const ModelConfig& cfg);

/// Edge-feature local operator: per point, gather the k nearest neighbors in
/// the *current* feature space, form (center, neighbor - center) edges, run
/// the shared single-layer MLP, and max-reduce over the neighborhood.
template <class T>
int local_operator(ad::Tape<T>& tp, ad::Binding<T>& bind, int x, int k,
                   const std::string& prefix);

/// One GDM + SGCAM + projection block with a residual skip. Builds the
/// neighbor graph dynamically on the block's input features. `split_out`,
/// when given, receives the variation split for diagnostics.
template <class T>
int gda_block(ad::Tape<T>& tp, ad::Binding<T>& bind, const ModelConfig& cfg, int x,
              const std::string& prefix, VariationSplit* split_out = nullptr);

/// Shared trunk: lift -> block -> block -> lift -> pointwise MLP. Returns
/// the N x width(2) per-point feature node.
template <class T>
int forward_trunk(ad::Tape<T>& tp, ad::Binding<T>& bind, const ModelConfig& cfg,
                  const Tensor<T>& points, std::vector<VariationSplit>* splits = nullptr);

/// Classification logits (1 x n_classes node).
template <class T>
int forward_classify(ad::Tape<T>& tp, ad::Binding<T>& bind, const ModelConfig& cfg,
                     const Tensor<T>& points, std::vector<VariationSplit>* splits = nullptr);

/// Per-point segmentation logits (N x n_classes node) under the selected
/// category head.
template <class T>
int forward_segment(ad::Tape<T>& tp, ad::Binding<T>& bind, const ModelConfig& cfg,
                    const Tensor<T>& points, int category,
                    std::vector<VariationSplit>* splits = nullptr);

template <class T>
long count_params(const ad::ParamStore<T>& store) {
  return store.count_params();
}

/// Binary checkpoint: magic "GDAN", format version, config JSON, then the
/// named tensors (name, dtype, rank, dims, row-major little-endian data).
/// Round-trips bit-exactly.
template <class T>
void save_checkpoint(const ad::ParamStore<T>& store, const ModelConfig& cfg,
                     const std::string& path);

template <class T>
std::pair<ad::ParamStore<T>, ModelConfig> load_checkpoint(const std::string& path);

}  // namespace gda::model

#include "gda/model_impl.hpp"
