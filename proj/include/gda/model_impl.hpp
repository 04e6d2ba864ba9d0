#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>

#include "gda/gdm.hpp"
#include "gda/kernels.hpp"

// Template bodies for model.hpp; include that header, not this one.

namespace gda::model {

template <class T>
ad::ParamStore<T> make_params(const ModelConfig& cfg) {
  cfg.validate();
  ad::ParamStore<T> store;
  Rng rng(cfg.seed);
  const long c1 = cfg.width(0), c2 = cfg.width(1), c3 = cfg.width(2), c4 = cfg.width(3);

  // Lifts: edge MLP over (center, neighbor - center) pairs, or a plain
  // pointwise layer when the KNN local operator is ablated away.
  make_mlp(store, "local1", {cfg.use_knn_local ? 2 * 3L : 3L, c1}, rng);
  if (cfg.fuse_mode != FuseMode::None) {
    for (int blk = 1; blk <= 2; ++blk) {
      const std::string prefix = "block" + std::to_string(blk);
      sgcam::make_params(store, prefix + ".sgcam", c1, cfg.attention, rng);
      make_mlp(store, prefix + ".proj", {2 * c1, c1}, rng, /*zero_final=*/true);
    }
  }
  make_mlp(store, "local2", {cfg.use_knn_local ? 2 * c1 : c1, c2}, rng);
  make_mlp(store, "trunk", {c2, c3}, rng);
  if (cfg.task == Task::Classification) {
    make_mlp(store, "head", {c3, c4, static_cast<long>(cfg.n_classes)}, rng);
  } else {
    for (int h = 0; h < cfg.n_seg_heads; ++h)
      make_mlp(store, "seg" + std::to_string(h),
               {2 * c3, c4, static_cast<long>(cfg.n_classes)}, rng);
  }
  return store;
}

template <class T>
int local_operator(ad::Tape<T>& tp, ad::Binding<T>& bind, int x, int k,
                   const std::string& prefix) {
  const Tensor<T>& xv = tp.value(x);
  const long n = xv.rows();
  if (k < 1 || k >= n)
    throw ConfigError("local_operator: k = " + std::to_string(k) +
                      " must satisfy 1 <= k < N = " + std::to_string(n));
  // Neighbor search runs on the current values, outside the tape; gradients
  // flow through the gathers, not the index selection.
  Tensor<int> idx(n, static_cast<long>(k));
  kernels::knn(xv.data.data(), n, xv.cols(), k, idx.data.data());
  std::vector<int> nbr(static_cast<size_t>(n) * k), ctr(static_cast<size_t>(n) * k);
  for (long i = 0; i < n; ++i)
    for (int t = 0; t < k; ++t) {
      nbr[i * k + t] = idx(i, t);
      ctr[i * k + t] = static_cast<int>(i);
    }
  const int xc = tp.gather_rows(x, std::move(ctr));
  const int xn = tp.gather_rows(x, std::move(nbr));
  const int edge = tp.concat(xc, tp.sub(xn, xc), /*axis=*/1);
  const auto layers = bind_mlp(bind, prefix);
  const int h = tp.relu(mlp_forward(tp, edge, layers));
  return tp.group_max(h, k);
}

namespace detail {

template <class T>
int lift(ad::Tape<T>& tp, ad::Binding<T>& bind, const ModelConfig& cfg, int x, int k,
         const std::string& prefix) {
  if (cfg.use_knn_local) return local_operator(tp, bind, x, k, prefix);
  return tp.relu(mlp_forward(tp, x, bind_mlp(bind, prefix)));
}

}  // namespace detail

template <class T>
int gda_block(ad::Tape<T>& tp, ad::Binding<T>& bind, const ModelConfig& cfg, int x,
              const std::string& prefix, VariationSplit* split_out) {
  if (cfg.fuse_mode == FuseMode::None) return x;
  const sgcam::SgcamIds ids = sgcam::bind(bind, prefix + ".sgcam", cfg.attention);
  int z;
  if (cfg.fuse_mode == FuseMode::Self) {
    z = sgcam::self_attention_fuse(tp, ids, x);
  } else {
    // Dynamic adjacency: the graph lives in this block's feature space.
    const Tensor<double> xd = tp.value(x).template cast<double>();
    const NeighborGraph graph = build_adjacency(xd, cfg.graph);
    const VariationSplit split = disentangle(graph, xd, cfg.effective_m(xd.rows()));
    if (split_out) *split_out = split;
    switch (cfg.fuse_mode) {
      case FuseMode::SharpGentle:
        z = sgcam::fuse(tp, ids, x, split.sharp_idx, split.gentle_idx, x);
        break;
      case FuseMode::SharpOnly:
        z = tp.concat(sgcam::sharp_branch(tp, ids, x, tp.gather_rows(x, split.sharp_idx)), x, 1);
        break;
      case FuseMode::GentleOnly:
        z = tp.concat(x, sgcam::gentle_branch(tp, ids, x, tp.gather_rows(x, split.gentle_idx)),
                      1);
        break;
      default:
        throw ConfigError("gda_block: unhandled fuse mode");
    }
  }
  const int proj = mlp_forward(tp, z, bind_mlp(bind, prefix + ".proj"));
  return tp.add(proj, x);
}

template <class T>
int forward_trunk(ad::Tape<T>& tp, ad::Binding<T>& bind, const ModelConfig& cfg,
                  const Tensor<T>& points, std::vector<VariationSplit>* splits) {
  cfg.validate();
  const long n = points.rows();
  const long need = std::max<long>(cfg.use_knn_local ? cfg.k_local : 0,
                                   cfg.fuse_mode != FuseMode::None ? cfg.graph.k_graph : 0);
  if (n < need + 1)
    throw InvalidInputError("forward: cloud has " + std::to_string(n) +
                            " points but the configured neighborhoods need at least " +
                            std::to_string(need + 1));
  if (points.cols() != 3)
    throw ShapeError("forward: expected N x 3 input, got " + shape_str(points.shape));

  const int x0 = tp.leaf(points);
  VariationSplit s1, s2;
  const int h1 = detail::lift(tp, bind, cfg, x0, cfg.k_local, "local1");
  const int b1 = gda_block(tp, bind, cfg, h1, "block1", splits ? &s1 : nullptr);
  const int b2 = gda_block(tp, bind, cfg, b1, "block2", splits ? &s2 : nullptr);
  const int h2 = detail::lift(tp, bind, cfg, b2, cfg.k_local, "local2");
  if (splits) {
    splits->clear();
    splits->push_back(std::move(s1));
    splits->push_back(std::move(s2));
  }
  return tp.relu(mlp_forward(tp, h2, bind_mlp(bind, "trunk")));
}

template <class T>
int forward_classify(ad::Tape<T>& tp, ad::Binding<T>& bind, const ModelConfig& cfg,
                     const Tensor<T>& points, std::vector<VariationSplit>* splits) {
  if (cfg.task != Task::Classification)
    throw ConfigError("forward_classify: config task is not classification");
  const int t = forward_trunk(tp, bind, cfg, points, splits);
  const int pooled = tp.group_max(t, tp.value(t).rows());
  return mlp_forward(tp, pooled, bind_mlp(bind, "head"));
}

template <class T>
int forward_segment(ad::Tape<T>& tp, ad::Binding<T>& bind, const ModelConfig& cfg,
                    const Tensor<T>& points, int category,
                    std::vector<VariationSplit>* splits) {
  if (cfg.task != Task::Segmentation)
    throw ConfigError("forward_segment: config task is not segmentation");
  if (category < 0 || category >= cfg.n_seg_heads)
    throw ConfigError("forward_segment: category " + std::to_string(category) +
                      " out of range [0, " + std::to_string(cfg.n_seg_heads) + ")");
  const int t = forward_trunk(tp, bind, cfg, points, splits);
  const long n = tp.value(t).rows();
  const int pooled = tp.group_max(t, n);
  // Broadcast the global feature back onto every point via an all-zero
  // gather; its backward is the matching sum.
  const int tiled = tp.gather_rows(pooled, std::vector<int>(n, 0));
  const int cat = tp.concat(t, tiled, /*axis=*/1);
  return mlp_forward(tp, cat, bind_mlp(bind, "seg" + std::to_string(category)));
}

// ---- checkpoint io ----

namespace detail {

inline constexpr char kMagic[4] = {'G', 'D', 'A', 'N'};
inline constexpr uint32_t kVersion = 1;

template <class V>
void put(std::ostream& out, V v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class V>
V get(std::istream& in, const char* field) {
  V v;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw CheckpointError(std::string("checkpoint truncated while reading ") + field);
  return v;
}

template <class T>
constexpr uint8_t dtype_tag() {
  return sizeof(T) == 4 ? 0 : 1;  // 0 = float32, 1 = float64
}

}  // namespace detail

template <class T>
void save_checkpoint(const ad::ParamStore<T>& store, const ModelConfig& cfg,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(detail::kMagic, 4);
  detail::put<uint32_t>(out, detail::kVersion);
  const std::string cfg_json = to_json(cfg);
  detail::put<uint64_t>(out, cfg_json.size());
  out.write(cfg_json.data(), static_cast<std::streamsize>(cfg_json.size()));
  detail::put<uint64_t>(out, store.order.size());
  for (const std::string& name : store.order) {
    const Tensor<T>& t = store.at(name);
    detail::put<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put<uint8_t>(out, detail::dtype_tag<T>());
    detail::put<uint8_t>(out, static_cast<uint8_t>(t.shape.size()));
    for (long d : t.shape) detail::put<int64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(T)));
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

template <class T>
std::pair<ad::ParamStore<T>, ModelConfig> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, detail::kMagic, 4) != 0)
    throw CheckpointError("checkpoint magic mismatch: not a model checkpoint");
  const auto version = detail::get<uint32_t>(in, "version");
  if (version != detail::kVersion)
    throw CheckpointError("checkpoint version " + std::to_string(version) +
                          " unsupported (expected " + std::to_string(detail::kVersion) + ")");
  const auto cfg_len = detail::get<uint64_t>(in, "config length");
  std::string cfg_json(cfg_len, '\0');
  in.read(cfg_json.data(), static_cast<std::streamsize>(cfg_len));
  if (!in) throw CheckpointError("checkpoint truncated while reading config");
  ModelConfig cfg = config_from_json(cfg_json);

  // The config determines the expected tensor set; every stored tensor must
  // match it in name, dtype, and shape.
  ad::ParamStore<T> store = make_params<T>(cfg);
  const auto n_tensors = detail::get<uint64_t>(in, "tensor count");
  if (n_tensors != store.order.size())
    throw CheckpointError("checkpoint holds " + std::to_string(n_tensors) +
                          " tensors but the config defines " + std::to_string(store.order.size()));
  for (uint64_t i = 0; i < n_tensors; ++i) {
    const auto name_len = detail::get<uint32_t>(in, "tensor name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw CheckpointError("checkpoint truncated while reading tensor name");
    if (!store.has(name)) throw CheckpointError("unexpected tensor '" + name + "'");
    const auto dtype = detail::get<uint8_t>(in, ("dtype of " + name).c_str());
    if (dtype != detail::dtype_tag<T>())
      throw CheckpointError("tensor '" + name + "' has dtype tag " + std::to_string(dtype) +
                            ", expected " + std::to_string(detail::dtype_tag<T>()));
    const auto rank = detail::get<uint8_t>(in, ("rank of " + name).c_str());
    std::vector<long> shape(rank);
    for (int d = 0; d < rank; ++d)
      shape[d] = static_cast<long>(detail::get<int64_t>(in, ("dims of " + name).c_str()));
    Tensor<T>& dst = store.at(name);
    if (shape != dst.shape)
      throw CheckpointError("tensor '" + name + "' has shape " + shape_str(shape) +
                            ", config expects " + shape_str(dst.shape));
    in.read(reinterpret_cast<char*>(dst.data.data()),
            static_cast<std::streamsize>(dst.data.size() * sizeof(T)));
    if (!in) throw CheckpointError("checkpoint truncated while reading tensor '" + name + "'");
  }
  return {std::move(store), std::move(cfg)};
}

}  // namespace gda::model
