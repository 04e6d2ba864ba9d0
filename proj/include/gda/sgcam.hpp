#pragma once

#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "gda/gdm.hpp"
#include "gda/params.hpp"

namespace gda::sgcam {

/// Attention over the sharp and gentle components. Six independent MLPs:
/// theta_o/theta_s embed queries and sharp keys, phi_o/phi_g queries and
/// gentle keys, psi_s/psi_g transform the component values. Attention rows
/// are raw scaled dot products; softmax_rows switches on row normalization
/// for experiments.
struct SgcamConfig {
  long d_k = 64;
  bool softmax_rows = false;
};

/// Six 2-layer MLPs under `prefix` ("<prefix>.theta_o.w0", ...). Embeddings
/// map C -> d_k -> d_k; values map C -> d_k -> C with the final weight zero
/// so the fuse starts as the identity.
template <class T>
void make_params(ad::ParamStore<T>& store, const std::string& prefix, long c,
                 const SgcamConfig& cfg, Rng& rng) {
  make_mlp(store, prefix + ".theta_o", {c, cfg.d_k, cfg.d_k}, rng);
  make_mlp(store, prefix + ".theta_s", {c, cfg.d_k, cfg.d_k}, rng);
  make_mlp(store, prefix + ".phi_o", {c, cfg.d_k, cfg.d_k}, rng);
  make_mlp(store, prefix + ".phi_g", {c, cfg.d_k, cfg.d_k}, rng);
  make_mlp(store, prefix + ".psi_s", {c, cfg.d_k, c}, rng, /*zero_final=*/true);
  make_mlp(store, prefix + ".psi_g", {c, cfg.d_k, c}, rng, /*zero_final=*/true);
}

/// Tape node ids of the six bound MLPs.
struct SgcamIds {
  std::vector<std::pair<int, int>> theta_o, theta_s, phi_o, phi_g, psi_s, psi_g;
  long d_k = 64;
  bool softmax_rows = false;
};

template <class T>
SgcamIds bind(ad::Binding<T>& b, const std::string& prefix, const SgcamConfig& cfg) {
  SgcamIds ids;
  ids.theta_o = bind_mlp(b, prefix + ".theta_o");
  ids.theta_s = bind_mlp(b, prefix + ".theta_s");
  ids.phi_o = bind_mlp(b, prefix + ".phi_o");
  ids.phi_g = bind_mlp(b, prefix + ".phi_g");
  ids.psi_s = bind_mlp(b, prefix + ".psi_s");
  ids.psi_g = bind_mlp(b, prefix + ".psi_g");
  ids.d_k = cfg.d_k;
  ids.softmax_rows = cfg.softmax_rows;
  return ids;
}

/// W_s = theta_o(x_o) · theta_s(x_s)^T / sqrt(d_k), and likewise W_g from
/// phi_o/phi_g. Returns the (w_sharp, w_gentle) node pair.
template <class T>
std::pair<int, int> attention_matrices(ad::Tape<T>& tp, const SgcamIds& ids, int x_o, int x_s,
                                       int x_g) {
  if (tp.value(x_s).rows() != tp.value(x_g).rows())
    throw ShapeError("attention_matrices: sharp rows " +
                     std::to_string(tp.value(x_s).rows()) + " != gentle rows " +
                     std::to_string(tp.value(x_g).rows()));
  const double scale = 1.0 / std::sqrt(double(ids.d_k));
  int w_s = tp.scalar_mul(
      tp.matmul(mlp_forward(tp, x_o, ids.theta_o), tp.transpose(mlp_forward(tp, x_s, ids.theta_s))),
      scale);
  int w_g = tp.scalar_mul(
      tp.matmul(mlp_forward(tp, x_o, ids.phi_o), tp.transpose(mlp_forward(tp, x_g, ids.phi_g))),
      scale);
  if (ids.softmax_rows) {
    w_s = tp.softmax(w_s);
    w_g = tp.softmax(w_g);
  }
  return {w_s, w_g};
}

namespace detail {

// One attended branch: x_o + W · psi(x_c) with W from the given query/key
// embedding MLPs.
template <class T>
int branch(ad::Tape<T>& tp, const SgcamIds& ids, int x_o, int x_c,
           const std::vector<std::pair<int, int>>& emb_q,
           const std::vector<std::pair<int, int>>& emb_k,
           const std::vector<std::pair<int, int>>& psi) {
  int w = tp.scalar_mul(
      tp.matmul(mlp_forward(tp, x_o, emb_q), tp.transpose(mlp_forward(tp, x_c, emb_k))),
      1.0 / std::sqrt(double(ids.d_k)));
  if (ids.softmax_rows) w = tp.softmax(w);
  return tp.add(x_o, tp.matmul(w, mlp_forward(tp, x_c, psi)));
}

}  // namespace detail

/// Y_s = x_o + W_s · psi_s(x_s) for a component node already on the tape.
template <class T>
int sharp_branch(ad::Tape<T>& tp, const SgcamIds& ids, int x_o, int x_s) {
  return detail::branch(tp, ids, x_o, x_s, ids.theta_o, ids.theta_s, ids.psi_s);
}

/// Y_g = x_o + W_g · psi_g(x_g).
template <class T>
int gentle_branch(ad::Tape<T>& tp, const SgcamIds& ids, int x_o, int x_g) {
  return detail::branch(tp, ids, x_o, x_g, ids.phi_o, ids.phi_g, ids.psi_g);
}

/// The full fusion: gather the component rows out of `features`, attend from
/// every original point to each component, add the weighted values
/// residually, and concatenate the two branches:
///   Y_s = x_o + W_s · psi_s(x_s),  Y_g = x_o + W_g · psi_g(x_g),
///   Z = Y_s ⊕ Y_g  (N×2C).
template <class T>
int fuse(ad::Tape<T>& tp, const SgcamIds& ids, int x_o, const std::vector<int>& sharp_idx,
         const std::vector<int>& gentle_idx, int features) {
  if (sharp_idx.size() != gentle_idx.size())
    throw ShapeError("fuse: sharp rows " + std::to_string(sharp_idx.size()) +
                     " != gentle rows " + std::to_string(gentle_idx.size()));
  const int x_s = tp.gather_rows(features, sharp_idx);
  const int x_g = tp.gather_rows(features, gentle_idx);
  const int y_s = sharp_branch(tp, ids, x_o, x_s);
  const int y_g = gentle_branch(tp, ids, x_o, x_g);
  return tp.concat(y_s, y_g, /*axis=*/1);
}

template <class T>
int fuse(ad::Tape<T>& tp, const SgcamIds& ids, int x_o, const VariationSplit& split,
         int features) {
  return fuse(tp, ids, x_o, split.sharp_idx, split.gentle_idx, features);
}

/// Ablation baseline: both components are the full cloud (x_s = x_g = x_o,
/// M = N), same machinery otherwise.
template <class T>
int self_attention_fuse(ad::Tape<T>& tp, const SgcamIds& ids, int x_o) {
  std::vector<int> all(tp.value(x_o).rows());
  std::iota(all.begin(), all.end(), 0);
  return fuse(tp, ids, x_o, all, all, x_o);
}

struct AttentionRecord {
  Tensor<double> w_sharp;  // N x M
  Tensor<double> w_gentle;
};

/// Concrete attention weights for inspection/export, evaluated in double.
inline AttentionRecord record_attention(const ad::ParamStore<double>& store,
                                        const std::string& prefix, const SgcamConfig& cfg,
                                        const Tensor<double>& x_o, const VariationSplit& split,
                                        const Tensor<double>& features) {
  ad::Tape<double> tp;
  ad::Binding<double> b(tp, store);
  const SgcamIds ids = bind(b, prefix, cfg);
  const int xo = tp.leaf(x_o);
  const int xs = tp.gather_rows(tp.leaf(features), split.sharp_idx);
  const int xg = tp.gather_rows(tp.leaf(features), split.gentle_idx);
  const auto [w_s, w_g] = attention_matrices(tp, ids, xo, xs, xg);
  AttentionRecord rec;
  rec.w_sharp = tp.value(w_s);
  rec.w_gentle = tp.value(w_g);
  for (double v : rec.w_sharp.data)
    if (!std::isfinite(v)) throw NumericError("attention weights are not finite");
  for (double v : rec.w_gentle.data)
    if (!std::isfinite(v)) throw NumericError("attention weights are not finite");
  return rec;
}

/// Row `anchor` of each attention matrix: how strongly that original point
/// attends to every component point.
inline std::pair<std::vector<double>, std::vector<double>> export_attention(
    const AttentionRecord& rec, long anchor) {
  if (anchor < 0 || anchor >= rec.w_sharp.rows())
    throw InvalidInputError("export_attention: anchor " + std::to_string(anchor) +
                            " out of range [0, " + std::to_string(rec.w_sharp.rows()) + ")");
  std::vector<double> s(rec.w_sharp.row(anchor), rec.w_sharp.row(anchor) + rec.w_sharp.cols());
  std::vector<double> g(rec.w_gentle.row(anchor), rec.w_gentle.row(anchor) + rec.w_gentle.cols());
  return {std::move(s), std::move(g)};
}

}  // namespace gda::sgcam
