#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gda/common.hpp"
#include "gda/kernels.hpp"

namespace gda::ad {

/// Reverse-mode autodiff tape. Nodes are created in forward order, which is
/// by construction a topological order, so the backward pass is a single
/// reverse sweep. One tape per forward pass, confined to one thread;
/// parameters are bound as leaves each pass and their gradients read back by
/// node id afterwards.
///
/// T is double in test/gradient-check mode and float in training mode.
template <class T>
class Tape {
 public:
  /// New leaf holding `v`. Gradients are tracked when requires_grad.
  int leaf(Tensor<T> v, bool requires_grad = false) {
    return push(std::move(v), requires_grad, {});
  }

  const Tensor<T>& value(int id) const { return nodes_[id].value; }
  const Tensor<T>& grad(int id) const { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  long size() const { return static_cast<long>(nodes_.size()); }

  void clear() { nodes_.clear(); }

  /// Seed d(loss)/d(loss) = 1 and sweep the tape in reverse creation order.
  void backward(int loss) {
    auto& l = nodes_[loss];
    if (l.value.numel() != 1)
      throw ShapeError("backward: loss must be scalar, got " + shape_str(l.value.shape));
    if (!l.requires_grad)
      throw ConfigError("backward: loss does not depend on any tracked tensor");
    l.grad.data[0] = T(1);
    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id)
      if (nodes_[id].backward) nodes_[id].backward();
  }

  // ---- ops ----

  int matmul(int a, int b) {
    const Tensor<T>& av = value(a);
    const Tensor<T>& bv = value(b);
    if (av.cols() != bv.rows())
      throw ShapeError("matmul: " + shape_str(av.shape) + " x " + shape_str(bv.shape));
    const long m = av.rows(), k = av.cols(), n = bv.cols();
    Tensor<T> out(m, n);
    kernels::matmul_nn(av.data.data(), bv.data.data(), out.data.data(), m, k, n);
    return push(std::move(out), requires_grad(a) || requires_grad(b), [this, a, b, m, k, n](int o) {
      const T* go = nodes_[o].grad.data.data();
      if (nodes_[a].requires_grad) {
        // dA = dC * B^T
        Tensor<T> tmp(m, k);
        kernels::matmul_nt(go, nodes_[b].value.data.data(), tmp.data.data(), m, n, k);
        axpy(nodes_[a].grad, tmp);
      }
      if (nodes_[b].requires_grad) {
        // dB = A^T * dC; matmul_tn accumulates, and tmp starts zeroed
        Tensor<T> tmp(k, n);
        kernels::matmul_tn(nodes_[a].value.data.data(), go, tmp.data.data(), m, k, n);
        axpy(nodes_[b].grad, tmp);
      }
    });
  }

  int transpose(int a) {
    const Tensor<T>& av = value(a);
    const long r = av.rows(), c = av.cols();
    Tensor<T> out(c, r);
    for (long i = 0; i < r; ++i)
      for (long j = 0; j < c; ++j) out(j, i) = av(i, j);
    return push(std::move(out), requires_grad(a), [this, a, r, c](int o) {
      if (!nodes_[a].requires_grad) return;
      const Tensor<T>& go = nodes_[o].grad;
      Tensor<T>& ga = nodes_[a].grad;
      for (long i = 0; i < r; ++i)
        for (long j = 0; j < c; ++j) ga(i, j) += go(j, i);
    });
  }

  /// a + b; b may have a single row, broadcast over a's rows (bias add).
  int add(int a, int b) {
    const Tensor<T>& av = value(a);
    const Tensor<T>& bv = value(b);
    const bool bcast = !av.same_shape(bv);
    if (bcast && !(bv.rows() == 1 && bv.cols() == av.cols()))
      throw ShapeError("add: " + shape_str(av.shape) + " + " + shape_str(bv.shape));
    Tensor<T> out = av;
    const long r = av.rows(), c = av.cols();
    for (long i = 0; i < r; ++i) {
      T* orow = out.row(i);
      const T* brow = bcast ? bv.row(0) : bv.row(i);
      for (long j = 0; j < c; ++j) orow[j] += brow[j];
    }
    return push(std::move(out), requires_grad(a) || requires_grad(b), [this, a, b, bcast](int o) {
      const Tensor<T>& go = nodes_[o].grad;
      if (nodes_[a].requires_grad) axpy(nodes_[a].grad, go);
      if (nodes_[b].requires_grad) {
        Tensor<T>& gb = nodes_[b].grad;
        if (!bcast) {
          axpy(gb, go);
        } else {
          const long r = go.rows(), c = go.cols();
          for (long i = 0; i < r; ++i) {
            const T* grow = go.row(i);
            for (long j = 0; j < c; ++j) gb.data[j] += grow[j];
          }
        }
      }
    });
  }

  int sub(int a, int b) { return add(a, scalar_mul(b, -1.0)); }

  int scalar_mul(int a, double s) {
    Tensor<T> out = value(a);
    for (T& v : out.data) v *= T(s);
    return push(std::move(out), requires_grad(a), [this, a, s](int o) {
      if (!nodes_[a].requires_grad) return;
      const Tensor<T>& go = nodes_[o].grad;
      Tensor<T>& ga = nodes_[a].grad;
      for (size_t i = 0; i < go.data.size(); ++i) ga.data[i] += T(s) * go.data[i];
    });
  }

  int mul(int a, int b) {
    const Tensor<T>& av = value(a);
    const Tensor<T>& bv = value(b);
    if (!av.same_shape(bv))
      throw ShapeError("mul: " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
    Tensor<T> out = av;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
    return push(std::move(out), requires_grad(a) || requires_grad(b), [this, a, b](int o) {
      const Tensor<T>& go = nodes_[o].grad;
      if (nodes_[a].requires_grad) {
        Tensor<T>& ga = nodes_[a].grad;
        const Tensor<T>& bv = nodes_[b].value;
        for (size_t i = 0; i < go.data.size(); ++i) ga.data[i] += go.data[i] * bv.data[i];
      }
      if (nodes_[b].requires_grad) {
        Tensor<T>& gb = nodes_[b].grad;
        const Tensor<T>& av = nodes_[a].value;
        for (size_t i = 0; i < go.data.size(); ++i) gb.data[i] += go.data[i] * av.data[i];
      }
    });
  }

  /// Concatenate 2-D tensors along axis 0 (rows) or 1 (columns).
  int concat(int a, int b, int axis) {
    const Tensor<T>& av = value(a);
    const Tensor<T>& bv = value(b);
    if (axis != 0 && axis != 1) throw ConfigError("concat: axis must be 0 or 1");
    Tensor<T> out;
    if (axis == 0) {
      if (av.cols() != bv.cols())
        throw ShapeError("concat axis 0: " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
      out = Tensor<T>(av.rows() + bv.rows(), av.cols());
      std::copy(av.data.begin(), av.data.end(), out.data.begin());
      std::copy(bv.data.begin(), bv.data.end(), out.data.begin() + av.data.size());
    } else {
      if (av.rows() != bv.rows())
        throw ShapeError("concat axis 1: " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
      out = Tensor<T>(av.rows(), av.cols() + bv.cols());
      for (long i = 0; i < av.rows(); ++i) {
        std::copy(av.row(i), av.row(i) + av.cols(), out.row(i));
        std::copy(bv.row(i), bv.row(i) + bv.cols(), out.row(i) + av.cols());
      }
    }
    const long ar = av.rows(), ac = av.cols();
    return push(std::move(out), requires_grad(a) || requires_grad(b),
                [this, a, b, axis, ar, ac](int o) {
                  const Tensor<T>& go = nodes_[o].grad;
                  if (axis == 0) {
                    if (nodes_[a].requires_grad) {
                      Tensor<T>& ga = nodes_[a].grad;
                      for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += go.data[i];
                    }
                    if (nodes_[b].requires_grad) {
                      Tensor<T>& gb = nodes_[b].grad;
                      const size_t off = nodes_[a].value.data.size();
                      for (size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += go.data[off + i];
                    }
                  } else {
                    for (long i = 0; i < go.rows(); ++i) {
                      const T* grow = go.row(i);
                      if (nodes_[a].requires_grad) {
                        T* ga = nodes_[a].grad.row(i);
                        for (long j = 0; j < ac; ++j) ga[j] += grow[j];
                      }
                      if (nodes_[b].requires_grad) {
                        T* gb = nodes_[b].grad.row(i);
                        for (long j = 0; j < go.cols() - ac; ++j) gb[j] += grow[ac + j];
                      }
                    }
                  }
                });
  }

  /// Select rows by index; backward scatter-adds into the source rows.
  int gather_rows(int a, std::vector<int> idx) {
    const Tensor<T>& av = value(a);
    for (int i : idx)
      if (i < 0 || i >= av.rows())
        throw InvalidInputError("gather_rows: index " + std::to_string(i) + " out of range [0, " +
                                std::to_string(av.rows()) + ")");
    Tensor<T> out(static_cast<long>(idx.size()), av.cols());
    kernels::gather_rows(av.data.data(), idx.data(), out.data.data(),
                         static_cast<long>(idx.size()), av.cols());
    return push(std::move(out), requires_grad(a), [this, a, idx = std::move(idx)](int o) {
      if (!nodes_[a].requires_grad) return;
      kernels::scatter_add_rows(nodes_[o].grad.data.data(), idx.data(),
                                nodes_[a].grad.data.data(), static_cast<long>(idx.size()),
                                nodes_[a].value.cols());
    });
  }

  int relu(int a) {
    Tensor<T> out = value(a);
    for (T& v : out.data) v = v > T(0) ? v : T(0);
    return push(std::move(out), requires_grad(a), [this, a](int o) {
      if (!nodes_[a].requires_grad) return;
      const Tensor<T>& av = nodes_[a].value;
      const Tensor<T>& go = nodes_[o].grad;
      Tensor<T>& ga = nodes_[a].grad;
      for (size_t i = 0; i < go.data.size(); ++i)
        if (av.data[i] > T(0)) ga.data[i] += go.data[i];
    });
  }

  /// Max over groups of g consecutive rows: (n*g) x c -> n x c. The whole-
  /// tensor max pool is the g = rows case. First maximum wins on ties, and
  /// backward routes gradient to that row only.
  int group_max(int a, long g) {
    const Tensor<T>& av = value(a);
    if (g < 1 || av.rows() % g != 0)
      throw ShapeError("group_max: rows " + std::to_string(av.rows()) +
                       " not divisible by group " + std::to_string(g));
    const long n = av.rows() / g, c = av.cols();
    Tensor<T> out(n, c);
    auto arg = std::make_shared<std::vector<int>>(static_cast<size_t>(n * c));
    kernels::group_max(av.data.data(), out.data.data(), arg->data(), n, g, c);
    return push(std::move(out), requires_grad(a), [this, a, arg, n, c, g](int o) {
      if (!nodes_[a].requires_grad) return;
      const Tensor<T>& go = nodes_[o].grad;
      Tensor<T>& ga = nodes_[a].grad;
      for (long i = 0; i < n; ++i)
        for (long j = 0; j < c; ++j)
          ga((*arg)[i * c + j] + i * g, j) += go(i, j);
    });
  }

  int softmax(int a) {
    const Tensor<T>& av = value(a);
    Tensor<T> out = av;
    softmax_rows(out);
    const int id = push(std::move(out), requires_grad(a), {});
    nodes_[id].backward = [this, a, id]() {
      if (!nodes_[a].requires_grad) return;
      const Tensor<T>& y = nodes_[id].value;
      const Tensor<T>& go = nodes_[id].grad;
      Tensor<T>& ga = nodes_[a].grad;
      const long r = y.rows(), c = y.cols();
      for (long i = 0; i < r; ++i) {
        const T* yr = y.row(i);
        const T* gr = go.row(i);
        T dot = 0;
        for (long j = 0; j < c; ++j) dot += gr[j] * yr[j];
        T* gar = ga.row(i);
        for (long j = 0; j < c; ++j) gar[j] += yr[j] * (gr[j] - dot);
      }
    };
    return id;
  }

  int log_softmax(int a) {
    const Tensor<T>& av = value(a);
    Tensor<T> out = av;
    const long r = out.rows(), c = out.cols();
    for (long i = 0; i < r; ++i) {
      T* row = out.row(i);
      const T lse = logsumexp_row(row, c);
      for (long j = 0; j < c; ++j) row[j] -= lse;
    }
    const int id = push(std::move(out), requires_grad(a), {});
    nodes_[id].backward = [this, a, id]() {
      if (!nodes_[a].requires_grad) return;
      const Tensor<T>& y = nodes_[id].value;  // log probabilities
      const Tensor<T>& go = nodes_[id].grad;
      Tensor<T>& ga = nodes_[a].grad;
      const long r = y.rows(), c = y.cols();
      for (long i = 0; i < r; ++i) {
        const T* yr = y.row(i);
        const T* gr = go.row(i);
        T gsum = 0;
        for (long j = 0; j < c; ++j) gsum += gr[j];
        T* gar = ga.row(i);
        for (long j = 0; j < c; ++j) gar[j] += gr[j] - std::exp(yr[j]) * gsum;
      }
    };
    return id;
  }

  /// Mean negative log likelihood of `labels` under row-wise softmax(logits).
  int cross_entropy(int logits, const std::vector<int>& labels) {
    const Tensor<T>& lv = value(logits);
    const long r = lv.rows(), c = lv.cols();
    if (static_cast<long>(labels.size()) != r)
      throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                       std::to_string(r) + " logit rows");
    for (int l : labels)
      if (l < 0 || l >= c)
        throw InvalidInputError("cross_entropy: label " + std::to_string(l) +
                                " out of range [0, " + std::to_string(c) + ")");
    auto probs = std::make_shared<Tensor<T>>(lv);
    softmax_rows(*probs);
    Tensor<T> out(1, 1);
    double acc = 0;
    for (long i = 0; i < r; ++i) {
      const T* row = lv.row(i);
      acc += double(logsumexp_row(row, c)) - double(row[labels[i]]);
    }
    out.data[0] = T(acc / double(r));
    return push(std::move(out), requires_grad(logits),
                [this, logits, probs, labels, r, c](int o) {
                  if (!nodes_[logits].requires_grad) return;
                  const T up = nodes_[o].grad.data[0];
                  Tensor<T>& gl = nodes_[logits].grad;
                  const T inv = T(1) / T(r);
                  for (long i = 0; i < r; ++i) {
                    const T* pr = probs->row(i);
                    T* gr = gl.row(i);
                    for (long j = 0; j < c; ++j) gr[j] += up * inv * pr[j];
                    gr[labels[i]] -= up * inv;
                  }
                });
  }

  int sum(int a) {
    const Tensor<T>& av = value(a);
    Tensor<T> out(1, 1);
    double acc = 0;
    for (T v : av.data) acc += double(v);
    out.data[0] = T(acc);
    return push(std::move(out), requires_grad(a), [this, a](int o) {
      if (!nodes_[a].requires_grad) return;
      const T up = nodes_[o].grad.data[0];
      for (T& g : nodes_[a].grad.data) g += up;
    });
  }

  int mean(int a) { return scalar_mul(sum(a), 1.0 / double(value(a).numel())); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;  // allocated (zeros) only when requires_grad
    bool requires_grad = false;
    std::function<void()> backward;
  };

  int push(Tensor<T> v, bool requires_grad, std::function<void(int)> bw) {
    Node node;
    node.value = std::move(v);
    node.requires_grad = requires_grad;
    if (requires_grad) {
      node.grad.shape = node.value.shape;
      node.grad.data.assign(node.value.data.size(), T(0));
    }
    nodes_.push_back(std::move(node));
    const int id = static_cast<int>(nodes_.size()) - 1;
    if (requires_grad && bw) nodes_[id].backward = [bw = std::move(bw), id]() { bw(id); };
    return id;
  }

  static void axpy(Tensor<T>& acc, const Tensor<T>& g) {
    for (size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += g.data[i];
  }

  static void softmax_rows(Tensor<T>& x) {
    const long r = x.rows(), c = x.cols();
    for (long i = 0; i < r; ++i) {
      T* row = x.row(i);
      T mx = row[0];
      for (long j = 1; j < c; ++j) mx = std::max(mx, row[j]);
      T s = 0;
      for (long j = 0; j < c; ++j) {
        row[j] = std::exp(row[j] - mx);
        s += row[j];
      }
      const T inv = T(1) / s;
      for (long j = 0; j < c; ++j) row[j] *= inv;
    }
  }

  // log(sum(exp(row))) with the max subtracted for stability.
  static T logsumexp_row(const T* row, long c) {
    T mx = row[0];
    for (long j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    T s = 0;
    for (long j = 0; j < c; ++j) s += std::exp(row[j] - mx);
    return mx + std::log(s);
  }

  std::vector<Node> nodes_;
};

enum class Init { KaimingUniform, Zeros };

/// Deterministic parameter initialization. Kaiming bound = sqrt(6 / fan_in)
/// with fan_in = first dimension (weights are laid out in x fan_out).
template <class T>
Tensor<T> init_params(const std::vector<long>& shape, Init scheme, uint64_t seed) {
  Tensor<T> t(shape);
  if (scheme == Init::Zeros) return t;
  const long fan_in = shape.empty() ? 1 : shape[0];
  const double bound = std::sqrt(6.0 / double(fan_in));
  Rng rng(seed);
  for (T& v : t.data) v = T(rng.uniform(-bound, bound));
  return t;
}

/// Pointwise MLP: affine + ReLU per layer, final layer affine only.
/// `layers` holds (weight, bias) node pairs already on the tape.
template <class T>
int mlp_forward(Tape<T>& tp, int x, const std::vector<std::pair<int, int>>& layers) {
  if (layers.empty()) throw ConfigError("mlp_forward: no layers");
  int h = x;
  for (size_t l = 0; l < layers.size(); ++l) {
    h = tp.add(tp.matmul(h, layers[l].first), layers[l].second);
    if (l + 1 < layers.size()) h = tp.relu(h);
  }
  return h;
}

}  // namespace gda::ad
