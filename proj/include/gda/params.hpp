#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gda/tensor.hpp"

namespace gda::ad {

/// Named parameter tensors in creation order. Names are dotted paths
/// ("block1.sgcam.theta_o.w0") and unique within a store.
template <class T>
struct ParamStore {
  std::vector<std::string> order;
  std::map<std::string, Tensor<T>> values;

  Tensor<T>& add(const std::string& name, Tensor<T> t) {
    auto [it, inserted] = values.emplace(name, std::move(t));
    if (!inserted) throw ConfigError("parameter '" + name + "' already exists");
    order.push_back(name);
    return it->second;
  }

  Tensor<T>& at(const std::string& name) {
    auto it = values.find(name);
    if (it == values.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }
  const Tensor<T>& at(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }
  bool has(const std::string& name) const { return values.count(name) != 0; }

  long count_params() const {
    long n = 0;
    for (const auto& [name, t] : values) n += t.numel();
    return n;
  }

  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    out.order = order;
    for (const auto& name : order) out.values.emplace(name, values.at(name).template cast<U>());
    return out;
  }
};

/// Ties a store to a tape for one forward pass: every parameter becomes a
/// leaf with requires_grad, bound at most once, and gradients are read back
/// by name after backward().
template <class T>
struct Binding {
  Tape<T>& tape;
  const ParamStore<T>& store;
  std::map<std::string, int> ids;

  Binding(Tape<T>& t, const ParamStore<T>& s) : tape(t), store(s) {}

  int bind(const std::string& name) {
    auto it = ids.find(name);
    if (it != ids.end()) return it->second;
    const int id = tape.leaf(store.at(name), /*requires_grad=*/true);
    ids.emplace(name, id);
    return id;
  }

  const Tensor<T>& grad(const std::string& name) const {
    auto it = ids.find(name);
    if (it == ids.end()) throw ConfigError("parameter '" + name + "' was never bound");
    return tape.grad(it->second);
  }
};

/// Create an MLP's parameters under `prefix`: weights prefix.w0, prefix.w1,
/// ... (kaiming) and biases prefix.b0, ... (zeros). `dims` lists the layer
/// widths input-first, e.g. {3, 64, 64}. With zero_final the last weight
/// starts at zero, making the MLP the zero map at initialization.
template <class T>
void make_mlp(ParamStore<T>& store, const std::string& prefix, const std::vector<long>& dims,
              Rng& rng, bool zero_final = false) {
  if (dims.size() < 2) throw ConfigError("make_mlp: need at least input and output widths");
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const bool last = l + 2 == dims.size();
    const Init scheme = (zero_final && last) ? Init::Zeros : Init::KaimingUniform;
    store.add(prefix + ".w" + std::to_string(l),
              init_params<T>({dims[l], dims[l + 1]}, scheme, rng.next_u64()));
    store.add(prefix + ".b" + std::to_string(l),
              init_params<T>({1, dims[l + 1]}, Init::Zeros, rng.next_u64()));
  }
}

/// Bind an MLP created by make_mlp; returns (weight, bias) node pairs for
/// mlp_forward. Layer count is discovered from the store.
template <class T>
std::vector<std::pair<int, int>> bind_mlp(Binding<T>& b, const std::string& prefix) {
  std::vector<std::pair<int, int>> layers;
  for (int l = 0;; ++l) {
    const std::string w = prefix + ".w" + std::to_string(l);
    if (!b.store.has(w)) break;
    layers.emplace_back(b.bind(w), b.bind(prefix + ".b" + std::to_string(l)));
  }
  if (layers.empty()) throw ConfigError("bind_mlp: no layers under '" + prefix + "'");
  return layers;
}

}  // namespace gda::ad
