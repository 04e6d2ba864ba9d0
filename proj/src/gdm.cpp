#include "gda/gdm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gda {

Tensor<double> highpass(const NeighborGraph& graph, const Tensor<double>& features) {
  Tensor<double> out = apply_adjacency(graph, features);
  for (size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = features.data[i] - out.data[i];
  return out;
}

std::vector<double> variation_scores(const Tensor<double>& filtered) {
  const long n = filtered.rows(), c = filtered.cols();
  std::vector<double> scores(n);
  for (long i = 0; i < n; ++i) {
    const double* r = filtered.row(i);
    double s = 0;
    for (long j = 0; j < c; ++j) s += r[j] * r[j];
    scores[i] = std::sqrt(s);
  }
  return scores;
}

VariationSplit disentangle(const NeighborGraph& graph, const Tensor<double>& features, long m) {
  const long n = graph.n_points();
  if (m < 1 || 2 * m > n)
    throw ConfigError("disentangle: m = " + std::to_string(m) +
                      " must satisfy 1 <= m <= N/2 with N = " + std::to_string(n));
  VariationSplit split;
  split.m = m;
  split.scores = variation_scores(highpass(graph, features));
  split.order.resize(n);
  std::iota(split.order.begin(), split.order.end(), 0);
  std::stable_sort(split.order.begin(), split.order.end(),
                   [&](int a, int b) { return split.scores[a] > split.scores[b]; });
  split.sharp_idx.assign(split.order.begin(), split.order.begin() + m);
  split.gentle_idx.assign(split.order.end() - m, split.order.end());
  return split;
}

}  // namespace gda
