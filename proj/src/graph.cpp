#include "gda/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "gda/kernels.hpp"
#include "gda/parallel.hpp"

namespace gda {

void GraphConfig::validate(long n_points) const {
  if (k_graph < 1) throw ConfigError("graph: k_graph must be >= 1");
  if (k_graph >= n_points)
    throw ConfigError("graph: k_graph = " + std::to_string(k_graph) +
                      " must be < N = " + std::to_string(n_points));
  if (bandwidth_mode == BandwidthMode::Fixed && !(sigma > 0))
    throw ConfigError("graph: fixed bandwidth sigma must be > 0");
  if (kernel == Kernel::InverseDistance && !(epsilon > 0))
    throw ConfigError("graph: inverse-distance epsilon must be > 0");
}

Tensor<int> knn(const Tensor<double>& points, int k, Tensor<double>* dist2) {
  const long n = points.rows();
  if (k < 1 || k >= n)
    throw ConfigError("knn: k = " + std::to_string(k) + " must satisfy 1 <= k < N = " +
                      std::to_string(n));
  Tensor<int> idx(n, static_cast<long>(k));
  if (dist2) *dist2 = Tensor<double>(n, static_cast<long>(k));
  kernels::knn(points.data.data(), n, points.cols(), k, idx.data.data(),
               dist2 ? dist2->data.data() : nullptr);
  return idx;
}

namespace {

double squared_dist(const double* a, const double* b, long d) {
  double s = 0;
  for (long c = 0; c < d; ++c) {
    const double diff = a[c] - b[c];
    s += diff * diff;
  }
  return s;
}

double weight_of(const GraphConfig& cfg, double d2, double sigma2) {
  if (cfg.kernel == Kernel::Gaussian) return std::exp(-d2 / sigma2);
  return 1.0 / (std::sqrt(d2) + cfg.epsilon);
}

// Sum in ascending-value order: permutation-invariant for distinct values and
// numerically friendly (small terms first).
double sorted_sum(std::vector<double>& vals) {
  std::sort(vals.begin(), vals.end());
  double s = 0;
  for (double v : vals) s += v;
  return s;
}

}  // namespace

NeighborGraph build_adjacency(const Tensor<double>& points, const GraphConfig& cfg) {
  const long n = points.rows();
  const long d = points.cols();
  cfg.validate(n);

  Tensor<double> knn_d2;
  Tensor<int> idx = knn(points, cfg.k_graph, &knn_d2);

  // Bandwidth: mean squared distance to the k nearest neighbors across the
  // whole cloud. Summed in sorted order so the result does not depend on
  // point order.
  double sigma2 = cfg.sigma * cfg.sigma;
  if (cfg.kernel == Kernel::Gaussian && cfg.bandwidth_mode == BandwidthMode::MeanSqNeighborDist) {
    std::vector<double> all(knn_d2.data);
    sigma2 = sorted_sum(all) / double(all.size());
    if (!(sigma2 > 0)) sigma2 = 1.0;  // all points coincident; f(0) is flat anyway
  }

  // Union-symmetrize the neighbor pattern: edge {i,j} whenever either point
  // lists the other. The raw weights f(d_ij) are then symmetric by
  // construction, which is what pins the spectrum of Ã to the real line.
  std::vector<std::vector<int>> adj(n);
  for (long i = 0; i < n; ++i) adj[i].reserve(2 * cfg.k_graph);
  for (long i = 0; i < n; ++i)
    for (int t = 0; t < cfg.k_graph; ++t) {
      const int j = idx(i, t);
      adj[i].push_back(j);
      adj[j].push_back(static_cast<int>(i));
    }

  NeighborGraph g;
  g.n = n;
  g.offsets.resize(n + 1);
  g.offsets[0] = 0;
  for (long i = 0; i < n; ++i) {
    auto& row = adj[i];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    g.offsets[i + 1] = g.offsets[i] + 1 + static_cast<int>(row.size());
  }
  g.nbr.resize(g.offsets[n]);
  g.w.resize(g.offsets[n]);

  std::vector<double> scratch;
  for (long i = 0; i < n; ++i) {
    const auto& row = adj[i];
    const int base = g.offsets[i];
    scratch.clear();
    for (int j : row)
      scratch.push_back(weight_of(cfg, squared_dist(points.row(i), points.row(j), d), sigma2));
    std::vector<double> raw = scratch;
    const double s = sorted_sum(scratch);
    if (!(s > 0))
      throw NumericError("build_adjacency: all neighbor weights of point " + std::to_string(i) +
                         " vanished (kernel underflow)");
    // Self loop A_ii = sum of the row makes the row total exactly 2s, so the
    // normalized self weight is exactly 1/2.
    const double denom = 2.0 * s;
    g.nbr[base] = static_cast<int>(i);
    g.w[base] = 0.5;
    for (size_t t = 0; t < row.size(); ++t) {
      g.nbr[base + 1 + t] = row[t];
      g.w[base + 1 + t] = raw[t] / denom;
    }
  }
  return g;
}

Tensor<double> apply_adjacency(const NeighborGraph& graph, const Tensor<double>& features) {
  if (features.rows() != graph.n)
    throw ShapeError("apply_adjacency: feature rows " + std::to_string(features.rows()) +
                     " != graph points " + std::to_string(graph.n));
  Tensor<double> out(graph.n, features.cols());
  kernels::neighbor_weighted_sum(graph.offsets.data(), graph.nbr.data(), graph.w.data(),
                                 features.data.data(), out.data.data(), graph.n, features.cols());
  return out;
}

void dump_csv(const NeighborGraph& graph, std::ostream& out) {
  char buf[64];
  out << "i,j,weight\n";
  for (long i = 0; i < graph.n; ++i)
    for (int t = graph.row_begin(i); t < graph.row_end(i); ++t) {
      std::snprintf(buf, sizeof buf, "%ld,%d,%.17g\n", i, graph.nbr[t], graph.w[t]);
      out << buf;
    }
}

void dump_csv(const NeighborGraph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  dump_csv(graph, out);
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace gda
