#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gda/common.hpp"

namespace gda {

enum class Kernel { Gaussian, InverseDistance };
enum class BandwidthMode { Fixed, MeanSqNeighborDist };

struct GraphConfig {
  int k_graph = 20;
  Kernel kernel = Kernel::Gaussian;
  BandwidthMode bandwidth_mode = BandwidthMode::MeanSqNeighborDist;
  double sigma = 1.0;     // Gaussian bandwidth when bandwidth_mode is Fixed
  double epsilon = 1e-3;  // inverse-distance regularizer: f(d) = 1/(d + eps)

  void validate(long n_points) const;
};

/// Rows of the normalized adjacency Ã in CSR form. Each row starts with the
/// self entry (weight exactly 1/2), followed by neighbor indices in ascending
/// order. The neighbor pattern is the union of the kNN relation with its
/// transpose, so the raw weight matrix is symmetric and Ã — being its row
/// normalization — is similar to a symmetric matrix with spectrum in [0, 1].
/// Rows therefore hold at least k_graph + 1 entries, more where the kNN
/// relation was one-sided.
struct NeighborGraph {
  long n = 0;
  std::vector<int> offsets;  // length n + 1
  std::vector<int> nbr;      // column indices; self first per row
  std::vector<double> w;     // normalized weights, parallel to nbr

  long n_points() const { return n; }
  int row_begin(long i) const { return offsets[i]; }
  int row_end(long i) const { return offsets[i + 1]; }
  int row_size(long i) const { return offsets[i + 1] - offsets[i]; }
};

/// Exact k nearest neighbors per point by Euclidean distance, self excluded,
/// ties broken by ascending index. Returns an N×k row-major index matrix;
/// `dist2`, if given, receives the matching squared distances.
Tensor<int> knn(const Tensor<double>& points, int k, Tensor<double>* dist2 = nullptr);

NeighborGraph build_adjacency(const Tensor<double>& points, const GraphConfig& cfg);

/// Row-sparse Ã·features.
Tensor<double> apply_adjacency(const NeighborGraph& graph, const Tensor<double>& features);

/// Debug dump of Ã as "i,j,weight" triples, one per line.
void dump_csv(const NeighborGraph& graph, std::ostream& out);
void dump_csv(const NeighborGraph& graph, const std::string& path);

}  // namespace gda
