#pragma once

#include <vector>

#include "gda/common.hpp"
#include "gda/graph.hpp"

namespace gda {

/// The fixed two-tap high-pass filter h(A~) = h0*I + h1*A~ = I - A~.
/// Present as a named type so the coefficients live in one place; other
/// polynomial filters are out of scope.
struct FilterSpec {
  static constexpr int length = 2;
  static constexpr double h0 = 1.0;
  static constexpr double h1 = -1.0;
};

/// Result of splitting a cloud by per-point variation under the high-pass
/// filter: scores, the descending ordering, and the selected index sets.
struct VariationSplit {
  std::vector<double> scores;   // length N, each >= 0
  std::vector<int> order;       // descending score, ties by ascending index
  long m = 0;                   // selection count
  std::vector<int> sharp_idx;   // order[0..m)
  std::vector<int> gentle_idx;  // order[N-m..N)
};

struct SpectralReport {
  std::vector<double> eigenvalues_A;   // spectrum of A~, descending
  std::vector<double> eigenvalues_hA;  // spectrum of I - A~, ascending
  double max_response_error = 0;       // max |mu_i - (1 - lambda_i)| after matching
  double max_imag_part = 0;            // largest |Im| either solver produced
  double eigenvector_basis_condition = 0;
};

inline constexpr long kSpectralLimit = 128;

/// (I - A~) X, matrix-free: features minus the neighbor-weighted average.
Tensor<double> highpass(const NeighborGraph& graph, const Tensor<double>& features);

/// Per-row Euclidean norms of the filtered features.
std::vector<double> variation_scores(const Tensor<double>& filtered);

/// highpass -> variation_scores -> descending sort; sharp = first m points,
/// gentle = last m. Requires 1 <= m <= N/2 so the components cannot overlap.
VariationSplit disentangle(const NeighborGraph& graph, const Tensor<double>& features, long m);

/// Dense eigendecomposition of A~ and I - A~; verifies the frequency-response
/// identity mu_i = 1 - lambda_i. Validation path only — refuses graphs larger
/// than `limit` points.
SpectralReport spectral_check(const NeighborGraph& graph, long limit = kSpectralLimit);

}  // namespace gda
