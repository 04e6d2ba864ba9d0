#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "gda/gdm.hpp"

namespace gda {

namespace {

Eigen::MatrixXd densify(const NeighborGraph& g) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(g.n, g.n);
  for (long i = 0; i < g.n; ++i)
    for (int t = g.row_begin(i); t < g.row_end(i); ++t) m(i, g.nbr[t]) = g.w[t];
  return m;
}

}  // namespace

SpectralReport spectral_check(const NeighborGraph& graph, long limit) {
  const long n = graph.n_points();
  if (n > limit)
    throw ConfigError("spectral_check: N = " + std::to_string(n) +
                      " exceeds the spectral-check limit " + std::to_string(limit));

  const Eigen::MatrixXd a = densify(graph);
  const Eigen::MatrixXd ha = Eigen::MatrixXd::Identity(n, n) - a;

  // A~ is row-normalized but pattern-symmetric, hence similar to a symmetric
  // matrix; its spectrum is real. The general solver is still used so the
  // check measures that property instead of assuming it.
  Eigen::EigenSolver<Eigen::MatrixXd> es_a(a, /*computeEigenvectors=*/true);
  if (es_a.info() != Eigen::Success)
    throw NumericError("spectral_check: eigensolver failed to converge on A~ (N = " +
                       std::to_string(n) + ")");
  Eigen::EigenSolver<Eigen::MatrixXd> es_h(ha, /*computeEigenvectors=*/false);
  if (es_h.info() != Eigen::Success)
    throw NumericError("spectral_check: eigensolver failed to converge on I - A~ (N = " +
                       std::to_string(n) + ")");

  SpectralReport report;
  report.eigenvalues_A.resize(n);
  report.eigenvalues_hA.resize(n);
  for (long i = 0; i < n; ++i) {
    report.eigenvalues_A[i] = es_a.eigenvalues()[i].real();
    report.eigenvalues_hA[i] = es_h.eigenvalues()[i].real();
    report.max_imag_part = std::max(report.max_imag_part,
                                    std::abs(es_a.eigenvalues()[i].imag()));
    report.max_imag_part = std::max(report.max_imag_part,
                                    std::abs(es_h.eigenvalues()[i].imag()));
  }
  std::sort(report.eigenvalues_A.begin(), report.eigenvalues_A.end(), std::greater<>());
  std::sort(report.eigenvalues_hA.begin(), report.eigenvalues_hA.end());

  // With lambda descending and mu ascending, matching is positional:
  // mu_i should equal 1 - lambda_i.
  for (long i = 0; i < n; ++i)
    report.max_response_error =
        std::max(report.max_response_error,
                 std::abs(report.eigenvalues_hA[i] - (1.0 - report.eigenvalues_A[i])));

  const Eigen::MatrixXcd v = es_a.eigenvectors();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
  const double smin = svd.singularValues().minCoeff();
  report.eigenvector_basis_condition =
      smin > 0 ? svd.singularValues().maxCoeff() / smin : std::numeric_limits<double>::infinity();
  return report;
}

}  // namespace gda
