#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "gda/gdm.hpp"
#include "gda/graph.hpp"
#include "gda/pointcloud.hpp"
#include "oracles.hpp"

using namespace gda;

namespace {

Tensor<double> random_cloud(long n, uint64_t seed) {
  Rng rng(seed);
  return oracle::random_tensor<double>(n, 3, rng);
}

Tensor<double> densify(const NeighborGraph& g) {
  Tensor<double> a(g.n, g.n);
  for (long i = 0; i < g.n; ++i)
    for (long e = g.row_begin(i); e < g.row_end(i); ++e) a(i, g.nbr[e]) = g.w[e];
  return a;
}

}  // namespace

TEST_CASE("highpass equals the dense (I - A~) X product") {
  GraphConfig cfg;
  cfg.k_graph = 6;
  Tensor<double> pts = random_cloud(40, 3);
  NeighborGraph g = build_adjacency(pts, cfg);
  Rng rng(7);
  Tensor<double> x = oracle::random_tensor<double>(40, 4, rng);

  Tensor<double> got = highpass(g, x);
  Tensor<double> ax = oracle::matmul(densify(g), x);
  for (size_t i = 0; i < got.data.size(); ++i)
    CHECK(got.data[i] == doctest::Approx(x.data[i] - ax.data[i]).epsilon(1e-12));
}

TEST_CASE("constant features produce exactly zero variation") {
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    GraphConfig cfg;
    cfg.k_graph = 8;
    Tensor<double> pts = random_cloud(64, seed);
    NeighborGraph g = build_adjacency(pts, cfg);

    Tensor<double> constant(64, 5);
    for (long j = 0; j < 5; ++j)
      for (long i = 0; i < 64; ++i) constant(i, j) = double(j) - 1.5;
    std::vector<double> scores = variation_scores(highpass(g, constant));
    for (double s : scores) CHECK(std::fabs(s) <= 1e-12);
  }
}

TEST_CASE("variation scores are the row norms of the filtered features") {
  Tensor<double> f(3, 2);
  f(0, 0) = 3;
  f(0, 1) = 4;
  f(1, 0) = -1;
  std::vector<double> s = variation_scores(f);
  CHECK(s[0] == doctest::Approx(5.0));
  CHECK(s[1] == doctest::Approx(1.0));
  CHECK(s[2] == 0.0);
}

TEST_CASE("disentangle orders descending, breaks ties by index, splits ends") {
  // Hand-built scores via features on a 2-point-per-cluster line; easier to
  // drive through a direct split on a tiny graph.
  GraphConfig cfg;
  cfg.k_graph = 3;
  Tensor<double> pts = random_cloud(12, 9);
  NeighborGraph g = build_adjacency(pts, cfg);
  VariationSplit sp = disentangle(g, pts, 3);

  REQUIRE(sp.order.size() == 12);
  REQUIRE(sp.sharp_idx.size() == 3);
  REQUIRE(sp.gentle_idx.size() == 3);
  for (size_t i = 1; i < sp.order.size(); ++i) {
    const double a = sp.scores[sp.order[i - 1]], b = sp.scores[sp.order[i]];
    CHECK(a >= b);
    if (a == b) CHECK(sp.order[i - 1] < sp.order[i]);
  }
  // sharp = top of the ordering, gentle = bottom, disjoint
  for (int i = 0; i < 3; ++i) {
    CHECK(sp.sharp_idx[i] == sp.order[i]);
    CHECK(sp.gentle_idx[i] == sp.order[9 + i]);
  }
  std::set<int> sharp(sp.sharp_idx.begin(), sp.sharp_idx.end());
  for (int gi : sp.gentle_idx) CHECK(sharp.count(gi) == 0);
}

TEST_CASE("disentangle rejects selection counts that would overlap") {
  GraphConfig cfg;
  cfg.k_graph = 3;
  Tensor<double> pts = random_cloud(10, 13);
  NeighborGraph g = build_adjacency(pts, cfg);
  CHECK_THROWS_AS(disentangle(g, pts, 0), ConfigError);
  CHECK_THROWS_AS(disentangle(g, pts, 6), ConfigError);
  CHECK(disentangle(g, pts, 5).m == 5);
}

TEST_CASE("crease points of a folded plane score above the flat interior") {
  SyntheticSpec spec;
  spec.family = ShapeFamily::PlaneWithCrease;
  spec.n_points = 512;
  spec.seed = 21;
  PointCloud cloud = generate_synthetic(spec);
  REQUIRE(!cloud.edge_mask.empty());

  GraphConfig cfg;
  cfg.k_graph = 20;
  Tensor<double> coords(512, 3);
  for (long i = 0; i < 512; ++i)
    for (long j = 0; j < 3; ++j) coords(i, j) = cloud.points(i, j);
  NeighborGraph g = build_adjacency(coords, cfg);
  VariationSplit sp = disentangle(g, coords, 128);

  double crease_mean = 0, flat_mean = 0;
  long crease_n = 0, flat_n = 0;
  for (long i = 0; i < 512; ++i) {
    if (cloud.edge_mask[i]) {
      crease_mean += sp.scores[i];
      ++crease_n;
    } else {
      flat_mean += sp.scores[i];
      ++flat_n;
    }
  }
  REQUIRE(crease_n > 0);
  crease_mean /= crease_n;
  flat_mean /= flat_n;
  CHECK(crease_mean > flat_mean);
}

TEST_CASE("spectral check: two-point graph has the closed-form spectrum {1, 0}") {
  GraphConfig cfg;
  cfg.k_graph = 1;
  Tensor<double> pts(2, 3);
  pts(1, 2) = 0.4;
  NeighborGraph g = build_adjacency(pts, cfg);
  SpectralReport rep = spectral_check(g);
  REQUIRE(rep.eigenvalues_A.size() == 2);
  CHECK(rep.eigenvalues_A[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.eigenvalues_A[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rep.max_response_error <= 1e-12);
}

TEST_CASE("frequency response identity holds on random graphs") {
  for (long n : {8L, 32L, 64L}) {
    GraphConfig cfg;
    cfg.k_graph = n > 8 ? 8 : 2;
    Tensor<double> pts = random_cloud(n, uint64_t(n) * 7 + 1);
    NeighborGraph g = build_adjacency(pts, cfg);
    SpectralReport rep = spectral_check(g);
    CHECK(rep.max_response_error <= 1e-8);
    CHECK(rep.max_imag_part <= 1e-8);
    for (double ev : rep.eigenvalues_A) {
      CHECK(ev >= -1e-8);
      CHECK(ev <= 1.0 + 1e-8);
    }
  }
}

TEST_CASE("spectral check refuses graphs beyond the densification limit") {
  GraphConfig cfg;
  cfg.k_graph = 4;
  Tensor<double> pts = random_cloud(kSpectralLimit + 1, 3);
  NeighborGraph g = build_adjacency(pts, cfg);
  CHECK_THROWS_AS(spectral_check(g), ConfigError);
}

TEST_CASE("eigenvalues of the high-pass filter are the mirrored adjacency spectrum") {
  GraphConfig cfg;
  cfg.k_graph = 5;
  Tensor<double> pts = random_cloud(24, 29);
  NeighborGraph g = build_adjacency(pts, cfg);
  SpectralReport rep = spectral_check(g);
  REQUIRE(rep.eigenvalues_A.size() == rep.eigenvalues_hA.size());
  // A sorted descending, I-A sorted ascending: mu_i = 1 - lambda_i pairwise
  for (size_t i = 0; i < rep.eigenvalues_A.size(); ++i)
    CHECK(rep.eigenvalues_hA[i] ==
          doctest::Approx(1.0 - rep.eigenvalues_A[i]).epsilon(1e-8));
}
