#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <vector>

#include "doctest.h"
#include "gda/kernels.hpp"
#include "gda/parallel.hpp"
#include "oracles.hpp"

using namespace gda;

namespace {

std::vector<double> randvec(long n, Rng& rng) {
  std::vector<double> v(static_cast<size_t>(n));
  for (auto& x : v) x = rng.normal();
  return v;
}

// Run `body` writing into a fresh buffer once under each thread count and
// require the outputs to be bitwise identical. This is the contract the
// OpenMP kernels promise: parallelism never changes a single bit.
template <class F>
void check_thread_invariance(long out_len, F body) {
  std::vector<double> ref(static_cast<size_t>(out_len), 0.0);
  par::set_threads(1);
  body(ref.data());
  for (int nt : {2, 3, 4}) {
    std::vector<double> got(static_cast<size_t>(out_len), 0.0);
    par::set_threads(nt);
    body(got.data());
    for (size_t i = 0; i < ref.size(); ++i) CHECK(got[i] == ref[i]);
  }
  par::set_threads(1);
}

}  // namespace

TEST_CASE("matmul_nn matches the oracle exactly and ignores thread count") {
  Rng rng(101);
  const long m = 37, k = 23, n = 29;
  const auto a = randvec(m * k, rng);
  const auto b = randvec(k * n, rng);

  Tensor<double> ta(m, k), tb(k, n);
  ta.data = a;
  tb.data = b;
  const auto want = oracle::matmul(ta, tb);

  std::vector<double> got(static_cast<size_t>(m * n));
  kernels::serial::matmul_nn(a.data(), b.data(), got.data(), m, k, n);
  // same accumulation order as the oracle, so equality is exact
  for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want.data[i]);

  check_thread_invariance(m * n, [&](double* out) {
    kernels::matmul_nn(a.data(), b.data(), out, m, k, n);
  });
}

TEST_CASE("matmul_nt equals matmul_nn against the explicit transpose") {
  Rng rng(102);
  const long m = 19, k = 31, n = 17;
  const auto a = randvec(m * k, rng);
  const auto b = randvec(n * k, rng);  // n x k, used as B^T

  std::vector<double> bt(static_cast<size_t>(k * n));
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < k; ++j) bt[static_cast<size_t>(j) * n + i] = b[static_cast<size_t>(i) * k + j];

  std::vector<double> via_nt(static_cast<size_t>(m * n));
  kernels::serial::matmul_nt(a.data(), b.data(), via_nt.data(), m, k, n);

  std::vector<double> via_nn(static_cast<size_t>(m * n), 0.0);
  kernels::serial::matmul_nn(a.data(), bt.data(), via_nn.data(), m, k, n);

  // different accumulation patterns -> tolerance, not equality
  CHECK(oracle::max_rel_err(via_nt, via_nn) <= 1e-12);

  check_thread_invariance(m * n, [&](double* out) {
    kernels::matmul_nt(a.data(), b.data(), out, m, k, n);
  });
}

TEST_CASE("matmul_tn accumulates into the output the caller zeroed") {
  Rng rng(103);
  const long m = 41, k = 13, n = 21;
  const auto a = randvec(m * k, rng);
  const auto b = randvec(m * n, rng);

  std::vector<double> once(static_cast<size_t>(k * n), 0.0);
  kernels::serial::matmul_tn(a.data(), b.data(), once.data(), m, k, n);

  // accumulation semantics: a second call doubles the result (up to the
  // rounding of restarting the sum from the stored value)
  std::vector<double> twice = once;
  kernels::serial::matmul_tn(a.data(), b.data(), twice.data(), m, k, n);
  for (size_t i = 0; i < once.size(); ++i)
    CHECK(twice[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-12));

  // against the oracle through an explicit transpose of A
  Tensor<double> at(k, m), tb(m, n);
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < k; ++j) at.data[static_cast<size_t>(j) * m + i] = a[static_cast<size_t>(i) * k + j];
  tb.data = b;
  const auto want = oracle::matmul(at, tb);
  CHECK(oracle::max_rel_err(once, want.data) <= 1e-12);

  // rows of C are partitioned across threads, so parallel output is bitwise
  // equal to serial despite the += pattern
  check_thread_invariance(k * n, [&](double* out) {
    kernels::matmul_tn(a.data(), b.data(), out, m, k, n);
  });
}

TEST_CASE("knn matches the all-pairs oracle and ignores thread count") {
  Rng rng(104);
  const long n = 200, d = 3;
  const int k = 12;
  Tensor<double> pts(n, d);
  for (auto& x : pts.data) x = rng.normal();

  const auto want = oracle::knn(pts, k);
  std::vector<int> idx(static_cast<size_t>(n) * k);
  std::vector<double> dist(static_cast<size_t>(n) * k);
  kernels::serial::knn(pts.data.data(), n, d, k, idx.data(), dist.data());
  for (size_t i = 0; i < idx.size(); ++i) CHECK(idx[i] == want[i]);

  // distances are sorted ascending within each row
  for (long i = 0; i < n; ++i)
    for (int t = 1; t < k; ++t)
      CHECK(dist[static_cast<size_t>(i) * k + t] >= dist[static_cast<size_t>(i) * k + t - 1]);

  par::set_threads(4);
  std::vector<int> idx_par(idx.size());
  kernels::knn(pts.data.data(), n, d, k, idx_par.data());
  par::set_threads(1);
  for (size_t i = 0; i < idx.size(); ++i) CHECK(idx_par[i] == idx[i]);
}

TEST_CASE("knn tie-break picks the lower index on a square") {
  // four corners of a unit square: both non-adjacent corners are sqrt(2)
  // away, both adjacent ones are 1 away; with k=3 the diagonal corner and
  // both neighbours appear, neighbours first, ties by index
  const std::vector<double> pts = {0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1, 0};
  std::vector<int> idx(4 * 3);
  kernels::serial::knn(pts.data(), 4, 3, 3, idx.data());
  CHECK(idx[0] == 1);  // point 0: neighbours 1 and 2 at distance 1, tie -> 1 first
  CHECK(idx[1] == 2);
  CHECK(idx[2] == 3);
}

TEST_CASE("neighbor_weighted_sum matches a dense matrix product") {
  Rng rng(105);
  const long n = 40, c = 7;
  // build a ragged adjacency with 1..5 neighbours per row
  std::vector<int> offsets = {0};
  std::vector<int> nbr;
  std::vector<double> w;
  for (long i = 0; i < n; ++i) {
    const int deg = 1 + int(rng.next_u64() % 5);
    for (int t = 0; t < deg; ++t) {
      nbr.push_back(int(rng.next_u64() % n));
      w.push_back(rng.normal());
    }
    offsets.push_back(int(nbr.size()));
  }
  const auto x = randvec(n * c, rng);

  // dense oracle: W (n x n) * X
  Tensor<double> wd(n, n), xd(n, c);
  for (long i = 0; i < n; ++i)
    for (int t = offsets[i]; t < offsets[i + 1]; ++t)
      wd(i, nbr[static_cast<size_t>(t)]) += w[static_cast<size_t>(t)];
  xd.data = x;
  const auto want = oracle::matmul(wd, xd);

  std::vector<double> got(static_cast<size_t>(n * c));
  kernels::serial::neighbor_weighted_sum(offsets.data(), nbr.data(), w.data(), x.data(),
                                         got.data(), n, c);
  CHECK(oracle::max_rel_err(got, want.data) <= 1e-12);

  check_thread_invariance(n * c, [&](double* out) {
    kernels::neighbor_weighted_sum(offsets.data(), nbr.data(), w.data(), x.data(), out, n, c);
  });
}

TEST_CASE("group_max takes the first maximum in each group") {
  // two groups of three rows, two channels; group 1 has a tie in channel 0
  const std::vector<double> x = {1, 5, 3, 2, 2, 9,    // group 0
                                 7, 0, 7, 1, 4, 2};   // group 1: 7 appears at rows 0 and 1
  std::vector<double> out(4);
  std::vector<int> arg(4);
  kernels::serial::group_max(x.data(), out.data(), arg.data(), 2, 3, 2);
  CHECK(out[0] == 3);
  CHECK(arg[0] == 1);
  CHECK(out[1] == 9);
  CHECK(arg[1] == 2);
  CHECK(out[2] == 7);
  CHECK(arg[2] == 0);  // strict > keeps the first occurrence
  CHECK(out[3] == 2);
  CHECK(arg[3] == 2);

  Rng rng(106);
  const long n = 30, g = 8, c = 5;
  const auto big = randvec(n * g * c, rng);
  std::vector<int> arg_ref(static_cast<size_t>(n * c)), arg_par(static_cast<size_t>(n * c));
  std::vector<double> ref(static_cast<size_t>(n * c)), par_out(static_cast<size_t>(n * c));
  par::set_threads(1);
  kernels::group_max(big.data(), ref.data(), arg_ref.data(), n, g, c);
  par::set_threads(4);
  kernels::group_max(big.data(), par_out.data(), arg_par.data(), n, g, c);
  par::set_threads(1);
  for (size_t i = 0; i < ref.size(); ++i) {
    CHECK(par_out[i] == ref[i]);
    CHECK(arg_par[i] == arg_ref[i]);
  }
}

TEST_CASE("gather then scatter_add composes to counted row sums") {
  Rng rng(107);
  const long rows = 12, c = 6;
  const auto x = randvec(rows * c, rng);
  const std::vector<int> idx = {3, 0, 3, 7, 0, 3};  // row 3 thrice, row 0 twice

  std::vector<double> gathered(idx.size() * c);
  kernels::serial::gather_rows(x.data(), idx.data(), gathered.data(), long(idx.size()), c);
  for (size_t r = 0; r < idx.size(); ++r)
    for (long j = 0; j < c; ++j)
      CHECK(gathered[r * c + j] == x[static_cast<size_t>(idx[r]) * c + j]);

  std::vector<double> back(static_cast<size_t>(rows * c), 0.0);
  kernels::scatter_add_rows(gathered.data(), idx.data(), back.data(), long(idx.size()), c);
  std::vector<int> count(rows, 0);
  for (int i : idx) count[static_cast<size_t>(i)]++;
  for (long r = 0; r < rows; ++r)
    for (long j = 0; j < c; ++j)
      CHECK(back[static_cast<size_t>(r) * c + j] ==
            doctest::Approx(count[static_cast<size_t>(r)] * x[static_cast<size_t>(r) * c + j]));

  check_thread_invariance(long(idx.size()) * c, [&](double* out) {
    kernels::gather_rows(x.data(), idx.data(), out, long(idx.size()), c);
  });
}

TEST_CASE("thread plumbing: setter wins, out-of-range clamps to one") {
  par::set_threads(3);
  CHECK(par::threads() == 3);
  par::set_threads(0);
  CHECK(par::threads() == 1);
  par::set_threads(-4);
  CHECK(par::threads() == 1);
  par::set_threads(1);
}
