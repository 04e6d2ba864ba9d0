// Timing harness for the compute kernels: serial reference vs the OpenMP
// dispatcher at several thread counts. Each (kernel, thread count) cell is
// the median of --reps timed runs after one warmup, and every parallel run
// is checked bitwise against the serial output before it is reported —
// a speedup from a wrong answer is not a speedup.
//
// On a single-core machine the interesting column is the 1-thread one: it
// shows what the dispatch layer costs over calling the serial body directly.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gda/kernels.hpp"
#include "gda/parallel.hpp"

using gda::Rng;
namespace k = gda::kernels;

namespace {

using Clock = std::chrono::steady_clock;

double time_once(const std::function<void()>& body) {
  const auto t0 = Clock::now();
  body();
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double median_ms(int reps, const std::function<void()>& body) {
  body();  // warmup
  std::vector<double> ms;
  ms.reserve(reps);
  for (int r = 0; r < reps; ++r) ms.push_back(time_once(body));
  std::sort(ms.begin(), ms.end());
  return ms[ms.size() / 2];
}

std::vector<double> randvec(size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

struct Case {
  std::string name;
  std::function<void()> serial;    // fills ref buffers
  std::function<void()> parallel;  // fills test buffers
  std::function<bool()> equal;     // ref == test, bitwise
};

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel benchmark: serial reference vs OpenMP dispatcher"};
  int reps = 7;
  std::vector<int> threads = {1, 2, 4};
  double scale = 1.0;
  app.add_option("--reps", reps, "timed repetitions per cell (median reported)")
      ->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "thread counts to sweep");
  app.add_option("--scale", scale, "problem size multiplier")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  Rng rng(2024);

  // matmul family
  const long mm_m = std::lround(256 * scale), mm_k = std::lround(192 * scale),
             mm_n = std::lround(256 * scale);
  const auto A = randvec(mm_m * mm_k, rng);
  const auto B_nn = randvec(mm_k * mm_n, rng);   // k x n
  const auto B_nt = randvec(mm_n * mm_k, rng);   // n x k
  const auto B_tn = randvec(mm_m * mm_n, rng);   // m x n
  std::vector<double> mm_ref(mm_m * mm_n), mm_out(mm_m * mm_n);
  std::vector<double> tn_ref(mm_k * mm_n), tn_out(mm_k * mm_n);

  // knn + the CSR consumers
  const long np = std::lround(4096 * scale);
  const int kn = 20;
  const long nc = 64;
  const auto pts = randvec(np * 3, rng);
  std::vector<int> knn_ref(np * kn), knn_out(np * kn);
  const auto feats = randvec(np * nc, rng);

  // CSR rows of kn+1 entries (self first), mirroring the neighbourhood layout
  std::vector<int> offsets(np + 1), nbr(np * (kn + 1));
  std::vector<double> wts(np * (kn + 1));
  std::vector<double> nws_ref(np * nc), nws_out(np * nc);

  // group max over knn-sized groups
  const long gm_n = std::lround(2048 * scale), gm_g = 20, gm_c = 64;
  const auto gm_x = randvec(gm_n * gm_g * gm_c, rng);
  std::vector<double> gm_ref(gm_n * gm_c), gm_out(gm_n * gm_c);
  std::vector<int> gm_arg_ref(gm_n * gm_c), gm_arg_out(gm_n * gm_c);

  // gather: every neighbour row of every point
  std::vector<int> gather_idx(np * kn);
  std::vector<double> ga_ref(np * kn * nc), ga_out(np * kn * nc);

  std::vector<Case> cases;
  cases.push_back({"matmul_nn",
                   [&] { k::serial::matmul_nn(A.data(), B_nn.data(), mm_ref.data(), mm_m, mm_k, mm_n); },
                   [&] { k::matmul_nn(A.data(), B_nn.data(), mm_out.data(), mm_m, mm_k, mm_n); },
                   [&] { return bits_equal(mm_ref, mm_out); }});
  cases.push_back({"matmul_nt",
                   [&] { k::serial::matmul_nt(A.data(), B_nt.data(), mm_ref.data(), mm_m, mm_k, mm_n); },
                   [&] { k::matmul_nt(A.data(), B_nt.data(), mm_out.data(), mm_m, mm_k, mm_n); },
                   [&] { return bits_equal(mm_ref, mm_out); }});
  cases.push_back({"matmul_tn",
                   [&] {
                     std::fill(tn_ref.begin(), tn_ref.end(), 0.0);
                     k::serial::matmul_tn(A.data(), B_tn.data(), tn_ref.data(), mm_m, mm_k, mm_n);
                   },
                   [&] {
                     std::fill(tn_out.begin(), tn_out.end(), 0.0);
                     k::matmul_tn(A.data(), B_tn.data(), tn_out.data(), mm_m, mm_k, mm_n);
                   },
                   [&] { return bits_equal(tn_ref, tn_out); }});
  cases.push_back({"knn",
                   [&] { k::serial::knn(pts.data(), np, 3, kn, knn_ref.data()); },
                   [&] { k::knn(pts.data(), np, 3, kn, knn_out.data()); },
                   [&] { return knn_ref == knn_out; }});
  cases.push_back({"neighbor_sum",
                   [&] {
                     k::serial::neighbor_weighted_sum(offsets.data(), nbr.data(), wts.data(),
                                                      feats.data(), nws_ref.data(), np, nc);
                   },
                   [&] {
                     k::neighbor_weighted_sum(offsets.data(), nbr.data(), wts.data(),
                                              feats.data(), nws_out.data(), np, nc);
                   },
                   [&] { return bits_equal(nws_ref, nws_out); }});
  cases.push_back({"group_max",
                   [&] {
                     k::serial::group_max(gm_x.data(), gm_ref.data(), gm_arg_ref.data(), gm_n,
                                          gm_g, gm_c);
                   },
                   [&] {
                     k::group_max(gm_x.data(), gm_out.data(), gm_arg_out.data(), gm_n, gm_g,
                                  gm_c);
                   },
                   [&] { return bits_equal(gm_ref, gm_out) && gm_arg_ref == gm_arg_out; }});
  cases.push_back({"gather_rows",
                   [&] { k::serial::gather_rows(feats.data(), gather_idx.data(), ga_ref.data(), np * kn, nc); },
                   [&] { k::gather_rows(feats.data(), gather_idx.data(), ga_out.data(), np * kn, nc); },
                   [&] { return bits_equal(ga_ref, ga_out); }});

  // seed the CSR and gather inputs from a real knn pass
  k::serial::knn(pts.data(), np, 3, kn, knn_ref.data());
  for (long i = 0; i < np; ++i) {
    offsets[i] = int(i * (kn + 1));
    nbr[i * (kn + 1)] = int(i);
    wts[i * (kn + 1)] = 0.5;
    for (int t = 0; t < kn; ++t) {
      nbr[i * (kn + 1) + 1 + t] = knn_ref[i * kn + t];
      wts[i * (kn + 1) + 1 + t] = 0.5 / kn;
      gather_idx[i * kn + t] = knn_ref[i * kn + t];
    }
  }
  offsets[np] = int(np * (kn + 1));

  std::printf("%-14s %10s", "kernel", "serial ms");
  for (int t : threads) std::printf("   %3dT ms  spdup", t);
  std::printf("\n");

  bool all_equal = true;
  for (auto& c : cases) {
    gda::par::set_threads(1);
    const double base = median_ms(reps, c.serial);
    std::printf("%-14s %10.3f", c.name.c_str(), base);
    for (int t : threads) {
      gda::par::set_threads(t);
      const double ms = median_ms(reps, c.parallel);
      const bool ok = c.equal();
      all_equal = all_equal && ok;
      std::printf("  %8.3f  %5.2f%s", ms, base / ms, ok ? "" : "!");
    }
    std::printf("\n");
  }

  if (!all_equal) {
    std::printf("MISMATCH: a parallel run (marked !) disagreed with the serial reference\n");
    return 1;
  }
  return 0;
}
