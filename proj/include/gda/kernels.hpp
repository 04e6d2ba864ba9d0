#pragma once

#include <algorithm>
#include <cassert>
#include <utility>
#include <vector>

#include "gda/common.hpp"
#include "gda/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

// Data-parallel compute kernels. Every kernel has a serial reference
// implementation under kernels::serial and an OpenMP dispatcher with the
// same name one level up. Both call the same per-row bodies, so outputs are
// bitwise identical regardless of thread count; the equivalence is asserted
// in the kernel tests and timed in the benchmark target.

namespace gda::kernels {

namespace detail {

template <class T>
inline void matmul_nn_row(const T* a, const T* b, T* c, long k, long n) {
  for (long j = 0; j < n; ++j) c[j] = T(0);
  for (long kk = 0; kk < k; ++kk) {
    const T av = a[kk];
    const T* brow = b + kk * n;
    for (long j = 0; j < n; ++j) c[j] += av * brow[j];
  }
}

template <class T>
inline void matmul_nt_row(const T* a, const T* b, T* c, long k, long n) {
  for (long j = 0; j < n; ++j) {
    const T* brow = b + j * k;
    T acc = T(0);
    for (long kk = 0; kk < k; ++kk) acc += a[kk] * brow[kk];
    c[j] = acc;
  }
}

// C[k0:k1, :] += sum_i A[i, k0:k1]^T * B[i, :]
template <class T>
inline void matmul_tn_span(const T* a, const T* b, T* c, long m, long k, long n, long k0,
                           long k1) {
  for (long i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    const T* brow = b + i * n;
    for (long kk = k0; kk < k1; ++kk) {
      const T av = arow[kk];
      if (av == T(0)) continue;
      T* crow = c + kk * n;
      for (long j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <class T>
inline void knn_row(const T* pts, long n, long d, long i, int k,
                    std::vector<std::pair<T, int>>& scratch, int* idx_out, T* dist_out) {
  scratch.clear();
  const T* pi = pts + i * d;
  for (long j = 0; j < n; ++j) {
    if (j == i) continue;
    const T* pj = pts + j * d;
    T acc = T(0);
    for (long c = 0; c < d; ++c) {
      const T diff = pi[c] - pj[c];
      acc += diff * diff;
    }
    scratch.emplace_back(acc, static_cast<int>(j));
  }
  std::partial_sort(scratch.begin(), scratch.begin() + k, scratch.end());
  for (int t = 0; t < k; ++t) {
    idx_out[t] = scratch[t].second;
    if (dist_out) dist_out[t] = scratch[t].first;
  }
}

template <class T>
inline void group_max_row(const T* x, long g, long c, T* out, int* arg) {
  for (long j = 0; j < c; ++j) {
    out[j] = x[j];
    arg[j] = 0;
  }
  for (long t = 1; t < g; ++t) {
    const T* xr = x + t * c;
    for (long j = 0; j < c; ++j) {
      if (xr[j] > out[j]) {
        out[j] = xr[j];
        arg[j] = static_cast<int>(t);
      }
    }
  }
}

}  // namespace detail

namespace serial {

/// C = A * B with A m x k, B k x n.
template <class T>
void matmul_nn(const T* a, const T* b, T* c, long m, long k, long n) {
  for (long i = 0; i < m; ++i)
    detail::matmul_nn_row(a + i * k, b, c + i * n, k, n);
}

/// C = A * B^T with A m x k, B n x k.
template <class T>
void matmul_nt(const T* a, const T* b, T* c, long m, long k, long n) {
  for (long i = 0; i < m; ++i)
    detail::matmul_nt_row(a + i * k, b, c + i * n, k, n);
}

/// C = A^T * B with A m x k, B m x n; C is k x n and must be zeroed by the caller.
template <class T>
void matmul_tn(const T* a, const T* b, T* c, long m, long k, long n) {
  detail::matmul_tn_span(a, b, c, m, k, n, 0, k);
}

/// Exact k-nearest-neighbour indices per point (self excluded), row-major
/// n x k. Ties resolved by ascending index via the (distance, index) sort key.
template <class T>
void knn(const T* pts, long n, long d, int k, int* idx, T* dist2 = nullptr) {
  std::vector<std::pair<T, int>> scratch;
  scratch.reserve(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i)
    detail::knn_row(pts, n, d, i, k, scratch, idx + i * k, dist2 ? dist2 + i * k : nullptr);
}

/// Row-sparse weighted sum: y_i = sum_t w[row i] * x[nbr[row i]].
template <class T>
void neighbor_weighted_sum(const int* offsets, const int* nbr, const T* w, const T* x, T* y,
                           long n, long c) {
  for (long i = 0; i < n; ++i) {
    T* yr = y + i * c;
    for (long j = 0; j < c; ++j) yr[j] = T(0);
    for (int t = offsets[i]; t < offsets[i + 1]; ++t) {
      const T wt = w[t];
      const T* xr = x + static_cast<long>(nbr[t]) * c;
      for (long j = 0; j < c; ++j) yr[j] += wt * xr[j];
    }
  }
}

/// Max over contiguous groups of g rows: x is (n*g) x c, out n x c.
template <class T>
void group_max(const T* x, T* out, int* arg, long n, long g, long c) {
  for (long i = 0; i < n; ++i)
    detail::group_max_row(x + i * g * c, g, c, out + i * c, arg + i * c);
}

template <class T>
void gather_rows(const T* x, const int* idx, T* out, long m, long c) {
  for (long r = 0; r < m; ++r) {
    const T* src = x + static_cast<long>(idx[r]) * c;
    T* dst = out + r * c;
    for (long j = 0; j < c; ++j) dst[j] = src[j];
  }
}

}  // namespace serial

template <class T>
void matmul_nn(const T* a, const T* b, T* c, long m, long k, long n) {
#pragma omp parallel for schedule(static) num_threads(par::threads()) if (par::want_parallel())
  for (long i = 0; i < m; ++i)
    detail::matmul_nn_row(a + i * k, b, c + i * n, k, n);
}

template <class T>
void matmul_nt(const T* a, const T* b, T* c, long m, long k, long n) {
#pragma omp parallel for schedule(static) num_threads(par::threads()) if (par::want_parallel())
  for (long i = 0; i < m; ++i)
    detail::matmul_nt_row(a + i * k, b, c + i * n, k, n);
}

template <class T>
void matmul_tn(const T* a, const T* b, T* c, long m, long k, long n) {
  if (!par::want_parallel() || k < 2) {
    detail::matmul_tn_span(a, b, c, m, k, n, 0, k);
    return;
  }
#pragma omp parallel num_threads(par::threads())
  {
#ifdef _OPENMP
    const int nt = omp_get_num_threads();
    const int tid = omp_get_thread_num();
#else
    const int nt = 1, tid = 0;
#endif
    const long chunk = (k + nt - 1) / nt;
    const long k0 = std::min<long>(k, chunk * tid);
    const long k1 = std::min<long>(k, k0 + chunk);
    if (k0 < k1) detail::matmul_tn_span(a, b, c, m, k, n, k0, k1);
  }
}

template <class T>
void knn(const T* pts, long n, long d, int k, int* idx, T* dist2 = nullptr) {
#pragma omp parallel num_threads(par::threads()) if (par::want_parallel())
  {
    std::vector<std::pair<T, int>> scratch;
    scratch.reserve(static_cast<size_t>(n));
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i)
      detail::knn_row(pts, n, d, i, k, scratch, idx + i * k, dist2 ? dist2 + i * k : nullptr);
  }
}

template <class T>
void neighbor_weighted_sum(const int* offsets, const int* nbr, const T* w, const T* x, T* y,
                           long n, long c) {
#pragma omp parallel for schedule(static) num_threads(par::threads()) if (par::want_parallel())
  for (long i = 0; i < n; ++i) {
    T* yr = y + i * c;
    for (long j = 0; j < c; ++j) yr[j] = T(0);
    for (int t = offsets[i]; t < offsets[i + 1]; ++t) {
      const T wt = w[t];
      const T* xr = x + static_cast<long>(nbr[t]) * c;
      for (long j = 0; j < c; ++j) yr[j] += wt * xr[j];
    }
  }
}

template <class T>
void group_max(const T* x, T* out, int* arg, long n, long g, long c) {
#pragma omp parallel for schedule(static) num_threads(par::threads()) if (par::want_parallel())
  for (long i = 0; i < n; ++i)
    detail::group_max_row(x + i * g * c, g, c, out + i * c, arg + i * c);
}

template <class T>
void gather_rows(const T* x, const int* idx, T* out, long m, long c) {
#pragma omp parallel for schedule(static) num_threads(par::threads()) if (par::want_parallel())
  for (long r = 0; r < m; ++r) {
    const T* src = x + static_cast<long>(idx[r]) * c;
    T* dst = out + r * c;
    for (long j = 0; j < c; ++j) dst[j] = src[j];
  }
}

/// Scatter-add of gathered gradients back to source rows. Kept serial:
/// destination rows collide when an index repeats.
template <class T>
void scatter_add_rows(const T* g, const int* idx, T* out, long m, long c) {
  for (long r = 0; r < m; ++r) {
    const T* src = g + r * c;
    T* dst = out + static_cast<long>(idx[r]) * c;
    for (long j = 0; j < c; ++j) dst[j] += src[j];
  }
}

}  // namespace gda::kernels
