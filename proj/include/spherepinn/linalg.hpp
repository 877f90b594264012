#pragma once

// Minimal dense row-major matrix kernels for the network engine. All kernels
// use fixed summation orders so results are reproducible for a given thread
// count; threads partition disjoint output ranges (or reduce partial buffers
// in thread-index order).

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace spherepinn::linalg {

struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const {
    return a.data() + static_cast<size_t>(r) * cols;
  }
  double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return a[static_cast<size_t>(r) * cols + c];
  }
  void zero() { std::fill(a.begin(), a.end(), 0.0); }
  size_t size() const { return a.size(); }
};

// Reshape without reallocation when the size already matches (the hot loops
// reuse their buffers across iterations).
inline void ensure_shape(Mat* m, int rows, int cols) {
  m->rows = rows;
  m->cols = cols;
  m->a.resize(static_cast<size_t>(rows) * cols);
}

inline int& thread_count() {
  static int n = [] {
    unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 8u));
  }();
  return n;
}

// Runs fn(begin, end) over [0, n) split into contiguous chunks.
template <typename Fn>
inline void parallel_for(int n, size_t flops_hint, Fn&& fn) {
  const int t = thread_count();
  if (t <= 1 || n < 2 || flops_hint < (1u << 19)) {
    fn(0, n);
    return;
  }
  const int nt = std::min(t, n);
  std::vector<std::thread> threads;
  threads.reserve(nt - 1);
  const int chunk = (n + nt - 1) / nt;
  for (int i = 1; i < nt; ++i) {
    const int b = std::min(n, i * chunk), e = std::min(n, (i + 1) * chunk);
    if (b < e) threads.emplace_back(fn, b, e);
  }
  fn(0, std::min(n, chunk));
  for (auto& th : threads) th.join();
}

// Dot product with a fixed eight-lane accumulator pattern: deterministic
// (no reassociation flags needed) and SLP-vectorizable.
inline double dot8(const double* __restrict__ a, const double* __restrict__ b,
                   int n) {
  double s[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  int k = 0;
  for (; k + 8 <= n; k += 8)
    for (int j = 0; j < 8; ++j) s[j] += a[k + j] * b[k + j];
  double tail = 0.0;
  for (; k < n; ++k) tail += a[k] * b[k];
  return ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7])) +
         tail;
}

// C = A * B^T, A: M x K, B: N x K (so rows of both operands are contiguous).
inline void matmul_abt(const Mat& A, const Mat& B, Mat* C) {
  const int M = A.rows, K = A.cols, N = B.rows;
  ensure_shape(C, M, N);
  parallel_for(M, static_cast<size_t>(M) * N * K, [&](int r0, int r1) {
    for (int m = r0; m < r1; ++m) {
      const double* arow = A.row(m);
      double* crow = C->row(m);
      for (int n = 0; n < N; ++n) crow[n] = dot8(arow, B.row(n), K);
    }
  });
}

// C = A * B, A: M x K, B: K x N.
inline void matmul_ab(const Mat& A, const Mat& B, Mat* C) {
  const int M = A.rows, K = A.cols, N = B.cols;
  ensure_shape(C, M, N);
  parallel_for(M, static_cast<size_t>(M) * N * K, [&](int r0, int r1) {
    for (int m = r0; m < r1; ++m) {
      const double* arow = A.row(m);
      double* __restrict__ crow = C->row(m);
      std::fill(crow, crow + N, 0.0);
      for (int k = 0; k < K; ++k) {
        const double s = arow[k];
        if (s == 0.0) continue;
        const double* __restrict__ brow = B.row(k);
        for (int n = 0; n < N; ++n) crow[n] += s * brow[n];
      }
    }
  });
}

// C += A^T * B, A: P x M, B: P x N, C: M x N. Per-thread partial buffers are
// reduced in thread-index order.
inline void accum_atb(const Mat& A, const Mat& B, Mat* C) {
  const int P = A.rows, M = A.cols, N = B.cols;
  const size_t flops = static_cast<size_t>(P) * M * N;
  const int t = (flops < (1u << 19)) ? 1 : std::min(thread_count(), std::max(1, P));
  if (t <= 1) {
    for (int p = 0; p < P; ++p) {
      const double* arow = A.row(p);
      const double* __restrict__ brow = B.row(p);
      for (int m = 0; m < M; ++m) {
        const double s = arow[m];
        if (s == 0.0) continue;
        double* __restrict__ crow = C->row(m);
        for (int n = 0; n < N; ++n) crow[n] += s * brow[n];
      }
    }
    return;
  }
  static thread_local std::vector<Mat> partials;
  if (static_cast<int>(partials.size()) < t) partials.resize(t);
  // lambdas do not capture thread_local storage: hand workers an explicit
  // pointer to this thread's buffers
  std::vector<Mat>* parts = &partials;
  std::vector<std::thread> threads;
  const int chunk = (P + t - 1) / t;
  auto work = [&, parts](int ti) {
    Mat& part = (*parts)[ti];
    ensure_shape(&part, M, N);
    part.zero();
    const int b = std::min(P, ti * chunk), e = std::min(P, (ti + 1) * chunk);
    for (int p = b; p < e; ++p) {
      const double* arow = A.row(p);
      const double* __restrict__ brow = B.row(p);
      for (int m = 0; m < M; ++m) {
        const double s = arow[m];
        if (s == 0.0) continue;
        double* __restrict__ crow = part.row(m);
        for (int n = 0; n < N; ++n) crow[n] += s * brow[n];
      }
    }
  };
  for (int ti = 1; ti < t; ++ti) threads.emplace_back(work, ti);
  work(0);
  for (auto& th : threads) th.join();
  for (int ti = 0; ti < t; ++ti)
    for (size_t i = 0; i < C->a.size(); ++i) C->a[i] += partials[ti].a[i];
}

// y += alpha * x
inline void axpy(double alpha, const std::vector<double>& x,
                 std::vector<double>* y) {
  for (size_t i = 0; i < x.size(); ++i) (*y)[i] += alpha * x[i];
}

}  // namespace spherepinn::linalg
