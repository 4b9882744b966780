#pragma once

#include <cstddef>

namespace trires::detail {

// Row-major C[M,N] += op(A) * op(B). Every output element is reduced over k in
// ascending order regardless of threading, so results are bit-reproducible.
//   nn: A[M,K], B[K,N]
//   nt: A[M,K], B[N,K]
//   tn: A[K,M], B[K,N]

template <typename T>
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C) {
#pragma omp parallel for schedule(static) if (M * N * K > (1u << 18))
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(M); ++i) {
    T* c = C + i * N;
    const T* a = A + i * K;
    for (std::size_t k = 0; k < K; ++k) {
      const T av = a[k];
      const T* b = B + k * N;
      for (std::size_t j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

template <typename T>
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C) {
#pragma omp parallel for schedule(static) if (M * N * K > (1u << 18))
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(M); ++i) {
    const T* a = A + i * K;
    for (std::size_t j = 0; j < N; ++j) {
      const T* b = B + j * K;
      T acc = 0;
      for (std::size_t k = 0; k < K; ++k) acc += a[k] * b[k];
      C[i * N + j] += acc;
    }
  }
}

template <typename T>
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C) {
#pragma omp parallel for schedule(static) if (M * N * K > (1u << 18))
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(M); ++i) {
    T* c = C + i * N;
    for (std::size_t k = 0; k < K; ++k) {
      const T av = A[k * M + i];
      if (av == T(0)) continue;
      const T* b = B + k * N;
      for (std::size_t j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

}  // namespace trires::detail
