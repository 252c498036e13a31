#ifndef PINSITE_GEMM_HPP
#define PINSITE_GEMM_HPP

#include <cstddef>

#if defined(PINSITE_USE_CBLAS)
#include <cblas.h>
#endif

namespace pinsite {

// Row-major C = alpha * op(A) * op(B) + beta * C. Backed by CBLAS when the
// build finds one; the portable loop below keeps the library self-contained
// otherwise.

#if defined(PINSITE_USE_CBLAS)

inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a,
                 int lda, const float* b, int ldb, float beta, float* c, int ldc) {
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
                 int lda, const double* b, int ldb, double beta, double* c, int ldc) {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

#else

template <typename T>
inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
                 const T* b, int ldb, T beta, T* c, int ldc) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) c[static_cast<std::size_t>(i) * ldc + j] *= beta;
        for (int p = 0; p < k; ++p) {
            T av = trans_a ? a[static_cast<std::size_t>(p) * lda + i]
                           : a[static_cast<std::size_t>(i) * lda + p];
            if (av == T(0)) continue;
            av *= alpha;
            const T* brow = trans_b ? nullptr : &b[static_cast<std::size_t>(p) * ldb];
            T* crow = &c[static_cast<std::size_t>(i) * ldc];
            if (trans_b) {
                for (int j = 0; j < n; ++j)
                    crow[j] += av * b[static_cast<std::size_t>(j) * ldb + p];
            } else {
                for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    }
}

#endif

} // namespace pinsite

#endif
