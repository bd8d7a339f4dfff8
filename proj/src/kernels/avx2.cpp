// AVX2 kernels. Compiled with -mavx2 only; fedsim_avx2_ops() must not be
// called unless the CPU reports AVX2 (dispatch.cpp checks).
//
// Bit-exact with the scalar reference: multiplies and adds are separate
// instructions (no FMA), and dot keeps the canonical 4-lane accumulator
// layout, so ymm lane j holds exactly the scalar reference's acc[j].

#include "fedsim/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace fedsim::kernels {
namespace {

double dot_avx2(size_t n, const double* a, const double* b) {
    __m256d acc = _mm256_setzero_pd();
    const size_t n4 = n - n % 4;
    for (size_t i = 0; i < n4; i += 4) {
        const __m256d va = _mm256_loadu_pd(a + i);
        const __m256d vb = _mm256_loadu_pd(b + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
    }
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
    for (size_t i = n4; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_avx2(size_t n, double alpha, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(alpha);
    const size_t n4 = n - n % 4;
    for (size_t i = 0; i < n4; i += 4) {
        const __m256d vy = _mm256_loadu_pd(y + i);
        const __m256d vx = _mm256_loadu_pd(x + i);
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
    }
    for (size_t i = n4; i < n; ++i) y[i] += alpha * x[i];
}

void add_avx2(size_t n, const double* x, double* y) {
    const size_t n4 = n - n % 4;
    for (size_t i = 0; i < n4; i += 4) {
        const __m256d vy = _mm256_loadu_pd(y + i);
        const __m256d vx = _mm256_loadu_pd(x + i);
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, vx));
    }
    for (size_t i = n4; i < n; ++i) y[i] += x[i];
}

void scale_avx2(size_t n, double alpha, double* x) {
    const __m256d va = _mm256_set1_pd(alpha);
    const size_t n4 = n - n % 4;
    for (size_t i = 0; i < n4; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
    }
    for (size_t i = n4; i < n; ++i) x[i] *= alpha;
}

void sgd_step_avx2(size_t n, double eta, const double* g, double* p) {
    const __m256d ve = _mm256_set1_pd(eta);
    const size_t n4 = n - n % 4;
    for (size_t i = 0; i < n4; i += 4) {
        const __m256d vp = _mm256_loadu_pd(p + i);
        const __m256d vg = _mm256_loadu_pd(g + i);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(vp, _mm256_mul_pd(ve, vg)));
    }
    for (size_t i = n4; i < n; ++i) p[i] -= eta * g[i];
}

void adam_step_avx2(size_t n, double* p, const double* g, double* m, double* v,
                    double beta1, double beta2, double eps, double eta,
                    double bias_c1, double bias_c2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vomb1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d vomb2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d veta = _mm256_set1_pd(eta);
    const __m256d vc1 = _mm256_set1_pd(bias_c1);
    const __m256d vc2 = _mm256_set1_pd(bias_c2);
    const size_t n4 = n - n % 4;
    for (size_t i = 0; i < n4; i += 4) {
        const __m256d vg = _mm256_loadu_pd(g + i);
        __m256d vm = _mm256_loadu_pd(m + i);
        __m256d vv = _mm256_loadu_pd(v + i);
        vm = _mm256_add_pd(_mm256_mul_pd(vb1, vm), _mm256_mul_pd(vomb1, vg));
        vv = _mm256_add_pd(_mm256_mul_pd(vb2, vv),
                           _mm256_mul_pd(vomb2, _mm256_mul_pd(vg, vg)));
        _mm256_storeu_pd(m + i, vm);
        _mm256_storeu_pd(v + i, vv);
        const __m256d mhat = _mm256_mul_pd(vm, vc1);
        const __m256d vhat = _mm256_mul_pd(vv, vc2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        const __m256d step = _mm256_mul_pd(veta, _mm256_div_pd(mhat, denom));
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
    }
    scalar::adam_step(n - n4, p + n4, g + n4, m + n4, v + n4, beta1, beta2, eps,
                      eta, bias_c1, bias_c2);
}

void relu_avx2(size_t n, const double* x, double* y) {
    const __m256d zero = _mm256_setzero_pd();
    const size_t n4 = n - n % 4;
    for (size_t i = 0; i < n4; i += 4) {
        // maxpd returns the second operand on equality and NaN, matching the
        // scalar ternary for -0.0 and NaN inputs.
        _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    }
    for (size_t i = n4; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

}  // namespace

const Ops* fedsim_avx2_ops() {
    static const Ops table{"avx2",      dot_avx2,      axpy_avx2, add_avx2,
                           scale_avx2,  sgd_step_avx2, adam_step_avx2,
                           relu_avx2};
    return &table;
}

}  // namespace fedsim::kernels

#endif  // x86_64
