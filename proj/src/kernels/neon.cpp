// NEON kernels for aarch64, where 128-bit float64x2 vectors are baseline.
//
// The canonical dot order uses four logical accumulators; here they live in
// two q-registers (acc01 lanes = acc0/acc1, acc23 lanes = acc2/acc3) and are
// combined scalar-side in the reference order. No vfma, mul then add only.

#include "fedsim/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

namespace fedsim::kernels {
namespace {

double dot_neon(size_t n, const double* a, const double* b) {
    float64x2_t acc01 = vdupq_n_f64(0.0);
    float64x2_t acc23 = vdupq_n_f64(0.0);
    const size_t n4 = n - n % 4;
    for (size_t i = 0; i < n4; i += 4) {
        acc01 = vaddq_f64(acc01, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
        acc23 = vaddq_f64(acc23, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
    }
    const double acc0 = vgetq_lane_f64(acc01, 0);
    const double acc1 = vgetq_lane_f64(acc01, 1);
    const double acc2 = vgetq_lane_f64(acc23, 0);
    const double acc3 = vgetq_lane_f64(acc23, 1);
    double s = (acc0 + acc1) + (acc2 + acc3);
    for (size_t i = n4; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_neon(size_t n, double alpha, const double* x, double* y) {
    const float64x2_t va = vdupq_n_f64(alpha);
    const size_t n2 = n - n % 2;
    for (size_t i = 0; i < n2; i += 2) {
        const float64x2_t vy = vld1q_f64(y + i);
        const float64x2_t vx = vld1q_f64(x + i);
        vst1q_f64(y + i, vaddq_f64(vy, vmulq_f64(va, vx)));
    }
    for (size_t i = n2; i < n; ++i) y[i] += alpha * x[i];
}

void add_neon(size_t n, const double* x, double* y) {
    const size_t n2 = n - n % 2;
    for (size_t i = 0; i < n2; i += 2) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vld1q_f64(x + i)));
    }
    for (size_t i = n2; i < n; ++i) y[i] += x[i];
}

void scale_neon(size_t n, double alpha, double* x) {
    const float64x2_t va = vdupq_n_f64(alpha);
    const size_t n2 = n - n % 2;
    for (size_t i = 0; i < n2; i += 2) {
        vst1q_f64(x + i, vmulq_f64(vld1q_f64(x + i), va));
    }
    for (size_t i = n2; i < n; ++i) x[i] *= alpha;
}

void sgd_step_neon(size_t n, double eta, const double* g, double* p) {
    const float64x2_t ve = vdupq_n_f64(eta);
    const size_t n2 = n - n % 2;
    for (size_t i = 0; i < n2; i += 2) {
        const float64x2_t vp = vld1q_f64(p + i);
        const float64x2_t vg = vld1q_f64(g + i);
        vst1q_f64(p + i, vsubq_f64(vp, vmulq_f64(ve, vg)));
    }
    for (size_t i = n2; i < n; ++i) p[i] -= eta * g[i];
}

void adam_step_neon(size_t n, double* p, const double* g, double* m, double* v,
                    double beta1, double beta2, double eps, double eta,
                    double bias_c1, double bias_c2) {
    const float64x2_t vb1 = vdupq_n_f64(beta1);
    const float64x2_t vb2 = vdupq_n_f64(beta2);
    const float64x2_t vomb1 = vdupq_n_f64(1.0 - beta1);
    const float64x2_t vomb2 = vdupq_n_f64(1.0 - beta2);
    const float64x2_t veps = vdupq_n_f64(eps);
    const float64x2_t veta = vdupq_n_f64(eta);
    const float64x2_t vc1 = vdupq_n_f64(bias_c1);
    const float64x2_t vc2 = vdupq_n_f64(bias_c2);
    const size_t n2 = n - n % 2;
    for (size_t i = 0; i < n2; i += 2) {
        const float64x2_t vg = vld1q_f64(g + i);
        float64x2_t vm = vld1q_f64(m + i);
        float64x2_t vv = vld1q_f64(v + i);
        vm = vaddq_f64(vmulq_f64(vb1, vm), vmulq_f64(vomb1, vg));
        vv = vaddq_f64(vmulq_f64(vb2, vv), vmulq_f64(vomb2, vmulq_f64(vg, vg)));
        vst1q_f64(m + i, vm);
        vst1q_f64(v + i, vv);
        const float64x2_t mhat = vmulq_f64(vm, vc1);
        const float64x2_t vhat = vmulq_f64(vv, vc2);
        const float64x2_t denom = vaddq_f64(vsqrtq_f64(vhat), veps);
        const float64x2_t step = vmulq_f64(veta, vdivq_f64(mhat, denom));
        vst1q_f64(p + i, vsubq_f64(vld1q_f64(p + i), step));
    }
    scalar::adam_step(n - n2, p + n2, g + n2, m + n2, v + n2, beta1, beta2, eps,
                      eta, bias_c1, bias_c2);
}

void relu_neon(size_t n, const double* x, double* y) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    const size_t n2 = n - n % 2;
    for (size_t i = 0; i < n2; i += 2) {
        const float64x2_t vx = vld1q_f64(x + i);
        // Explicit compare+select so -0.0 and NaN map to +0.0 like the
        // scalar ternary (vmaxq would keep NaN).
        const uint64x2_t gt = vcgtq_f64(vx, zero);
        vst1q_f64(y + i, vbslq_f64(gt, vx, zero));
    }
    for (size_t i = n2; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

}  // namespace

const Ops* fedsim_neon_ops() {
    static const Ops table{"neon",      dot_neon,      axpy_neon, add_neon,
                           scale_neon,  sgd_step_neon, adam_step_neon,
                           relu_neon};
    return &table;
}

}  // namespace fedsim::kernels

#endif  // __aarch64__
