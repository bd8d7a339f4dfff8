#pragma once

#include <cstddef>
#include <vector>

namespace fedsim::kernels {

// Dense double-precision inner loops used by training and aggregation.
//
// Every backend must reproduce the scalar reference bit-for-bit. Elementwise
// kernels round identically by construction (same per-element mul/add order,
// no FMA; the build sets -ffp-contract=off). The one reduction, dot, pins a
// canonical accumulation order so vector backends can match it exactly:
//
//   acc[j] accumulates elements with index ≡ j (mod 4), j = 0..3, in
//   increasing index order;  partial = (acc0 + acc1) + (acc2 + acc3);
//   then the <4 leftover elements are added left to right.

struct Ops {
    const char* name;
    double (*dot)(size_t n, const double* a, const double* b);
    // y[i] += alpha * x[i]
    void (*axpy)(size_t n, double alpha, const double* x, double* y);
    // y[i] += x[i]
    void (*add)(size_t n, const double* x, double* y);
    // x[i] *= alpha
    void (*scale)(size_t n, double alpha, double* x);
    // p[i] -= eta * g[i]
    void (*sgd_step)(size_t n, double eta, const double* g, double* p);
    // Bias-corrected Adam update; bias_c1 = 1/(1-beta1^t), bias_c2 likewise.
    //   m = beta1*m + (1-beta1)*g
    //   v = beta2*v + (1-beta2)*(g*g)
    //   p -= eta * ((m*bias_c1) / (sqrt(v*bias_c2) + eps))
    void (*adam_step)(size_t n, double* p, const double* g, double* m, double* v,
                      double beta1, double beta2, double eps, double eta,
                      double bias_c1, double bias_c2);
    // y[i] = x[i] > 0 ? x[i] : 0   (so -0.0 and NaN map to +0.0)
    void (*relu)(size_t n, const double* x, double* y);
};

enum class Backend { scalar, avx2, neon };

const char* backend_name(Backend b);

// Table for one backend, or nullptr when not compiled in / not supported by
// this CPU.
const Ops* ops_for(Backend b);

std::vector<Backend> available_backends();

// Active table. Resolved once: FEDSIM_KERNELS=scalar|avx2|neon|auto wins,
// otherwise the widest backend this CPU supports.
const Ops& ops();
Backend active_backend();

namespace scalar {
double dot(size_t n, const double* a, const double* b);
void axpy(size_t n, double alpha, const double* x, double* y);
void add(size_t n, const double* x, double* y);
void scale(size_t n, double alpha, double* x);
void sgd_step(size_t n, double eta, const double* g, double* p);
void adam_step(size_t n, double* p, const double* g, double* m, double* v,
               double beta1, double beta2, double eps, double eta,
               double bias_c1, double bias_c2);
void relu(size_t n, const double* x, double* y);
}  // namespace scalar

}  // namespace fedsim::kernels
