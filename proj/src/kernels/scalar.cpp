#include "fedsim/kernels.hpp"

#include <cmath>

// Reference kernels. These define the numerical contract; the SIMD backends
// are checked bit-for-bit against them.

namespace fedsim::kernels::scalar {

double dot(size_t n, const double* a, const double* b) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    const size_t n4 = n - n % 4;
    for (size_t i = 0; i < n4; i += 4) {
        acc0 += a[i + 0] * b[i + 0];
        acc1 += a[i + 1] * b[i + 1];
        acc2 += a[i + 2] * b[i + 2];
        acc3 += a[i + 3] * b[i + 3];
    }
    double s = (acc0 + acc1) + (acc2 + acc3);
    for (size_t i = n4; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(size_t n, double alpha, const double* x, double* y) {
    for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add(size_t n, const double* x, double* y) {
    for (size_t i = 0; i < n; ++i) y[i] += x[i];
}

void scale(size_t n, double alpha, double* x) {
    for (size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void sgd_step(size_t n, double eta, const double* g, double* p) {
    for (size_t i = 0; i < n; ++i) p[i] -= eta * g[i];
}

void adam_step(size_t n, double* p, const double* g, double* m, double* v,
               double beta1, double beta2, double eps, double eta,
               double bias_c1, double bias_c2) {
    const double omb1 = 1.0 - beta1;
    const double omb2 = 1.0 - beta2;
    for (size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + omb1 * g[i];
        v[i] = beta2 * v[i] + omb2 * (g[i] * g[i]);
        const double mhat = m[i] * bias_c1;
        const double vhat = v[i] * bias_c2;
        p[i] -= eta * (mhat / (std::sqrt(vhat) + eps));
    }
}

void relu(size_t n, const double* x, double* y) {
    for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

}  // namespace fedsim::kernels::scalar
