#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "fedsim/kernels.hpp"
#include "fedsim/rng.hpp"

using namespace fedsim;
using kernels::Backend;
using kernels::Ops;

namespace {

// Bitwise comparison; distinguishes -0.0 from 0.0 and survives NaN.
bool same_bits(double a, double b) {
    return std::bit_cast<uint64_t>(a) == std::bit_cast<uint64_t>(b);
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (!same_bits(a[i], b[i])) return false;
    }
    return true;
}

std::vector<double> random_vec(RngStream& rng, size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-3.0, 3.0);
    return v;
}

// Sizes straddling the 4-lane boundary plus larger odd/even cases.
const size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 64, 289, 1000};

}  // namespace

TEST_CASE("scalar dot follows the documented blocked accumulation order") {
    RngStream rng(42);
    for (size_t n : kSizes) {
        const auto a = random_vec(rng, n);
        const auto b = random_vec(rng, n);
        // Independent re-statement of the contract from the header.
        double acc[4] = {0.0, 0.0, 0.0, 0.0};
        const size_t n4 = n - n % 4;
        for (size_t i = 0; i < n4; ++i) acc[i % 4] += a[i] * b[i];
        double want = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        for (size_t i = n4; i < n; ++i) want += a[i] * b[i];
        CHECK(same_bits(kernels::scalar::dot(n, a.data(), b.data()), want));
    }
}

TEST_CASE("scalar relu zeroes negatives, -0.0 and NaN") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::vector<double> x = {-1.5, -0.0, 0.0, 2.25, nan, 1e-300, -1e-300};
    std::vector<double> y(x.size());
    kernels::scalar::relu(x.size(), x.data(), y.data());
    CHECK(same_bits(y[0], 0.0));
    CHECK(same_bits(y[1], 0.0));  // -0.0 normalizes to +0.0
    CHECK(same_bits(y[2], 0.0));
    CHECK(same_bits(y[3], 2.25));
    CHECK(same_bits(y[4], 0.0));  // NaN maps to 0
    CHECK(same_bits(y[5], 1e-300));
    CHECK(same_bits(y[6], 0.0));
}

TEST_CASE("every available backend matches the scalar reference bit for bit") {
    const Ops* ref = kernels::ops_for(Backend::scalar);
    REQUIRE(ref != nullptr);

    for (Backend b : kernels::available_backends()) {
        const Ops* alt = kernels::ops_for(b);
        REQUIRE(alt != nullptr);
        CAPTURE(alt->name);
        RngStream rng(7);

        for (size_t n : kSizes) {
            CAPTURE(n);
            const auto x = random_vec(rng, n);
            const auto g = random_vec(rng, n);
            const auto y0 = random_vec(rng, n);

            CHECK(same_bits(ref->dot(n, x.data(), g.data()),
                            alt->dot(n, x.data(), g.data())));

            auto y1 = y0, y2 = y0;
            ref->axpy(n, 1.7, x.data(), y1.data());
            alt->axpy(n, 1.7, x.data(), y2.data());
            CHECK(same_bits(y1, y2));

            y1 = y0;
            y2 = y0;
            ref->add(n, x.data(), y1.data());
            alt->add(n, x.data(), y2.data());
            CHECK(same_bits(y1, y2));

            y1 = y0;
            y2 = y0;
            ref->scale(n, -0.37, y1.data());
            alt->scale(n, -0.37, y2.data());
            CHECK(same_bits(y1, y2));

            y1 = y0;
            y2 = y0;
            ref->sgd_step(n, 0.01, g.data(), y1.data());
            alt->sgd_step(n, 0.01, g.data(), y2.data());
            CHECK(same_bits(y1, y2));

            std::vector<double> relu1(n), relu2(n);
            ref->relu(n, x.data(), relu1.data());
            alt->relu(n, x.data(), relu2.data());
            CHECK(same_bits(relu1, relu2));
        }
    }
}

TEST_CASE("adam kernel matches scalar bit for bit across steps and tails") {
    const Ops* ref = kernels::ops_for(Backend::scalar);
    for (Backend b : kernels::available_backends()) {
        const Ops* alt = kernels::ops_for(b);
        CAPTURE(alt->name);
        RngStream rng(99);
        for (size_t n : {size_t{1}, size_t{3}, size_t{4}, size_t{7}, size_t{16},
                         size_t{289}}) {
            CAPTURE(n);
            auto p1 = random_vec(rng, n);
            auto p2 = p1;
            std::vector<double> m1(n, 0.0), v1(n, 0.0), m2(n, 0.0), v2(n, 0.0);
            for (int step = 1; step <= 5; ++step) {
                const auto g = random_vec(rng, n);
                const double c1 = 1.0 / (1.0 - std::pow(0.9, step));
                const double c2 = 1.0 / (1.0 - std::pow(0.999, step));
                ref->adam_step(n, p1.data(), g.data(), m1.data(), v1.data(), 0.9,
                               0.999, 1e-8, 0.01, c1, c2);
                alt->adam_step(n, p2.data(), g.data(), m2.data(), v2.data(), 0.9,
                               0.999, 1e-8, 0.01, c1, c2);
            }
            CHECK(same_bits(p1, p2));
            CHECK(same_bits(m1, m2));
            CHECK(same_bits(v1, v2));
        }
    }
}

TEST_CASE("dispatch exposes scalar everywhere and a coherent active backend") {
    const auto avail = kernels::available_backends();
    REQUIRE(!avail.empty());
    CHECK(avail.front() == Backend::scalar);
    const Backend active = kernels::active_backend();
    CHECK(kernels::ops_for(active) == &kernels::ops());
    CHECK(std::strcmp(kernels::ops().name, kernels::backend_name(active)) == 0);
    // Unknown backends are never handed out.
    for (Backend b : {Backend::avx2, Backend::neon}) {
        const Ops* t = kernels::ops_for(b);
        if (t != nullptr) CHECK(std::strcmp(t->name, kernels::backend_name(b)) == 0);
    }
}
