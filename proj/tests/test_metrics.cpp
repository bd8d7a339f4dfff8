#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/rng.hpp"

using namespace fedsim;

namespace {

ScoreSet make(std::vector<double> scores, std::vector<uint8_t> labels) {
    return {std::move(scores), std::move(labels)};
}

// O(N^2) pair counting from the AUC definition, kept in half-units so the
// comparison with the sorted implementation can be exact.
double auc_oracle(const ScoreSet& s) {
    uint64_t num2 = 0, n_real = 0, n_spoof = 0;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s.labels[i] == 0) continue;
        ++n_real;
        for (size_t j = 0; j < s.size(); ++j) {
            if (s.labels[j] != 0) continue;
            if (s.scores[i] > s.scores[j]) num2 += 2;
            else if (s.scores[i] == s.scores[j]) num2 += 1;
        }
    }
    for (uint8_t y : s.labels) n_spoof += y == 0 ? 1 : 0;
    return static_cast<double>(num2) / (2.0 * static_cast<double>(n_real * n_spoof));
}

// Exhaustive search over all achievable (FAR, FRR) operating points using
// midpoint thresholds, with the same tie-break chain.
EerResult eer_oracle(const ScoreSet& s) {
    std::vector<double> sorted = s.scores;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> cands = {sorted.front() - 1.0};
    for (size_t i = 0; i + 1 < sorted.size(); ++i) {
        if (sorted[i] != sorted[i + 1]) {
            cands.push_back((sorted[i] + sorted[i + 1]) / 2.0);
            // A threshold exactly at a score behaves differently under the
            // ">= accepts" rule, so scores themselves are candidates too.
        }
    }
    for (size_t i = 0; i < sorted.size(); ++i) {
        if (i == 0 || sorted[i] != sorted[i - 1]) cands.push_back(sorted[i]);
    }
    cands.push_back(sorted.back() + 1.0);
    // Ascending scan so ties resolve to the smallest threshold, like the
    // implementation under test.
    std::sort(cands.begin(), cands.end());

    uint64_t n_real = 0, n_spoof = 0;
    for (uint8_t y : s.labels) (y != 0 ? n_real : n_spoof) += 1;

    EerResult best;
    bool have = false;
    for (double t : cands) {
        uint64_t fp = 0, fn = 0;
        for (size_t i = 0; i < s.size(); ++i) {
            const bool accept = s.scores[i] >= t;
            if (s.labels[i] != 0 && !accept) ++fn;
            if (s.labels[i] == 0 && accept) ++fp;
        }
        const double far = static_cast<double>(fp) / static_cast<double>(n_spoof);
        const double frr = static_cast<double>(fn) / static_cast<double>(n_real);
        const double gap = std::fabs(far - frr);
        if (!have || gap < std::fabs(best.far - best.frr) ||
            (gap == std::fabs(best.far - best.frr) &&
             far + frr < best.far + best.frr)) {
            best = {(far + frr) / 2.0, t, far, frr};
            have = true;
        }
    }
    return best;
}

ScoreSet random_set(RngStream& rng, size_t n) {
    ScoreSet s;
    for (size_t i = 0; i < n; ++i) {
        // Coarse score grid forces plenty of ties.
        s.scores.push_back(static_cast<double>(rng.below(10)) / 10.0);
        s.labels.push_back(rng.below(2) != 0 ? 1 : 0);
    }
    // Guarantee both classes.
    s.labels[0] = 1;
    if (n > 1) s.labels[1] = 0;
    return s;
}

}  // namespace

TEST_CASE("auc: pinned small cases") {
    // Pairs: (.9,.1) win, (.9,.95) loss, (.8,.1) win, (.8,.95) loss.
    CHECK(auc(make({0.9, 0.8, 0.1, 0.95}, {1, 1, 0, 0})) == 0.5);
    CHECK(auc(make({0.9, 0.2}, {1, 0})) == 1.0);
    CHECK(auc(make({0.2, 0.9}, {1, 0})) == 0.0);
    CHECK(auc(make({0.5, 0.5}, {1, 0})) == 0.5);  // tie counts half
    CHECK(auc(make({0.7, 0.7, 0.1}, {1, 0, 0})) == 0.75);
}

TEST_CASE("auc equals brute-force pair counting exactly") {
    RngStream rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const ScoreSet s = random_set(rng, 2 + rng.below(199));
        CHECK(auc(s) == auc_oracle(s));  // bitwise, both use integer numerators
    }
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
    RngStream rng(18);
    const ScoreSet s = random_set(rng, 60);
    ScoreSet t = s;
    for (double& v : t.scores) v = std::tanh(3.0 * v) + v * v * v;
    CHECK(auc(s) == auc(t));
}

TEST_CASE("eer: pinned cases") {
    // Perfectly separable: zero error somewhere between the clusters.
    const EerResult sep = eer(make({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}));
    CHECK(sep.eer == 0.0);
    CHECK(sep.far == 0.0);
    CHECK(sep.frr == 0.0);
    CHECK(sep.threshold == 0.8);  // smallest candidate achieving (0,0)

    // Fully inverted 1v1 set: FAR and FRR meet at 1.0 (threshold at the
    // spoof score rejects the real and accepts the spoof).
    const EerResult inv = eer(make({0.1, 0.9}, {1, 0}));
    CHECK(inv.eer == 1.0);
    CHECK(inv.far == inv.frr);

    // All scores identical: accept-all (FAR 1, FRR 0) and reject-all
    // (FAR 0, FRR 1) tie on |FAR-FRR|; accept-all has the smaller threshold.
    const EerResult flat = eer(make({0.5, 0.5, 0.5, 0.5}, {1, 1, 0, 0}));
    CHECK(flat.eer == 0.5);
}

TEST_CASE("eer matches exhaustive threshold search on random sets") {
    RngStream rng(19);
    for (int trial = 0; trial < 100; ++trial) {
        const ScoreSet s = random_set(rng, 2 + rng.below(120));
        const EerResult got = eer(s);
        const EerResult want = eer_oracle(s);
        // Thresholds may differ (score vs midpoint) but the operating point
        // must be the same.
        CHECK(got.far == want.far);
        CHECK(got.frr == want.frr);
        CHECK(got.eer == want.eer);
    }
}

TEST_CASE("hter: boundary semantics and confusion counts") {
    const ScoreSet s = make({0.9, 0.6, 0.4, 0.1}, {1, 1, 0, 0});

    EvalReport r = hter(s, 0.5);
    CHECK(r.tp == 2);
    CHECK(r.tn == 2);
    CHECK(r.fp == 0);
    CHECK(r.fn == 0);
    CHECK(r.hter == 0.0);

    r = hter(s, 0.0);  // everything accepted
    CHECK(r.far == 1.0);
    CHECK(r.frr == 0.0);
    CHECK(r.hter == 0.5);

    r = hter(s, 2.0);  // everything rejected
    CHECK(r.far == 0.0);
    CHECK(r.frr == 1.0);
    CHECK(r.hter == 0.5);

    r = hter(s, 0.4);  // boundary accepts: the 0.4 spoof is accepted
    CHECK(r.fp == 1);
    CHECK(r.far == 0.5);

    // Self-consistency with the set's own summary metrics.
    CHECK(r.auc == auc(s));
    CHECK(r.eer == eer(s).eer);

    const std::string report = format_report(r);
    CHECK(report.find("hter_pct") != std::string::npos);
    CHECK(report.find("tp = 2") != std::string::npos);
}

TEST_CASE("cross_domain_threshold pools centers in order") {
    const ScoreSet a = make({0.9, 0.8, 0.3, 0.2}, {1, 1, 0, 0});
    const ScoreSet b = make({0.7, 0.6, 0.4, 0.1}, {1, 1, 0, 0});
    const std::vector<ScoreSet> centers = {a, b};

    ScoreSet pooled;
    for (const ScoreSet& c : centers) {
        pooled.scores.insert(pooled.scores.end(), c.scores.begin(), c.scores.end());
        pooled.labels.insert(pooled.labels.end(), c.labels.begin(), c.labels.end());
    }
    CHECK(cross_domain_threshold(centers) == eer(pooled).threshold);
    CHECK_THROWS_AS(cross_domain_threshold({}), ProtocolError);
}

TEST_CASE("degenerate score sets are rejected") {
    CHECK_THROWS_AS(auc(make({}, {})), EmptyBatchError);
    CHECK_THROWS_AS(auc(make({0.5, 0.6}, {1, 1})), DegenerateEvalError);
    CHECK_THROWS_AS(eer(make({0.5, 0.6}, {0, 0})), DegenerateEvalError);
    CHECK_THROWS_AS(hter(make({0.5}, {1, 0}), 0.5), ShapeError);
}
