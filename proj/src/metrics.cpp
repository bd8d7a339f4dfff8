#include "fedsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "fedsim/errors.hpp"

namespace fedsim {

namespace {

struct ClassCounts {
    uint64_t n_real = 0;
    uint64_t n_spoof = 0;
};

ClassCounts count_classes(const ScoreSet& s) {
    ClassCounts c;
    for (uint8_t y : s.labels) (y != 0 ? c.n_real : c.n_spoof) += 1;
    return c;
}

}  // namespace

void ScoreSet::validate() const {
    if (scores.size() != labels.size()) {
        throw ShapeError("scores/labels length mismatch");
    }
    if (scores.empty()) throw EmptyBatchError("empty score set");
    const ClassCounts c = count_classes(*this);
    if (c.n_real == 0 || c.n_spoof == 0) {
        throw DegenerateEvalError("score set contains a single class");
    }
}

double auc(const ScoreSet& s) {
    s.validate();
    const ClassCounts c = count_classes(s);

    std::vector<size_t> idx(s.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return s.scores[a] < s.scores[b]; });

    // Numerator in half-units: 2 per (real > spoof) pair, 1 per tied pair.
    uint64_t num2 = 0;
    uint64_t spoof_below = 0;
    size_t i = 0;
    while (i < idx.size()) {
        size_t j = i;
        uint64_t real_here = 0, spoof_here = 0;
        while (j < idx.size() && s.scores[idx[j]] == s.scores[idx[i]]) {
            (s.labels[idx[j]] != 0 ? real_here : spoof_here) += 1;
            ++j;
        }
        num2 += real_here * (2 * spoof_below + spoof_here);
        spoof_below += spoof_here;
        i = j;
    }
    return static_cast<double>(num2) /
           (2.0 * static_cast<double>(c.n_real) * static_cast<double>(c.n_spoof));
}

EerResult eer(const ScoreSet& s) {
    s.validate();
    const ClassCounts c = count_classes(s);

    // Sorted (score, label) pairs; a candidate threshold t yields
    //   FAR = #spoof >= t / n_spoof,  FRR = #real < t / n_real.
    std::vector<std::pair<double, uint8_t>> pts(s.size());
    for (size_t i = 0; i < s.size(); ++i) pts[i] = {s.scores[i], s.labels[i]};
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<double> candidates;
    candidates.push_back(-std::numeric_limits<double>::infinity());
    for (size_t i = 0; i < pts.size(); ++i) {
        if (i == 0 || pts[i].first != pts[i - 1].first) candidates.push_back(pts[i].first);
    }
    candidates.push_back(std::numeric_limits<double>::infinity());

    EerResult best;
    bool have_best = false;
    size_t scan = 0;
    uint64_t real_below = 0, spoof_below = 0;
    for (double t : candidates) {
        while (scan < pts.size() && pts[scan].first < t) {
            (pts[scan].second != 0 ? real_below : spoof_below) += 1;
            ++scan;
        }
        const double far =
            static_cast<double>(c.n_spoof - spoof_below) / static_cast<double>(c.n_spoof);
        const double frr = static_cast<double>(real_below) / static_cast<double>(c.n_real);
        const double gap = std::fabs(far - frr);
        const double total = far + frr;
        const double best_gap = std::fabs(best.far - best.frr);
        const double best_total = best.far + best.frr;
        if (!have_best || gap < best_gap || (gap == best_gap && total < best_total)) {
            best = {(far + frr) / 2.0, t, far, frr};
            have_best = true;
        }
    }
    return best;
}

EvalReport hter(const ScoreSet& s, double threshold) {
    s.validate();
    EvalReport r;
    for (size_t i = 0; i < s.size(); ++i) {
        const bool accept = s.scores[i] >= threshold;  // boundary accepts
        if (s.labels[i] != 0) {
            (accept ? r.tp : r.fn) += 1;
        } else {
            (accept ? r.fp : r.tn) += 1;
        }
    }
    r.far = static_cast<double>(r.fp) / static_cast<double>(r.fp + r.tn);
    r.frr = static_cast<double>(r.fn) / static_cast<double>(r.tp + r.fn);
    r.hter = (r.far + r.frr) / 2.0;
    r.threshold = threshold;
    r.eer = eer(s).eer;
    r.auc = auc(s);
    return r;
}

double cross_domain_threshold(std::span<const ScoreSet> center_scores) {
    if (center_scores.empty()) {
        throw ProtocolError("cross_domain_threshold with no score sets");
    }
    ScoreSet pooled;
    for (const ScoreSet& cs : center_scores) {
        if (cs.scores.size() != cs.labels.size()) {
            throw ShapeError("scores/labels length mismatch");
        }
        pooled.scores.insert(pooled.scores.end(), cs.scores.begin(), cs.scores.end());
        pooled.labels.insert(pooled.labels.end(), cs.labels.begin(), cs.labels.end());
    }
    return eer(pooled).threshold;
}

std::string format_report(const EvalReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "hter_pct = %.2f\n"
                  "eer_pct = %.2f\n"
                  "auc_pct = %.2f\n"
                  "far_pct = %.2f\n"
                  "frr_pct = %.2f\n"
                  "threshold = %.17g\n"
                  "tp = %llu\ntn = %llu\nfp = %llu\nfn = %llu\n",
                  100.0 * r.hter, 100.0 * r.eer, 100.0 * r.auc, 100.0 * r.far,
                  100.0 * r.frr, r.threshold, static_cast<unsigned long long>(r.tp),
                  static_cast<unsigned long long>(r.tn),
                  static_cast<unsigned long long>(r.fp),
                  static_cast<unsigned long long>(r.fn));
    return buf;
}

}  // namespace fedsim
