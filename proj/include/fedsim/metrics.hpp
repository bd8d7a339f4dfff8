#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedsim {

// Classifier outputs with ground truth; higher score = more likely real
// (label 1).
struct ScoreSet {
    std::vector<double> scores;
    std::vector<uint8_t> labels;

    size_t size() const { return scores.size(); }
    void validate() const;  // lengths agree, both classes present
};

// P(random real score > random spoof score), ties at 1/2. Sort-based, and
// exactly equal to brute-force pair counting (the numerator is kept in
// integer half-units).
double auc(const ScoreSet& s);

struct EerResult {
    double eer = 0.0;
    double threshold = 0.0;
    double far = 0.0;
    double frr = 0.0;
};

// Sweeps thresholds over all distinct scores plus +/-inf sentinels; picks the
// one minimizing |FAR - FRR|, ties broken by smaller FAR+FRR, then smaller
// threshold. FAR counts spoof scored >= threshold, FRR real scored below.
EerResult eer(const ScoreSet& s);

struct EvalReport {
    double hter = 0.0;
    double eer = 0.0;
    double auc = 0.0;
    double threshold = 0.0;
    double far = 0.0;
    double frr = 0.0;
    uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
};

// Full evaluation of s at an externally chosen threshold.
EvalReport hter(const ScoreSet& s, double threshold);

// EER threshold of all center score sets pooled in input order; this is the
// threshold later applied to user data.
double cross_domain_threshold(std::span<const ScoreSet> center_scores);

// Flat key = value text; rates as percentages with 2 decimals.
std::string format_report(const EvalReport& r);

}  // namespace fedsim
