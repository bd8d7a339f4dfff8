#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fedsim/config.hpp"
#include "fedsim/data.hpp"
#include "fedsim/model.hpp"

namespace fedsim {

// FNV-1a over the parameter payload (8 LE bytes per value); used to tag
// round logs and assert reproducibility.
uint64_t param_checksum(const ParamVector& p);

struct RoundLog {
    size_t round_index = 0;
    std::vector<LocalTrainStats> center_losses;  // ascending center index
    uint64_t checksum = 0;                       // of the aggregated params
    double duration_ms = 0.0;                    // not part of the emitted record
};

// Elementwise parameter average. Uniform mode is sum/K; weighted mode is the
// normalized weighted mean. Summation runs in ascending update order so
// results are bit-reproducible.
ParamVector aggregate(std::span<const ParamVector> updates,
                      std::span<const double> weights = {});

struct RoundResult {
    ParamVector params;
    RoundLog log;
};

// One broadcast -> local-train -> aggregate cycle. Every center starts from
// the same incoming params; per-center RNG streams are seeded from
// (master_seed, center index, round_index), so the result does not depend on
// whether centers run sequentially or concurrently (max_threads 1 vs K).
RoundResult run_round(const ParamVector& global,
                      std::span<const DomainDataset> centers,
                      const FederationConfig& config, size_t round_index,
                      size_t max_threads = 0);

struct FederationResult {
    MlpModel model;
    std::vector<RoundLog> logs;
};

// Full protocol: init from master_seed, run `rounds` rounds, return the final
// global model. Bit-reproducible given (config, centers).
FederationResult run_federation(std::span<const DomainDataset> centers,
                                const FederationConfig& config,
                                size_t max_threads = 0);

// Centralized baseline on one center, rounds*local_epochs total epochs with
// the same seed schedule as a K=1 federation.
MlpModel train_single(const DomainDataset& center, const FederationConfig& config);

// Centralized upper bound on the union of all centers.
MlpModel train_all(std::span<const DomainDataset> centers,
                   const FederationConfig& config);

// Mean of the member models' scores.
double fused_predict(std::span<const MlpModel> models, std::span<const double> x);

// One JSON object per round: t, per-center [first,last] epoch losses, and the
// global checksum. Durations are deliberately not emitted.
void write_round_logs(std::ostream& os, std::span<const RoundLog> logs);

}  // namespace fedsim
