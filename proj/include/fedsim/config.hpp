#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedsim {

enum class OptimizerKind : uint8_t { plain_gd, adam };
enum class AggregationWeighting : uint8_t { uniform, by_sample_count };

// Shared knobs for local training and the round loop. Zero num_centers means
// "take the center count from the data handed in".
struct FederationConfig {
    size_t num_centers = 0;
    size_t rounds = 50;
    size_t local_epochs = 3;
    double learning_rate = 1e-2;
    size_t batch_size = 64;
    OptimizerKind optimizer = OptimizerKind::adam;
    AggregationWeighting weighting = AggregationWeighting::uniform;
    uint64_t master_seed = 0;
    std::vector<size_t> hidden_widths = {16, 8};

    // Optional early stop on a train-loss plateau (relative change < 1e-5
    // over 5 rounds); off by default so runs have a fixed length.
    bool early_stop = false;

    // When > 0, the round loop persists the global model as a checkpoint
    // every this many rounds under checkpoint_dir.
    size_t checkpoint_interval = 0;
    std::string checkpoint_dir;

    void validate() const;  // throws SpecError
};

}  // namespace fedsim
