#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fedsim/config.hpp"
#include "fedsim/data.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

// Flat parameter vector; the only thing a data center ever sends upstream.
// Layout per layer: weights row-major [out x in], then biases.
struct ParamVector {
    std::vector<double> values;

    ParamVector() = default;
    explicit ParamVector(std::vector<double> v) : values(std::move(v)) {}
    static ParamVector zeros(size_t n) { return ParamVector(std::vector<double>(n, 0.0)); }

    size_t size() const { return values.size(); }
    double* data() { return values.data(); }
    const double* data() const { return values.data(); }
    double& operator[](size_t i) { return values[i]; }
    double operator[](size_t i) const { return values[i]; }
    bool operator==(const ParamVector&) const = default;
};

enum class Activation : uint8_t { relu };

// Layer widths [d_in, h_1, ..., h_m, 1]; the final unit is squashed by the
// logistic function into a real/spoof score.
struct ArchSpec {
    std::vector<uint32_t> layer_widths;
    Activation activation = Activation::relu;

    size_t input_dim() const { return layer_widths.front(); }
    size_t num_layers() const { return layer_widths.size() - 1; }
    size_t param_count() const;
    void validate() const;  // throws SpecError
};

// Architecture used throughout: [input_dim, config.hidden_widths..., 1].
ArchSpec arch_for(const FederationConfig& config, size_t input_dim);

struct MlpModel {
    ArchSpec arch;
    ParamVector params;

    void validate() const;
};

// Glorot-uniform weights, zero biases, drawn in canonical layout order.
MlpModel init_model(const ArchSpec& arch, RngStream& rng);

// Logistic-squashed score in (0,1); pure in (params, x).
double forward(const MlpModel& model, std::span<const double> x);
std::vector<double> forward_batch(const MlpModel& model, const Batch& batch);

// Mean over samples of -[y log s + (1-y) log(1-s)], scores clamped to
// [1e-12, 1-1e-12] before the logs.
double bce_loss(std::span<const double> scores, std::span<const uint8_t> labels);

// Exact analytic gradient of bce_loss(forward(...)) over the batch, mean
// reduction, same layout as ParamVector. Optionally reports the batch loss
// from the same forward pass.
ParamVector loss_gradient(const MlpModel& model, const Batch& batch,
                          double* loss_out = nullptr);

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::plain_gd;
    uint64_t step_count = 0;
    ParamVector first_moment;   // adam only
    ParamVector second_moment;  // adam only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static OptimizerState plain_gd();
    static OptimizerState adam(size_t n);
    static OptimizerState for_config(const FederationConfig& config, size_t n);
};

// plain-gd: params -= eta * grad, elementwise and exact.
// adam: standard bias-corrected recurrence with the state's betas/epsilon.
void optimizer_step(ParamVector& params, const ParamVector& grad,
                    OptimizerState& state, double eta);

struct LocalTrainStats {
    double first_epoch_loss = 0.0;
    double last_epoch_loss = 0.0;
};

// One data center's contribution to a round: copy the broadcast parameters,
// run local_epochs of shuffled mini-batch training, return the result. The
// dataset never leaves this call and global_params is untouched. Optimizer
// state starts fresh each call.
ParamVector data_center_update(const ParamVector& global_params,
                               const DomainDataset& dataset,
                               const FederationConfig& config, RngStream& rng,
                               LocalTrainStats* stats = nullptr);

// Binary checkpoint: "FEDW", version byte 1, layer count (u32 LE), layer
// widths (u32 LE each), then params as f64 LE in canonical layout.
std::vector<uint8_t> serialize_checkpoint(const MlpModel& model);
MlpModel deserialize_checkpoint(std::span<const uint8_t> bytes);
void save_checkpoint(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_checkpoint(const std::filesystem::path& path);

}  // namespace fedsim
