#include "fedsim/federation.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <ostream>

#include <json.hpp>

#include "fedsim/errors.hpp"
#include "fedsim/kernels.hpp"
#include "fedsim/parallel.hpp"

namespace fedsim {

namespace {

// Stream tag for global weight initialization; center streams use
// (master, center index, round index).
constexpr uint64_t kInitTag = 0x494e4954;  // "INIT"

constexpr size_t kPlateauWindow = 5;
constexpr double kPlateauRelTol = 1e-5;

RngStream init_stream(const FederationConfig& config) {
    return RngStream(derive_seed(config.master_seed, kInitTag, 0));
}

RngStream center_stream(const FederationConfig& config, size_t center, size_t round) {
    return RngStream(derive_seed(config.master_seed, center, round));
}

void check_centers(std::span<const DomainDataset> centers,
                   const FederationConfig& config) {
    if (centers.empty()) throw ProtocolError("no data centers");
    if (config.num_centers != 0 && config.num_centers != centers.size()) {
        throw ProtocolError("config.num_centers = " + std::to_string(config.num_centers) +
                            " but " + std::to_string(centers.size()) +
                            " centers were provided");
    }
    for (size_t k = 1; k < centers.size(); ++k) {
        if (centers[k].dim != centers[0].dim) {
            throw ShapeError("centers disagree on feature dim");
        }
    }
}

double round_train_loss(const RoundLog& log) {
    double sum = 0.0;
    for (const LocalTrainStats& st : log.center_losses) sum += st.last_epoch_loss;
    return sum / static_cast<double>(log.center_losses.size());
}

std::vector<double> sample_count_weights(std::span<const DomainDataset> centers) {
    std::vector<double> w(centers.size());
    for (size_t k = 0; k < centers.size(); ++k) w[k] = static_cast<double>(centers[k].size());
    return w;
}

}  // namespace

void FederationConfig::validate() const {
    if (rounds == 0) throw SpecError("rounds must be >= 1");
    if (local_epochs == 0) throw SpecError("local_epochs must be >= 1");
    if (!(learning_rate >= 0.0)) throw SpecError("learning_rate must be >= 0");
    if (batch_size == 0) throw SpecError("batch_size must be >= 1");
    for (size_t h : hidden_widths) {
        if (h == 0) throw SpecError("hidden widths must be positive");
    }
    if (checkpoint_interval > 0 && checkpoint_dir.empty()) {
        throw SpecError("checkpoint_interval set but checkpoint_dir empty");
    }
}

uint64_t param_checksum(const ParamVector& p) {
    uint64_t h = 14695981039346656037ull;  // FNV offset basis
    for (double v : p.values) {
        const uint64_t bits = std::bit_cast<uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffu;
            h *= 1099511628211ull;
        }
    }
    return h;
}

ParamVector aggregate(std::span<const ParamVector> updates,
                      std::span<const double> weights) {
    if (updates.empty()) throw ProtocolError("aggregate with no updates");
    const size_t n = updates[0].size();
    for (size_t k = 1; k < updates.size(); ++k) {
        if (updates[k].size() != n) {
            throw ShapeError("update " + std::to_string(k) + " has length " +
                             std::to_string(updates[k].size()) + ", expected " +
                             std::to_string(n));
        }
    }
    const auto& kr = kernels::ops();
    if (weights.empty()) {
        ParamVector acc = updates[0];
        for (size_t k = 1; k < updates.size(); ++k) {
            kr.add(n, updates[k].data(), acc.data());
        }
        kr.scale(n, 1.0 / static_cast<double>(updates.size()), acc.data());
        return acc;
    }
    if (weights.size() != updates.size()) {
        throw ShapeError("weight count does not match update count");
    }
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ProtocolError("aggregation weights must be non-negative");
        wsum += w;
    }
    if (!(wsum > 0.0)) throw ProtocolError("aggregation weights sum to zero");
    ParamVector acc = ParamVector::zeros(n);
    for (size_t k = 0; k < updates.size(); ++k) {
        kr.axpy(n, weights[k], updates[k].data(), acc.data());
    }
    kr.scale(n, 1.0 / wsum, acc.data());
    return acc;
}

RoundResult run_round(const ParamVector& global,
                      std::span<const DomainDataset> centers,
                      const FederationConfig& config, size_t round_index,
                      size_t max_threads) {
    config.validate();
    check_centers(centers, config);
    const auto t0 = std::chrono::steady_clock::now();

    const size_t K = centers.size();
    std::vector<ParamVector> updates(K);
    std::vector<LocalTrainStats> stats(K);
    try {
        parallel_for(K, max_threads, [&](size_t k) {
            RngStream rng = center_stream(config, k, round_index);
            updates[k] = data_center_update(global, centers[k], config, rng, &stats[k]);
        });
    } catch (const DegenerateDatasetError& e) {
        // Re-annotate with the center index; parallel_for rethrows the
        // lowest-index failure, so the annotation is deterministic.
        for (size_t k = 0; k < K; ++k) {
            if (!centers[k].has_both_classes()) {
                throw DegenerateDatasetError("center " + std::to_string(k) + ": " + e.what());
            }
        }
        throw;
    }

    RoundResult out;
    if (config.weighting == AggregationWeighting::by_sample_count) {
        const auto w = sample_count_weights(centers);
        out.params = aggregate(updates, w);
    } else {
        out.params = aggregate(updates);
    }
    out.log.round_index = round_index;
    out.log.center_losses = std::move(stats);
    out.log.checksum = param_checksum(out.params);
    out.log.duration_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    return out;
}

FederationResult run_federation(std::span<const DomainDataset> centers,
                                const FederationConfig& config,
                                size_t max_threads) {
    config.validate();
    check_centers(centers, config);

    const ArchSpec arch = arch_for(config, centers[0].dim);
    RngStream init_rng = init_stream(config);
    MlpModel global = init_model(arch, init_rng);

    FederationResult result;
    for (size_t t = 0; t < config.rounds; ++t) {
        RoundResult rr = run_round(global.params, centers, config, t, max_threads);
        global.params = std::move(rr.params);
        result.logs.push_back(std::move(rr.log));

        if (config.checkpoint_interval > 0 && (t + 1) % config.checkpoint_interval == 0) {
            const std::filesystem::path dir(config.checkpoint_dir);
            std::filesystem::create_directories(dir);
            save_checkpoint(global, dir / ("round_" + std::to_string(t + 1) + ".fedw"));
        }
        if (config.early_stop && result.logs.size() > kPlateauWindow) {
            const double now = round_train_loss(result.logs.back());
            const double then =
                round_train_loss(result.logs[result.logs.size() - 1 - kPlateauWindow]);
            if (std::fabs(now - then) < kPlateauRelTol * std::max(std::fabs(then), 1e-12)) {
                break;
            }
        }
    }
    result.model = std::move(global);
    return result;
}

MlpModel train_single(const DomainDataset& center, const FederationConfig& config) {
    config.validate();
    if (center.size() == 0) throw EmptyBatchError("train_single on empty dataset");

    const ArchSpec arch = arch_for(config, center.dim);
    RngStream init_rng = init_stream(config);
    MlpModel model = init_model(arch, init_rng);

    // Same seed schedule as a K=1 federation: epoch block t draws from the
    // (master, 0, t) stream.
    for (size_t t = 0; t < config.rounds; ++t) {
        RngStream rng = center_stream(config, 0, t);
        model.params = data_center_update(model.params, center, config, rng);
    }
    return model;
}

MlpModel train_all(std::span<const DomainDataset> centers,
                   const FederationConfig& config) {
    if (centers.empty()) throw ProtocolError("train_all with no centers");
    const DomainDataset pooled = concat_datasets(centers);
    return train_single(pooled, config);
}

double fused_predict(std::span<const MlpModel> models, std::span<const double> x) {
    if (models.empty()) throw ProtocolError("fused_predict with no models");
    double sum = 0.0;
    for (const MlpModel& m : models) sum += forward(m, x);
    return sum / static_cast<double>(models.size());
}

void write_round_logs(std::ostream& os, std::span<const RoundLog> logs) {
    for (const RoundLog& log : logs) {
        nlohmann::json rec;
        rec["t"] = log.round_index;
        auto& losses = rec["center_losses"] = nlohmann::json::array();
        for (const LocalTrainStats& st : log.center_losses) {
            losses.push_back({st.first_epoch_loss, st.last_epoch_loss});
        }
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(log.checksum));
        rec["checksum"] = hex;
        os << rec.dump() << '\n';
    }
}

}  // namespace fedsim
