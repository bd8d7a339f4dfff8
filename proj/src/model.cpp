#include "fedsim/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "fedsim/errors.hpp"
#include "fedsim/kernels.hpp"

namespace fedsim {

namespace {

constexpr double kScoreClip = 1e-12;
constexpr uint32_t kMaxLayerWidth = 1u << 20;
constexpr char kMagic[4] = {'F', 'E', 'D', 'W'};
constexpr uint8_t kFormatVersion = 1;

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double clip_score(double s) {
    if (s < kScoreClip) return kScoreClip;
    if (s > 1.0 - kScoreClip) return 1.0 - kScoreClip;
    return s;
}

// Per-layer views into the flat parameter/gradient vector.
template <class Ptr>
struct LayerView {
    Ptr w;  // out x in, row-major
    Ptr b;
    size_t in, out;
};

template <class Ptr>
LayerView<Ptr> layer_view(const ArchSpec& arch, Ptr base, size_t layer) {
    size_t off = 0;
    for (size_t l = 0; l < layer; ++l) {
        off += static_cast<size_t>(arch.layer_widths[l]) * arch.layer_widths[l + 1] +
               arch.layer_widths[l + 1];
    }
    const size_t in = arch.layer_widths[layer];
    const size_t out = arch.layer_widths[layer + 1];
    return {base + off, base + off + in * out, in, out};
}

// Scratch buffers reused across the samples of a batch.
struct Workspace {
    std::vector<std::vector<double>> acts;    // acts[0] = input copy
    std::vector<std::vector<double>> preact;  // preact[l] = z of layer l
    std::vector<std::vector<double>> deltas;

    explicit Workspace(const ArchSpec& arch) {
        const size_t nl = arch.num_layers();
        acts.resize(nl + 1);
        preact.resize(nl);
        deltas.resize(nl);
        for (size_t l = 0; l <= nl; ++l) acts[l].resize(arch.layer_widths[l]);
        for (size_t l = 0; l < nl; ++l) {
            preact[l].resize(arch.layer_widths[l + 1]);
            deltas[l].resize(arch.layer_widths[l + 1]);
        }
    }
};

// Forward pass into ws; returns the logistic score.
double forward_ws(const MlpModel& model, std::span<const double> x, Workspace& ws) {
    const auto& k = kernels::ops();
    const size_t nl = model.arch.num_layers();
    std::copy(x.begin(), x.end(), ws.acts[0].begin());
    for (size_t l = 0; l < nl; ++l) {
        const auto lv = layer_view(model.arch, model.params.data(), l);
        const double* in = ws.acts[l].data();
        double* z = ws.preact[l].data();
        for (size_t o = 0; o < lv.out; ++o) {
            z[o] = k.dot(lv.in, lv.w + o * lv.in, in) + lv.b[o];
        }
        if (l + 1 < nl) {
            k.relu(lv.out, z, ws.acts[l + 1].data());
        } else {
            ws.acts[l + 1][0] = logistic(z[0]);
        }
    }
    return ws.acts[nl][0];
}

}  // namespace

size_t ArchSpec::param_count() const {
    size_t n = 0;
    for (size_t l = 0; l + 1 < layer_widths.size(); ++l) {
        n += static_cast<size_t>(layer_widths[l]) * layer_widths[l + 1] + layer_widths[l + 1];
    }
    return n;
}

void ArchSpec::validate() const {
    if (layer_widths.size() < 2) throw SpecError("arch needs at least input and output");
    for (uint32_t w : layer_widths) {
        if (w == 0) throw SpecError("layer widths must be positive");
        if (w > kMaxLayerWidth) throw SpecError("layer width implausibly large");
    }
    if (layer_widths.back() != 1) throw SpecError("output layer width must be 1");
}

ArchSpec arch_for(const FederationConfig& config, size_t input_dim) {
    ArchSpec arch;
    arch.layer_widths.push_back(static_cast<uint32_t>(input_dim));
    for (size_t h : config.hidden_widths) arch.layer_widths.push_back(static_cast<uint32_t>(h));
    arch.layer_widths.push_back(1);
    arch.validate();
    return arch;
}

void MlpModel::validate() const {
    arch.validate();
    if (params.size() != arch.param_count()) {
        throw ShapeError("param vector length " + std::to_string(params.size()) +
                         " does not match arch (" + std::to_string(arch.param_count()) + ")");
    }
}

MlpModel init_model(const ArchSpec& arch, RngStream& rng) {
    arch.validate();
    MlpModel model{arch, ParamVector::zeros(arch.param_count())};
    double* base = model.params.data();
    size_t off = 0;
    for (size_t l = 0; l + 1 < arch.layer_widths.size(); ++l) {
        const size_t fan_in = arch.layer_widths[l];
        const size_t fan_out = arch.layer_widths[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (size_t i = 0; i < fan_in * fan_out; ++i) base[off++] = rng.uniform(-bound, bound);
        off += fan_out;  // biases stay zero
    }
    return model;
}

double forward(const MlpModel& model, std::span<const double> x) {
    model.validate();
    if (x.size() != model.arch.input_dim()) {
        throw ShapeError("input size " + std::to_string(x.size()) + " != arch input dim " +
                         std::to_string(model.arch.input_dim()));
    }
    Workspace ws(model.arch);
    return forward_ws(model, x, ws);
}

std::vector<double> forward_batch(const MlpModel& model, const Batch& batch) {
    model.validate();
    if (batch.dim != model.arch.input_dim()) {
        throw ShapeError("batch dim != arch input dim");
    }
    Workspace ws(model.arch);
    std::vector<double> scores(batch.size());
    for (size_t i = 0; i < batch.size(); ++i) {
        scores[i] = forward_ws(model, {batch.features.data() + i * batch.dim, batch.dim}, ws);
    }
    return scores;
}

double bce_loss(std::span<const double> scores, std::span<const uint8_t> labels) {
    if (scores.size() != labels.size()) {
        throw ShapeError("scores/labels length mismatch");
    }
    if (scores.empty()) throw EmptyBatchError("bce_loss on empty batch");
    double sum = 0.0;
    for (size_t i = 0; i < scores.size(); ++i) {
        const double s = clip_score(scores[i]);
        sum += labels[i] != 0 ? -std::log(s) : -std::log(1.0 - s);
    }
    return sum / static_cast<double>(scores.size());
}

ParamVector loss_gradient(const MlpModel& model, const Batch& batch, double* loss_out) {
    model.validate();
    if (batch.size() == 0) throw EmptyBatchError("loss_gradient on empty batch");
    if (batch.dim != model.arch.input_dim()) {
        throw ShapeError("batch dim != arch input dim");
    }
    const auto& k = kernels::ops();
    const ArchSpec& arch = model.arch;
    const size_t nl = arch.num_layers();
    const size_t n = batch.size();
    const double inv_n = 1.0 / static_cast<double>(n);

    ParamVector grad = ParamVector::zeros(model.params.size());
    Workspace ws(arch);
    double loss_sum = 0.0;

    for (size_t i = 0; i < n; ++i) {
        const double s = forward_ws(model, {batch.features.data() + i * batch.dim, batch.dim}, ws);
        const double y = batch.labels[i] != 0 ? 1.0 : 0.0;
        const double sc = clip_score(s);
        loss_sum += batch.labels[i] != 0 ? -std::log(sc) : -std::log(1.0 - sc);

        // d(mean loss)/dz at the output, logistic and BCE folded together.
        ws.deltas[nl - 1][0] = (s - y) * inv_n;

        for (size_t l = nl; l-- > 0;) {
            const auto lv = layer_view(arch, model.params.data(), l);
            const auto gv = layer_view(arch, grad.data(), l);
            const double* delta = ws.deltas[l].data();
            const double* a_in = ws.acts[l].data();
            for (size_t o = 0; o < lv.out; ++o) {
                k.axpy(lv.in, delta[o], a_in, gv.w + o * lv.in);
                gv.b[o] += delta[o];
            }
            if (l > 0) {
                double* dprev = ws.deltas[l - 1].data();
                std::fill(dprev, dprev + lv.in, 0.0);
                for (size_t o = 0; o < lv.out; ++o) {
                    k.axpy(lv.in, delta[o], lv.w + o * lv.in, dprev);
                }
                // Rectifier mask on the previous layer's pre-activation.
                const double* z = ws.preact[l - 1].data();
                for (size_t j = 0; j < lv.in; ++j) {
                    if (!(z[j] > 0.0)) dprev[j] = 0.0;
                }
            }
        }
    }
    if (loss_out != nullptr) *loss_out = loss_sum * inv_n;
    return grad;
}

OptimizerState OptimizerState::plain_gd() { return OptimizerState{}; }

OptimizerState OptimizerState::adam(size_t n) {
    OptimizerState st;
    st.kind = OptimizerKind::adam;
    st.first_moment = ParamVector::zeros(n);
    st.second_moment = ParamVector::zeros(n);
    return st;
}

OptimizerState OptimizerState::for_config(const FederationConfig& config, size_t n) {
    return config.optimizer == OptimizerKind::adam ? adam(n) : plain_gd();
}

void optimizer_step(ParamVector& params, const ParamVector& grad,
                    OptimizerState& state, double eta) {
    if (params.size() != grad.size()) {
        throw ShapeError("optimizer_step: params/grad length mismatch");
    }
    if (!(eta >= 0.0)) throw SpecError("learning rate must be >= 0");
    const auto& k = kernels::ops();
    state.step_count += 1;
    if (state.kind == OptimizerKind::plain_gd) {
        k.sgd_step(params.size(), eta, grad.data(), params.data());
        return;
    }
    if (state.first_moment.size() != params.size() ||
        state.second_moment.size() != params.size()) {
        throw ShapeError("adam state accumulators do not match params length");
    }
    const double t = static_cast<double>(state.step_count);
    const double bias_c1 = 1.0 / (1.0 - std::pow(state.beta1, t));
    const double bias_c2 = 1.0 / (1.0 - std::pow(state.beta2, t));
    k.adam_step(params.size(), params.data(), grad.data(), state.first_moment.data(),
                state.second_moment.data(), state.beta1, state.beta2, state.epsilon,
                eta, bias_c1, bias_c2);
}

ParamVector data_center_update(const ParamVector& global_params,
                               const DomainDataset& dataset,
                               const FederationConfig& config, RngStream& rng,
                               LocalTrainStats* stats) {
    config.validate();
    if (dataset.size() == 0) throw EmptyBatchError("data_center_update on empty dataset");
    if (!dataset.has_both_classes()) {
        throw DegenerateDatasetError("dataset '" + dataset.domain_id +
                                     "' contains a single class");
    }
    const ArchSpec arch = arch_for(config, dataset.dim);
    if (global_params.size() != arch.param_count()) {
        throw ShapeError("global params length does not match architecture");
    }

    MlpModel local{arch, global_params};
    OptimizerState state = OptimizerState::for_config(config, local.params.size());

    double first_loss = 0.0, last_loss = 0.0;
    for (size_t epoch = 0; epoch < config.local_epochs; ++epoch) {
        const auto batches = batch_iter(dataset, config.batch_size, rng);
        double epoch_loss_sum = 0.0;
        for (const Batch& b : batches) {
            double batch_loss = 0.0;
            const ParamVector grad = loss_gradient(local, b, &batch_loss);
            epoch_loss_sum += batch_loss * static_cast<double>(b.size());
            optimizer_step(local.params, grad, state, config.learning_rate);
        }
        const double epoch_loss = epoch_loss_sum / static_cast<double>(dataset.size());
        if (epoch == 0) first_loss = epoch_loss;
        last_loss = epoch_loss;
    }
    if (stats != nullptr) *stats = {first_loss, last_loss};
    return local.params;
}

std::vector<uint8_t> serialize_checkpoint(const MlpModel& model) {
    model.validate();
    for (double v : model.params.values) {
        if (!std::isfinite(v)) throw CheckpointFormatError("refusing to serialize non-finite params");
    }
    std::vector<uint8_t> out;
    out.reserve(4 + 1 + 4 + 4 * model.arch.layer_widths.size() + 8 * model.params.size());
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(kFormatVersion);
    auto put_u32 = [&out](uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
    };
    put_u32(static_cast<uint32_t>(model.arch.layer_widths.size()));
    for (uint32_t w : model.arch.layer_widths) put_u32(w);
    for (double v : model.params.values) {
        const uint64_t bits = std::bit_cast<uint64_t>(v);
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(bits >> (8 * i)));
    }
    return out;
}

MlpModel deserialize_checkpoint(std::span<const uint8_t> bytes) {
    size_t pos = 0;
    auto need = [&](size_t n) {
        if (bytes.size() - pos < n) throw CheckpointFormatError("truncated checkpoint");
    };
    need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw CheckpointFormatError("bad magic, not a model checkpoint");
    }
    pos = 4;
    need(1);
    const uint8_t version = bytes[pos++];
    if (version != kFormatVersion) {
        throw CheckpointFormatError("unsupported checkpoint version " + std::to_string(version));
    }
    auto get_u32 = [&]() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    };
    const uint32_t n_widths = get_u32();
    if (n_widths < 2 || n_widths > 64) {
        throw CheckpointFormatError("implausible layer count " + std::to_string(n_widths));
    }
    ArchSpec arch;
    for (uint32_t i = 0; i < n_widths; ++i) {
        const uint32_t w = get_u32();
        if (w == 0 || w > kMaxLayerWidth) {
            throw CheckpointFormatError("implausible layer width " + std::to_string(w));
        }
        arch.layer_widths.push_back(w);
    }
    if (arch.layer_widths.back() != 1) {
        throw CheckpointFormatError("output layer width must be 1");
    }
    const size_t n_params = arch.param_count();
    if (bytes.size() - pos != n_params * 8) {
        throw CheckpointFormatError("parameter payload is " +
                                    std::to_string(bytes.size() - pos) + " bytes, expected " +
                                    std::to_string(n_params * 8));
    }
    MlpModel model{arch, ParamVector::zeros(n_params)};
    for (size_t i = 0; i < n_params; ++i) {
        uint64_t bits = 0;
        for (int j = 0; j < 8; ++j) bits |= static_cast<uint64_t>(bytes[pos + j]) << (8 * j);
        pos += 8;
        const double v = std::bit_cast<double>(bits);
        if (!std::isfinite(v)) throw CheckpointFormatError("non-finite parameter value");
        model.params[i] = v;
    }
    return model;
}

void save_checkpoint(const MlpModel& model, const std::filesystem::path& path) {
    const auto bytes = serialize_checkpoint(model);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw CheckpointFormatError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw CheckpointFormatError("write failed for " + path.string());
}

MlpModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointFormatError("cannot open " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace fedsim
