#include "fedsim/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "fedsim/errors.hpp"

namespace fedsim {

namespace {

// Attack cluster axis in the shared base geometry.
size_t attack_axis(AttackType a) { return static_cast<size_t>(a) - 1; }

uint64_t split_tag(Split s) { return s == Split::train ? 0 : 1; }

void append_double(std::string& out, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    out.append(buf, res.ptr);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        const size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

[[noreturn]] void line_error(size_t line_no, const std::string& what) {
    throw DatasetFormatError("line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

const char* split_name(Split s) { return s == Split::train ? "train" : "test"; }

const char* attack_name(AttackType a) {
    switch (a) {
        case AttackType::none: return "none";
        case AttackType::print: return "print";
        case AttackType::video: return "video";
        case AttackType::mask_a: return "mask-A";
        case AttackType::mask_b: return "mask-B";
    }
    return "?";
}

bool DomainDataset::has_both_classes() const {
    bool seen0 = false, seen1 = false;
    for (uint8_t y : labels) (y != 0 ? seen1 : seen0) = true;
    return seen0 && seen1;
}

void DomainDataset::validate() const {
    const size_t n = labels.size();
    if (attacks.size() != n || features.size() != n * dim) {
        throw ShapeError("dataset '" + domain_id + "': field lengths disagree");
    }
    for (size_t i = 0; i < n; ++i) {
        if (labels[i] > 1) {
            throw SpecError("dataset '" + domain_id + "': label outside {0,1}");
        }
        const bool is_real = labels[i] == 1;
        if (is_real != (attacks[i] == AttackType::none)) {
            throw SpecError("dataset '" + domain_id +
                            "': attack tag inconsistent with label at sample " +
                            std::to_string(i));
        }
    }
    for (double v : features) {
        if (!std::isfinite(v)) {
            throw SpecError("dataset '" + domain_id + "': non-finite feature");
        }
    }
}

void DomainSpec::validate() const {
    if (domain_id.empty()) throw SpecError("domain_id must be non-empty");
    if (dim == 0) throw SpecError("dim must be positive");
    if ((train_spoof > 0 || test_spoof > 0) && attack_types.empty()) {
        throw SpecError("spec '" + domain_id +
                        "': attack_types required when spoof counts are positive");
    }
    for (AttackType a : attack_types) {
        if (a == AttackType::none) {
            throw SpecError("spec '" + domain_id + "': 'none' is not an attack type");
        }
        if (attack_axis(a) >= dim) {
            throw SpecError("spec '" + domain_id + "': dim too small for attack " +
                            std::string(attack_name(a)));
        }
    }
    if (!translation.empty() && translation.size() != dim) {
        throw SpecError("spec '" + domain_id + "': translation size != dim");
    }
    if (!scale.empty() && scale.size() != dim) {
        throw SpecError("spec '" + domain_id + "': scale size != dim");
    }
    for (double s : scale) {
        if (!(s > 0.0)) throw SpecError("spec '" + domain_id + "': scales must be positive");
    }
    if (noise_sigma < 0.0) throw SpecError("spec '" + domain_id + "': noise_sigma < 0");
    if (!(class_separation > 0.0)) {
        throw SpecError("spec '" + domain_id + "': class_separation must be positive");
    }
}

DomainDataset generate_split(const DomainSpec& spec, Split split) {
    spec.validate();
    const size_t d = spec.dim;
    const size_t n_real = split == Split::train ? spec.train_real : spec.test_real;
    const size_t n_spoof = split == Split::train ? spec.train_spoof : spec.test_spoof;

    DomainDataset ds;
    ds.domain_id = spec.domain_id;
    ds.split = split;
    ds.dim = d;
    ds.features.reserve((n_real + n_spoof) * d);
    ds.labels.reserve(n_real + n_spoof);
    ds.attacks.reserve(n_real + n_spoof);

    RngStream rng(derive_seed(spec.seed, split_tag(split), 0));

    const double c = std::cos(spec.rotation);
    const double s = std::sin(spec.rotation);

    std::vector<double> x(d);
    auto emit = [&](AttackType attack) {
        // Base cluster: unit Gaussian around the class mean.
        for (size_t j = 0; j < d; ++j) x[j] = rng.normal();
        if (attack != AttackType::none) x[attack_axis(attack)] += spec.class_separation;
        // Rotate in disjoint planes (0,1), (2,3), ...
        for (size_t j = 0; j + 1 < d; j += 2) {
            const double a = x[j], b = x[j + 1];
            x[j] = c * a - s * b;
            x[j + 1] = s * a + c * b;
        }
        for (size_t j = 0; j < d; ++j) {
            double v = x[j];
            if (!spec.scale.empty()) v *= spec.scale[j];
            if (!spec.translation.empty()) v += spec.translation[j];
            if (spec.noise_sigma > 0.0) v += spec.noise_sigma * rng.normal();
            ds.features.push_back(v);
        }
        ds.labels.push_back(attack == AttackType::none ? 1 : 0);
        ds.attacks.push_back(attack);
    };

    for (size_t i = 0; i < n_real; ++i) emit(AttackType::none);
    // Spoof counts split as evenly as possible over the listed attack types,
    // remainder going to the earliest entries.
    const size_t n_types = spec.attack_types.size();
    for (size_t t = 0; t < n_types && n_spoof > 0; ++t) {
        const size_t share = n_spoof / n_types + (t < n_spoof % n_types ? 1 : 0);
        for (size_t i = 0; i < share; ++i) emit(spec.attack_types[t]);
    }
    return ds;
}

Domain generate_domain(const DomainSpec& spec) {
    return {generate_split(spec, Split::train), generate_split(spec, Split::test)};
}

LeaveOneOut leave_one_out_split(std::span<const Domain> domains,
                                std::string_view user_domain) {
    if (domains.size() < 2) {
        throw ProtocolError("leave-one-out needs at least 2 domains, got " +
                            std::to_string(domains.size()));
    }
    LeaveOneOut out;
    bool found = false;
    for (const Domain& dom : domains) {
        if (dom.id() == user_domain) {
            out.user = dom.test;
            found = true;
        } else {
            out.centers.push_back(dom.train);
        }
    }
    if (!found) {
        throw LookupError("no domain with id '" + std::string(user_domain) + "'");
    }
    return out;
}

void save_dataset(const DomainDataset& ds, const std::filesystem::path& path) {
    ds.validate();
    std::string out = "domain,split,label,attack";
    for (size_t j = 0; j < ds.dim; ++j) out += ",f" + std::to_string(j);
    out += '\n';
    for (size_t i = 0; i < ds.size(); ++i) {
        out += ds.domain_id;
        out += ',';
        out += split_name(ds.split);
        out += ',';
        out += char('0' + ds.labels[i]);
        out += ',';
        out += attack_name(ds.attacks[i]);
        for (size_t j = 0; j < ds.dim; ++j) {
            out += ',';
            append_double(out, ds.features[i * ds.dim + j]);
        }
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DatasetFormatError("cannot open " + path.string() + " for writing");
    f << out;
    if (!f) throw DatasetFormatError("write failed for " + path.string());
}

DomainDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DatasetFormatError("cannot open " + path.string());

    std::string line;
    if (!std::getline(f, line)) throw DatasetFormatError("empty file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_fields(line);
    if (header.size() < 5 || header[0] != "domain" || header[1] != "split" ||
        header[2] != "label" || header[3] != "attack") {
        line_error(1, "bad header, expected domain,split,label,attack,f0,...");
    }
    const size_t dim = header.size() - 4;
    for (size_t j = 0; j < dim; ++j) {
        if (header[4 + j] != "f" + std::to_string(j)) {
            line_error(1, "feature columns must be f0..f" + std::to_string(dim - 1));
        }
    }

    DomainDataset ds;
    ds.dim = dim;
    size_t line_no = 1;
    bool first_row = true;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 4 + dim) {
            line_error(line_no, "expected " + std::to_string(4 + dim) + " fields, got " +
                                    std::to_string(fields.size()));
        }
        Split split;
        if (fields[1] == "train") split = Split::train;
        else if (fields[1] == "test") split = Split::test;
        else line_error(line_no, "split must be train or test, got '" + fields[1] + "'");

        if (first_row) {
            ds.domain_id = fields[0];
            ds.split = split;
            first_row = false;
        } else {
            if (fields[0] != ds.domain_id) line_error(line_no, "domain id changes mid-file");
            if (split != ds.split) line_error(line_no, "split changes mid-file");
        }

        if (fields[2].size() != 1 || (fields[2][0] != '0' && fields[2][0] != '1')) {
            line_error(line_no, "label must be 0 or 1, got '" + fields[2] + "'");
        }
        const uint8_t label = static_cast<uint8_t>(fields[2][0] - '0');

        AttackType attack = AttackType::none;
        bool attack_ok = false;
        for (AttackType a : {AttackType::none, AttackType::print, AttackType::video,
                             AttackType::mask_a, AttackType::mask_b}) {
            if (fields[3] == attack_name(a)) {
                attack = a;
                attack_ok = true;
                break;
            }
        }
        if (!attack_ok) line_error(line_no, "unknown attack type '" + fields[3] + "'");
        if ((label == 1) != (attack == AttackType::none)) {
            line_error(line_no, label == 1 ? "real sample tagged with an attack"
                                           : "spoof sample tagged 'none'");
        }

        for (size_t j = 0; j < dim; ++j) {
            const std::string& s = fields[4 + j];
            double v = 0.0;
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
                line_error(line_no, "bad real number '" + s + "' in f" + std::to_string(j));
            }
            if (!std::isfinite(v)) line_error(line_no, "non-finite value in f" + std::to_string(j));
            ds.features.push_back(v);
        }
        ds.labels.push_back(label);
        ds.attacks.push_back(attack);
    }
    return ds;
}

std::vector<Batch> batch_iter(const DomainDataset& ds, size_t batch_size,
                              RngStream& rng) {
    if (ds.size() == 0) throw EmptyBatchError("batch_iter on empty dataset");
    if (batch_size == 0) throw SpecError("batch_size must be >= 1");

    std::vector<uint32_t> order(ds.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<uint32_t>(i);
    rng.shuffle(order);

    std::vector<Batch> batches;
    for (size_t start = 0; start < order.size(); start += batch_size) {
        const size_t end = std::min(order.size(), start + batch_size);
        Batch b;
        b.dim = ds.dim;
        b.features.reserve((end - start) * ds.dim);
        b.labels.reserve(end - start);
        for (size_t k = start; k < end; ++k) {
            const auto r = ds.row(order[k]);
            b.features.insert(b.features.end(), r.begin(), r.end());
            b.labels.push_back(ds.labels[order[k]]);
        }
        batches.push_back(std::move(b));
    }
    return batches;
}

Batch full_batch(const DomainDataset& ds) {
    Batch b;
    b.dim = ds.dim;
    b.features = ds.features;
    b.labels = ds.labels;
    return b;
}

DomainDataset concat_datasets(std::span<const DomainDataset> parts) {
    if (parts.empty()) throw ProtocolError("concat_datasets on empty list");
    DomainDataset out;
    out.dim = parts[0].dim;
    out.split = parts[0].split;
    for (size_t i = 0; i < parts.size(); ++i) {
        const DomainDataset& p = parts[i];
        if (p.dim != out.dim) {
            throw ShapeError("concat_datasets: dim mismatch at part " + std::to_string(i));
        }
        out.domain_id += (i == 0 ? "" : "+") + p.domain_id;
        out.features.insert(out.features.end(), p.features.begin(), p.features.end());
        out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
        out.attacks.insert(out.attacks.end(), p.attacks.begin(), p.attacks.end());
    }
    return out;
}

}  // namespace fedsim
