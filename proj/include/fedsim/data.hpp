#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedsim/rng.hpp"

namespace fedsim {

enum class Split : uint8_t { train, test };

// Spoof instrument taxonomy. `none` is reserved for real samples.
enum class AttackType : uint8_t { none, print, video, mask_a, mask_b };

const char* split_name(Split s);
const char* attack_name(AttackType a);

// Labeled feature vectors for one split of one domain. label 0 = spoof,
// 1 = real; attack tag is `none` exactly on real samples.
struct DomainDataset {
    std::string domain_id;
    Split split = Split::train;
    size_t dim = 0;
    std::vector<double> features;  // row-major, size() x dim
    std::vector<uint8_t> labels;
    std::vector<AttackType> attacks;

    size_t size() const { return labels.size(); }
    std::span<const double> row(size_t i) const {
        return {features.data() + i * dim, dim};
    }
    bool has_both_classes() const;
    // Throws ShapeError / SpecError on any internal inconsistency.
    void validate() const;
};

// Recipe for one synthetic domain: cluster counts, which spoof instruments
// appear, and the affine shift + noise that set this domain apart.
//
// The base geometry is shared by every domain: real samples cluster at the
// origin, and each attack type clusters at a fixed coordinate axis scaled by
// class_separation (print = axis 0, video = 1, mask-A = 2, mask-B = 3), all
// with unit isotropic spread. A domain then rotates (angle `rotation` in the
// disjoint planes (0,1), (2,3), ...), scales per axis, translates, and adds
// isotropic Gaussian noise.
struct DomainSpec {
    std::string domain_id;
    size_t dim = 8;
    size_t train_real = 64;
    size_t train_spoof = 64;
    size_t test_real = 128;
    size_t test_spoof = 128;
    std::vector<AttackType> attack_types;  // non-empty when any spoof count > 0
    double rotation = 0.0;                 // radians
    std::vector<double> translation;       // size dim, or empty for zero
    std::vector<double> scale;             // size dim, or empty for all-ones
    double noise_sigma = 0.0;
    double class_separation = 4.0;
    uint64_t seed = 0;

    void validate() const;  // throws SpecError
};

struct Domain {
    DomainDataset train;
    DomainDataset test;
    const std::string& id() const { return train.domain_id; }
};

// Deterministic per (spec, split): same spec yields bit-identical data.
DomainDataset generate_split(const DomainSpec& spec, Split split);
Domain generate_domain(const DomainSpec& spec);

struct LeaveOneOut {
    std::vector<DomainDataset> centers;  // train splits, input order minus user
    DomainDataset user;                  // the held-out domain's test split
};

LeaveOneOut leave_one_out_split(std::span<const Domain> domains,
                                std::string_view user_domain);

// CSV with header `domain,split,label,attack,f0,...,f{d-1}`; reals written
// with 17 significant digits so the round-trip is bit-exact.
void save_dataset(const DomainDataset& ds, const std::filesystem::path& path);
DomainDataset load_dataset(const std::filesystem::path& path);

// One training mini-batch, features materialized in visit order.
struct Batch {
    size_t dim = 0;
    std::vector<double> features;
    std::vector<uint8_t> labels;
    size_t size() const { return labels.size(); }
};

// One epoch of seeded-shuffle mini-batches. Every sample appears exactly
// once; the final batch may be short.
std::vector<Batch> batch_iter(const DomainDataset& ds, size_t batch_size,
                              RngStream& rng);

// All samples in stored order as a single batch.
Batch full_batch(const DomainDataset& ds);

// Union with multiplicity, input order preserved; ids joined with '+'.
DomainDataset concat_datasets(std::span<const DomainDataset> parts);

}  // namespace fedsim
