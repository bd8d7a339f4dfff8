#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fedsim/data.hpp"
#include "fedsim/errors.hpp"

using namespace fedsim;

namespace {

DomainSpec base_spec() {
    DomainSpec s;
    s.domain_id = "T";
    s.dim = 8;
    s.train_real = 40;
    s.train_spoof = 40;
    s.test_real = 30;
    s.test_spoof = 30;
    s.attack_types = {AttackType::print, AttackType::video};
    s.seed = 5;
    return s;
}

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "fedsim_data_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

template <class E, class Fn>
std::string error_message(Fn&& fn) {
    try {
        fn();
    } catch (const E& e) {
        return e.what();
    }
    FAIL("expected exception was not thrown");
    return {};
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("generation is deterministic and respects the requested counts") {
    const DomainSpec spec = base_spec();
    const DomainDataset a = generate_split(spec, Split::train);
    const DomainDataset b = generate_split(spec, Split::train);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    CHECK(a.attacks == b.attacks);

    CHECK(a.size() == 80);
    CHECK(a.dim == 8);
    a.validate();

    const DomainDataset t = generate_split(spec, Split::test);
    CHECK(t.size() == 60);
    CHECK(t.features != a.features);  // distinct stream per split

    size_t reals = 0;
    for (uint8_t y : a.labels) reals += y;
    CHECK(reals == 40);
}

TEST_CASE("spoof counts split evenly with remainder to the earliest attacks") {
    DomainSpec spec = base_spec();
    spec.train_spoof = 5;
    spec.attack_types = {AttackType::print, AttackType::video};
    const DomainDataset ds = generate_split(spec, Split::train);
    std::map<AttackType, size_t> counts;
    for (AttackType a : ds.attacks) {
        if (a != AttackType::none) counts[a] += 1;
    }
    CHECK(counts[AttackType::print] == 3);
    CHECK(counts[AttackType::video] == 2);
}

TEST_CASE("real and spoof clusters are separated by class_separation") {
    DomainSpec spec = base_spec();
    spec.attack_types = {AttackType::print};  // axis 0
    spec.train_real = 200;
    spec.train_spoof = 200;
    const DomainDataset ds = generate_split(spec, Split::train);

    double real_axis0 = 0.0, spoof_axis0 = 0.0;
    for (size_t i = 0; i < ds.size(); ++i) {
        (ds.labels[i] != 0 ? real_axis0 : spoof_axis0) += ds.row(i)[0];
    }
    real_axis0 /= 200.0;
    spoof_axis0 /= 200.0;
    CHECK(std::fabs(real_axis0) < 0.5);               // centered at origin
    CHECK(std::fabs(spoof_axis0 - 4.0) < 0.5);        // default separation
}

TEST_CASE("translation and scale act exactly; rotation preserves norms") {
    DomainSpec plain = base_spec();
    plain.noise_sigma = 0.0;
    const DomainDataset base = generate_split(plain, Split::train);

    DomainSpec shifted = plain;
    shifted.translation = {1.0, -2.0, 0.5, 3.0, -0.25, 0.75, 2.0, -1.5};
    const DomainDataset moved = generate_split(shifted, Split::train);
    for (size_t i = 0; i < base.features.size(); ++i) {
        CHECK(moved.features[i] == base.features[i] + shifted.translation[i % 8]);
    }

    DomainSpec stretched = plain;
    stretched.scale = {2.0, 0.5, 1.0, 4.0, 0.25, 1.0, 2.0, 0.5};
    const DomainDataset scaled = generate_split(stretched, Split::train);
    for (size_t i = 0; i < base.features.size(); ++i) {
        CHECK(scaled.features[i] == base.features[i] * stretched.scale[i % 8]);
    }

    DomainSpec turned = plain;
    turned.rotation = 0.9;
    const DomainDataset rot = generate_split(turned, Split::train);
    for (size_t i = 0; i < base.size(); ++i) {
        double n0 = 0.0, n1 = 0.0;
        for (size_t j = 0; j < 8; ++j) {
            n0 += base.row(i)[j] * base.row(i)[j];
            n1 += rot.row(i)[j] * rot.row(i)[j];
        }
        CHECK(n1 == doctest::Approx(n0).epsilon(1e-12));
    }
}

TEST_CASE("spec validation rejects inconsistent recipes") {
    DomainSpec s = base_spec();
    s.attack_types.clear();
    CHECK_THROWS_AS(generate_split(s, Split::train), SpecError);

    s = base_spec();
    s.dim = 2;
    s.attack_types = {AttackType::mask_b};  // needs axis 3
    CHECK_THROWS_AS(s.validate(), SpecError);

    s = base_spec();
    s.translation = {1.0};  // wrong length
    CHECK_THROWS_AS(s.validate(), SpecError);

    s = base_spec();
    s.scale = std::vector<double>(8, -1.0);
    CHECK_THROWS_AS(s.validate(), SpecError);

    s = base_spec();
    s.noise_sigma = -0.1;
    CHECK_THROWS_AS(s.validate(), SpecError);

    s = base_spec();
    s.attack_types = {AttackType::none};
    CHECK_THROWS_AS(s.validate(), SpecError);
}

TEST_CASE("dataset validation enforces the label/attack invariant") {
    DomainDataset ds = generate_split(base_spec(), Split::train);
    ds.attacks[0] = AttackType::print;  // sample 0 is real
    CHECK_THROWS_AS(ds.validate(), SpecError);

    ds = generate_split(base_spec(), Split::train);
    ds.labels.pop_back();
    CHECK_THROWS_AS(ds.validate(), ShapeError);

    DomainSpec reals_only = base_spec();
    reals_only.train_spoof = 0;
    const DomainDataset one_class = generate_split(reals_only, Split::train);
    CHECK(!one_class.has_both_classes());
    CHECK(generate_split(base_spec(), Split::train).has_both_classes());
}

TEST_CASE("leave-one-out keeps declared order and picks the right splits") {
    std::vector<Domain> domains;
    for (const char* id : {"A", "B", "C", "D"}) {
        DomainSpec s = base_spec();
        s.domain_id = id;
        s.seed = static_cast<uint64_t>(id[0]);
        domains.push_back(generate_domain(s));
    }

    const LeaveOneOut loo = leave_one_out_split(domains, "C");
    REQUIRE(loo.centers.size() == 3);
    CHECK(loo.centers[0].domain_id == "A");
    CHECK(loo.centers[1].domain_id == "B");
    CHECK(loo.centers[2].domain_id == "D");
    for (const auto& c : loo.centers) CHECK(c.split == Split::train);
    CHECK(loo.user.domain_id == "C");
    CHECK(loo.user.split == Split::test);

    CHECK_THROWS_AS(leave_one_out_split(domains, "Z"), LookupError);
    const std::vector<Domain> one(domains.begin(), domains.begin() + 1);
    CHECK_THROWS_AS(leave_one_out_split(one, "A"), ProtocolError);
}

TEST_CASE("dataset files round-trip bit-exactly") {
    const DomainDataset ds = generate_split(base_spec(), Split::train);
    const auto path = temp_file("roundtrip.csv");
    save_dataset(ds, path);
    const DomainDataset back = load_dataset(path);
    CHECK(back.domain_id == ds.domain_id);
    CHECK(back.split == ds.split);
    CHECK(back.dim == ds.dim);
    CHECK(back.labels == ds.labels);
    CHECK(back.attacks == ds.attacks);
    REQUIRE(back.features.size() == ds.features.size());
    CHECK(std::memcmp(back.features.data(), ds.features.data(),
                      ds.features.size() * sizeof(double)) == 0);
}

TEST_CASE("malformed dataset files fail with the offending line number") {
    const std::string header = "domain,split,label,attack,f0,f1\n";
    const auto path = temp_file("bad.csv");

    write_text(path, "domain,split,label,bogus,f0,f1\nA,train,1,none,0.0,0.0\n");
    CHECK(contains(error_message<DatasetFormatError>([&] { load_dataset(path); }),
                   "line 1"));

    write_text(path, header + "A,train,1,none,0.0,0.0\nA,train,2,none,0.0,0.0\n");
    const auto bad_label = error_message<DatasetFormatError>([&] { load_dataset(path); });
    CHECK(contains(bad_label, "line 3"));
    CHECK(contains(bad_label, "label"));

    write_text(path, header + "A,train,0,none,0.0,0.0\n");
    CHECK(contains(error_message<DatasetFormatError>([&] { load_dataset(path); }),
                   "'none'"));

    write_text(path, header + "A,train,1,print,0.0,0.0\n");
    CHECK_THROWS_AS(load_dataset(path), DatasetFormatError);

    write_text(path, header + "A,train,1,none,0.0,zebra\n");
    CHECK(contains(error_message<DatasetFormatError>([&] { load_dataset(path); }),
                   "zebra"));

    write_text(path, header + "A,train,1,none,0.0\n");
    CHECK(contains(error_message<DatasetFormatError>([&] { load_dataset(path); }),
                   "fields"));

    write_text(path, header + "A,train,1,none,0.0,0.0\nB,train,1,none,0.0,0.0\n");
    CHECK(contains(error_message<DatasetFormatError>([&] { load_dataset(path); }),
                   "domain id"));

    CHECK_THROWS_AS(load_dataset(temp_file("missing.csv")), DatasetFormatError);
}

TEST_CASE("batch_iter partitions every epoch with a seeded shuffle") {
    DomainSpec spec = base_spec();
    spec.train_real = 5;
    spec.train_spoof = 5;
    const DomainDataset ds = generate_split(spec, Split::train);

    RngStream rng(3);
    const auto batches = batch_iter(ds, 4, rng);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size() == 4);
    CHECK(batches[1].size() == 4);
    CHECK(batches[2].size() == 2);

    // Every stored row appears exactly once across the epoch.
    std::multiset<std::vector<double>> seen, expected;
    for (size_t i = 0; i < ds.size(); ++i) {
        expected.insert({ds.row(i).begin(), ds.row(i).end()});
    }
    for (const Batch& b : batches) {
        for (size_t i = 0; i < b.size(); ++i) {
            seen.insert({b.features.begin() + static_cast<long>(i * b.dim),
                         b.features.begin() + static_cast<long>((i + 1) * b.dim)});
        }
    }
    CHECK(seen == expected);

    // Same stream seed, same batches; a different seed reshuffles.
    RngStream rng_b(3), rng_c(4);
    const auto same = batch_iter(ds, 4, rng_b);
    const auto other = batch_iter(ds, 4, rng_c);
    CHECK(same[0].features == batches[0].features);
    bool any_diff = false;
    for (size_t k = 0; k < other.size(); ++k) {
        any_diff = any_diff || other[k].features != batches[k].features;
    }
    CHECK(any_diff);

    CHECK_THROWS_AS(batch_iter(DomainDataset{}, 4, rng), EmptyBatchError);
    CHECK_THROWS_AS(batch_iter(ds, 0, rng), SpecError);
}

TEST_CASE("full_batch and concat_datasets preserve order and sizes") {
    DomainSpec sa = base_spec();
    sa.domain_id = "A";
    DomainSpec sb = base_spec();
    sb.domain_id = "B";
    sb.seed = 6;
    const DomainDataset a = generate_split(sa, Split::train);
    const DomainDataset b = generate_split(sb, Split::train);

    const Batch fb = full_batch(a);
    CHECK(fb.size() == a.size());
    CHECK(fb.features == a.features);

    const DomainDataset both = concat_datasets(std::vector<DomainDataset>{a, b});
    CHECK(both.domain_id == "A+B");
    CHECK(both.size() == a.size() + b.size());
    CHECK(std::equal(a.features.begin(), a.features.end(), both.features.begin()));
    CHECK_THROWS_AS(concat_datasets({}), ProtocolError);
}
