#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fedsim/errors.hpp"
#include "fedsim/harness.hpp"

namespace fedsim {

namespace {

using nlohmann::json;

DomainSpec make_domain(std::string id, double rotation, std::vector<double> translation,
                       std::vector<double> scale, std::vector<AttackType> attacks,
                       uint64_t seed) {
    DomainSpec d;
    d.domain_id = std::move(id);
    d.attack_types = std::move(attacks);
    d.rotation = rotation;
    d.translation = std::move(translation);
    d.scale = std::move(scale);
    d.noise_sigma = 0.3;
    d.seed = seed;
    return d;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const char* where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw SpecError(std::string("unknown key '") + key + "' in " + where);
        }
    }
}

AttackType attack_from_name(const std::string& name) {
    for (AttackType a : {AttackType::print, AttackType::video, AttackType::mask_a,
                         AttackType::mask_b}) {
        if (name == attack_name(a)) return a;
    }
    throw SpecError("unknown attack type '" + name + "'");
}

void parse_config(const json& j, FederationConfig& cfg) {
    check_keys(j,
               {"rounds", "local_epochs", "learning_rate", "batch_size", "optimizer",
                "weighting", "hidden_widths", "early_stop", "checkpoint_interval",
                "checkpoint_dir", "master_seed"},
               "config");
    if (j.contains("rounds")) cfg.rounds = j.at("rounds").get<size_t>();
    if (j.contains("local_epochs")) cfg.local_epochs = j.at("local_epochs").get<size_t>();
    if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<size_t>();
    if (j.contains("optimizer")) {
        const auto name = j.at("optimizer").get<std::string>();
        if (name == "adam") {
            cfg.optimizer = OptimizerKind::adam;
        } else if (name == "plain-gd") {
            cfg.optimizer = OptimizerKind::plain_gd;
        } else {
            throw SpecError("unknown optimizer '" + name + "'");
        }
    }
    if (j.contains("weighting")) {
        const auto name = j.at("weighting").get<std::string>();
        if (name == "uniform") {
            cfg.weighting = AggregationWeighting::uniform;
        } else if (name == "by-sample-count") {
            cfg.weighting = AggregationWeighting::by_sample_count;
        } else {
            throw SpecError("unknown weighting '" + name + "'");
        }
    }
    if (j.contains("hidden_widths")) {
        cfg.hidden_widths = j.at("hidden_widths").get<std::vector<size_t>>();
    }
    if (j.contains("early_stop")) cfg.early_stop = j.at("early_stop").get<bool>();
    if (j.contains("checkpoint_interval")) {
        cfg.checkpoint_interval = j.at("checkpoint_interval").get<size_t>();
    }
    if (j.contains("checkpoint_dir")) {
        cfg.checkpoint_dir = j.at("checkpoint_dir").get<std::string>();
    }
    if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<uint64_t>();
}

DomainSpec parse_domain(const json& j) {
    check_keys(j,
               {"id", "dim", "train_real", "train_spoof", "test_real", "test_spoof",
                "attacks", "rotation", "translation", "scale", "noise_sigma",
                "class_separation", "seed"},
               "domain");
    DomainSpec d;
    d.domain_id = j.at("id").get<std::string>();
    if (j.contains("dim")) d.dim = j.at("dim").get<size_t>();
    if (j.contains("train_real")) d.train_real = j.at("train_real").get<size_t>();
    if (j.contains("train_spoof")) d.train_spoof = j.at("train_spoof").get<size_t>();
    if (j.contains("test_real")) d.test_real = j.at("test_real").get<size_t>();
    if (j.contains("test_spoof")) d.test_spoof = j.at("test_spoof").get<size_t>();
    if (j.contains("attacks")) {
        for (const auto& a : j.at("attacks")) {
            d.attack_types.push_back(attack_from_name(a.get<std::string>()));
        }
    } else {
        d.attack_types = {AttackType::print, AttackType::video};
    }
    if (j.contains("rotation")) d.rotation = j.at("rotation").get<double>();
    if (j.contains("translation")) {
        d.translation = j.at("translation").get<std::vector<double>>();
    }
    if (j.contains("scale")) d.scale = j.at("scale").get<std::vector<double>>();
    if (j.contains("noise_sigma")) d.noise_sigma = j.at("noise_sigma").get<double>();
    if (j.contains("class_separation")) {
        d.class_separation = j.at("class_separation").get<double>();
    }
    if (j.contains("seed")) d.seed = j.at("seed").get<uint64_t>();
    return d;
}

}  // namespace

std::vector<DomainSpec> default_table2_domains() {
    const std::vector<AttackType> pv = {AttackType::print, AttackType::video};
    return {
        make_domain("A", 0.0, {}, {}, pv, 11),
        make_domain("B", 0.5, {0.9, -0.4, 0.6, 0.3, -0.7, 0.2, 0.5, -0.3},
                    {1.2, 0.8, 1.1, 0.9, 1.15, 0.85, 1.05, 0.95}, pv, 22),
        make_domain("C", 1.0, {-0.7, 0.8, -0.2, 0.5, 0.4, -0.6, -0.3, 0.6},
                    {0.9, 1.1, 0.8, 1.2, 0.95, 1.05, 0.9, 1.1}, pv, 33),
        make_domain("D", 1.5, {0.3, 0.5, -0.8, -0.4, 0.6, 0.7, -0.5, 0.2},
                    {1.1, 0.95, 1.05, 0.85, 1.2, 0.9, 1.15, 0.8}, pv, 44),
    };
}

std::vector<DomainSpec> default_sweep_domains() {
    std::vector<DomainSpec> out = default_table2_domains();
    const std::vector<AttackType> pv = {AttackType::print, AttackType::video};
    out.push_back(make_domain("E", 2.0, {-0.5, -0.6, 0.4, 0.8, -0.3, 0.5, 0.2, -0.7},
                              {0.85, 1.2, 0.9, 1.1, 1.05, 0.8, 1.15, 0.95}, pv, 55));
    return out;
}

std::vector<DomainSpec> default_2d_split_domains() {
    return {
        make_domain("P", 0.3, {0.4, -0.3, 0.2, 0.5, -0.4, 0.3, -0.2, 0.4}, {},
                    {AttackType::print}, 66),
        make_domain("V", 0.8, {-0.5, 0.4, -0.3, -0.2, 0.5, -0.4, 0.3, -0.5}, {},
                    {AttackType::video}, 77),
        make_domain("U", 1.2, {0.6, 0.5, -0.6, 0.3, -0.3, 0.6, -0.5, 0.2}, {},
                    {AttackType::print, AttackType::video}, 88),
    };
}

std::vector<DomainSpec> default_3d_holdout_domains() {
    const std::vector<AttackType> pv = {AttackType::print, AttackType::video};
    return {
        make_domain("A3", 0.2, {0.5, -0.4, 0.3, 0.4, -0.5, 0.2, 0.6, -0.3}, {}, pv, 101),
        make_domain("B3", 0.7, {-0.4, 0.6, -0.5, 0.2, 0.4, -0.3, -0.6, 0.5}, {}, pv, 102),
        make_domain("U3", 0.5, {0.3, 0.4, 0.5, -0.6, 0.2, -0.4, 0.3, 0.6}, {},
                    {AttackType::mask_a}, 103),
        // Declared last: the diversity center the 3d comparison toggles.
        make_domain("H", 0.4, {-0.6, 0.3, 0.4, 0.5, -0.2, 0.6, -0.4, 0.3}, {},
                    {AttackType::mask_a, AttackType::mask_b}, 104),
    };
}

ExperimentSpec default_spec(Scenario scenario) {
    ExperimentSpec spec;
    spec.scenario = scenario;
    spec.seeds = {1, 2, 3, 4, 5};
    switch (scenario) {
        case Scenario::table2:
        case Scenario::custom:
            spec.domains = default_table2_domains();
            break;
        case Scenario::sweep_centers:
            spec.domains = default_sweep_domains();
            spec.user = "E";
            break;
        case Scenario::split_2d:
            spec.domains = default_2d_split_domains();
            spec.user = "U";
            break;
        case Scenario::holdout_3d:
            spec.domains = default_3d_holdout_domains();
            spec.user = "U3";
            break;
    }
    return spec;
}

ExperimentSpec spec_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SpecError(std::string("spec is not valid JSON: ") + e.what());
    }
    try {
        if (!j.is_object()) throw SpecError("spec root must be a JSON object");
        check_keys(j, {"scenario", "seeds", "num_seeds", "seed_base", "user",
                       "max_centers", "config", "domains"},
                   "spec");
        Scenario scenario = Scenario::table2;
        if (j.contains("scenario")) {
            scenario = scenario_from_name(j.at("scenario").get<std::string>());
        }
        ExperimentSpec spec = default_spec(scenario);
        if (j.contains("seeds") && j.contains("num_seeds")) {
            throw SpecError("give either seeds or num_seeds, not both");
        }
        if (j.contains("seeds")) {
            spec.seeds = j.at("seeds").get<std::vector<uint64_t>>();
        } else if (j.contains("num_seeds")) {
            const auto n = j.at("num_seeds").get<size_t>();
            const uint64_t base =
                j.contains("seed_base") ? j.at("seed_base").get<uint64_t>() : 1;
            spec.seeds.clear();
            for (size_t i = 0; i < n; ++i) spec.seeds.push_back(base + i);
        }
        if (j.contains("user")) spec.user = j.at("user").get<std::string>();
        if (j.contains("max_centers")) spec.max_centers = j.at("max_centers").get<size_t>();
        if (j.contains("config")) parse_config(j.at("config"), spec.config);
        if (j.contains("domains")) {
            spec.domains.clear();
            for (const auto& d : j.at("domains")) spec.domains.push_back(parse_domain(d));
        }
        spec.validate();
        return spec;
    } catch (const json::exception& e) {
        throw SpecError(std::string("bad spec value: ") + e.what());
    }
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SpecError("cannot open spec file " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return spec_from_json_text(buf.str());
}

Summary run_and_write(const ExperimentSpec& spec, const std::filesystem::path& out_dir,
                      size_t max_threads) {
    std::filesystem::create_directories(out_dir);
    const std::vector<ResultRow> rows = run_experiment(spec, max_threads);
    {
        std::ofstream f(out_dir / "rows.csv", std::ios::binary);
        if (!f) throw DatasetFormatError("cannot write " + (out_dir / "rows.csv").string());
        write_rows_csv(f, rows);
    }
    const Summary summary = summarize(rows);
    {
        std::ofstream f(out_dir / "summary.txt", std::ios::binary);
        if (!f) {
            throw DatasetFormatError("cannot write " + (out_dir / "summary.txt").string());
        }
        f << format_summary(summary);
    }
    return summary;
}

}  // namespace fedsim
