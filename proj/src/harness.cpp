#include "fedsim/harness.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fedsim/errors.hpp"
#include "fedsim/federation.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/parallel.hpp"

namespace fedsim {

namespace {

constexpr uint64_t kTagDomain = 0x444f4d41;  // "DOMA"
constexpr uint64_t kTagSingle = 0x53494e47;  // "SING"
constexpr uint64_t kTagFed = 0x46454445;     // "FEDE"
constexpr uint64_t kTagAll = 0x414c4c30;     // "ALL0"

uint64_t cell_seed(uint64_t run_seed, uint64_t method_tag, uint64_t user_idx,
                   uint64_t variant) {
    return derive_seed(derive_seed(run_seed, method_tag, user_idx), variant, 0);
}

// Re-raises any simulator error with experiment context prepended, keeping
// the concrete type so callers can still catch what they expect.
template <class Fn>
void with_context(const std::string& ctx, Fn&& fn) {
    try {
        fn();
    } catch (const ShapeError& e) {
        throw ShapeError(ctx + e.what());
    } catch (const EmptyBatchError& e) {
        throw EmptyBatchError(ctx + e.what());
    } catch (const DegenerateDatasetError& e) {
        throw DegenerateDatasetError(ctx + e.what());
    } catch (const DegenerateEvalError& e) {
        throw DegenerateEvalError(ctx + e.what());
    } catch (const CheckpointFormatError& e) {
        throw CheckpointFormatError(ctx + e.what());
    } catch (const DatasetFormatError& e) {
        throw DatasetFormatError(ctx + e.what());
    } catch (const LookupError& e) {
        throw LookupError(ctx + e.what());
    } catch (const ProtocolError& e) {
        throw ProtocolError(ctx + e.what());
    } catch (const SpecError& e) {
        throw SpecError(ctx + e.what());
    }
}

// Each run seed redraws every domain, mixing in the spec's own seed.
std::vector<Domain> materialize_domains(const ExperimentSpec& spec, uint64_t run_seed) {
    std::vector<Domain> out;
    out.reserve(spec.domains.size());
    for (size_t i = 0; i < spec.domains.size(); ++i) {
        DomainSpec ds = spec.domains[i];
        ds.seed = derive_seed(mix64(run_seed) ^ mix64(ds.seed), kTagDomain, i);
        out.push_back(generate_domain(ds));
    }
    return out;
}

ScoreSet score_with_model(const MlpModel& model, const DomainDataset& ds) {
    ScoreSet s;
    s.scores.reserve(ds.size());
    s.labels = ds.labels;
    Batch b = full_batch(ds);
    s.scores = forward_batch(model, b);
    return s;
}

ScoreSet score_with_fusion(std::span<const MlpModel> models, const DomainDataset& ds) {
    ScoreSet s;
    s.scores.reserve(ds.size());
    s.labels = ds.labels;
    for (size_t i = 0; i < ds.size(); ++i) {
        s.scores.push_back(fused_predict(models, ds.row(i)));
    }
    return s;
}

std::string join_ids(std::span<const DomainDataset> centers) {
    std::string out;
    for (size_t i = 0; i < centers.size(); ++i) {
        out += (i == 0 ? "" : "+") + centers[i].domain_id;
    }
    return out;
}

// Threshold from the participating centers' training data, report on the
// user's test data.
ResultRow evaluate(const std::string& method, std::span<const ScoreSet> center_sets,
                   const ScoreSet& user_set, const std::string& centers_id,
                   const std::string& user_id, uint64_t seed) {
    const double thr = cross_domain_threshold(center_sets);
    const EvalReport rep = hter(user_set, thr);
    return {method, centers_id, user_id, seed, rep.hter, rep.eer, rep.auc};
}

void table2_rotation(const ExperimentSpec& spec, uint64_t run_seed,
                     std::span<const Domain> domains, size_t u,
                     std::vector<ResultRow>& rows) {
    const std::string& user_id = domains[u].id();
    const LeaveOneOut loo = leave_one_out_split(domains, user_id);
    const auto centers = std::span<const DomainDataset>(loo.centers);

    // Singles, reused below for the fused condition.
    std::vector<MlpModel> singles;
    singles.reserve(centers.size());
    for (size_t c = 0; c < centers.size(); ++c) {
        FederationConfig cfg = spec.config;
        cfg.master_seed = cell_seed(run_seed, kTagSingle, u, c);
        singles.push_back(train_single(centers[c], cfg));
        const ScoreSet own = score_with_model(singles.back(), centers[c]);
        rows.push_back(evaluate("single", {&own, 1},
                                score_with_model(singles.back(), loo.user),
                                centers[c].domain_id, user_id, run_seed));
    }

    std::vector<ScoreSet> fused_center_sets;
    for (const DomainDataset& c : centers) {
        fused_center_sets.push_back(score_with_fusion(singles, c));
    }
    rows.push_back(evaluate("fused", fused_center_sets,
                            score_with_fusion(singles, loo.user), join_ids(centers),
                            user_id, run_seed));

    {
        FederationConfig cfg = spec.config;
        cfg.master_seed = cell_seed(run_seed, kTagFed, u, 0);
        const FederationResult fed = run_federation(centers, cfg, 1);
        std::vector<ScoreSet> center_sets;
        for (const DomainDataset& c : centers) {
            center_sets.push_back(score_with_model(fed.model, c));
        }
        rows.push_back(evaluate("federated", center_sets,
                                score_with_model(fed.model, loo.user),
                                join_ids(centers), user_id, run_seed));
    }
    {
        FederationConfig cfg = spec.config;
        cfg.master_seed = cell_seed(run_seed, kTagAll, u, 0);
        const MlpModel all = train_all(centers, cfg);
        std::vector<ScoreSet> center_sets;
        for (const DomainDataset& c : centers) {
            center_sets.push_back(score_with_model(all, c));
        }
        rows.push_back(evaluate("all", center_sets, score_with_model(all, loo.user),
                                join_ids(centers), user_id, run_seed));
    }
}

void append_table2_rows(const ExperimentSpec& spec, uint64_t run_seed,
                        std::span<const Domain> domains, std::vector<ResultRow>& rows) {
    for (size_t u = 0; u < domains.size(); ++u) {
        with_context("[user=" + domains[u].id() + "] ",
                     [&] { table2_rotation(spec, run_seed, domains, u, rows); });
    }
}

void append_sweep_rows(const ExperimentSpec& spec, uint64_t run_seed,
                       std::span<const Domain> domains, std::vector<ResultRow>& rows) {
    const LeaveOneOut loo = leave_one_out_split(domains, spec.user);
    for (size_t k = 2; k <= spec.max_centers && k <= loo.centers.size(); ++k) {
        const auto centers = std::span<const DomainDataset>(loo.centers).subspan(0, k);
        FederationConfig cfg = spec.config;
        cfg.master_seed = cell_seed(run_seed, kTagFed, 0, k);
        const FederationResult fed = run_federation(centers, cfg, 1);
        std::vector<ScoreSet> center_sets;
        for (const DomainDataset& c : centers) {
            center_sets.push_back(score_with_model(fed.model, c));
        }
        rows.push_back(evaluate("federated", center_sets,
                                score_with_model(fed.model, loo.user), join_ids(centers),
                                spec.user, run_seed));
    }
}

void append_2d_split_rows(const ExperimentSpec& spec, uint64_t run_seed,
                          std::span<const Domain> domains, std::vector<ResultRow>& rows) {
    const LeaveOneOut loo = leave_one_out_split(domains, spec.user);
    const auto centers = std::span<const DomainDataset>(loo.centers);

    std::vector<MlpModel> singles;
    for (size_t c = 0; c < centers.size(); ++c) {
        FederationConfig cfg = spec.config;
        cfg.master_seed = cell_seed(run_seed, kTagSingle, 0, c);
        singles.push_back(train_single(centers[c], cfg));
        const ScoreSet own = score_with_model(singles.back(), centers[c]);
        rows.push_back(evaluate("single", {&own, 1},
                                score_with_model(singles.back(), loo.user),
                                centers[c].domain_id, spec.user, run_seed));
    }

    std::vector<ScoreSet> fused_center_sets;
    for (const DomainDataset& c : centers) {
        fused_center_sets.push_back(score_with_fusion(singles, c));
    }
    rows.push_back(evaluate("fused", fused_center_sets,
                            score_with_fusion(singles, loo.user), join_ids(centers),
                            spec.user, run_seed));

    FederationConfig cfg = spec.config;
    cfg.master_seed = cell_seed(run_seed, kTagFed, 0, 0);
    const FederationResult fed = run_federation(centers, cfg, 1);
    std::vector<ScoreSet> center_sets;
    for (const DomainDataset& c : centers) {
        center_sets.push_back(score_with_model(fed.model, c));
    }
    rows.push_back(evaluate("federated", center_sets,
                            score_with_model(fed.model, loo.user), join_ids(centers),
                            spec.user, run_seed));
}

void append_3d_holdout_rows(const ExperimentSpec& spec, uint64_t run_seed,
                            std::span<const Domain> domains, std::vector<ResultRow>& rows) {
    // The last non-user domain is the added diversity center.
    const LeaveOneOut loo = leave_one_out_split(domains, spec.user);
    const auto all_centers = std::span<const DomainDataset>(loo.centers);
    const auto base = all_centers.subspan(0, all_centers.size() - 1);

    for (auto centers : {base, all_centers}) {
        FederationConfig cfg = spec.config;
        cfg.master_seed = cell_seed(run_seed, kTagFed, 0, centers.size());
        const FederationResult fed = run_federation(centers, cfg, 1);
        std::vector<ScoreSet> center_sets;
        for (const DomainDataset& c : centers) {
            center_sets.push_back(score_with_model(fed.model, c));
        }
        rows.push_back(evaluate("federated", center_sets,
                                score_with_model(fed.model, loo.user), join_ids(centers),
                                spec.user, run_seed));
    }
}

void append_double_short(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

}  // namespace

const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::table2: return "table2";
        case Scenario::sweep_centers: return "sweep-centers";
        case Scenario::split_2d: return "2d-split";
        case Scenario::holdout_3d: return "3d-holdout";
        case Scenario::custom: return "custom";
    }
    return "?";
}

Scenario scenario_from_name(std::string_view name) {
    for (Scenario s : {Scenario::table2, Scenario::sweep_centers, Scenario::split_2d,
                       Scenario::holdout_3d, Scenario::custom}) {
        if (name == scenario_name(s)) return s;
    }
    throw SpecError("unknown scenario '" + std::string(name) + "'");
}

void ExperimentSpec::validate() const {
    config.validate();
    if (seeds.empty()) throw SpecError("seed list must be non-empty");
    for (const DomainSpec& d : domains) d.validate();
    auto has_domain = [&](const std::string& id) {
        return std::any_of(domains.begin(), domains.end(),
                           [&](const DomainSpec& d) { return d.domain_id == id; });
    };
    switch (scenario) {
        case Scenario::table2:
        case Scenario::custom:
            if (domains.size() < 2) throw SpecError("scenario needs >= 2 domains");
            break;
        case Scenario::sweep_centers:
            if (user.empty() || !has_domain(user)) throw SpecError("sweep user not found");
            if (domains.size() < 3) throw SpecError("sweep needs user + >= 2 centers");
            if (max_centers < 2) throw SpecError("max_centers must be >= 2");
            break;
        case Scenario::split_2d:
            if (user.empty() || !has_domain(user)) throw SpecError("2d-split user not found");
            if (domains.size() < 3) throw SpecError("2d-split needs user + >= 2 centers");
            break;
        case Scenario::holdout_3d:
            if (user.empty() || !has_domain(user)) throw SpecError("3d-holdout user not found");
            if (domains.size() < 3) {
                throw SpecError("3d-holdout needs user + base centers + diversity center");
            }
            break;
    }
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, size_t max_threads) {
    spec.validate();
    std::vector<std::vector<ResultRow>> by_seed(spec.seeds.size());
    parallel_for(spec.seeds.size(), max_threads, [&](size_t si) {
        const uint64_t run_seed = spec.seeds[si];
        const std::string ctx = "[scenario=" + std::string(scenario_name(spec.scenario)) +
                                ", seed=" + std::to_string(run_seed) + "] ";
        with_context(ctx, [&] {
            const std::vector<Domain> domains = materialize_domains(spec, run_seed);
            std::vector<ResultRow>& rows = by_seed[si];
            switch (spec.scenario) {
                case Scenario::table2:
                case Scenario::custom:
                    append_table2_rows(spec, run_seed, domains, rows);
                    break;
                case Scenario::sweep_centers:
                    append_sweep_rows(spec, run_seed, domains, rows);
                    break;
                case Scenario::split_2d:
                    append_2d_split_rows(spec, run_seed, domains, rows);
                    break;
                case Scenario::holdout_3d:
                    append_3d_holdout_rows(spec, run_seed, domains, rows);
                    break;
            }
        });
    });
    std::vector<ResultRow> rows;
    for (auto& part : by_seed) {
        rows.insert(rows.end(), std::make_move_iterator(part.begin()),
                    std::make_move_iterator(part.end()));
    }
    return rows;
}

Summary summarize(std::span<const ResultRow> rows) {
    if (rows.empty()) throw ProtocolError("summarize with no rows");

    struct Acc {
        size_t n = 0;
        double hter = 0.0, eer = 0.0, auc = 0.0;
    };
    std::vector<std::pair<std::pair<std::string, std::string>, Acc>> groups;
    std::vector<std::pair<std::string, Acc>> methods;
    auto bump = [](Acc& a, const ResultRow& r) {
        a.n += 1;
        a.hter += r.hter;
        a.eer += r.eer;
        a.auc += r.auc;
    };
    for (const ResultRow& r : rows) {
        const auto key = std::make_pair(r.method, r.centers);
        auto g = std::find_if(groups.begin(), groups.end(),
                              [&](const auto& kv) { return kv.first == key; });
        if (g == groups.end()) g = groups.insert(groups.end(), {key, {}});
        bump(g->second, r);
        auto m = std::find_if(methods.begin(), methods.end(),
                              [&](const auto& kv) { return kv.first == r.method; });
        if (m == methods.end()) m = methods.insert(methods.end(), {r.method, {}});
        bump(m->second, r);
    }

    Summary out;
    auto to_row = [](const std::string& method, const std::string& centers, const Acc& a) {
        const double n = static_cast<double>(a.n);
        return SummaryRow{method, centers, a.n, a.hter / n, a.eer / n, a.auc / n};
    };
    for (const auto& [key, acc] : groups) out.rows.push_back(to_row(key.first, key.second, acc));
    for (const auto& [method, acc] : methods) out.method_avg.push_back(to_row(method, "", acc));

    auto mean_auc = [&](const std::string& method) -> const SummaryRow* {
        for (const SummaryRow& r : out.method_avg) {
            if (r.method == method) return &r;
        }
        return nullptr;
    };
    const std::pair<const char*, const char*> pairs[] = {
        {"single", "fused"}, {"fused", "federated"}, {"federated", "all"},
        {"single", "federated"}};
    for (const auto& [lo, hi] : pairs) {
        const SummaryRow* a = mean_auc(lo);
        const SummaryRow* b = mean_auc(hi);
        if (a == nullptr || b == nullptr) continue;
        char buf[160];
        std::snprintf(buf, sizeof buf, "mean_auc %s=%.4f %s %s=%.4f", lo, a->mean_auc,
                      a->mean_auc < b->mean_auc ? "<" : ">=", hi, b->mean_auc);
        out.orderings.emplace_back(buf);
    }
    return out;
}

std::string format_summary(const Summary& s) {
    std::string out = "method,centers,n,mean_hter_pct,mean_eer_pct,mean_auc_pct\n";
    auto emit = [&out](const SummaryRow& r) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s,%s,%zu,%.2f,%.2f,%.2f\n", r.method.c_str(),
                      r.centers.empty() ? "(avg)" : r.centers.c_str(), r.n,
                      100.0 * r.mean_hter, 100.0 * r.mean_eer, 100.0 * r.mean_auc);
        out += buf;
    };
    for (const SummaryRow& r : s.rows) emit(r);
    for (const SummaryRow& r : s.method_avg) emit(r);
    for (const std::string& o : s.orderings) {
        out += o;
        out += '\n';
    }
    return out;
}

void write_rows_csv(std::ostream& os, std::span<const ResultRow> rows) {
    std::string out = "method,centers,user,seed,hter,eer,auc\n";
    for (const ResultRow& r : rows) {
        out += r.method;
        out += ',';
        out += r.centers;
        out += ',';
        out += r.user;
        out += ',';
        out += std::to_string(r.seed);
        for (double v : {r.hter, r.eer, r.auc}) {
            out += ',';
            append_double_short(out, v);
        }
        out += '\n';
    }
    os << out;
}

std::vector<ResultRow> read_rows_csv(std::istream& is) {
    std::vector<ResultRow> rows;
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "method,centers,user,seed,hter,eer,auc") {
                throw DatasetFormatError("line 1: unexpected rows.csv header");
            }
            continue;
        }
        std::vector<std::string> fields;
        size_t start = 0;
        while (true) {
            const size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        if (fields.size() != 7) {
            throw DatasetFormatError("line " + std::to_string(line_no) +
                                     ": expected 7 fields");
        }
        ResultRow r;
        r.method = fields[0];
        r.centers = fields[1];
        r.user = fields[2];
        auto parse_u64 = [&](const std::string& s) {
            uint64_t v = 0;
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
                throw DatasetFormatError("line " + std::to_string(line_no) +
                                         ": bad integer '" + s + "'");
            }
            return v;
        };
        auto parse_f64 = [&](const std::string& s) {
            double v = 0.0;
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
                throw DatasetFormatError("line " + std::to_string(line_no) +
                                         ": bad real '" + s + "'");
            }
            return v;
        };
        r.seed = parse_u64(fields[3]);
        r.hter = parse_f64(fields[4]);
        r.eer = parse_f64(fields[5]);
        r.auc = parse_f64(fields[6]);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace fedsim
