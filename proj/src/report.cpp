#include "refer/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "refer/error.hpp"

namespace refer {

using ojson = nlohmann::ordered_json;

namespace {

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fixed(const std::optional<double>& v) { return v ? fixed(*v) : "NA"; }

ojson opt_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::optional<double> mean_of(const std::vector<std::optional<double>>& values) {
    double sum = 0;
    std::size_t k = 0;
    for (const auto& v : values)
        if (v) {
            sum += *v;
            ++k;
        }
    if (k == 0) return std::nullopt;
    return sum / static_cast<double>(k);
}

template <typename F>
std::optional<double> defined(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::DegenerateInput || e.code() == ErrorCode::LengthMismatch) return std::nullopt;
        throw;
    }
}

const SampleVerdict* verdict_of(const RunEntry& e) { return std::get_if<SampleVerdict>(&e); }

double mean_latency(const RunRecord& run) {
    std::int64_t sum = 0;
    std::size_t k = 0;
    for (const auto& e : run.entries)
        if (const auto* v = verdict_of(e)) {
            sum += v->timing.total_us;
            ++k;
        }
    return k ? static_cast<double>(sum) / static_cast<double>(k) : 0.0;
}

}  // namespace

void check_alignment(const RunRecord& run, const Dataset& dataset) {
    std::set<std::string> seen;
    for (const auto& e : run.entries) {
        const std::string& id = entry_sample_id(e);
        if (!dataset.find(id))
            throw Error(ErrorCode::IdMismatch, "run sample " + id + " is not in dataset " + dataset.name);
        seen.insert(id);
    }
    for (const auto& s : dataset.samples)
        if (!seen.contains(s.id))
            throw Error(ErrorCode::IdMismatch, "dataset sample " + s.id + " has no entry in the run");
}

CorrelationReport correlate_run(const RunRecord& run, const Dataset& dataset) {
    if (run.info.task_kind != TaskKind::Rating || dataset.task_kind() != TaskKind::Rating)
        throw Error(ErrorCode::InvalidRequest, "correlations need a rating run and dataset");
    check_alignment(run, dataset);
    CorrelationReport out;
    out.dataset = dataset.name;
    out.method = run.info.method;
    for (const auto& metric : run.info.metrics) {
        CorrelationRow row;
        row.metric = metric;
        std::vector<double> machine, human;
        for (const auto& e : run.entries) {
            if (entry_metric(e) != metric) continue;
            const auto* v = verdict_of(e);
            if (!v || !v->ac.final_score) {
                ++row.failures;
                continue;
            }
            const Sample* s = dataset.find(v->sample_id);
            auto it = s->human_scores.find(metric);
            if (it == s->human_scores.end())
                throw Error(ErrorCode::IdMismatch, "sample " + s->id + " has no human score for " + metric);
            machine.push_back(v->ac.final_score->to_double());
            human.push_back(it->second.to_double());
        }
        row.n_pairs = machine.size();
        row.spearman = defined([&] { return spearman(machine, human).value; });
        row.kendall_tau_b = defined([&] { return kendall_tau_b(machine, human).value; });
        out.rows.push_back(std::move(row));
    }
    std::vector<std::optional<double>> rho, tau;
    for (const auto& r : out.rows) {
        rho.push_back(r.spearman);
        tau.push_back(r.kendall_tau_b);
    }
    out.mean_spearman = mean_of(rho);
    out.mean_kendall_tau_b = mean_of(tau);
    return out;
}

std::string correlation_tsv(const CorrelationReport& r) {
    std::string out = "# refer-correlation v" + std::to_string(kReportFormatVersion) + "\n";
    out += "# dataset=" + r.dataset + " method=" + r.method + "\n";
    out += "metric\tn_pairs\tfailures\tspearman\tkendall_tau_b\n";
    for (const auto& row : r.rows)
        out += row.metric + "\t" + std::to_string(row.n_pairs) + "\t" + std::to_string(row.failures) + "\t" +
               fixed(row.spearman) + "\t" + fixed(row.kendall_tau_b) + "\n";
    out += "mean\t\t\t" + fixed(r.mean_spearman) + "\t" + fixed(r.mean_kendall_tau_b) + "\n";
    return out;
}

ojson correlation_json(const CorrelationReport& r) {
    ojson rows = ojson::array();
    for (const auto& row : r.rows)
        rows.push_back(ojson{{"metric", row.metric},
                             {"n_pairs", row.n_pairs},
                             {"failures", row.failures},
                             {"spearman", opt_json(row.spearman)},
                             {"kendall_tau_b", opt_json(row.kendall_tau_b)}});
    return ojson{{"format", "refer-correlation"},
                 {"version", kReportFormatVersion},
                 {"dataset", r.dataset},
                 {"method", r.method},
                 {"metrics", std::move(rows)},
                 {"mean", ojson{{"spearman", opt_json(r.mean_spearman)},
                                {"kendall_tau_b", opt_json(r.mean_kendall_tau_b)}}}};
}

AccuracyRow accuracy_of_run(const RunRecord& run, const Dataset& dataset) {
    if (run.info.task_kind != TaskKind::Reasoning || dataset.task_kind() != TaskKind::Reasoning)
        throw Error(ErrorCode::InvalidRequest, "accuracy needs a reasoning run and dataset");
    check_alignment(run, dataset);
    AccuracyRow row;
    std::vector<Answer> pred, gold;
    for (const auto& e : run.entries) {
        ++row.total;
        const auto* v = verdict_of(e);
        if (!v || !v->ac.final_answer) {
            ++row.failures;
            continue;
        }
        pred.push_back(*v->ac.final_answer);
        gold.push_back(*dataset.find(v->sample_id)->gold_answer);
    }
    if (row.total == 0) throw Error(ErrorCode::EmptyRun, "run has no entries");
    for (std::size_t i = 0; i < pred.size(); ++i) row.correct += pred[i] == gold[i] ? 1 : 0;
    row.accuracy = static_cast<double>(row.correct) / static_cast<double>(row.total);
    return row;
}

// ---- combined report -----------------------------------------------------------

std::string_view to_string(TTestVariable v) { return v == TTestVariable::Scores ? "scores" : "abs_errors"; }

std::optional<TTestVariable> parse_ttest_variable(std::string_view text) {
    if (text == "scores") return TTestVariable::Scores;
    if (text == "abs_errors") return TTestVariable::AbsErrors;
    return std::nullopt;
}

CombinedReport build_report(const std::vector<std::pair<std::string, RunRecord>>& runs, const Dataset& dataset,
                            TTestVariable variable) {
    if (runs.empty()) throw Error(ErrorCode::InvalidRequest, "report needs at least one run");
    CombinedReport out;
    out.task_kind = runs.front().second.info.task_kind;
    out.ttest_variable = variable;
    for (const auto& [label, run] : runs) {
        if (run.info.task_kind != out.task_kind)
            throw Error(ErrorCode::MixedTaskKinds, "run " + label + " is a " + std::string(to_string(run.info.task_kind)) +
                                                       " run; the first run is " + std::string(to_string(out.task_kind)));
    }
    if (dataset.task_kind() != out.task_kind)
        throw Error(ErrorCode::MixedTaskKinds, "dataset " + dataset.name + " does not match the runs' task kind");
    if (out.task_kind == TaskKind::Rating) out.metrics = dataset.metrics;

    std::vector<std::string> methods;
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const std::string& m = runs[i].second.info.method;
        if (!groups.contains(m)) methods.push_back(m);
        groups[m].push_back(i);
    }

    std::vector<ReportRow> per_run(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& [label, run] = runs[i];
        ReportRow& row = per_run[i];
        row.method = run.info.method;
        row.label = label;
        row.cost = run.ledger.total().monetary_cost;
        row.mean_latency_us = mean_latency(run);
        row.failures = run.failure_count();
        if (out.task_kind == TaskKind::Rating) {
            const CorrelationReport c = correlate_run(run, dataset);
            for (const auto& metric : out.metrics) {
                auto it = std::find_if(c.rows.begin(), c.rows.end(), [&](const auto& r) { return r.metric == metric; });
                row.spearman.push_back(it == c.rows.end() ? std::nullopt : it->spearman);
                row.kendall_tau_b.push_back(it == c.rows.end() ? std::nullopt : it->kendall_tau_b);
            }
        } else {
            row.accuracy = accuracy_of_run(run, dataset).accuracy;
        }
    }

    std::vector<ReportRow> averaged;
    for (const auto& m : methods) {
        const auto& idx = groups[m];
        ReportRow avg;
        avg.method = m;
        avg.label = "mean";
        avg.averaged = true;
        Rational cost;
        double latency = 0;
        for (auto i : idx) {
            cost += per_run[i].cost;
            latency += per_run[i].mean_latency_us;
            avg.failures += per_run[i].failures;
        }
        avg.cost = cost / Rational(static_cast<std::int64_t>(idx.size()));
        avg.mean_latency_us = latency / static_cast<double>(idx.size());
        for (std::size_t k = 0; k < out.metrics.size(); ++k) {
            std::vector<std::optional<double>> rho, tau;
            for (auto i : idx) {
                rho.push_back(per_run[i].spearman[k]);
                tau.push_back(per_run[i].kendall_tau_b[k]);
            }
            avg.spearman.push_back(mean_of(rho));
            avg.kendall_tau_b.push_back(mean_of(tau));
        }
        if (out.task_kind == TaskKind::Reasoning) {
            std::vector<std::optional<double>> acc;
            for (auto i : idx) acc.push_back(per_run[i].accuracy);
            avg.accuracy = mean_of(acc);
        }
        averaged.push_back(std::move(avg));
    }

    auto relative = [](std::vector<ReportRow*> rows) {
        std::map<std::string, Rational> costs;
        for (std::size_t i = 0; i < rows.size(); ++i) costs[std::to_string(i)] = rows[i]->cost;
        try {
            const auto rel = relative_costs(costs);
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i]->relative_cost = rel.at(std::to_string(i));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::AllZeroCosts) throw;
        }
    };
    std::vector<ReportRow*> avg_ptrs, run_ptrs;
    for (auto& r : averaged) avg_ptrs.push_back(&r);
    for (auto& r : per_run) run_ptrs.push_back(&r);
    relative(avg_ptrs);
    relative(run_ptrs);

    for (std::size_t g = 0; g < methods.size(); ++g) {
        out.rows.push_back(averaged[g]);
        for (auto i : groups[methods[g]]) out.rows.push_back(per_run[i]);
    }

    // Paired t-tests against the first method.
    if (out.task_kind == TaskKind::Rating && methods.size() > 1) {
        auto per_sample = [&](const std::string& method, const std::string& metric) {
            std::map<std::string, std::pair<double, int>> acc;
            for (auto i : groups[method]) {
                for (const auto& e : runs[i].second.entries) {
                    const auto* v = verdict_of(e);
                    if (!v || v->metric != metric || !v->ac.final_score) continue;
                    double value = v->ac.final_score->to_double();
                    if (variable == TTestVariable::AbsErrors) {
                        const Sample* s = dataset.find(v->sample_id);
                        value = (*v->ac.final_score - s->human_scores.at(metric)).abs().to_double();
                    }
                    auto& slot = acc[v->sample_id];
                    slot.first += value;
                    slot.second += 1;
                }
            }
            std::map<std::string, double> means;
            for (const auto& [id, p] : acc) means[id] = p.first / p.second;
            return means;
        };
        for (const auto& metric : out.metrics) {
            const auto base = per_sample(methods[0], metric);
            for (std::size_t g = 1; g < methods.size(); ++g) {
                const auto other = per_sample(methods[g], metric);
                std::vector<double> a, b;
                for (const auto& s : dataset.samples) {
                    auto ia = base.find(s.id);
                    auto ib = other.find(s.id);
                    if (ia == base.end() || ib == other.end()) continue;
                    a.push_back(ia->second);
                    b.push_back(ib->second);
                }
                TTestRow row{metric, methods[0], methods[g], a.size(), std::nullopt};
                try {
                    row.result = paired_ttest(a, b);
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::DegenerateVariance && e.code() != ErrorCode::LengthMismatch) throw;
                }
                out.ttests.push_back(std::move(row));
            }
        }
    }
    return out;
}

std::string report_tsv(const CombinedReport& r) {
    std::string out = "# refer-report v" + std::to_string(kReportFormatVersion) + "\n";
    out += "# task_kind=" + std::string(to_string(r.task_kind)) + "\n";
    out += "method\trun";
    if (r.task_kind == TaskKind::Rating) {
        for (const auto& m : r.metrics) out += "\t" + m + ".spearman\t" + m + ".kendall_tau_b";
        out += "\tmean.spearman\tmean.kendall_tau_b";
    } else {
        out += "\taccuracy";
    }
    out += "\tcost\trelative_cost\tmean_latency_us\tfailures\n";
    for (const auto& row : r.rows) {
        out += row.method + "\t" + row.label;
        if (r.task_kind == TaskKind::Rating) {
            for (std::size_t k = 0; k < r.metrics.size(); ++k)
                out += "\t" + fixed(row.spearman[k]) + "\t" + fixed(row.kendall_tau_b[k]);
            out += "\t" + fixed(mean_of(row.spearman)) + "\t" + fixed(mean_of(row.kendall_tau_b));
        } else {
            out += "\t" + fixed(row.accuracy);
        }
        out += "\t" + row.cost.to_string() + "\t" + fixed(row.relative_cost) + "\t" + fixed(row.mean_latency_us) + "\t" +
               std::to_string(row.failures) + "\n";
    }
    if (!r.ttests.empty()) {
        out += "# paired t-test on " + std::string(to_string(r.ttest_variable)) + "\n";
        out += "metric\tmethod_a\tmethod_b\tn\tt\tp\n";
        for (const auto& t : r.ttests) {
            out += t.metric + "\t" + t.method_a + "\t" + t.method_b + "\t" + std::to_string(t.n) + "\t" +
                   fixed(t.result ? std::optional(t.result->t) : std::nullopt) + "\t" +
                   fixed(t.result ? std::optional(t.result->p) : std::nullopt) + "\n";
        }
    }
    return out;
}

ojson report_json(const CombinedReport& r) {
    ojson rows = ojson::array();
    for (const auto& row : r.rows) {
        ojson j{{"method", row.method}, {"run", row.label}, {"averaged", row.averaged}};
        if (r.task_kind == TaskKind::Rating) {
            ojson metrics = ojson::object();
            for (std::size_t k = 0; k < r.metrics.size(); ++k)
                metrics[r.metrics[k]] = ojson{{"spearman", opt_json(row.spearman[k])},
                                              {"kendall_tau_b", opt_json(row.kendall_tau_b[k])}};
            j["metrics"] = std::move(metrics);
            j["mean"] = ojson{{"spearman", opt_json(mean_of(row.spearman))},
                              {"kendall_tau_b", opt_json(mean_of(row.kendall_tau_b))}};
        } else {
            j["accuracy"] = opt_json(row.accuracy);
        }
        j["cost"] = row.cost.to_string();
        j["relative_cost"] = opt_json(row.relative_cost);
        j["mean_latency_us"] = row.mean_latency_us;
        j["failures"] = row.failures;
        rows.push_back(std::move(j));
    }
    ojson tests = ojson::array();
    for (const auto& t : r.ttests)
        tests.push_back(ojson{{"metric", t.metric},
                              {"method_a", t.method_a},
                              {"method_b", t.method_b},
                              {"n", t.n},
                              {"t", t.result ? ojson(t.result->t) : ojson(nullptr)},
                              {"p", t.result ? ojson(t.result->p) : ojson(nullptr)}});
    return ojson{{"format", "refer-report"},
                 {"version", kReportFormatVersion},
                 {"task_kind", std::string(to_string(r.task_kind))},
                 {"ttest_variable", std::string(to_string(r.ttest_variable))},
                 {"rows", std::move(rows)},
                 {"ttests", std::move(tests)}};
}

}  // namespace refer
