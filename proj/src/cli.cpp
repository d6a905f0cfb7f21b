#include "refer/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>

#include "CLI11.hpp"

#include "refer/config.hpp"
#include "refer/dataset_io.hpp"
#include "refer/error.hpp"
#include "refer/json_io.hpp"
#include "refer/report.hpp"

namespace refer::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct RunOptions {
    std::string config;
    std::string schema_dir;
    std::string dataset;
    std::string out;
    std::string variant;
    std::string strategy;
    std::string peers;
    std::string area_chair;
    std::string cache_dir;
    std::string seed_tag;
    int n = 0;
    int min_peers = 0;
    int concurrency = 0;
    std::vector<std::string> sets;
    bool dry_run = false;
    bool fail_fast = false;
    std::map<std::string, CLI::Option*> given;

    bool has(const std::string& flag) const {
        auto it = given.find(flag);
        return it != given.end() && it->second->count() > 0;
    }
};

void add_run_options(CLI::App& cmd, RunOptions& o) {
    cmd.add_option("--config", o.config, "config document")->required();
    o.given["schema-dir"] = cmd.add_option("--schema-dir", o.schema_dir, "schema root");
    cmd.add_option("--dataset", o.dataset, "dataset file")->required();
    cmd.add_option("--out", o.out, "run output directory")->required();
    o.given["variant"] = cmd.add_option("--variant", o.variant)->check(CLI::IsMember({"turbo", "lite"}));
    o.given["n"] = cmd.add_option("--n", o.n, "area chair completions per sample");
    o.given["strategy"] =
        cmd.add_option("--strategy", o.strategy)->check(CLI::IsMember({"score_only", "comment_only", "both"}));
    o.given["peers"] = cmd.add_option("--peers", o.peers, "comma-separated peer handles");
    o.given["area-chair"] = cmd.add_option("--area-chair", o.area_chair);
    o.given["min-peers"] = cmd.add_option("--min-peers", o.min_peers);
    o.given["concurrency"] = cmd.add_option("--concurrency", o.concurrency, "bound on in-flight backend calls");
    o.given["cache-dir"] = cmd.add_option("--cache-dir", o.cache_dir);
    o.given["seed-tag"] = cmd.add_option("--seed-tag", o.seed_tag);
    cmd.add_option("--set", o.sets, "config override key=value (repeatable, last wins)");
    cmd.add_flag("--dry-run", o.dry_run, "render prompts only");
    cmd.add_flag("--fail-fast", o.fail_fast, "stop at the first failed sample");
}

void set_path(json& doc, const std::string& path, json value) {
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object()) *node = json::object();
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    *node = std::move(value);
}

AppConfig load_app_config(const RunOptions& o) {
    json doc = load_config_document(o.config);
    for (const auto& s : o.sets) apply_override(doc, s);
    if (o.has("variant")) set_path(doc, "run.variant", o.variant);
    if (o.has("n")) set_path(doc, "run.n", o.n);
    if (o.has("strategy")) set_path(doc, "run.strategy", o.strategy);
    if (o.has("peers")) set_path(doc, "run.peers", o.peers);
    if (o.has("area-chair")) set_path(doc, "run.area_chair", o.area_chair);
    if (o.has("min-peers")) set_path(doc, "run.min_peers", o.min_peers);
    if (o.has("concurrency")) set_path(doc, "run.concurrency", o.concurrency);
    if (o.has("seed-tag")) set_path(doc, "run.seed_tag", o.seed_tag);
    if (o.has("schema-dir")) set_path(doc, "schema_dir", o.schema_dir);
    if (o.has("cache-dir")) set_path(doc, "cache_dir", o.cache_dir);
    return parse_config(doc);
}

std::map<std::string, SchemaPair> load_schemas(const fs::path& root, const std::string& dataset,
                                               const std::vector<std::string>& metrics) {
    if (root.empty()) throw Error(ErrorCode::InvalidConfig, "no schema directory (use --schema-dir or schema_dir)");
    std::map<std::string, SchemaPair> out;
    for (const auto& m : metrics) {
        try {
            out.emplace(m, load_schema_pair(root, dataset, m));
        } catch (const Error& e) {
            throw Error(ErrorCode::InvalidSchema, "metric '" + m + "': " + e.what());
        }
    }
    return out;
}

std::vector<std::string> run_metrics(const AppConfig& cfg, const Dataset& ds) {
    if (cfg.metrics.empty()) return ds.metrics;
    for (const auto& m : cfg.metrics)
        if (std::find(ds.metrics.begin(), ds.metrics.end(), m) == ds.metrics.end())
            throw Error(ErrorCode::InvalidConfig, "metric '" + m + "' is not annotated in dataset " + ds.name);
    return cfg.metrics;
}

std::string file_stem(std::size_t index, const std::string& id, const std::string& metric) {
    std::string safe;
    for (char c : id + "_" + metric) safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%05zu_", index);
    return prefix + safe;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error(ErrorCode::IOFailure, "cannot write " + path.string());
}

int dry_run(const Dataset& ds, const std::vector<std::string>& metrics, const RunConfig& rc, const fs::path& out,
            Env& env) {
    const fs::path dir = out / "prompts";
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IOFailure, "cannot create " + dir.string());
    std::size_t files = 0;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        for (const auto& m : metrics) {
            const SchemaPair& pair = rc.schemas.at(m);
            const std::string stem = file_stem(i, ds.samples[i].id, m);
            write_text(dir / (stem + "_peer.txt"), render_prompt(pair.peer, ds.samples[i], Role::Peer));
            write_text(dir / (stem + "_area_chair.txt"),
                       render_area_chair_preview(pair.area_chair, ds.samples[i], rc.peers.size()));
            files += 2;
        }
    }
    env.out << "dry run: wrote " << files << " prompts to " << dir.string() << "\n";
    return kOk;
}

void auto_prompt(const AppConfig& cfg, const Dataset& ds, std::map<std::string, SchemaPair>& schemas, Gateway& gateway,
                 CostLedger& ledger, const fs::path& out, Env& env) {
    const ModelHandle& writer = cfg.models.at(cfg.auto_prompt.model.empty() ? cfg.area_chair : cfg.auto_prompt.model);
    const Hyperparameters params =
        merge_hyperparameters(default_hyperparameters(Role::AreaChair, ds.kind), cfg.auto_prompt.params);
    for (auto& [metric, pair] : schemas) {
        if (!pair.peer.guidelines.empty() && !pair.area_chair.guidelines.empty()) continue;
        const auto examples = annotated_examples(pair.peer, ds.samples, metric, cfg.auto_prompt.examples);
        const std::string guidelines =
            generate_guidelines(render_structure(pair.peer), examples, [&](const std::string& prompt) {
                ChatRequest req;
                req.prompt = prompt;
                req.temperature = params.temperature;
                req.top_p = params.top_p;
                req.max_tokens = params.max_tokens;
                ChatResponse resp = gateway.invoke(req, writer, cfg.retry);
                record_usage(ledger, "auto-prompt", writer, resp);
                return resp.completions.front();
            });
        if (pair.peer.guidelines.empty()) pair.peer.guidelines = guidelines;
        if (pair.area_chair.guidelines.empty()) pair.area_chair.guidelines = guidelines;
        for (Role role : {Role::Peer, Role::AreaChair}) {
            const fs::path path = schema_path(out / "schemas", ds.name, metric, role);
            fs::create_directories(path.parent_path());
            write_text(path, schema_to_json(role == Role::Peer ? pair.peer : pair.area_chair).dump(2) + "\n");
        }
        env.err << "auto prompt: generated guidelines for " << metric << "\n";
    }
}

int cmd_run(const RunOptions& o, bool reasoning, Env& env) {
    const AppConfig cfg = load_app_config(o);
    const Dataset ds = load_dataset(o.dataset);
    if ((ds.kind == DatasetKind::Reasoning) != reasoning)
        throw Error(ErrorCode::SchemaViolation, "dataset " + ds.name + " is of kind " + std::string(to_string(ds.kind)) +
                                                    (reasoning ? "; use evaluate" : "; use reason"));
    const std::vector<std::string> metrics = run_metrics(cfg, ds);
    auto schemas = load_schemas(cfg.schema_dir, ds.name, metrics);
    RunConfig rc = make_run_config(cfg, ds, schemas);
    rc.fail_fast = o.fail_fast;
    const fs::path out = o.out;
    if (o.dry_run) return dry_run(ds, metrics, rc, out, env);

    Gateway gateway(env.clock, cfg.concurrency);
    register_backends(gateway, cfg, env.env);
    if (!cfg.cache_dir.empty())
        gateway.set_cache(std::make_shared<ResponseCache>(cfg.cache_dir, [&](const std::string& w) { env.err << w << "\n"; }));
    CostLedger ledger;
    if (cfg.auto_prompt.enabled && !reasoning) {
        auto_prompt(cfg, ds, schemas, gateway, ledger, out, env);
        rc.schemas = schemas;
        validate_run_config(rc);
    }
    RunContext ctx{gateway, ledger};
    RunRecord record = reasoning ? run_reasoning(ds, rc, ctx, cfg.concurrency)
                                 : run_dataset(ds, metrics, rc, ctx, cfg.concurrency);
    record.config_snapshot = config_snapshot(cfg, rc);
    persist_run(record, out);

    const std::size_t failures = record.failure_count();
    env.out << "wrote " << record.entries.size() << " entries to " << out.string() << "\n";
    if (failures > 0) {
        env.err << failures << " of " << record.entries.size() << " entries failed\n";
        for (const auto& e : record.entries)
            if (const auto* f = std::get_if<SampleFailure>(&e))
                env.err << "  " << f->sample_id << " / " << f->metric << ": " << f->message << "\n";
    }
    return kOk;
}

void write_pair(const fs::path& dir, const std::string& stem, const std::string& tsv, const nlohmann::ordered_json& j) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IOFailure, "cannot create " + dir.string());
    write_text(dir / (stem + ".tsv"), tsv);
    write_text(dir / (stem + ".json"), j.dump(2) + "\n");
}

int cmd_correlate(const std::string& run_dir, const std::string& dataset, const std::string& out, Env& env) {
    const RunRecord run = load_run(run_dir);
    const Dataset ds = load_dataset(dataset);
    const fs::path dir = out.empty() ? fs::path(run_dir) : fs::path(out);
    if (run.info.task_kind == TaskKind::Reasoning) {
        const AccuracyRow acc = accuracy_of_run(run, ds);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", acc.accuracy);
        const std::string tsv = "# refer-accuracy v" + std::to_string(kReportFormatVersion) +
                                "\ntotal\tcorrect\tfailures\taccuracy\n" + std::to_string(acc.total) + "\t" +
                                std::to_string(acc.correct) + "\t" + std::to_string(acc.failures) + "\t" + buf + "\n";
        nlohmann::ordered_json j{{"format", "refer-accuracy"}, {"version", kReportFormatVersion},
                                 {"dataset", ds.name},         {"method", run.info.method},
                                 {"total", acc.total},         {"correct", acc.correct},
                                 {"failures", acc.failures},   {"accuracy", acc.accuracy}};
        write_pair(dir, "accuracy", tsv, j);
        env.out << tsv;
        return kOk;
    }
    const CorrelationReport report = correlate_run(run, ds);
    const std::string tsv = correlation_tsv(report);
    write_pair(dir, "correlation", tsv, correlation_json(report));
    env.out << tsv;
    return kOk;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& dataset, const std::string& out,
               const std::string& variable, Env& env) {
    const Dataset ds = load_dataset(dataset);
    std::vector<std::pair<std::string, RunRecord>> runs;
    for (const auto& d : run_dirs) runs.emplace_back(fs::path(d).filename().string(), load_run(d));
    const CombinedReport report = build_report(runs, ds, *parse_ttest_variable(variable));
    const std::string tsv = report_tsv(report);
    if (!out.empty()) write_pair(out, "report", tsv, report_json(report));
    env.out << tsv;
    return kOk;
}

int cmd_export(const std::string& run_dir, const std::string& dataset, const std::string& schema_dir,
               const std::string& out, Env& env) {
    const RunRecord run = load_run(run_dir);
    const Dataset ds = load_dataset(dataset);
    const auto schemas = load_schemas(schema_dir, ds.name, run.info.metrics);
    const ExportReport r = export_instruction_tuning(run, ds, schemas, out);
    env.out << "wrote " << r.written << " records to " << out << "\n";
    if (r.skipped > 0) env.err << "skipped " << r.skipped << " failed entries\n";
    return kOk;
}

int cmd_validate(const std::string& config, const std::string& schema_dir, const std::string& dataset, Env& env) {
    int problems = 0;
    std::optional<AppConfig> cfg;
    if (!config.empty()) {
        cfg = parse_config(load_config_document(config));
        env.out << "config ok: " << cfg->models.size() << " model handles\n";
    }
    if (dataset.empty()) return kOk;
    const Dataset ds = load_dataset(dataset);
    env.out << "dataset ok: " << ds.name << " (" << to_string(ds.kind) << ", " << ds.samples.size() << " samples)\n";
    const std::string root = !schema_dir.empty() ? schema_dir : (cfg ? cfg->schema_dir : "");
    if (root.empty()) return kOk;
    for (const auto& m : ds.metrics) {
        for (Role role : {Role::Peer, Role::AreaChair}) {
            const fs::path path = schema_path(root, ds.name, m, role);
            try {
                const PromptSchema schema = load_schema_file(path);
                const auto issues = validate_schema(schema);
                for (const auto& i : issues) env.err << path.string() << ": " << i.field << ": " << i.rule << "\n";
                problems += static_cast<int>(issues.size());
                if (issues.empty()) {
                    for (const auto& s : ds.samples) {
                        if (role == Role::Peer) render_prompt(schema, s, Role::Peer);
                        else render_area_chair_preview(schema, s, 1);
                    }
                }
            } catch (const Error& e) {
                env.err << path.string() << ": " << e.what() << "\n";
                ++problems;
            }
        }
    }
    if (problems > 0) {
        env.err << problems << " problem(s) found\n";
        return kConfigError;
    }
    env.out << "schemas ok\n";
    return kOk;
}

int cmd_prefetch(const std::string& dataset, const std::string& store, const std::string& out, Env& env) {
    const Dataset ds = load_dataset(dataset);
    const Dataset local = prefetch_images(ds, store, [](const std::string& url) { return http_fetch(url); });
    save_dataset(local, out);
    env.out << "wrote " << out << "\n";
    return kOk;
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidConfig:
        case ErrorCode::InvalidSchema:
        case ErrorCode::SchemaViolation:
        case ErrorCode::MissingScale:
        case ErrorCode::MissingSlot:
        case ErrorCode::DuplicateId:
        case ErrorCode::UnknownFormatVersion:
        case ErrorCode::IdMismatch:
        case ErrorCode::MixedTaskKinds:
            return kConfigError;
        case ErrorCode::BackendExhausted:
        case ErrorCode::ACFailure:
        case ErrorCode::InsufficientPeers:
            return kBackendExhausted;
        default:
            return kFailure;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, Env& env) {
    CLI::App app{"Hierarchical LLM evaluation runner", "refer"};
    app.require_subcommand(1);

    RunOptions eval_opts, reason_opts;
    auto* evaluate = app.add_subcommand("evaluate", "score a rating dataset");
    add_run_options(*evaluate, eval_opts);
    auto* reason = app.add_subcommand("reason", "answer a reasoning dataset");
    add_run_options(*reason, reason_opts);

    std::string run_dir, dataset, out, schema_dir, config, store;
    std::vector<std::string> run_dirs;
    std::string variable = "scores";

    auto* correlate = app.add_subcommand("correlate", "correlate a run with human scores (accuracy for reasoning)");
    correlate->add_option("--run", run_dir, "run directory")->required();
    correlate->add_option("--dataset", dataset)->required();
    correlate->add_option("--out", out, "output directory (default: the run directory)");

    auto* report = app.add_subcommand("report", "combine runs into one table");
    report->add_option("--run", run_dirs, "run directory (repeatable)")->required();
    report->add_option("--dataset", dataset)->required();
    report->add_option("--out", out, "output directory");
    report->add_option("--ttest-variable", variable, "paired t-test variable")
        ->check(CLI::IsMember({"scores", "abs_errors"}));

    auto* exporter = app.add_subcommand("export-tuning", "write instruction-tuning records from a run");
    exporter->add_option("--run", run_dir)->required();
    exporter->add_option("--dataset", dataset)->required();
    exporter->add_option("--schema-dir", schema_dir)->required();
    exporter->add_option("--out", out, "output file")->required();

    auto* validate = app.add_subcommand("validate", "check a config, dataset and schemas");
    validate->add_option("--config", config);
    validate->add_option("--schema-dir", schema_dir);
    validate->add_option("--dataset", dataset);

    auto* prefetch = app.add_subcommand("prefetch", "download dataset images into a local store");
    prefetch->add_option("--dataset", dataset)->required();
    prefetch->add_option("--store", store)->required();
    prefetch->add_option("--out", out, "rewritten dataset file")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, env.out, env.err);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (evaluate->parsed()) return cmd_run(eval_opts, false, env);
        if (reason->parsed()) return cmd_run(reason_opts, true, env);
        if (correlate->parsed()) return cmd_correlate(run_dir, dataset, out, env);
        if (report->parsed()) return cmd_report(run_dirs, dataset, out, variable, env);
        if (exporter->parsed()) return cmd_export(run_dir, dataset, schema_dir, out, env);
        if (validate->parsed()) return cmd_validate(config, schema_dir, dataset, env);
        if (prefetch->parsed()) return cmd_prefetch(dataset, store, out, env);
    } catch (const Error& e) {
        env.err << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        env.err << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kConfigError;
}

}  // namespace refer::cli
