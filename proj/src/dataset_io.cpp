#include "refer/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "refer/error.hpp"
#include "refer/hash.hpp"
#include "refer/json_io.hpp"
#include "refer/parser.hpp"

namespace refer {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

[[noreturn]] void violation(std::size_t line, const std::string& what) {
    throw Error(ErrorCode::SchemaViolation, "line " + std::to_string(line) + ": " + what);
}

json parse_line(const std::string& text, std::size_t line) {
    try {
        json j = json::parse(text);
        if (!j.is_object()) violation(line, "expected a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        violation(line, std::string("malformed JSON (") + e.what() + ")");
    }
}

void check_version(const json& header, std::string_view format, int version, const std::string& where) {
    if (!header.contains("format") || header["format"] != format)
        throw Error(ErrorCode::SchemaViolation, where + ": expected format \"" + std::string(format) + "\"");
    if (!header.contains("version") || !header["version"].is_number_integer())
        throw Error(ErrorCode::SchemaViolation, where + ": missing version");
    if (header["version"].get<int>() != version)
        throw Error(ErrorCode::UnknownFormatVersion,
                    where + ": " + std::string(format) + " version " + header["version"].dump() + " is not supported");
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IOFailure, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IOFailure, "cannot write " + path.string());
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::IOFailure, "write failed for " + path.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IOFailure, "cannot move " + tmp.string() + " into place: " + ec.message());
}

std::optional<Answer> answer_from_json(const json& j, const AnswerSpace& space) {
    if (j.is_string()) return normalize_answer(j.get<std::string>(), space);
    if (j.is_number()) return normalize_answer(json_io::rational(j, "answer").to_string(), space);
    return std::nullopt;
}

Sample parse_sample(const json& j, const Dataset& ds, std::size_t line) {
    Sample s;
    try {
        s.id = json_io::get_string(j, "id");
    } catch (const Error&) {
        violation(line, "id is required");
    }
    if (s.id.empty()) violation(line, "id is empty");
    if (j.contains("slots")) {
        if (!j["slots"].is_object()) violation(line, "slots must be an object");
        for (const auto& [k, v] : j["slots"].items()) {
            if (!v.is_string()) violation(line, "slots." + k + " must be a string");
            s.slots[k] = v.get<std::string>();
        }
    }
    if (j.contains("image") && !j["image"].is_null()) {
        if (!j["image"].is_string()) violation(line, "image must be a string");
        s.image = j["image"].get<std::string>();
    }
    const bool multimodal = ds.kind == DatasetKind::MultimodalRating;
    if (multimodal && !s.image) violation(line, "image is required for multimodal datasets");
    if (!multimodal && s.image) violation(line, "image is only allowed in multimodal datasets");

    if (ds.kind == DatasetKind::Reasoning) {
        if (!j.contains("gold_answer") || j["gold_answer"].is_null()) violation(line, "gold_answer is required");
        s.gold_answer = answer_from_json(j["gold_answer"], *ds.answer_space);
        if (!s.gold_answer) violation(line, "gold_answer " + j["gold_answer"].dump() + " is outside the answer space");
        return s;
    }
    s.scale = ds.scale;
    if (!j.contains("human_scores") || !j["human_scores"].is_object()) violation(line, "human_scores is required");
    for (const auto& [k, v] : j["human_scores"].items()) {
        Rational r;
        try {
            r = json_io::rational(v, "human_scores." + k);
        } catch (const Error& e) {
            violation(line, e.what());
        }
        if (!ds.scale->contains(r)) violation(line, "human_scores." + k + " = " + r.to_string() + " is outside the scale");
        s.human_scores[k] = r;
    }
    for (const auto& m : ds.metrics)
        if (!s.human_scores.contains(m)) violation(line, "human_scores." + m + " is missing");
    return s;
}

}  // namespace

Dataset load_dataset(const fs::path& path, std::optional<DatasetKind> expected) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IOFailure, "cannot read dataset " + path.string());
    std::string text;
    std::size_t line_no = 0;
    Dataset ds;
    bool have_header = false;
    std::set<std::string> ids;
    while (std::getline(in, text)) {
        ++line_no;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (text.find_first_not_of(" \t") == std::string::npos) continue;
        const json j = parse_line(text, line_no);
        if (!have_header) {
            check_version(j, "refer-dataset", kDatasetFormatVersion, path.string());
            have_header = true;
            try {
                ds.name = json_io::get_string(j, "name");
                const auto kind = parse_dataset_kind(json_io::get_string(j, "kind"));
                if (!kind) violation(line_no, "unknown kind " + j["kind"].dump());
                ds.kind = *kind;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::SchemaViolation || std::string(e.what()).find("line ") != std::string::npos) throw;
                violation(line_no, e.what());
            }
            if (expected && *expected != ds.kind)
                violation(line_no, "kind is " + std::string(to_string(ds.kind)) + ", expected " +
                                       std::string(to_string(*expected)));
            if (j.contains("metrics")) {
                if (!j["metrics"].is_array()) violation(line_no, "metrics must be an array");
                for (const auto& m : j["metrics"]) {
                    if (!m.is_string() || m.get<std::string>().empty()) violation(line_no, "metrics entries must be names");
                    ds.metrics.push_back(m.get<std::string>());
                }
            }
            if (ds.kind == DatasetKind::Reasoning) {
                if (ds.metrics.empty()) ds.metrics = {"answer"};
                if (!j.contains("answer_space")) violation(line_no, "answer_space is required for reasoning datasets");
                ds.answer_space = json_io::answer_space(j["answer_space"]);
            } else {
                if (ds.metrics.empty()) violation(line_no, "metrics must list at least one metric");
                if (!j.contains("scale") || j["scale"].is_null())
                    throw Error(ErrorCode::MissingScale, "dataset " + ds.name + " has no scale in its header");
                try {
                    ds.scale = json_io::scale(j["scale"]);
                } catch (const Error& e) {
                    violation(line_no, e.what());
                }
            }
            continue;
        }
        Sample s = parse_sample(j, ds, line_no);
        if (!ids.insert(s.id).second)
            throw Error(ErrorCode::DuplicateId, "line " + std::to_string(line_no) + ": id " + s.id + " repeats");
        ds.samples.push_back(std::move(s));
    }
    if (!have_header) throw Error(ErrorCode::SchemaViolation, path.string() + " is empty");
    if (ds.samples.empty()) throw Error(ErrorCode::SchemaViolation, path.string() + " has no samples");
    return ds;
}

void save_dataset(const Dataset& ds, const fs::path& path) {
    std::string out;
    ojson header{{"format", "refer-dataset"}, {"version", kDatasetFormatVersion}, {"name", ds.name},
                 {"kind", std::string(to_string(ds.kind))}, {"metrics", ds.metrics}};
    if (ds.scale) header["scale"] = json_io::to_json(*ds.scale);
    if (ds.answer_space) header["answer_space"] = json_io::to_json(*ds.answer_space);
    out += json_io::dump_line(header) + "\n";
    for (const auto& s : ds.samples) {
        ojson r{{"id", s.id}, {"slots", s.slots}};
        if (s.image) r["image"] = *s.image;
        if (!s.human_scores.empty()) {
            ojson hs = ojson::object();
            for (const auto& [k, v] : s.human_scores) hs[k] = v.to_string();
            r["human_scores"] = hs;
        }
        if (s.gold_answer) r["gold_answer"] = s.gold_answer->to_string();
        out += json_io::dump_line(r) + "\n";
    }
    write_file(path, out);
}

// ---- runs ------------------------------------------------------------------

namespace {

ojson outcome_to_json(const Outcome& o) {
    if (const auto* r = std::get_if<ReviewOutcome>(&o))
        return ojson{{"analysis", r->analysis}, {"score", r->score.to_string()}, {"raw", r->raw}};
    const auto& a = std::get<AnswerOutcome>(o);
    return ojson{{"analysis", a.analysis}, {"answer", a.answer.to_string()}, {"raw", a.raw}};
}

Answer answer_from_text(const std::string& text) {
    if (auto r = Rational::parse(text)) return Answer::number(*r);
    if (text.size() == 1) return Answer::label(text[0]);
    throw Error(ErrorCode::SchemaViolation, "cannot read answer \"" + text + "\"");
}

Rational rational_field(const json& j, const char* key) { return json_io::rational(j.at(key), key); }

Outcome outcome_from_json(const json& j) {
    if (j.contains("score"))
        return ReviewOutcome{j.at("analysis").get<std::string>(), rational_field(j, "score"), j.at("raw").get<std::string>()};
    return AnswerOutcome{j.at("analysis").get<std::string>(), answer_from_text(j.at("answer").get<std::string>()),
                         j.at("raw").get<std::string>()};
}

ojson timing_to_json(const StageTiming& t) {
    return ojson{{"peers_us", t.peers_us}, {"area_chair_us", t.area_chair_us}, {"total_us", t.total_us}};
}

StageTiming timing_from_json(const json& j) {
    if (!j.is_object()) return {};
    return StageTiming{j.value("peers_us", std::int64_t{0}), j.value("area_chair_us", std::int64_t{0}),
                       j.value("total_us", std::int64_t{0})};
}

std::optional<ErrorCode> parse_error_code(const std::string& name) {
    for (int c = 0; c <= static_cast<int>(ErrorCode::MixedTaskKinds); ++c)
        if (to_string(static_cast<ErrorCode>(c)) == name) return static_cast<ErrorCode>(c);
    return std::nullopt;
}

std::int64_t percentile(std::vector<std::int64_t> v, int pct) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const std::size_t rank = (static_cast<std::size_t>(pct) * v.size() + 99) / 100;  // nearest rank
    return v[std::max<std::size_t>(rank, 1) - 1];
}

}  // namespace

ojson entry_to_json(const RunEntry& entry) {
    if (const auto* f = std::get_if<SampleFailure>(&entry)) {
        return ojson{{"sample_id", f->sample_id},       {"metric", f->metric},
                     {"status", "failed"},              {"code", std::string(to_string(f->code))},
                     {"message", f->message},           {"timing", timing_to_json(f->timing)}};
    }
    const auto& v = std::get<SampleVerdict>(entry);
    ojson peers = ojson::array();
    for (const auto& p : v.peer_reviews) {
        ojson o{{"peer", p.peer}};
        const ojson fields = outcome_to_json(p.outcome);
        for (const auto& [k, val] : fields.items()) o[k] = val;
        peers.push_back(std::move(o));
    }
    ojson dropped = ojson::array();
    for (const auto& d : v.dropped_peers) dropped.push_back(ojson{{"peer", d.peer}, {"reason", d.reason}});
    ojson responses = ojson::array();
    for (const auto& r : v.ac.responses) responses.push_back(outcome_to_json(r));
    ojson ac{{"responses", std::move(responses)}};
    if (v.ac.final_score) ac["final_score"] = v.ac.final_score->to_string();
    if (v.ac.final_answer) ac["final_answer"] = v.ac.final_answer->to_string();
    ac["final_comment"] = v.ac.final_comment;
    ac["degraded"] = v.ac.degraded;
    return ojson{{"sample_id", v.sample_id}, {"metric", v.metric},   {"status", "ok"},
                 {"peer_reviews", peers},    {"dropped_peers", dropped}, {"ac", ac},
                 {"timing", timing_to_json(v.timing)}};
}

RunEntry entry_from_json(const json& j) {
    try {
        const std::string status = j.at("status").get<std::string>();
        if (status == "failed") {
            const auto code = parse_error_code(j.at("code").get<std::string>());
            if (!code) throw Error(ErrorCode::SchemaViolation, "unknown error code " + j.at("code").dump());
            return SampleFailure{j.at("sample_id").get<std::string>(), j.at("metric").get<std::string>(), *code,
                                 j.at("message").get<std::string>(), timing_from_json(j.value("timing", json()))};
        }
        if (status != "ok") throw Error(ErrorCode::SchemaViolation, "unknown status " + j.at("status").dump());
        SampleVerdict v;
        v.sample_id = j.at("sample_id").get<std::string>();
        v.metric = j.at("metric").get<std::string>();
        for (const auto& p : j.at("peer_reviews")) v.peer_reviews.push_back(PeerReview{p.at("peer"), outcome_from_json(p)});
        for (const auto& d : j.at("dropped_peers")) v.dropped_peers.push_back(DroppedPeer{d.at("peer"), d.at("reason")});
        const json& ac = j.at("ac");
        for (const auto& r : ac.at("responses")) v.ac.responses.push_back(outcome_from_json(r));
        if (ac.contains("final_score")) v.ac.final_score = rational_field(ac, "final_score");
        if (ac.contains("final_answer")) v.ac.final_answer = answer_from_text(ac.at("final_answer").get<std::string>());
        v.ac.final_comment = ac.at("final_comment").get<std::string>();
        v.ac.degraded = ac.at("degraded").get<bool>();
        v.timing = timing_from_json(j.value("timing", json()));
        return v;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, std::string("malformed verdict: ") + e.what());
    }
}

ojson summary_to_json(const RunRecord& run) {
    const RunInfo& i = run.info;
    ojson info{{"method", i.method},
               {"variant", std::string(to_string(i.variant))},
               {"n", i.n},
               {"strategy", std::string(to_string(i.strategy))},
               {"task_kind", std::string(to_string(i.task_kind))},
               {"dataset", i.dataset},
               {"metrics", i.metrics},
               {"peers", i.peers},
               {"area_chair", i.area_chair},
               {"min_peers", i.min_peers},
               {"seed_tag", i.seed_tag}};
    ojson ledger = ojson::array();
    ojson ledger_times = ojson::array();
    for (const auto& [key, e] : run.ledger.entries()) {
        ledger.push_back(ojson{{"method", key.first},
                               {"model", key.second},
                               {"calls", e.calls},
                               {"input_tokens", e.input_tokens},
                               {"output_tokens", e.output_tokens},
                               {"monetary_cost", e.monetary_cost.to_string()}});
        ledger_times.push_back(ojson{{"method", key.first}, {"model", key.second}, {"wall_time_us", e.wall_time_us}});
    }
    ojson costs = ojson::object();
    for (const auto& [m, c] : run.ledger.cost_by_method()) costs[m] = c.to_string();

    std::vector<std::int64_t> latencies;
    for (const auto& e : run.entries)
        if (const auto* v = std::get_if<SampleVerdict>(&e)) latencies.push_back(v->timing.total_us);
    std::int64_t mean = 0;
    if (!latencies.empty()) {
        std::int64_t sum = 0;
        for (auto l : latencies) sum += l;
        mean = sum / static_cast<std::int64_t>(latencies.size());
    }
    ojson timing{{"wall_time_us", run.wall_time_us},
                 {"mean_latency_us", mean},
                 {"p50_latency_us", percentile(latencies, 50)},
                 {"p95_latency_us", percentile(latencies, 95)},
                 {"ledger", std::move(ledger_times)}};
    return ojson{{"format", "refer-run"},
                 {"version", kRunFormatVersion},
                 {"info", std::move(info)},
                 {"counts", ojson{{"entries", run.entries.size()}, {"failures", run.failure_count()}}},
                 {"ledger", std::move(ledger)},
                 {"cost_by_method", std::move(costs)},
                 {"config", run.config_snapshot.is_null() ? ojson::object() : run.config_snapshot},
                 {"timing", std::move(timing)},
                 {"gateway_stats", ojson{{"backend_attempts", run.stats.backend_attempts},
                                         {"cache_hits", run.stats.cache_hits},
                                         {"cache_misses", run.stats.cache_misses}}}};
}

void persist_run(const RunRecord& run, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::IOFailure, "cannot create run directory " + dir.string());
    std::string verdicts = json_io::dump_line(ojson{{"format", "refer-verdicts"}, {"version", kRunFormatVersion}}) + "\n";
    for (const auto& e : run.entries) verdicts += json_io::dump_line(entry_to_json(e)) + "\n";
    write_file(dir / "verdicts.jsonl", verdicts);
    write_file(dir / "summary.json", summary_to_json(run).dump(2) + "\n");
}

RunRecord load_run(const fs::path& dir) {
    RunRecord run;
    const std::string summary_text = read_file(dir / "summary.json");
    json s;
    try {
        s = json::parse(summary_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaViolation, (dir / "summary.json").string() + ": " + e.what());
    }
    check_version(s, "refer-run", kRunFormatVersion, (dir / "summary.json").string());
    try {
        const json& i = s.at("info");
        auto variant = parse_variant(i.at("variant").get<std::string>());
        auto strategy = parse_strategy(i.at("strategy").get<std::string>());
        auto kind = parse_task_kind(i.at("task_kind").get<std::string>());
        if (!variant || !strategy || !kind) throw Error(ErrorCode::SchemaViolation, "summary.json: bad info enums");
        run.info = RunInfo{i.at("method"),  *variant,          i.at("n"),          *strategy,
                           *kind,           i.at("dataset"),   i.at("metrics"),    i.at("peers"),
                           i.at("area_chair"), i.at("min_peers"), i.at("seed_tag")};
        std::map<std::pair<std::string, std::string>, std::int64_t> times;
        if (s.contains("timing")) {
            const json& t = s["timing"];
            run.wall_time_us = t.value("wall_time_us", std::int64_t{0});
            if (t.contains("ledger"))
                for (const auto& e : t["ledger"]) times[{e.at("method"), e.at("model")}] = e.at("wall_time_us");
        }
        for (const auto& e : s.at("ledger")) {
            LedgerEntry le{e.at("calls"), e.at("input_tokens"), e.at("output_tokens"),
                           rational_field(e, "monetary_cost"), 0};
            const std::string method = e.at("method"), model = e.at("model");
            if (auto it = times.find({method, model}); it != times.end()) le.wall_time_us = it->second;
            run.ledger.add(method, model, le);
        }
        if (s.contains("gateway_stats")) {
            const json& g = s["gateway_stats"];
            run.stats = RunStats{g.at("backend_attempts"), g.at("cache_hits"), g.at("cache_misses")};
        }
        run.config_snapshot = ojson::parse(s.at("config").dump());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, "summary.json: " + std::string(e.what()));
    }

    std::istringstream lines(read_file(dir / "verdicts.jsonl"));
    std::string text;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(lines, text)) {
        ++line_no;
        if (text.empty()) continue;
        const json j = parse_line(text, line_no);
        if (!header) {
            check_version(j, "refer-verdicts", kRunFormatVersion, (dir / "verdicts.jsonl").string());
            header = true;
            continue;
        }
        try {
            run.entries.push_back(entry_from_json(j));
        } catch (const Error& e) {
            violation(line_no, e.what());
        }
    }
    if (!header) throw Error(ErrorCode::SchemaViolation, (dir / "verdicts.jsonl").string() + " is empty");
    return run;
}

std::string masked_verdicts(const fs::path& dir) {
    std::istringstream lines(read_file(dir / "verdicts.jsonl"));
    std::string text, out;
    while (std::getline(lines, text)) {
        ojson j = ojson::parse(text);
        j.erase("timing");
        out += json_io::dump_line(j) + "\n";
    }
    return out;
}

std::string masked_summary(const fs::path& dir) {
    ojson j = ojson::parse(read_file(dir / "summary.json"));
    j.erase("timing");
    j.erase("gateway_stats");
    return j.dump(2) + "\n";
}

// ---- instruction tuning ------------------------------------------------------

std::string tuning_output(const SampleVerdict& v) {
    std::string out = "Analysis: " + v.ac.final_comment + "\n";
    if (v.ac.final_answer) return out + "Answer: " + v.ac.final_answer->to_string();
    std::string score = v.ac.final_score ? v.ac.final_score->to_string() : "";
    if (score.find('/') != std::string::npos) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", v.ac.final_score->to_double());
        score = buf;
    }
    return out + "Rating: " + score;
}

ExportReport export_instruction_tuning(const RunRecord& run, const Dataset& dataset,
                                       const std::map<std::string, SchemaPair>& schemas, const fs::path& path) {
    if (run.entries.empty()) throw Error(ErrorCode::EmptyRun, "run has no entries to export");
    ExportReport report;
    std::string out = json_io::dump_line(ojson{{"format", "refer-tuning"}, {"version", kTuningFormatVersion}}) + "\n";
    for (const auto& e : run.entries) {
        const auto* v = std::get_if<SampleVerdict>(&e);
        if (!v) {
            ++report.skipped;
            continue;
        }
        const Sample* sample = dataset.find(v->sample_id);
        if (!sample) throw Error(ErrorCode::IdMismatch, "sample " + v->sample_id + " is not in dataset " + dataset.name);
        auto it = schemas.find(v->metric);
        if (it == schemas.end()) throw Error(ErrorCode::InvalidConfig, "no schema for metric '" + v->metric + "'");
        ojson rec{{"id", v->sample_id},
                  {"metric", v->metric},
                  {"instruction", render_prompt(it->second.peer, *sample, Role::Peer)},
                  {"output", tuning_output(*v)}};
        out += json_io::dump_line(rec) + "\n";
        ++report.written;
    }
    write_file(path, out);
    return report;
}

// ---- images ------------------------------------------------------------------

Dataset prefetch_images(const Dataset& dataset, const fs::path& store, const Fetcher& fetch) {
    std::error_code ec;
    fs::create_directories(store, ec);
    if (ec) throw Error(ErrorCode::IOFailure, "cannot create image store " + store.string());
    Dataset out = dataset;
    for (auto& s : out.samples) {
        if (!s.image) continue;
        const std::string& loc = *s.image;
        if (loc.rfind("http://", 0) != 0 && loc.rfind("https://", 0) != 0) continue;
        std::string ext = fs::path(loc.substr(0, loc.find_first_of("?#"))).extension().string();
        if (ext.empty() || ext.size() > 5) ext = ".img";
        // Index by URL so a rerun does not refetch.
        const fs::path link = store / ("url-" + hash::sha256_hex(loc) + ".txt");
        if (fs::exists(link)) {
            const std::string target = read_file(link);
            if (fs::exists(store / target)) {
                s.image = (store / target).string();
                continue;
            }
        }
        const std::string bytes = fetch(loc);
        const std::string name = hash::sha256_hex(bytes) + ext;
        if (!fs::exists(store / name)) write_file(store / name, bytes);
        write_file(link, name);
        s.image = (store / name).string();
    }
    return out;
}

Dataset stratified_subset(const Dataset& dataset, const std::string& metric, std::size_t count, std::uint64_t seed,
                          int bins) {
    if (!dataset.scale) throw Error(ErrorCode::MissingScale, "stratified sampling needs a rating dataset");
    if (bins < 1) throw Error(ErrorCode::InvalidRequest, "bins must be positive");
    std::vector<std::vector<std::size_t>> bucket(static_cast<std::size_t>(bins));
    const Rational width = dataset.scale->range() / Rational(bins);
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        auto it = dataset.samples[i].human_scores.find(metric);
        if (it == dataset.samples[i].human_scores.end())
            throw Error(ErrorCode::SchemaViolation, "sample " + dataset.samples[i].id + " lacks " + metric);
        const Rational pos = (it->second - dataset.scale->min) / width;
        std::int64_t b = pos.num() / pos.den();
        b = std::clamp<std::int64_t>(b, 0, bins - 1);
        bucket[static_cast<std::size_t>(b)].push_back(i);
    }
    std::mt19937_64 rng(seed);
    for (auto& b : bucket) std::shuffle(b.begin(), b.end(), rng);
    std::vector<std::size_t> chosen;
    for (std::size_t round = 0; chosen.size() < count; ++round) {
        bool any = false;
        for (const auto& b : bucket) {
            if (round < b.size() && chosen.size() < count) {
                chosen.push_back(b[round]);
                any = true;
            }
        }
        if (!any) break;
    }
    std::sort(chosen.begin(), chosen.end());
    Dataset out = dataset;
    out.samples.clear();
    for (auto i : chosen) out.samples.push_back(dataset.samples[i]);
    return out;
}

}  // namespace refer
