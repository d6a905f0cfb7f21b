#include "refer/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "refer/error.hpp"
#include "refer/json_io.hpp"
#include "refer/text.hpp"

namespace refer {
namespace {

constexpr std::string_view kCriteriaHeading = "Evaluation Criteria:";
constexpr std::string_view kStepsHeading = "Evaluation Steps:";
constexpr std::string_view kGuidelinesHeading = "Evaluation Guidelines:";
constexpr std::string_view kExampleHeading = "Example:";

std::size_t count_word(std::string_view haystack, std::string_view word) {
    std::size_t count = 0;
    for (auto pos = haystack.find(word); pos != std::string_view::npos; pos = haystack.find(word, pos + 1)) {
        const bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(haystack[pos - 1]));
        const std::size_t end = pos + word.size();
        const bool right = end >= haystack.size() || !std::isalnum(static_cast<unsigned char>(haystack[end]));
        if (left && right) ++count;
    }
    return count;
}

std::string expand_heading(const std::string& pattern, std::size_t index) {
    std::string h = text::replace_all(pattern, "{ordinal}", ordinal_word(index));
    return text::replace_all(h, "{index}", std::to_string(index + 1));
}

std::string peer_content(const Outcome& outcome, CommunicationStrategy strategy) {
    const std::string& analysis = analysis_of(outcome);
    std::string verdict;
    if (const auto* r = std::get_if<ReviewOutcome>(&outcome)) verdict = "Rating: " + r->score.to_string();
    else verdict = "Answer: " + std::get<AnswerOutcome>(outcome).answer.to_string();
    switch (strategy) {
        case CommunicationStrategy::ScoreOnly: return verdict;
        case CommunicationStrategy::CommentOnly: return "Analysis: " + analysis;
        case CommunicationStrategy::Both: return "Analysis: " + analysis + "\n" + verdict;
    }
    return verdict;
}

std::vector<std::string> leading_sections(const PromptSchema& schema) {
    std::vector<std::string> sections;
    if (!text::trim(schema.task_intro).empty()) sections.push_back(std::string(text::trim(schema.task_intro)));
    if (!text::trim(schema.criteria).empty())
        sections.push_back(std::string(kCriteriaHeading) + "\n" + std::string(text::trim(schema.criteria)));
    if (!schema.steps.empty()) {
        std::string steps(kStepsHeading);
        for (std::size_t i = 0; i < schema.steps.size(); ++i)
            steps += "\n" + std::to_string(i + 1) + ". " + std::string(text::trim(schema.steps[i]));
        sections.push_back(std::move(steps));
    }
    return sections;
}

void check_renderable(const PromptSchema& schema) {
    // Unknown placeholders would silently corrupt the prompt.
    const std::set<std::string> declared(schema.input_slots.begin(), schema.input_slots.end());
    for (const auto& name : placeholders(schema.effective_input_template()))
        if (!declared.contains(name))
            throw Error(ErrorCode::InvalidSchema, "input_template uses undeclared slot {{" + name + "}}");
}

std::string render_with_block(const PromptSchema& schema, const Sample& sample,
                              const std::vector<std::string>& peer_entries) {
    check_renderable(schema);
    for (const auto& slot : schema.input_slots)
        if (!sample.slots.contains(slot))
            throw Error(ErrorCode::MissingSlot, "sample '" + sample.id + "' has no value for slot '" + slot + "'");

    auto sections = leading_sections(schema);
    if (!text::trim(schema.guidelines).empty())
        sections.push_back(std::string(kGuidelinesHeading) + "\n" + std::string(text::trim(schema.guidelines)));
    sections.push_back(std::string(kExampleHeading) + "\n\n" +
                       substitute_slots(schema.effective_input_template(), sample.slots));
    if (!peer_entries.empty()) {
        std::string block;
        if (!schema.peer_block_title.empty()) block = schema.peer_block_title + "\n\n";
        for (std::size_t i = 0; i < peer_entries.size(); ++i) {
            if (i) block += "\n\n";
            block += expand_heading(schema.peer_heading, i) + "\n" + peer_entries[i];
        }
        sections.push_back(std::move(block));
    }
    if (!text::trim(schema.eval_form).empty()) sections.push_back(std::string(text::trim(schema.eval_form)));
    return text::join(sections, "\n\n") + "\n";
}

}  // namespace

std::string PromptSchema::effective_input_template() const {
    if (!input_template.empty()) return input_template;
    std::vector<std::string> parts;
    for (const auto& slot : input_slots) parts.push_back(slot + ": {{" + slot + "}}");
    return text::join(parts, "\n\n");
}

std::string ordinal_word(std::size_t index) {
    static constexpr std::string_view words[] = {
        "First",     "Second",     "Third",      "Fourth",     "Fifth",     "Sixth",     "Seventh",
        "Eighth",    "Ninth",      "Tenth",      "Eleventh",   "Twelfth",   "Thirteenth", "Fourteenth",
        "Fifteenth", "Sixteenth",  "Seventeenth", "Eighteenth", "Nineteenth", "Twentieth"};
    if (index < std::size(words)) return std::string(words[index]);
    return "Peer #" + std::to_string(index + 1);
}

std::vector<std::string> placeholders(std::string_view tmpl) {
    std::vector<std::string> names;
    for (auto open = tmpl.find("{{"); open != std::string_view::npos; open = tmpl.find("{{", open + 2)) {
        auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) break;
        names.emplace_back(tmpl.substr(open + 2, close - open - 2));
        open = close;
    }
    return names;
}

std::string substitute_slots(std::string_view tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) break;
        auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) break;
        out.append(tmpl.substr(pos, open - pos));
        const std::string name(tmpl.substr(open + 2, close - open - 2));
        auto it = values.find(name);
        if (it == values.end()) throw Error(ErrorCode::MissingSlot, "no value for placeholder {{" + name + "}}");
        out += it->second;
        pos = close + 2;
    }
    out.append(tmpl.substr(pos));
    return out;
}

std::vector<SchemaIssue> validate_schema(const PromptSchema& schema) {
    std::vector<SchemaIssue> issues;
    if (schema.metric_name.empty()) issues.push_back({"metric_name", "must be non-empty"});
    if (schema.input_slots.empty()) issues.push_back({"input_slots", "must be non-empty"});
    std::set<std::string> seen;
    for (const auto& slot : schema.input_slots) {
        if (slot.empty()) issues.push_back({"input_slots", "slot names must be non-empty"});
        if (!seen.insert(slot).second) issues.push_back({"input_slots", "duplicate slot name '" + slot + "'"});
    }

    const std::string tmpl = schema.effective_input_template();
    const auto used = placeholders(tmpl);
    for (const auto& name : used)
        if (!seen.contains(name)) issues.push_back({"input_template", "unknown placeholder {{" + name + "}}"});
    for (const auto& slot : seen)
        if (std::find(used.begin(), used.end(), slot) == used.end())
            issues.push_back({"input_template", "declared slot '" + slot + "' is never rendered"});
    std::size_t opens = 0, closes = 0;
    for (auto p = tmpl.find("{{"); p != std::string::npos; p = tmpl.find("{{", p + 2)) ++opens;
    for (auto p = tmpl.find("}}"); p != std::string::npos; p = tmpl.find("}}", p + 2)) ++closes;
    if (opens != closes) issues.push_back({"input_template", "unbalanced {{ }} placeholders"});

    if (schema.task_kind == TaskKind::Rating) {
        if (!schema.scale) issues.push_back({"scale", "required for rating tasks"});
        else if (!(schema.scale->min < schema.scale->max)) issues.push_back({"scale", "min must be below max"});
    } else if (!text::trim(schema.guidelines).empty()) {
        issues.push_back({"guidelines", "reasoning schemas carry no guidelines"});
    }

    if (schema.eval_form.find("Analysis:") == std::string::npos)
        issues.push_back({"eval_form", "missing the \"Analysis:\" marker"});
    const std::string_view marker = schema.task_kind == TaskKind::Rating ? "Rating" : "Answer";
    const auto markers = count_word(schema.eval_form, marker);
    if (markers != 1)
        issues.push_back({"eval_form", "needs exactly one \"" + std::string(marker) + "\" marker, found " +
                                           std::to_string(markers)});
    if (schema.peer_heading.empty()) issues.push_back({"peer_heading", "must be non-empty"});
    return issues;
}

std::string render_prompt(const PromptSchema& schema, const Sample& sample, Role role,
                          std::span<const PeerReview> peer_reviews, CommunicationStrategy strategy) {
    if (role == Role::Peer) {
        if (!peer_reviews.empty())
            throw Error(ErrorCode::InvalidRequest, "peer prompts must not include other peers' reviews");
        return render_with_block(schema, sample, {});
    }
    if (peer_reviews.empty()) throw Error(ErrorCode::EmptyPeerSet, "area chair prompt needs at least one review");
    std::vector<std::string> entries;
    entries.reserve(peer_reviews.size());
    for (const auto& review : peer_reviews) entries.push_back(peer_content(review.outcome, strategy));
    return render_with_block(schema, sample, entries);
}

std::string render_area_chair_preview(const PromptSchema& schema, const Sample& sample, std::size_t peer_count) {
    std::vector<std::string> entries;
    for (std::size_t i = 0; i < peer_count; ++i) entries.push_back("{{Peer_response" + std::to_string(i + 1) + "}}");
    if (entries.empty()) throw Error(ErrorCode::EmptyPeerSet, "area chair prompt needs at least one review");
    return render_with_block(schema, sample, entries);
}

// ---- auto prompt ---------------------------------------------------------

std::string render_structure(const PromptSchema& schema) { return text::join(leading_sections(schema), "\n\n"); }

std::vector<AnnotatedExample> annotated_examples(const PromptSchema& schema, std::span<const Sample> samples,
                                                 const std::string& metric, std::size_t limit) {
    std::vector<AnnotatedExample> out;
    const std::string tmpl = schema.effective_input_template();
    for (const auto& s : samples) {
        if (out.size() >= limit) break;
        auto it = s.human_scores.find(metric);
        if (it == s.human_scores.end()) continue;
        out.push_back({substitute_slots(tmpl, s.slots), it->second});
    }
    return out;
}

std::string build_auto_prompt(std::string_view structure, std::span<const AnnotatedExample> examples) {
    std::ostringstream os;
    os << "You are writing the scoring guidelines for an evaluation prompt. Study the prompt structure and the "
          "human-rated examples below, work out what separates one score from the next for this metric, and "
          "then write guidelines that another model or a human annotator can follow.\n\n"
          "Your reply must contain a section that starts with the line \"Evaluation Guidelines:\" followed by "
          "one line per score level stating when that score should be given.\n\n"
          "Prompt Structure:\n\n"
       << text::trim(structure) << "\n\nRated Examples:";
    for (std::size_t i = 0; i < examples.size(); ++i) {
        os << "\n\nExample " << (i + 1) << ":\n\n"
           << text::trim(examples[i].rendered_input) << "\n\nRating: " << examples[i].rating.to_string();
    }
    os << "\n";
    return os.str();
}

std::optional<std::string> extract_guidelines(std::string_view completion) {
    const auto lines = text::split_lines(completion);
    std::optional<std::string> best;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto header = text::strip_decoration(lines[i]);
        if (text::to_lower(header.substr(0, 21)) != "evaluation guidelines") continue;

        std::vector<std::string> block;
        auto rest = header.substr(21);
        while (!rest.empty() && (rest.front() == '*' || rest.front() == ':' || rest.front() == ' '))
            rest.remove_prefix(1);
        rest = text::trim(rest);
        if (!rest.empty()) block.emplace_back(rest);
        for (std::size_t j = i + 1; j < lines.size(); ++j) {
            const auto trimmed = text::trim(lines[j]);
            if (trimmed.empty()) {
                if (block.empty()) continue;
                break;
            }
            block.emplace_back(trimmed);
        }
        std::string joined = text::join(block, "\n");
        if (!joined.empty() && (!best || joined.size() > best->size())) best = std::move(joined);
    }
    return best;
}

std::string generate_guidelines(std::string_view structure, std::span<const AnnotatedExample> examples,
                                const CompletionFn& complete) {
    if (examples.empty()) throw Error(ErrorCode::InvalidRequest, "auto prompt needs at least one rated example");
    const std::string completion = complete(build_auto_prompt(structure, examples));
    auto guidelines = extract_guidelines(completion);
    if (!guidelines) throw Error(ErrorCode::UnparseableCompletion, "no \"Evaluation Guidelines\" section in completion");
    return *guidelines;
}

// ---- schema files ----------------------------------------------------------

PromptSchema schema_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::SchemaViolation, "schema document must be an object");
    if (doc.value("format", std::string{}) != "refer-schema")
        throw Error(ErrorCode::SchemaViolation, "schema format must be \"refer-schema\"");
    if (doc.value("version", 0) != kSchemaFormatVersion)
        throw Error(ErrorCode::UnknownFormatVersion, "unsupported schema version " + doc.value("version", nlohmann::json()).dump());

    PromptSchema s;
    s.task_intro = doc.value("task_intro", std::string{});
    s.criteria = doc.value("criteria", std::string{});
    s.steps = doc.value("steps", std::vector<std::string>{});
    s.guidelines = doc.value("guidelines", std::string{});
    s.input_slots = doc.value("input_slots", std::vector<std::string>{});
    s.input_template = doc.value("input_template", std::string{});
    s.eval_form = doc.value("eval_form", std::string{});
    s.metric_name = doc.value("metric_name", std::string{});
    if (doc.contains("scale")) s.scale = json_io::scale(doc.at("scale"));
    auto kind = parse_task_kind(doc.value("task_kind", std::string("rating")));
    if (!kind) throw Error(ErrorCode::SchemaViolation, "task_kind must be rating or reasoning");
    s.task_kind = *kind;
    s.peer_heading = doc.value("peer_heading", s.peer_heading);
    s.peer_block_title = doc.value("peer_block_title", std::string{});
    return s;
}

nlohmann::json schema_to_json(const PromptSchema& s) {
    nlohmann::json j{{"format", "refer-schema"},
                     {"version", kSchemaFormatVersion},
                     {"task_intro", s.task_intro},
                     {"criteria", s.criteria},
                     {"steps", s.steps},
                     {"guidelines", s.guidelines},
                     {"input_slots", s.input_slots},
                     {"input_template", s.input_template},
                     {"eval_form", s.eval_form},
                     {"metric_name", s.metric_name},
                     {"task_kind", std::string(to_string(s.task_kind))},
                     {"peer_heading", s.peer_heading},
                     {"peer_block_title", s.peer_block_title}};
    if (s.scale) j["scale"] = json_io::to_json(*s.scale);
    return j;
}

PromptSchema load_schema_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IOFailure, "cannot open schema " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
    }
    try {
        return schema_from_json(doc);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::filesystem::path schema_path(const std::filesystem::path& root, std::string_view dataset,
                                  std::string_view metric, Role role) {
    return root / std::string(dataset) / std::string(metric) / (std::string(to_string(role)) + ".json");
}

SchemaPair load_schema_pair(const std::filesystem::path& root, std::string_view dataset, std::string_view metric) {
    return {load_schema_file(schema_path(root, dataset, metric, Role::Peer)),
            load_schema_file(schema_path(root, dataset, metric, Role::AreaChair))};
}

}  // namespace refer
