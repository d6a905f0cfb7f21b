#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refer/parser.hpp"
#include "refer/types.hpp"

namespace refer {

/// The structured evaluation prompt for one (dataset, metric, role).
///
/// Rendering emits the sections in a fixed order: task introduction,
/// criteria, steps, guidelines, the input block, the peer-review block
/// (area chair only) and the evaluation form. Empty sections are skipped.
struct PromptSchema {
    std::string task_intro;
    std::string criteria;
    std::vector<std::string> steps;
    std::string guidelines;
    std::vector<std::string> input_slots;
    /// Input block with {{Slot}} placeholders. Empty means one
    /// "Slot: {{Slot}}" paragraph per declared slot.
    std::string input_template;
    std::string eval_form;
    std::string metric_name;
    std::optional<ScoreScale> scale;
    TaskKind task_kind = TaskKind::Rating;
    /// Heading above each forwarded peer review; {ordinal} expands to
    /// "First", "Second", ... and {index} to 1, 2, ...
    std::string peer_heading = "{ordinal} Assistant's Evaluation:";
    std::string peer_block_title;

    std::string effective_input_template() const;
    friend bool operator==(const PromptSchema&, const PromptSchema&) = default;
};

struct SchemaIssue {
    std::string field;
    std::string rule;
    friend bool operator==(const SchemaIssue&, const SchemaIssue&) = default;
};

/// One peer's parsed review, tagged with the handle name that produced it.
struct PeerReview {
    std::string peer;
    Outcome outcome;
    friend bool operator==(const PeerReview&, const PeerReview&) = default;
};

std::vector<SchemaIssue> validate_schema(const PromptSchema& schema);

/// Renders the prompt for one agent. Peers must be given no reviews; the
/// area chair needs at least one. The strategy only affects the area-chair
/// peer block.
///
/// Throws Error{MissingSlot}, Error{EmptyPeerSet}, Error{InvalidSchema}.
std::string render_prompt(const PromptSchema& schema, const Sample& sample, Role role,
                          std::span<const PeerReview> peer_reviews = {},
                          CommunicationStrategy strategy = CommunicationStrategy::ScoreOnly);

/// Area-chair prompt with "{{Peer_response<i>}}" placeholders in place of
/// real reviews; used for dry runs before any peer has answered.
std::string render_area_chair_preview(const PromptSchema& schema, const Sample& sample, std::size_t peer_count);

/// Substitutes {{Name}} placeholders in one pass. Throws Error{MissingSlot}
/// for a placeholder without a value.
std::string substitute_slots(std::string_view tmpl, const std::map<std::string, std::string>& values);

/// Placeholder names in order of appearance.
std::vector<std::string> placeholders(std::string_view tmpl);

std::string ordinal_word(std::size_t index);

// ---- auto prompt ---------------------------------------------------------

struct AnnotatedExample {
    std::string rendered_input;
    Rational rating;
};

/// Task intro, criteria and steps: what the guideline writer gets to see.
std::string render_structure(const PromptSchema& schema);

/// Pairs each sample's rendered input block with its human score for the metric.
std::vector<AnnotatedExample> annotated_examples(const PromptSchema& schema, std::span<const Sample> samples,
                                                 const std::string& metric, std::size_t limit);

std::string build_auto_prompt(std::string_view structure, std::span<const AnnotatedExample> examples);

/// Longest block following a line that starts with "Evaluation Guidelines"
/// (case-insensitive); the block ends at the first blank line after content.
std::optional<std::string> extract_guidelines(std::string_view completion);

using CompletionFn = std::function<std::string(const std::string& prompt)>;

/// Runs one auto-prompt call and returns the extracted guidelines.
/// Throws Error{UnparseableCompletion}; backend errors propagate.
std::string generate_guidelines(std::string_view structure, std::span<const AnnotatedExample> examples,
                                const CompletionFn& complete);

// ---- schema files ----------------------------------------------------------

inline constexpr int kSchemaFormatVersion = 1;

PromptSchema schema_from_json(const nlohmann::json& doc);
nlohmann::json schema_to_json(const PromptSchema& schema);
PromptSchema load_schema_file(const std::filesystem::path& path);

/// <root>/<dataset>/<metric>/{peer,area_chair}.json
std::filesystem::path schema_path(const std::filesystem::path& root, std::string_view dataset,
                                  std::string_view metric, Role role);

struct SchemaPair {
    PromptSchema peer;
    PromptSchema area_chair;
};

SchemaPair load_schema_pair(const std::filesystem::path& root, std::string_view dataset, std::string_view metric);

}  // namespace refer
