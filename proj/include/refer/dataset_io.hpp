#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "refer/orchestrator.hpp"
#include "refer/prompt.hpp"
#include "refer/types.hpp"

namespace refer {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kRunFormatVersion = 1;
inline constexpr int kTuningFormatVersion = 1;

/// Reads a line-delimited dataset: one header object, then one object per
/// sample. When `expected` is given the header's kind must match it.
///
/// Throws Error{SchemaViolation} (with line number), Error{MissingScale},
/// Error{DuplicateId}, Error{UnknownFormatVersion}, Error{IOFailure}.
Dataset load_dataset(const std::filesystem::path& path, std::optional<DatasetKind> expected = std::nullopt);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

// ---- runs ------------------------------------------------------------------

nlohmann::ordered_json entry_to_json(const RunEntry& entry);
RunEntry entry_from_json(const nlohmann::json& j);
nlohmann::ordered_json summary_to_json(const RunRecord& run);

/// Writes `dir/verdicts.jsonl` and `dir/summary.json`. Throws Error{IOFailure}.
void persist_run(const RunRecord& run, const std::filesystem::path& dir);

/// Inverse of persist_run. Throws Error{IOFailure}, Error{SchemaViolation},
/// Error{UnknownFormatVersion}.
RunRecord load_run(const std::filesystem::path& dir);

/// Copies of the files with every timing-dependent key removed, for
/// byte-level comparisons between runs.
std::string masked_verdicts(const std::filesystem::path& dir);
std::string masked_summary(const std::filesystem::path& dir);

// ---- instruction tuning ------------------------------------------------------

struct ExportReport {
    std::size_t written = 0;
    std::size_t skipped = 0;
};

/// One record per successful verdict: the rendered peer prompt as the
/// instruction, the area chair's final analysis and score as the output.
/// Failed entries are skipped and counted. Throws Error{EmptyRun}.
ExportReport export_instruction_tuning(const RunRecord& run, const Dataset& dataset,
                                       const std::map<std::string, SchemaPair>& schemas,
                                       const std::filesystem::path& path);

/// "Analysis: ...\nRating: 3.45" (or "Answer: C").
std::string tuning_output(const SampleVerdict& verdict);

// ---- images ------------------------------------------------------------------

using Fetcher = std::function<std::string(const std::string& url)>;

/// Downloads every URL image into `store` under its SHA-256 and returns a copy
/// of the dataset pointing at the local files. Existing files are reused.
Dataset prefetch_images(const Dataset& dataset, const std::filesystem::path& store, const Fetcher& fetch);

/// Picks `count` samples spread evenly over `bins` equal-width bands of the
/// metric's human score, deterministically for a given seed.
Dataset stratified_subset(const Dataset& dataset, const std::string& metric, std::size_t count, std::uint64_t seed,
                          int bins = 5);

}  // namespace refer
