// Shared builders for tests and the acceptance binary.
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "refer/orchestrator.hpp"
#include "refer/prompt.hpp"

namespace refer::testing {

inline std::filesystem::path fixture_dir() { return REFER_FIXTURE_DIR; }

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("refer-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

inline ScoreScale scale_1_to(int max) { return ScoreScale{Rational(1), Rational(max), Granularity::Integer}; }

/// A small rating schema with two slots; `metric` appears in the criteria
/// line so mock scripts can tell metrics apart.
inline PromptSchema rating_schema(const std::string& metric, ScoreScale scale, bool area_chair = false) {
    PromptSchema s;
    s.task_intro = area_chair ? "Combine the reviews below into one verdict on the summary."
                              : "Judge the summary of the document.";
    s.criteria = metric + ": how well the summary does on this quality.";
    s.steps = {"Read the document.", "Read the summary.", "Assign a score."};
    s.input_slots = {"Document", "Summary"};
    s.eval_form = "Analysis: your reasoning\nRating: your score";
    s.metric_name = metric;
    s.scale = scale;
    s.task_kind = TaskKind::Rating;
    return s;
}

inline PromptSchema reasoning_schema(bool area_chair = false) {
    PromptSchema s;
    s.task_intro = area_chair ? "Several solvers answered the question below. Decide the final answer."
                              : "Solve the question below.";
    s.input_slots = {"Question"};
    s.eval_form = "Analysis: your working\nAnswer: the final answer";
    s.metric_name = "answer";
    s.task_kind = TaskKind::Reasoning;
    return s;
}

inline Sample doc_sample(const std::string& id, const std::string& doc, const std::string& summary) {
    Sample s;
    s.id = id;
    s.slots = {{"Document", doc}, {"Summary", summary}};
    return s;
}

inline ModelHandle mock_handle(const std::string& name, bool supports_n = true) {
    ModelHandle h;
    h.name = name;
    h.provider = "mock";
    h.model_id = "mock-" + name;
    h.supports_n = supports_n;
    h.pricing = Pricing{Rational(1, 1000), Rational(2, 1000)};
    return h;
}

inline std::string review_text(const std::string& analysis, const std::string& score) {
    return "Analysis: " + analysis + "\nRating: " + score;
}

}  // namespace refer::testing
