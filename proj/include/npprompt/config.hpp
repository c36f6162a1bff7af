#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "npprompt/aggregator.hpp"
#include "npprompt/eval.hpp"
#include "npprompt/verbalizer.hpp"

namespace npprompt {

/// One prompt template with its own precomputed logits; used to report
/// mean and standard error across templates.
struct TemplateVariant {
    std::string name;
    std::string template_source;
    std::filesystem::path logits;
    std::filesystem::path manifest;
};

struct WhiteningConfig {
    std::optional<std::filesystem::path> contextual; // fit on the fly
    std::optional<std::filesystem::path> transform;  // previously fitted
};

/// Everything a command needs. Relative paths in a config file resolve
/// against the file's directory.
struct RunConfig {
    std::filesystem::path vocab;
    std::filesystem::path embeddings;
    std::optional<std::filesystem::path> dataset;
    std::optional<std::filesystem::path> logits;
    std::optional<std::filesystem::path> manifest;
    std::optional<std::string> backend_url;
    std::string template_source;
    std::vector<LabelSpec> classes;
    std::size_t k = 10;
    SimilarityMetric metric = SimilarityMetric::Cosine;
    WeightScheme weights = WeightScheme::Softmax;
    ScoreMode mode = ScoreMode::SumLogit;
    MetricName eval_metric = MetricName::Accuracy;
    int positive_class = 1;
    std::optional<std::filesystem::path> subword_splits;
    std::optional<WhiteningConfig> whitening;
    std::vector<std::filesystem::path> export_manifests;
    std::vector<TemplateVariant> variants;
    std::size_t parallel = 4;
    long timeout_ms = 60'000;
    int retries = 0;
    std::optional<std::filesystem::path> out;

    EvalSettings eval_settings() const;
    /// Deterministic echo of the run configuration for reports.
    nlohmann::ordered_json echo() const;
};

RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Command-line flags; set values win over the config file.
struct ConfigOverrides {
    std::optional<std::size_t> k;
    std::optional<std::string> metric;
    std::optional<std::string> weights;
    std::optional<std::string> mode;
    std::optional<std::filesystem::path> out;
    std::optional<std::size_t> parallel;
    std::optional<std::string> backend_url;
};

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides);

enum class ConfigUse {
    Neighbors, // vocabulary + embeddings only
    Classify,  // plus dataset, template and exactly one backend
    Evaluate,
};

/// Throws Config errors for anything that would fail later: missing
/// files, k < 1, bad template, empty keywords, zero or two backends.
void validate(const RunConfig& config, ConfigUse use);

} // namespace npprompt
