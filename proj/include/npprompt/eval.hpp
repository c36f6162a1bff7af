#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "npprompt/aggregator.hpp"
#include "npprompt/backend.hpp"
#include "npprompt/prompting.hpp"
#include "npprompt/verbalizer.hpp"

namespace npprompt {

enum class MetricName { Accuracy, F1Binary, Matthews };

std::string_view to_string(MetricName name);
MetricName parse_metric_name(std::string_view name);

double accuracy(std::span<const int> preds, std::span<const int> golds);

/// 2PR/(P+R) for `positive_class`; 0 when P+R = 0. Labels must be 0/1.
double f1_binary(std::span<const int> preds, std::span<const int> golds, int positive_class = 1);

/// Matthews correlation for 0/1 labels; 0 when any marginal is empty.
double matthews(std::span<const int> preds, std::span<const int> golds);

/// Rows are gold classes, columns predictions.
std::vector<std::vector<long>> confusion_matrix(std::span<const int> preds,
                                                std::span<const int> golds, std::size_t n_classes);

struct EvalSettings {
    std::size_t k = 10;
    SimilarityMetric metric = SimilarityMetric::Cosine;
    WeightScheme weights = WeightScheme::Softmax;
    ScoreMode mode = ScoreMode::SumLogit;
    MetricName metric_name = MetricName::Accuracy;
    int positive_class = 1;
};

/// Inputs shared by every run over one model export.
struct EvalContext {
    const Vocabulary& vocab;
    const EmbeddingSpace& space;
    const SubwordSplits& splits;
    const std::vector<LabelSpec>& classes;
};

struct ExamplePrediction {
    std::string id;
    PredictionResult result;
    std::optional<int> gold;
};

struct EvalReport {
    std::size_t n_examples = 0;
    MetricName metric_name = MetricName::Accuracy;
    double metric_value = 0.0;
    std::vector<std::vector<long>> confusion;
    nlohmann::ordered_json config_echo;
};

struct EvalRun {
    EvalReport report;
    std::vector<ExamplePrediction> predictions;
};

/// Renders every record and asks the backend for its logits. Up to
/// `parallel` requests run at once; on failure the error of the earliest
/// failing record is rethrown.
std::vector<LogitVector> score_dataset(const std::vector<DatasetRecord>& records,
                                       const Template& tmpl, const ScoringBackend& backend,
                                       std::size_t parallel = 1);

/// Predicts every record from already-scored logits. Records with
/// `choices` get a verbalizer built over their own choice strings.
std::vector<ExamplePrediction> predict_scored(const std::vector<DatasetRecord>& records,
                                              const std::vector<LogitVector>& logits,
                                              const EvalContext& ctx, const EvalSettings& settings);

/// Metric and confusion over predictions that all carry gold labels.
EvalReport make_report(const std::vector<ExamplePrediction>& predictions, std::size_t n_classes,
                       const EvalSettings& settings, nlohmann::ordered_json config_echo = {});

EvalRun evaluate_scored(const std::vector<DatasetRecord>& records,
                        const std::vector<LogitVector>& logits, const EvalContext& ctx,
                        const EvalSettings& settings, nlohmann::ordered_json config_echo = {});

EvalRun evaluate(const std::vector<DatasetRecord>& records, const Template& tmpl,
                 const ScoringBackend& backend, const EvalContext& ctx,
                 const EvalSettings& settings, std::size_t parallel = 1,
                 nlohmann::ordered_json config_echo = {});

struct SweepRow {
    std::size_t k = 0;
    double metric_value = 0.0;
};

/// Rebuilds the verbalizer for each k over logits scored once.
std::vector<SweepRow> sweep_k(const std::vector<DatasetRecord>& records,
                              const std::vector<LogitVector>& logits, const EvalContext& ctx,
                              const EvalSettings& settings, std::span<const std::size_t> k_values);

struct RunSummary {
    double mean = 0.0;
    double stderr_ = 0.0;
};

/// Mean and standard error (sample standard deviation / sqrt(n)).
RunSummary summarize(std::span<const double> values);

nlohmann::ordered_json report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);
std::string prediction_to_jsonl(const ExamplePrediction& prediction);
std::string sweep_to_csv(std::span<const SweepRow> rows);

} // namespace npprompt
