#include "npprompt/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "npprompt/error.hpp"

namespace npprompt {

std::string_view to_string(MetricName name) {
    switch (name) {
    case MetricName::Accuracy: return "accuracy";
    case MetricName::F1Binary: return "f1_binary";
    case MetricName::Matthews: return "matthews";
    }
    return "accuracy";
}

MetricName parse_metric_name(std::string_view name) {
    if (name == "accuracy") return MetricName::Accuracy;
    if (name == "f1_binary" || name == "f1") return MetricName::F1Binary;
    if (name == "matthews" || name == "mcc") return MetricName::Matthews;
    throw Error(ErrorCode::Config, "unknown evaluation metric '" + std::string(name) + "'");
}

namespace {

void check_lengths(std::span<const int> preds, std::span<const int> golds) {
    if (preds.size() != golds.size()) {
        throw Error(ErrorCode::DimensionMismatch, "predictions and gold labels differ in length");
    }
    if (preds.empty()) {
        throw Error(ErrorCode::EmptyInput, "no examples to score");
    }
}

struct BinaryCounts {
    double tp = 0, tn = 0, fp = 0, fn = 0;
};

BinaryCounts binary_counts(std::span<const int> preds, std::span<const int> golds, int positive) {
    check_lengths(preds, golds);
    BinaryCounts c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        for (int v : {preds[i], golds[i]}) {
            if (v != 0 && v != 1) {
                throw Error(ErrorCode::NonBinaryLabels, "label " + std::to_string(v) + " is not 0/1");
            }
        }
        const bool p = preds[i] == positive;
        const bool g = golds[i] == positive;
        if (p && g) c.tp += 1;
        else if (p) c.fp += 1;
        else if (g) c.fn += 1;
        else c.tn += 1;
    }
    return c;
}

} // namespace

double accuracy(std::span<const int> preds, std::span<const int> golds) {
    check_lengths(preds, golds);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        hits += preds[i] == golds[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double f1_binary(std::span<const int> preds, std::span<const int> golds, int positive_class) {
    const auto c = binary_counts(preds, golds, positive_class);
    const double precision = c.tp + c.fp > 0 ? c.tp / (c.tp + c.fp) : 0.0;
    const double recall = c.tp + c.fn > 0 ? c.tp / (c.tp + c.fn) : 0.0;
    if (precision + recall == 0.0) {
        return 0.0;
    }
    return 2.0 * precision * recall / (precision + recall);
}

double matthews(std::span<const int> preds, std::span<const int> golds) {
    const auto c = binary_counts(preds, golds, 1);
    const double denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn);
    if (denom == 0.0) {
        return 0.0;
    }
    return (c.tp * c.tn - c.fp * c.fn) / std::sqrt(denom);
}

std::vector<std::vector<long>> confusion_matrix(std::span<const int> preds,
                                                std::span<const int> golds, std::size_t n_classes) {
    check_lengths(preds, golds);
    std::vector<std::vector<long>> m(n_classes, std::vector<long>(n_classes, 0));
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto g = static_cast<std::size_t>(golds[i]);
        const auto p = static_cast<std::size_t>(preds[i]);
        if (golds[i] < 0 || preds[i] < 0 || g >= n_classes || p >= n_classes) {
            throw Error(ErrorCode::InvalidRecord, "label outside the class set");
        }
        ++m[g][p];
    }
    return m;
}

std::vector<LogitVector> score_dataset(const std::vector<DatasetRecord>& records,
                                       const Template& tmpl, const ScoringBackend& backend,
                                       std::size_t parallel) {
    // Render everything up front so template/record mismatches fail before
    // any backend traffic.
    std::vector<ScoreRequest> requests;
    requests.reserve(records.size());
    for (const auto& r : records) {
        auto prompt = render(tmpl, r);
        requests.push_back(make_score_request(r.id, std::move(prompt.text), prompt.mask_offset));
    }

    std::vector<LogitVector> out(records.size());
    std::vector<std::exception_ptr> failures(records.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < requests.size(); i = next++) {
            try {
                auto logits = backend.score(requests[i]);
                if (logits.size() != backend.vocab_size()) {
                    throw Error(ErrorCode::BadResponse, "logit vector of wrong length",
                                requests[i].example_id);
                }
                out[i] = std::move(logits);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(parallel, 1, std::max<std::size_t>(1, records.size()));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
    return out;
}

std::vector<ExamplePrediction> predict_scored(const std::vector<DatasetRecord>& records,
                                              const std::vector<LogitVector>& logits,
                                              const EvalContext& ctx, const EvalSettings& settings) {
    if (records.size() != logits.size()) {
        throw Error(ErrorCode::RowCountMismatch, "records and logits differ in count");
    }
    const bool needs_shared = std::any_of(records.begin(), records.end(),
                                          [](const DatasetRecord& r) { return !r.choices; });
    std::optional<Verbalizer> shared;
    if (needs_shared) {
        if (ctx.classes.empty()) {
            const auto it = std::find_if(records.begin(), records.end(),
                                         [](const DatasetRecord& r) { return !r.choices; });
            throw Error(ErrorCode::Config, "no classes configured and example has no choices", it->id);
        }
        shared = build_verbalizer(ctx.classes, ctx.vocab, ctx.space, settings.k, settings.metric,
                                  settings.weights, ctx.splits);
    }

    std::vector<ExamplePrediction> out;
    out.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        try {
            validate_logits(logits[i], ctx.vocab.size());
        } catch (const Error& e) {
            throw Error(e.code(), e.what(), r.id);
        }
        ExamplePrediction p{r.id, {}, r.label};
        if (r.choices) {
            std::vector<LabelSpec> choice_labels;
            for (const auto& c : *r.choices) choice_labels.push_back({c, {c}});
            Verbalizer local;
            try {
                local = build_verbalizer(choice_labels, ctx.vocab, ctx.space, settings.k,
                                         settings.metric, settings.weights, ctx.splits);
            } catch (const Error& e) {
                throw Error(e.code(), e.what(), r.id);
            }
            p.result = predict(logits[i], local, settings.mode);
        } else {
            p.result = predict(logits[i], *shared, settings.mode);
        }
        out.push_back(std::move(p));
    }
    return out;
}

EvalReport make_report(const std::vector<ExamplePrediction>& predictions, std::size_t n_classes,
                       const EvalSettings& settings, nlohmann::ordered_json config_echo) {
    std::vector<int> preds;
    std::vector<int> golds;
    std::size_t width = n_classes;
    for (const auto& p : predictions) {
        if (!p.gold) {
            throw Error(ErrorCode::MissingLabel, "example has no gold label", p.id);
        }
        width = std::max(width, p.result.class_scores.size());
        if (*p.gold < 0 || static_cast<std::size_t>(*p.gold) >= p.result.class_scores.size()) {
            throw Error(ErrorCode::InvalidRecord, "gold label outside the class set", p.id);
        }
        preds.push_back(static_cast<int>(p.result.predicted_class));
        golds.push_back(*p.gold);
    }
    EvalReport report;
    report.n_examples = predictions.size();
    report.metric_name = settings.metric_name;
    switch (settings.metric_name) {
    case MetricName::Accuracy: report.metric_value = accuracy(preds, golds); break;
    case MetricName::F1Binary:
        report.metric_value = f1_binary(preds, golds, settings.positive_class);
        break;
    case MetricName::Matthews: report.metric_value = matthews(preds, golds); break;
    }
    report.confusion = confusion_matrix(preds, golds, width);
    report.config_echo = std::move(config_echo);
    return report;
}

EvalRun evaluate_scored(const std::vector<DatasetRecord>& records,
                        const std::vector<LogitVector>& logits, const EvalContext& ctx,
                        const EvalSettings& settings, nlohmann::ordered_json config_echo) {
    for (const auto& r : records) {
        if (!r.label) {
            throw Error(ErrorCode::MissingLabel, "example has no gold label", r.id);
        }
    }
    EvalRun run;
    run.predictions = predict_scored(records, logits, ctx, settings);
    run.report = make_report(run.predictions, ctx.classes.size(), settings, std::move(config_echo));
    return run;
}

EvalRun evaluate(const std::vector<DatasetRecord>& records, const Template& tmpl,
                 const ScoringBackend& backend, const EvalContext& ctx,
                 const EvalSettings& settings, std::size_t parallel,
                 nlohmann::ordered_json config_echo) {
    for (const auto& r : records) {
        if (!r.label) {
            throw Error(ErrorCode::MissingLabel, "example has no gold label", r.id);
        }
    }
    const auto logits = score_dataset(records, tmpl, backend, parallel);
    return evaluate_scored(records, logits, ctx, settings, std::move(config_echo));
}

std::vector<SweepRow> sweep_k(const std::vector<DatasetRecord>& records,
                              const std::vector<LogitVector>& logits, const EvalContext& ctx,
                              const EvalSettings& settings, std::span<const std::size_t> k_values) {
    std::vector<SweepRow> rows;
    rows.reserve(k_values.size());
    for (std::size_t k : k_values) {
        EvalSettings at_k = settings;
        at_k.k = k;
        const auto run = evaluate_scored(records, logits, ctx, at_k);
        rows.push_back({k, run.report.metric_value});
    }
    return rows;
}

RunSummary summarize(std::span<const double> values) {
    if (values.empty()) {
        throw Error(ErrorCode::EmptyInput, "nothing to summarize");
    }
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() == 1) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["n_examples"] = report.n_examples;
    j["metric_name"] = to_string(report.metric_name);
    j["metric_value"] = report.metric_value;
    j["per_class_confusion"] = report.confusion;
    j["config"] = report.config_echo;
    return j;
}

std::string report_to_text(const EvalReport& report) {
    std::string out;
    out += fmt::format("examples   {}\n", report.n_examples);
    out += fmt::format("{:<10} {:.4f}\n", to_string(report.metric_name), report.metric_value);
    out += "confusion (rows gold, columns predicted)\n";
    const std::size_t n = report.confusion.size();
    out += "      ";
    for (std::size_t c = 0; c < n; ++c) out += fmt::format("{:>7}", c);
    out += '\n';
    for (std::size_t r = 0; r < n; ++r) {
        out += fmt::format("{:>6}", r);
        for (long v : report.confusion[r]) out += fmt::format("{:>7}", v);
        out += '\n';
    }
    return out;
}

std::string prediction_to_jsonl(const ExamplePrediction& prediction) {
    nlohmann::ordered_json j;
    j["id"] = prediction.id;
    j["predicted_class"] = prediction.result.predicted_class;
    j["class_scores"] = prediction.result.class_scores;
    j["winning_keyword"] = prediction.result.winning_keyword;
    return j.dump();
}

std::string sweep_to_csv(std::span<const SweepRow> rows) {
    std::string out = "k,metric\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{:.17g}\n", r.k, r.metric_value);
    }
    return out;
}

} // namespace npprompt
