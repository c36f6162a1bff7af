#include "npprompt/commands.hpp"

#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "npprompt/checksum.hpp"
#include "npprompt/error.hpp"
#include "npprompt/logging.hpp"
#include "npprompt/prompting.hpp"
#include "npprompt/whitening.hpp"

namespace npprompt {

namespace fs = std::filesystem;

namespace {

// Writes next to the target and renames, so readers never see half a file.
void write_text_file(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        }
        out << contents;
        if (!out) {
            throw Error(ErrorCode::Io, "short write to " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

std::string predictions_jsonl(const std::vector<ExamplePrediction>& predictions) {
    std::string out;
    for (const auto& p : predictions) {
        out += prediction_to_jsonl(p);
        out += '\n';
    }
    return out;
}

struct RunFiles {
    fs::path dir;
    EvalRun run;
};

std::vector<LogitVector> score_with_file(const RunConfig& config, const Engine& engine,
                                         const std::vector<DatasetRecord>& records,
                                         const Template& tmpl, const fs::path& logits,
                                         const fs::path& manifest) {
    auto batch = std::make_shared<const LogitsBatch>(
        read_logits_batch(logits, manifest, engine.vocab.size()));
    FileBackend backend(std::move(batch), engine.vocab.size());
    return score_dataset(records, tmpl, backend, config.parallel);
}

std::vector<DatasetRecord> load_dataset(const RunConfig& config) {
    return read_dataset(*config.dataset);
}

} // namespace

Engine load_engine(const RunConfig& config) {
    for (const auto& manifest : config.export_manifests) {
        verify_export_manifest(manifest);
    }
    Engine engine;
    engine.vocab = read_vocab(config.vocab);
    if (config.whitening) {
        const Tensor contextual = read_tensor(*config.whitening->contextual);
        const WhiteningTransform w = config.whitening->transform
                                         ? read_whitening(*config.whitening->transform)
                                         : fit_whitening(contextual);
        engine.space = std::make_unique<EmbeddingSpace>(engine.vocab, whiten_rows(contextual, w));
    } else {
        engine.space = std::make_unique<EmbeddingSpace>(engine.vocab, read_tensor(config.embeddings));
    }
    if (config.subword_splits) {
        engine.splits = read_subword_splits(*config.subword_splits);
    }
    return engine;
}

std::unique_ptr<ScoringBackend> make_backend(const RunConfig& config, std::size_t vocab_size) {
    if (config.backend_url) {
        HttpBackendOptions options;
        options.url = *config.backend_url;
        options.vocab_size = vocab_size;
        options.max_in_flight = config.parallel;
        options.timeout = std::chrono::milliseconds(config.timeout_ms);
        options.retries = config.retries;
        return std::make_unique<HttpBackend>(std::move(options));
    }
    auto batch = std::make_shared<const LogitsBatch>(
        read_logits_batch(*config.logits, *config.manifest, vocab_size));
    return std::make_unique<FileBackend>(std::move(batch), vocab_size);
}

void cmd_neighbors(const RunConfig& config, const std::string& keyword, std::size_t k,
                   std::ostream& out) {
    validate(config, ConfigUse::Neighbors);
    if (k < 1) {
        throw Error(ErrorCode::InvalidK, "k must be at least 1");
    }
    const Engine engine = load_engine(config);
    const auto label = embed_label(keyword, engine.vocab, *engine.space, engine.splits);
    const auto ranked = topk_neighbors(label, *engine.space, k, config.metric);

    std::string table = fmt::format("{:>4}  {:<28}{}\n", "rank", "token", "sim");
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const auto quoted = "\"" + engine.vocab.at(ranked[i].token_id).token + "\"";
        table += fmt::format("{:>4}  {:<28}{:.2f}\n", i + 1, quoted, ranked[i].similarity);
    }
    out << table;
}

void cmd_dump_verbalizer(const RunConfig& config, const fs::path& out_path) {
    validate(config, ConfigUse::Neighbors);
    if (config.classes.empty()) {
        throw Error(ErrorCode::Config, "no classes configured");
    }
    const Engine engine = load_engine(config);
    const auto verbalizer = build_verbalizer(config.classes, engine.vocab, *engine.space, config.k,
                                             config.metric, config.weights, engine.splits);
    write_text_file(out_path, dump_verbalizer(verbalizer, engine.vocab).dump(2) + "\n");
}

std::size_t cmd_classify(const RunConfig& config, const fs::path& out_path) {
    validate(config, ConfigUse::Classify);
    const auto records = load_dataset(config);
    const Engine engine = load_engine(config);
    const auto backend = make_backend(config, engine.vocab.size());
    const Template tmpl = Template::parse(config.template_source);

    if (records.empty()) {
        logger()->warn("dataset {} is empty", config.dataset->string());
        write_text_file(out_path, "");
        return 0;
    }
    const auto logits = score_dataset(records, tmpl, *backend, config.parallel);
    const EvalContext ctx{engine.vocab, *engine.space, engine.splits, config.classes};
    const auto predictions = predict_scored(records, logits, ctx, config.eval_settings());
    write_text_file(out_path, predictions_jsonl(predictions));
    return predictions.size();
}

EvalReport cmd_eval(const RunConfig& config, const fs::path& out_dir) {
    validate(config, ConfigUse::Evaluate);
    const auto records = load_dataset(config);
    const Engine engine = load_engine(config);
    const Template tmpl = Template::parse(config.template_source);
    const EvalContext ctx{engine.vocab, *engine.space, engine.splits, config.classes};
    const auto settings = config.eval_settings();

    const auto backend = make_backend(config, engine.vocab.size());
    std::vector<RunFiles> runs;
    runs.push_back({out_dir, evaluate(records, tmpl, *backend, ctx, settings, config.parallel,
                                      config.echo())});

    for (const auto& v : config.variants) {
        const Template vt = Template::parse(v.template_source);
        const auto logits = score_with_file(config, engine, records, vt, v.logits, v.manifest);
        auto echo = config.echo();
        echo["template"] = v.template_source;
        echo["logits"] = v.logits.filename().string();
        runs.push_back({out_dir / v.name, evaluate_scored(records, logits, ctx, settings, echo)});
    }

    for (const auto& r : runs) {
        write_text_file(r.dir / "report.json", report_to_json(r.run.report).dump(2) + "\n");
        write_text_file(r.dir / "report.txt", report_to_text(r.run.report));
        write_text_file(r.dir / "predictions.jsonl", predictions_jsonl(r.run.predictions));
    }
    if (runs.size() > 1) {
        std::vector<double> values;
        nlohmann::ordered_json summary;
        auto per_run = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < runs.size(); ++i) {
            values.push_back(runs[i].run.report.metric_value);
            nlohmann::ordered_json e;
            e["name"] = i == 0 ? std::string("primary") : config.variants[i - 1].name;
            e["metric_value"] = runs[i].run.report.metric_value;
            per_run.push_back(std::move(e));
        }
        const auto s = summarize(values);
        summary["metric_name"] = to_string(settings.metric_name);
        summary["mean"] = s.mean;
        summary["stderr"] = s.stderr_;
        summary["runs"] = std::move(per_run);
        write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");
    }
    return runs.front().run.report;
}

std::vector<SweepRow> cmd_sweep(const RunConfig& config, std::size_t k_min, std::size_t k_max,
                                const fs::path& out_dir) {
    if (k_min < 1 || k_min > k_max) {
        throw Error(ErrorCode::InvalidArgument, "need 1 <= k_min <= k_max, got " +
                                                    std::to_string(k_min) + ".." +
                                                    std::to_string(k_max));
    }
    validate(config, ConfigUse::Evaluate);
    const auto records = load_dataset(config);
    for (const auto& r : records) {
        if (!r.label) throw Error(ErrorCode::MissingLabel, "example has no gold label", r.id);
    }
    const Engine engine = load_engine(config);
    const Template tmpl = Template::parse(config.template_source);
    const auto backend = make_backend(config, engine.vocab.size());
    const auto logits = score_dataset(records, tmpl, *backend, config.parallel);
    const EvalContext ctx{engine.vocab, *engine.space, engine.splits, config.classes};

    std::vector<std::size_t> ks;
    for (std::size_t k = k_min; k <= k_max; ++k) ks.push_back(k);
    const auto rows = sweep_k(records, logits, ctx, config.eval_settings(), ks);
    write_text_file(out_dir / "sweep.csv", sweep_to_csv(rows));
    return rows;
}

void cmd_whiten_fit(const fs::path& contextual, const fs::path& out_path) {
    std::error_code ec;
    if (!fs::is_regular_file(contextual, ec)) {
        throw Error(ErrorCode::Config, "contextual tensor not found: " + contextual.string());
    }
    const auto w = fit_whitening(read_tensor(contextual));
    if (out_path.has_parent_path()) {
        fs::create_directories(out_path.parent_path());
    }
    write_whitening(out_path, w);
}

} // namespace npprompt
