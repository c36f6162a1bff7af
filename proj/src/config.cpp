#include "npprompt/config.hpp"

#include <fstream>

#include "npprompt/error.hpp"
#include "npprompt/prompting.hpp"

namespace npprompt {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

void require_file(const fs::path& path, const std::string& what) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        throw Error(ErrorCode::Config, what + " not found: " + path.string());
    }
}

std::optional<fs::path> optional_path(const nlohmann::json& j, const char* key, const fs::path& base) {
    if (j.contains(key) && !j.at(key).is_null()) {
        return resolve(base, j.at(key).get<std::string>());
    }
    return std::nullopt;
}

} // namespace

EvalSettings RunConfig::eval_settings() const {
    return {k, metric, weights, mode, eval_metric, positive_class};
}

nlohmann::ordered_json RunConfig::echo() const {
    nlohmann::ordered_json j;
    j["template"] = template_source;
    auto cls = nlohmann::ordered_json::array();
    for (const auto& c : classes) {
        nlohmann::ordered_json e;
        e["name"] = c.class_name;
        e["keywords"] = c.keywords;
        cls.push_back(std::move(e));
    }
    j["classes"] = std::move(cls);
    j["k"] = k;
    j["metric"] = to_string(metric);
    j["weights"] = to_string(weights);
    j["mode"] = to_string(mode);
    j["eval_metric"] = to_string(eval_metric);
    j["positive_class"] = positive_class;
    j["whitening"] = whitening.has_value();
    // File names only, so reports do not depend on where the checkout lives.
    j["vocab"] = vocab.filename().string();
    j["embeddings"] = embeddings.filename().string();
    if (dataset) j["dataset"] = dataset->filename().string();
    if (logits) j["logits"] = logits->filename().string();
    if (backend_url) j["backend_url"] = *backend_url;
    return j;
}

RunConfig parse_run_config(const nlohmann::json& j, const fs::path& base_dir) {
    RunConfig c;
    try {
        c.vocab = resolve(base_dir, j.at("vocab").get<std::string>());
        c.embeddings = resolve(base_dir, j.at("embeddings").get<std::string>());
        c.dataset = optional_path(j, "dataset", base_dir);
        c.logits = optional_path(j, "logits", base_dir);
        c.manifest = optional_path(j, "manifest", base_dir);
        if (j.contains("backend_url") && !j.at("backend_url").is_null()) {
            c.backend_url = j.at("backend_url").get<std::string>();
        }
        c.template_source = j.value("template", std::string{});
        for (const auto& cls : j.value("classes", nlohmann::json::array())) {
            LabelSpec spec;
            spec.class_name = cls.at("name").get<std::string>();
            spec.keywords = cls.at("keywords").get<std::vector<std::string>>();
            c.classes.push_back(std::move(spec));
        }
        if (j.contains("k")) {
            const auto k = j.at("k").get<long long>();
            if (k < 1) {
                throw Error(ErrorCode::Config, "k must be at least 1");
            }
            c.k = static_cast<std::size_t>(k);
        }
        c.metric = parse_metric(j.value("metric", std::string("cosine")));
        c.weights = parse_weight_scheme(j.value("weights", std::string("softmax")));
        c.mode = parse_score_mode(j.value("mode", std::string("sum_logit")));
        c.eval_metric = parse_metric_name(j.value("eval_metric", std::string("accuracy")));
        c.positive_class = j.value("positive_class", 1);
        c.subword_splits = optional_path(j, "subword_splits", base_dir);
        if (j.contains("whitening") && !j.at("whitening").is_null()) {
            const auto& w = j.at("whitening");
            WhiteningConfig wc;
            wc.contextual = optional_path(w, "contextual", base_dir);
            wc.transform = optional_path(w, "transform", base_dir);
            c.whitening = wc;
        }
        for (const auto& m : j.value("export_manifests", nlohmann::json::array())) {
            c.export_manifests.push_back(resolve(base_dir, m.get<std::string>()));
        }
        for (const auto& v : j.value("variants", nlohmann::json::array())) {
            TemplateVariant tv;
            tv.template_source = v.at("template").get<std::string>();
            tv.name = v.value("name", "variant" + std::to_string(c.variants.size()));
            tv.logits = resolve(base_dir, v.at("logits").get<std::string>());
            tv.manifest = resolve(base_dir, v.at("manifest").get<std::string>());
            c.variants.push_back(std::move(tv));
        }
        c.parallel = j.value("parallel", std::size_t{4});
        c.timeout_ms = j.value("timeout_ms", 60'000L);
        c.retries = j.value("retries", 0);
        c.out = optional_path(j, "out", base_dir);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Config, e.what());
    }
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Config, "cannot open config " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Config, path.string() + ": " + e.what());
    }
    return parse_run_config(j, path.parent_path());
}

void apply_overrides(RunConfig& config, const ConfigOverrides& o) {
    if (o.k) {
        if (*o.k < 1) throw Error(ErrorCode::Config, "k must be at least 1");
        config.k = *o.k;
    }
    if (o.metric) config.metric = parse_metric(*o.metric);
    if (o.weights) config.weights = parse_weight_scheme(*o.weights);
    if (o.mode) config.mode = parse_score_mode(*o.mode);
    if (o.out) config.out = *o.out;
    if (o.parallel) config.parallel = *o.parallel;
    if (o.backend_url) {
        // A URL on the command line replaces file-based logits.
        config.backend_url = *o.backend_url;
        config.logits.reset();
        config.manifest.reset();
    }
}

void validate(const RunConfig& c, ConfigUse use) {
    require_file(c.vocab, "vocabulary");
    if (c.whitening) {
        if (!c.whitening->contextual && !c.whitening->transform) {
            throw Error(ErrorCode::Config, "whitening needs a contextual tensor or a transform");
        }
        if (!c.whitening->contextual) {
            throw Error(ErrorCode::Config, "whitening needs the contextual tensor to search over");
        }
        require_file(*c.whitening->contextual, "contextual tensor");
        if (c.whitening->transform) require_file(*c.whitening->transform, "whitening transform");
    } else {
        require_file(c.embeddings, "embeddings");
    }
    if (c.subword_splits) require_file(*c.subword_splits, "subword splits");
    for (const auto& m : c.export_manifests) require_file(m, "export manifest");
    if (c.k < 1) {
        throw Error(ErrorCode::Config, "k must be at least 1");
    }
    if (use == ConfigUse::Neighbors) {
        return;
    }

    if (!c.dataset) throw Error(ErrorCode::Config, "no dataset configured");
    require_file(*c.dataset, "dataset");
    // Empty classes are allowed for multiple-choice data; records without
    // choices are rejected once the dataset is read.
    for (const auto& cls : c.classes) {
        if (cls.keywords.empty()) {
            throw Error(ErrorCode::Config, "class '" + cls.class_name + "' has no keywords");
        }
        for (const auto& kw : cls.keywords) {
            if (kw.empty()) throw Error(ErrorCode::Config, "empty keyword in '" + cls.class_name + "'");
        }
    }
    (void)Template::parse(c.template_source);

    const bool file_backend = c.logits.has_value() || c.manifest.has_value();
    if (file_backend == c.backend_url.has_value()) {
        throw Error(ErrorCode::Config, "configure exactly one of logits/manifest or backend_url");
    }
    if (file_backend) {
        if (!c.logits || !c.manifest) {
            throw Error(ErrorCode::Config, "file backend needs both logits and manifest");
        }
        require_file(*c.logits, "logits");
        require_file(*c.manifest, "logits manifest");
    }
    if (c.parallel < 1) throw Error(ErrorCode::Config, "parallel must be at least 1");
    if (c.timeout_ms < 1) throw Error(ErrorCode::Config, "timeout_ms must be positive");
    if (c.retries < 0) throw Error(ErrorCode::Config, "retries must be nonnegative");

    if (use == ConfigUse::Evaluate) {
        for (const auto& v : c.variants) {
            (void)Template::parse(v.template_source);
            require_file(v.logits, "variant logits");
            require_file(v.manifest, "variant manifest");
        }
    }
}

} // namespace npprompt
