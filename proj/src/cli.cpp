#include "npprompt/cli.hpp"

#include <ostream>

#include <CLI11.hpp>

#include "npprompt/commands.hpp"
#include "npprompt/error.hpp"

namespace npprompt {

namespace {

constexpr int kConfigExit = static_cast<int>(ErrorCategory::Config);
constexpr int kDataExit = static_cast<int>(ErrorCategory::Data);

struct CommonFlags {
    std::string config;
    ConfigOverrides overrides;
    std::string out;
};

void add_common(CLI::App& cmd, CommonFlags& flags) {
    cmd.add_option("--config", flags.config, "Run configuration (JSON)")->required();
    cmd.add_option("--k", flags.overrides.k, "Neighborhood size");
    cmd.add_option("--metric", flags.overrides.metric, "cosine | neg_euclidean | dot");
    cmd.add_option("--weights", flags.overrides.weights, "softmax | uniform | normalized_similarity");
    cmd.add_option("--mode", flags.overrides.mode, "sum_logit | sum_prob");
    cmd.add_option("--out", flags.out, "Output file or directory");
    cmd.add_option("--parallel", flags.overrides.parallel, "Concurrent scoring requests");
    cmd.add_option("--backend-url", flags.overrides.backend_url, "HTTP scoring backend");
}

RunConfig resolve_config(const CommonFlags& flags) {
    RunConfig config = load_run_config(flags.config);
    ConfigOverrides o = flags.overrides;
    if (!flags.out.empty()) o.out = flags.out;
    apply_overrides(config, o);
    return config;
}

std::filesystem::path require_out(const RunConfig& config) {
    if (!config.out) {
        throw Error(ErrorCode::Config, "no output path (--out or \"out\" in config)");
    }
    return *config.out;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Zero-shot text classification with nearest-neighbor verbalizers", "npprompt"};
    app.require_subcommand(1);

    CommonFlags neighbors_flags;
    std::string keyword;
    auto* neighbors = app.add_subcommand("neighbors", "List the nearest vocabulary tokens of a keyword");
    add_common(*neighbors, neighbors_flags);
    neighbors->add_option("--keyword", keyword, "Label name to look up");

    CommonFlags classify_flags;
    auto* classify = app.add_subcommand("classify", "Predict every dataset example");
    add_common(*classify, classify_flags);

    CommonFlags eval_flags;
    auto* eval = app.add_subcommand("eval", "Evaluate against gold labels");
    add_common(*eval, eval_flags);

    CommonFlags sweep_flags;
    std::size_t k_min = 1;
    std::size_t k_max = 20;
    auto* sweep = app.add_subcommand("sweep", "Evaluate over a range of neighborhood sizes");
    add_common(*sweep, sweep_flags);
    sweep->add_option("--k-min", k_min, "Smallest k")->capture_default_str();
    sweep->add_option("--k-max", k_max, "Largest k")->capture_default_str();

    std::string contextual;
    std::string whiten_out;
    auto* whiten_fit = app.add_subcommand("whiten-fit", "Fit a whitening transform on contextual states");
    whiten_fit->add_option("--contextual", contextual, "Contextual tensor [|V|, d]")->required();
    whiten_fit->add_option("--out", whiten_out, "Output transform tensor")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigExit;
    }

    try {
        if (neighbors->parsed()) {
            const auto config = resolve_config(neighbors_flags);
            if (keyword.empty() && !config.out) {
                throw Error(ErrorCode::Config, "neighbors needs --keyword or --out");
            }
            if (config.out) {
                cmd_dump_verbalizer(config, *config.out);
            }
            if (!keyword.empty()) {
                cmd_neighbors(config, keyword, config.k, out);
            }
        } else if (classify->parsed()) {
            const auto config = resolve_config(classify_flags);
            const auto n = cmd_classify(config, require_out(config));
            err << "wrote " << n << " predictions\n";
        } else if (eval->parsed()) {
            const auto config = resolve_config(eval_flags);
            const auto report = cmd_eval(config, require_out(config));
            out << report_to_text(report);
        } else if (sweep->parsed()) {
            const auto config = resolve_config(sweep_flags);
            const auto rows = cmd_sweep(config, k_min, k_max, require_out(config));
            out << sweep_to_csv(rows);
        } else if (whiten_fit->parsed()) {
            cmd_whiten_fit(contextual, whiten_out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(category(e.code()));
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDataExit;
    }
    return 0;
}

} // namespace npprompt
