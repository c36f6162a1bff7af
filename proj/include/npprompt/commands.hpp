#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "npprompt/backend.hpp"
#include "npprompt/config.hpp"
#include "npprompt/verbalizer.hpp"

namespace npprompt {

/// Loaded model export: vocabulary plus the space neighbors are searched in.
struct Engine {
    Vocabulary vocab;
    std::unique_ptr<EmbeddingSpace> space;
    SubwordSplits splits;
};

Engine load_engine(const RunConfig& config);
std::unique_ptr<ScoringBackend> make_backend(const RunConfig& config, std::size_t vocab_size);

/// Prints rank, quoted token and similarity (2 decimals) for one keyword.
void cmd_neighbors(const RunConfig& config, const std::string& keyword, std::size_t k,
                   std::ostream& out);

/// Writes the JSON dump of every configured class's neighbor lists.
void cmd_dump_verbalizer(const RunConfig& config, const std::filesystem::path& out_path);

/// Writes one JSON line per example; returns the number written.
std::size_t cmd_classify(const RunConfig& config, const std::filesystem::path& out_path);

/// Writes report.json, report.txt and predictions.jsonl into out_dir (plus
/// per-variant subdirectories and summary.json when variants are configured).
EvalReport cmd_eval(const RunConfig& config, const std::filesystem::path& out_dir);

/// Writes sweep.csv with one row per k in [k_min, k_max].
std::vector<SweepRow> cmd_sweep(const RunConfig& config, std::size_t k_min, std::size_t k_max,
                                const std::filesystem::path& out_dir);

void cmd_whiten_fit(const std::filesystem::path& contextual, const std::filesystem::path& out_path);

} // namespace npprompt
