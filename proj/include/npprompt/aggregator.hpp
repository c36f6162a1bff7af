#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "npprompt/verbalizer.hpp"

namespace npprompt {

enum class ScoreMode { SumLogit, SumProb };

std::string_view to_string(ScoreMode mode);
ScoreMode parse_score_mode(std::string_view name);

/// Masked-position logits over the whole vocabulary.
using LogitVector = std::vector<float>;

/// Throws VocabSizeMismatch / NonFinite for unusable logits.
void validate_logits(std::span<const float> logits, std::size_t vocab_size);

/// log(sum(exp(logits))), used to turn logits into full-vocabulary probabilities.
double log_sum_exp(std::span<const float> logits);

/// Weighted sum over one keyword's neighbors of either the raw logits or
/// the full-vocabulary softmax probabilities.
double keyword_score(std::span<const float> logits, const VerbalizerEntry& entry, ScoreMode mode);

struct ClassScore {
    double score = 0.0;
    std::size_t keyword_index = 0;
};

/// Best keyword of a class; ties go to the earlier keyword.
ClassScore class_score(std::span<const float> logits, std::span<const VerbalizerEntry> entries,
                       ScoreMode mode);

struct PredictionResult {
    std::vector<double> class_scores;
    std::vector<std::string> winning_keyword;
    std::size_t predicted_class = 0;
};

/// Scores every class and takes the argmax over `candidates` (all classes
/// when absent). Ties go to the smaller class index.
PredictionResult predict(std::span<const float> logits, const Verbalizer& verbalizer,
                         ScoreMode mode,
                         std::optional<std::span<const std::size_t>> candidates = std::nullopt);

} // namespace npprompt
