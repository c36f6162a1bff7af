#include "npprompt/aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "npprompt/error.hpp"

namespace npprompt {

std::string_view to_string(ScoreMode mode) {
    return mode == ScoreMode::SumLogit ? "sum_logit" : "sum_prob";
}

ScoreMode parse_score_mode(std::string_view name) {
    if (name == "sum_logit") return ScoreMode::SumLogit;
    if (name == "sum_prob") return ScoreMode::SumProb;
    throw Error(ErrorCode::Config, "unknown score mode '" + std::string(name) + "'");
}

void validate_logits(std::span<const float> logits, std::size_t vocab_size) {
    if (logits.size() != vocab_size) {
        throw Error(ErrorCode::VocabSizeMismatch, "logit vector has length " +
                                                      std::to_string(logits.size()) +
                                                      ", vocabulary has " +
                                                      std::to_string(vocab_size));
    }
    for (float v : logits) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::NonFinite, "non-finite logit");
        }
    }
}

double log_sum_exp(std::span<const float> logits) {
    if (logits.empty()) {
        return -std::numeric_limits<double>::infinity();
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (float v : logits) {
        total += std::exp(static_cast<double>(v) - top);
    }
    return top + std::log(total);
}

namespace {

double keyword_score_with(std::span<const float> logits, const VerbalizerEntry& entry,
                          ScoreMode mode, double lse) {
    double score = 0.0;
    for (const auto& n : entry.neighbors) {
        if (n.token_id < 0 || static_cast<std::size_t>(n.token_id) >= logits.size()) {
            throw Error(ErrorCode::CorruptVerbalizer,
                        "token id " + std::to_string(n.token_id) + " outside the logit vector");
        }
        const double logit = logits[static_cast<std::size_t>(n.token_id)];
        score += n.weight * (mode == ScoreMode::SumLogit ? logit : std::exp(logit - lse));
    }
    return score;
}

ClassScore class_score_with(std::span<const float> logits, std::span<const VerbalizerEntry> entries,
                            ScoreMode mode, double lse) {
    if (entries.empty()) {
        throw Error(ErrorCode::CorruptVerbalizer, "class without keyword entries");
    }
    ClassScore best{keyword_score_with(logits, entries[0], mode, lse), 0};
    for (std::size_t i = 1; i < entries.size(); ++i) {
        const double s = keyword_score_with(logits, entries[i], mode, lse);
        if (s > best.score) {
            best = {s, i};
        }
    }
    return best;
}

} // namespace

double keyword_score(std::span<const float> logits, const VerbalizerEntry& entry, ScoreMode mode) {
    const double lse = mode == ScoreMode::SumProb ? log_sum_exp(logits) : 0.0;
    return keyword_score_with(logits, entry, mode, lse);
}

ClassScore class_score(std::span<const float> logits, std::span<const VerbalizerEntry> entries,
                       ScoreMode mode) {
    const double lse = mode == ScoreMode::SumProb ? log_sum_exp(logits) : 0.0;
    return class_score_with(logits, entries, mode, lse);
}

PredictionResult predict(std::span<const float> logits, const Verbalizer& verbalizer,
                         ScoreMode mode, std::optional<std::span<const std::size_t>> candidates) {
    const auto n_classes = verbalizer.classes.size();
    if (n_classes == 0) {
        throw Error(ErrorCode::CorruptVerbalizer, "verbalizer has no classes");
    }
    if (candidates) {
        if (candidates->empty()) {
            throw Error(ErrorCode::EmptyCandidates, "empty candidate class subset");
        }
        for (std::size_t c : *candidates) {
            if (c >= n_classes) {
                throw Error(ErrorCode::EmptyCandidates,
                            "candidate class " + std::to_string(c) + " outside the class set");
            }
        }
    }

    const double lse = mode == ScoreMode::SumProb ? log_sum_exp(logits) : 0.0;
    PredictionResult result;
    result.class_scores.reserve(n_classes);
    result.winning_keyword.reserve(n_classes);
    for (const auto& cls : verbalizer.classes) {
        const auto cs = class_score_with(logits, cls.entries, mode, lse);
        result.class_scores.push_back(cs.score);
        result.winning_keyword.push_back(cls.entries[cs.keyword_index].keyword);
    }

    auto beats = [&](std::size_t a, std::size_t b) {
        return result.class_scores[a] > result.class_scores[b] ||
               (result.class_scores[a] == result.class_scores[b] && a < b);
    };
    if (candidates) {
        std::size_t best = (*candidates)[0];
        for (std::size_t c : *candidates) {
            if (beats(c, best)) best = c;
        }
        result.predicted_class = best;
    } else {
        std::size_t best = 0;
        for (std::size_t c = 1; c < n_classes; ++c) {
            if (beats(c, best)) best = c;
        }
        result.predicted_class = best;
    }
    return result;
}

} // namespace npprompt
