#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "npprompt/tensorio.hpp"

namespace npprompt {

enum class SimilarityMetric { Cosine, NegEuclidean, Dot };
enum class WeightScheme { Softmax, Uniform, NormalizedSimilarity };

std::string_view to_string(SimilarityMetric metric);
std::string_view to_string(WeightScheme scheme);
SimilarityMetric parse_metric(std::string_view name);
WeightScheme parse_weight_scheme(std::string_view name);

/// A class and the label names that describe it. Several keywords are
/// used when one name carries little meaning on its own
/// (e.g. {"river", "lake", "mountain"}).
struct LabelSpec {
    std::string class_name;
    std::vector<std::string> keywords;
};

struct Neighbor {
    TokenId token_id = 0;
    double similarity = 0.0;
    double weight = 0.0;
};

struct VerbalizerEntry {
    std::string keyword;
    std::vector<Neighbor> neighbors;
};

struct ClassEntries {
    std::string class_name;
    std::vector<VerbalizerEntry> entries;
};

struct Verbalizer {
    std::size_t k = 0;
    SimilarityMetric metric = SimilarityMetric::Cosine;
    WeightScheme scheme = WeightScheme::Softmax;
    std::vector<ClassEntries> classes;
    /// Token ids appearing in the neighbor lists of more than one class.
    std::vector<TokenId> shared_tokens;
};

/// Vocabulary rows to search over: either the static input embeddings or
/// whitened contextual states. Row norms are cached for cosine scans.
class EmbeddingSpace {
public:
    EmbeddingSpace(const Vocabulary& vocab, Tensor rows);

    std::size_t size() const noexcept { return rows_.rows(); }
    std::size_t dim() const noexcept { return rows_.cols(); }
    std::span<const float> row(TokenId id) const { return rows_.row(static_cast<std::size_t>(id)); }
    double norm(TokenId id) const { return norms_[static_cast<std::size_t>(id)]; }
    bool eligible(TokenId id) const { return eligible_[static_cast<std::size_t>(id)]; }
    std::size_t eligible_count() const noexcept { return eligible_count_; }
    const Tensor& rows() const noexcept { return rows_; }

private:
    Tensor rows_;
    std::vector<double> norms_;
    std::vector<bool> eligible_;
    std::size_t eligible_count_ = 0;
};

/// Keyword -> token ids for names that are not single vocabulary entries.
using SubwordSplits = std::map<std::string, std::vector<TokenId>>;

SubwordSplits read_subword_splits(const std::filesystem::path& path);

/// Token ids for a keyword: the space-prefixed entry (" sports") when the
/// keyword has no leading whitespace and that entry exists, else the
/// verbatim entry, else the sidecar split.
std::vector<TokenId> resolve_keyword(const std::string& keyword, const Vocabulary& vocab,
                                     const SubwordSplits& splits = {});

/// Row of the resolved token, or the mean of the rows when the keyword
/// resolves to several subword tokens.
std::vector<double> embed_label(const std::string& keyword, const Vocabulary& vocab,
                                const EmbeddingSpace& space, const SubwordSplits& splits = {});

double similarity(std::span<const double> u, std::span<const double> v, SimilarityMetric metric);
double similarity(std::span<const double> u, std::span<const float> v, SimilarityMetric metric);

struct RankedToken {
    TokenId token_id = 0;
    double similarity = 0.0;

    bool operator==(const RankedToken&) const = default;
};

/// Exhaustive scan for the k eligible rows most similar to `label`.
/// Ordered by similarity descending, ties by smaller token id.
std::vector<RankedToken> topk_neighbors(std::span<const double> label, const EmbeddingSpace& space,
                                        std::size_t k, SimilarityMetric metric);

std::vector<double> compute_weights(std::span<const double> similarities, WeightScheme scheme);

Verbalizer build_verbalizer(const std::vector<LabelSpec>& labels, const Vocabulary& vocab,
                            const EmbeddingSpace& space, std::size_t k, SimilarityMetric metric,
                            WeightScheme scheme, const SubwordSplits& splits = {});

nlohmann::ordered_json dump_verbalizer(const Verbalizer& verbalizer, const Vocabulary& vocab);

} // namespace npprompt
