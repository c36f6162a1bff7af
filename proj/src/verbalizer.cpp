#include "npprompt/verbalizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "npprompt/error.hpp"
#include "npprompt/logging.hpp"

namespace npprompt {

std::string_view to_string(SimilarityMetric metric) {
    switch (metric) {
    case SimilarityMetric::Cosine: return "cosine";
    case SimilarityMetric::NegEuclidean: return "neg_euclidean";
    case SimilarityMetric::Dot: return "dot";
    }
    return "cosine";
}

std::string_view to_string(WeightScheme scheme) {
    switch (scheme) {
    case WeightScheme::Softmax: return "softmax";
    case WeightScheme::Uniform: return "uniform";
    case WeightScheme::NormalizedSimilarity: return "normalized_similarity";
    }
    return "softmax";
}

SimilarityMetric parse_metric(std::string_view name) {
    if (name == "cosine") return SimilarityMetric::Cosine;
    if (name == "neg_euclidean") return SimilarityMetric::NegEuclidean;
    if (name == "dot") return SimilarityMetric::Dot;
    throw Error(ErrorCode::Config, "unknown similarity metric '" + std::string(name) + "'");
}

WeightScheme parse_weight_scheme(std::string_view name) {
    if (name == "softmax") return WeightScheme::Softmax;
    if (name == "uniform") return WeightScheme::Uniform;
    if (name == "normalized_similarity") return WeightScheme::NormalizedSimilarity;
    throw Error(ErrorCode::Config, "unknown weight scheme '" + std::string(name) + "'");
}

EmbeddingSpace::EmbeddingSpace(const Vocabulary& vocab, Tensor rows) : rows_(std::move(rows)) {
    if (rows_.rank() != 2 || rows_.rows() != vocab.size()) {
        throw Error(ErrorCode::VocabSizeMismatch,
                    "embedding matrix has " + std::to_string(rows_.rows()) +
                        " rows, vocabulary has " + std::to_string(vocab.size()));
    }
    norms_.resize(rows_.rows());
    eligible_.resize(rows_.rows());
    for (std::size_t i = 0; i < rows_.rows(); ++i) {
        double sq = 0.0;
        for (float x : rows_.row(i)) {
            if (!std::isfinite(x)) {
                throw Error(ErrorCode::NonFinite, "non-finite embedding in row " + std::to_string(i));
            }
            sq += static_cast<double>(x) * x;
        }
        norms_[i] = std::sqrt(sq);
        eligible_[i] = !vocab.entries()[i].special;
        eligible_count_ += eligible_[i] ? 1 : 0;
    }
}

SubwordSplits read_subword_splits(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    try {
        return nlohmann::json::parse(in).get<SubwordSplits>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedLine, path.string() + ": " + e.what());
    }
}

std::vector<TokenId> resolve_keyword(const std::string& keyword, const Vocabulary& vocab,
                                     const SubwordSplits& splits) {
    if (keyword.empty()) {
        throw Error(ErrorCode::UnresolvableLabel, "empty keyword");
    }
    if (!std::isspace(static_cast<unsigned char>(keyword.front()))) {
        if (auto id = vocab.find(" " + keyword)) {
            return {*id};
        }
    }
    if (auto id = vocab.find(keyword)) {
        return {*id};
    }
    if (auto it = splits.find(keyword); it != splits.end() && !it->second.empty()) {
        for (TokenId id : it->second) {
            if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) {
                throw Error(ErrorCode::UnresolvableLabel,
                            "split of '" + keyword + "' names unknown token " + std::to_string(id));
            }
        }
        return it->second;
    }
    throw Error(ErrorCode::UnresolvableLabel, "keyword '" + keyword + "' resolves to no tokens");
}

std::vector<double> embed_label(const std::string& keyword, const Vocabulary& vocab,
                                const EmbeddingSpace& space, const SubwordSplits& splits) {
    const auto ids = resolve_keyword(keyword, vocab, splits);
    std::vector<double> out(space.dim(), 0.0);
    for (TokenId id : ids) {
        const auto r = space.row(id);
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] += r[j];
        }
    }
    if (ids.size() > 1) {
        for (double& x : out) {
            x /= static_cast<double>(ids.size());
        }
    }
    return out;
}

namespace {

template <typename U, typename V>
double similarity_impl(std::span<const U> u, std::span<const V> v, SimilarityMetric metric) {
    if (u.size() != v.size()) {
        throw Error(ErrorCode::DimensionMismatch, "vectors of different dimension");
    }
    double dot = 0.0;
    double uu = 0.0;
    double vv = 0.0;
    double dist = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = u[i];
        const double b = v[i];
        dot += a * b;
        uu += a * a;
        vv += b * b;
        dist += (a - b) * (a - b);
    }
    switch (metric) {
    case SimilarityMetric::Dot:
        return dot;
    case SimilarityMetric::NegEuclidean:
        return -std::sqrt(dist);
    case SimilarityMetric::Cosine:
        if (uu == 0.0 || vv == 0.0) {
            throw Error(ErrorCode::DegenerateVector, "zero-norm vector under cosine similarity");
        }
        return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
    }
    return 0.0;
}

} // namespace

double similarity(std::span<const double> u, std::span<const double> v, SimilarityMetric metric) {
    return similarity_impl(u, v, metric);
}

double similarity(std::span<const double> u, std::span<const float> v, SimilarityMetric metric) {
    return similarity_impl(u, v, metric);
}

std::vector<RankedToken> topk_neighbors(std::span<const double> label, const EmbeddingSpace& space,
                                        std::size_t k, SimilarityMetric metric) {
    if (label.size() != space.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "label vector dimension differs from embeddings");
    }
    double label_norm = 0.0;
    for (double x : label) {
        label_norm += x * x;
    }
    label_norm = std::sqrt(label_norm);
    if (metric == SimilarityMetric::Cosine && label_norm == 0.0) {
        throw Error(ErrorCode::DegenerateVector, "zero-norm label vector under cosine similarity");
    }

    std::vector<RankedToken> candidates;
    candidates.reserve(space.eligible_count());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto id = static_cast<TokenId>(i);
        if (!space.eligible(id)) {
            continue;
        }
        // Zero rows have no direction; they are never cosine neighbors.
        if (metric == SimilarityMetric::Cosine && space.norm(id) == 0.0) {
            continue;
        }
        const auto r = space.row(id);
        double s = 0.0;
        switch (metric) {
        case SimilarityMetric::Cosine: {
            double dot = 0.0;
            for (std::size_t j = 0; j < r.size(); ++j) dot += label[j] * r[j];
            s = std::clamp(dot / (label_norm * space.norm(id)), -1.0, 1.0);
            break;
        }
        case SimilarityMetric::Dot: {
            for (std::size_t j = 0; j < r.size(); ++j) s += label[j] * r[j];
            break;
        }
        case SimilarityMetric::NegEuclidean: {
            double d = 0.0;
            for (std::size_t j = 0; j < r.size(); ++j) {
                const double diff = label[j] - r[j];
                d += diff * diff;
            }
            s = -std::sqrt(d);
            break;
        }
        }
        candidates.push_back({id, s});
    }

    if (k == 0 || k > candidates.size()) {
        throw Error(ErrorCode::InvalidK, "k=" + std::to_string(k) + " but only " +
                                             std::to_string(candidates.size()) +
                                             " eligible tokens");
    }
    const auto better = [](const RankedToken& a, const RankedToken& b) {
        if (a.similarity != b.similarity) {
            return a.similarity > b.similarity;
        }
        return a.token_id < b.token_id;
    };
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                      candidates.end(), better);
    candidates.resize(k);
    return candidates;
}

std::vector<double> compute_weights(std::span<const double> similarities, WeightScheme scheme) {
    if (similarities.empty()) {
        throw Error(ErrorCode::DegenerateWeights, "no similarities to weight");
    }
    const auto n = similarities.size();
    std::vector<double> w(n);
    switch (scheme) {
    case WeightScheme::Softmax: {
        const double top = *std::max_element(similarities.begin(), similarities.end());
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = std::exp(similarities[i] - top);
            total += w[i];
        }
        for (double& x : w) x /= total;
        break;
    }
    case WeightScheme::Uniform:
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
        break;
    case WeightScheme::NormalizedSimilarity: {
        double total = 0.0;
        for (double s : similarities) {
            if (s < 0.0) {
                throw Error(ErrorCode::DegenerateWeights,
                            "normalized_similarity needs nonnegative similarities");
            }
            total += s;
        }
        if (!(total > 0.0)) {
            throw Error(ErrorCode::DegenerateWeights,
                        "normalized_similarity needs a positive similarity sum");
        }
        for (std::size_t i = 0; i < n; ++i) w[i] = similarities[i] / total;
        break;
    }
    }
    return w;
}

Verbalizer build_verbalizer(const std::vector<LabelSpec>& labels, const Vocabulary& vocab,
                            const EmbeddingSpace& space, std::size_t k, SimilarityMetric metric,
                            WeightScheme scheme, const SubwordSplits& splits) {
    if (k == 0) {
        throw Error(ErrorCode::InvalidK, "k must be at least 1");
    }
    Verbalizer out;
    out.k = k;
    out.metric = metric;
    out.scheme = scheme;
    std::map<TokenId, std::set<std::size_t>> owners;

    for (std::size_t c = 0; c < labels.size(); ++c) {
        const auto& spec = labels[c];
        if (spec.keywords.empty()) {
            throw Error(ErrorCode::Config, "class '" + spec.class_name + "' has no keywords");
        }
        ClassEntries cls{spec.class_name, {}};
        for (const auto& keyword : spec.keywords) {
            const auto label_vec = embed_label(keyword, vocab, space, splits);
            const auto ranked = topk_neighbors(label_vec, space, k, metric);
            std::vector<double> sims;
            sims.reserve(ranked.size());
            for (const auto& r : ranked) sims.push_back(r.similarity);
            const auto weights = compute_weights(sims, scheme);

            VerbalizerEntry entry{keyword, {}};
            entry.neighbors.reserve(ranked.size());
            for (std::size_t i = 0; i < ranked.size(); ++i) {
                entry.neighbors.push_back({ranked[i].token_id, ranked[i].similarity, weights[i]});
                owners[ranked[i].token_id].insert(c);
            }
            cls.entries.push_back(std::move(entry));
        }
        out.classes.push_back(std::move(cls));
    }

    for (const auto& [id, classes] : owners) {
        if (classes.size() > 1) {
            out.shared_tokens.push_back(id);
        }
    }
    if (!out.shared_tokens.empty()) {
        std::string list;
        for (TokenId id : out.shared_tokens) {
            if (!list.empty()) list += ", ";
            list += std::to_string(id);
        }
        logger()->warn("label words shared across classes: {}", list);
    }
    return out;
}

nlohmann::ordered_json dump_verbalizer(const Verbalizer& verbalizer, const Vocabulary& vocab) {
    nlohmann::ordered_json root;
    root["k"] = verbalizer.k;
    root["metric"] = to_string(verbalizer.metric);
    root["weights"] = to_string(verbalizer.scheme);
    auto classes = nlohmann::ordered_json::array();
    for (const auto& cls : verbalizer.classes) {
        nlohmann::ordered_json c;
        c["class"] = cls.class_name;
        auto keywords = nlohmann::ordered_json::array();
        for (const auto& entry : cls.entries) {
            nlohmann::ordered_json e;
            e["keyword"] = entry.keyword;
            auto neighbors = nlohmann::ordered_json::array();
            for (const auto& n : entry.neighbors) {
                nlohmann::ordered_json row;
                row["token"] = vocab.at(n.token_id).token;
                row["id"] = n.token_id;
                row["similarity"] = n.similarity;
                row["weight"] = n.weight;
                neighbors.push_back(std::move(row));
            }
            e["neighbors"] = std::move(neighbors);
            keywords.push_back(std::move(e));
        }
        c["keywords"] = std::move(keywords);
        classes.push_back(std::move(c));
    }
    root["classes"] = std::move(classes);
    root["shared_tokens"] = verbalizer.shared_tokens;
    return root;
}

} // namespace npprompt
