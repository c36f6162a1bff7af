#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixture.hpp"
#include "oracle.hpp"
#include "npprompt/error.hpp"
#include "npprompt/verbalizer.hpp"
#include "npprompt/whitening.hpp"

using namespace npprompt;
using testing_support::plain_vocab;

namespace {

// Rows A=[1,0], B=[0.8,0.6], C=[0,1], D=[-1,0].
struct FourRows {
    Vocabulary vocab{{{0, " A", false}, {1, " B", false}, {2, " C", false}, {3, " D", false}}};
    EmbeddingSpace space{vocab, Tensor({4, 2}, {1, 0, 0.8f, 0.6f, 0, 1, -1, 0})};
};

oracle::Metric to_oracle(SimilarityMetric m) {
    switch (m) {
    case SimilarityMetric::Cosine: return oracle::Metric::Cosine;
    case SimilarityMetric::NegEuclidean: return oracle::Metric::NegEuclidean;
    case SimilarityMetric::Dot: return oracle::Metric::Dot;
    }
    return oracle::Metric::Cosine;
}

} // namespace

TEST(Similarity, HandComputedValues) {
    const std::vector<double> x{1, 0}, y{0.8, 0.6};
    EXPECT_NEAR(similarity(x, y, SimilarityMetric::Cosine), 0.8, 1e-12);
    EXPECT_DOUBLE_EQ(similarity(x, x, SimilarityMetric::NegEuclidean), 0.0);
    EXPECT_DOUBLE_EQ(similarity(std::vector<double>{2, 0}, std::vector<double>{3, 0}, SimilarityMetric::Dot), 6.0);
    const std::vector<double> z{0.3, -1.7, 2.2};
    EXPECT_NEAR(similarity(z, z, SimilarityMetric::Cosine), 1.0, 1e-12);
}

TEST(Similarity, ZeroVectorUnderCosine) {
    const std::vector<double> zero{0, 0}, x{1, 0};
    EXPECT_THROW(similarity(zero, x, SimilarityMetric::Cosine), Error);
    EXPECT_DOUBLE_EQ(similarity(zero, x, SimilarityMetric::Dot), 0.0);
}

TEST(Similarity, CosineIgnoresPositiveScaling) {
    std::mt19937 rng(11);
    std::normal_distribution<double> n(0, 1);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> u(8), v(8);
        for (auto& x : u) x = n(rng);
        for (auto& x : v) x = n(rng);
        const double base = similarity(u, v, SimilarityMetric::Cosine);
        for (double a : {1e-3, 7.0, 1e3}) {
            auto su = u;
            for (auto& x : su) x *= a;
            EXPECT_NEAR(similarity(su, v, SimilarityMetric::Cosine), base, 1e-6);
        }
    }
}

TEST(TopK, FourRowFixture) {
    FourRows f;
    const std::vector<double> label{1, 0};
    const auto got = topk_neighbors(label, f.space, 2, SimilarityMetric::Cosine);
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0].token_id, 0);
    EXPECT_NEAR(got[0].similarity, 1.0, 1e-12);
    EXPECT_EQ(got[1].token_id, 1);
    EXPECT_NEAR(got[1].similarity, 0.8, 1e-7);
}

TEST(TopK, TiesBreakTowardSmallerId) {
    // rows 5 and 9 both have cosine 0.5 with the label
    const auto vocab = plain_vocab(12);
    auto rows = Tensor::matrix(12, 2);
    for (std::size_t i = 0; i < 12; ++i) {
        rows.row(i)[0] = -1.0f;
        rows.row(i)[1] = -0.01f * static_cast<float>(i);
    }
    const float h = std::sqrt(3.0f) / 2.0f;
    rows.row(0)[0] = 1.0f, rows.row(0)[1] = 0.0f;
    rows.row(9)[0] = 0.5f, rows.row(9)[1] = h;
    rows.row(5)[0] = 0.5f, rows.row(5)[1] = h;
    const EmbeddingSpace space(vocab, rows);
    const auto got = topk_neighbors(std::vector<double>{1, 0}, space, 3, SimilarityMetric::Cosine);
    EXPECT_EQ(got[0].token_id, 0);
    EXPECT_EQ(got[1].token_id, 5);
    EXPECT_EQ(got[2].token_id, 9);
    EXPECT_EQ(got[1].similarity, got[2].similarity);
}

TEST(TopK, SpecialTokensNeverCandidates) {
    const auto vocab = plain_vocab(4, {0});
    const EmbeddingSpace space(vocab, Tensor({4, 2}, {1, 0, 0.8f, 0.6f, 0, 1, -1, 0}));
    const auto got = topk_neighbors(std::vector<double>{1, 0}, space, 3, SimilarityMetric::Cosine);
    for (const auto& r : got) EXPECT_NE(r.token_id, 0);
    EXPECT_THROW(topk_neighbors(std::vector<double>{1, 0}, space, 4, SimilarityMetric::Cosine), Error);
}

TEST(TopK, InvalidK) {
    FourRows f;
    const std::vector<double> label{1, 0};
    for (std::size_t k : {std::size_t{0}, std::size_t{5}}) {
        try {
            topk_neighbors(label, f.space, k, SimilarityMetric::Dot);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidK);
        }
    }
}

TEST(TopK, MatchesExhaustiveOracleOnRandomMatrices) {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        const auto rows = testing_support::random_matrix(rng, 200, 16);
        const auto vocab = plain_vocab(200, {0, 1});
        const EmbeddingSpace space(vocab, rows);
        const auto ref_rows = testing_support::to_rows(rows);
        std::vector<bool> special(200, false);
        special[0] = special[1] = true;
        std::normal_distribution<double> n(0, 1);
        std::vector<double> label(16);
        for (auto& x : label) x = n(rng);
        for (auto metric : {SimilarityMetric::Cosine, SimilarityMetric::NegEuclidean, SimilarityMetric::Dot}) {
            for (std::size_t k : {1, 5, 16}) {
                const auto got = topk_neighbors(label, space, k, metric);
                const auto want = oracle::topk(ref_rows, special, label, k, to_oracle(metric));
                ASSERT_EQ(got.size(), want.size());
                for (std::size_t i = 0; i < k; ++i) {
                    EXPECT_EQ(got[i].token_id, want[i].first);
                    EXPECT_NEAR(got[i].similarity, want[i].second, 1e-9);
                }
            }
        }
    }
}

TEST(TopK, KeywordRanksItselfFirst) {
    std::mt19937 rng(5);
    const auto rows = testing_support::random_matrix(rng, 50, 8);
    const auto vocab = plain_vocab(50);
    const EmbeddingSpace space(vocab, rows);
    for (std::size_t id : {3, 17, 42}) {
        const auto r = rows.row(id);
        const std::vector<double> label(r.begin(), r.end());
        const auto got = topk_neighbors(label, space, 1, SimilarityMetric::Cosine);
        EXPECT_EQ(got[0].token_id, static_cast<TokenId>(id));
        EXPECT_NEAR(got[0].similarity, 1.0, 1e-12);
    }
}

TEST(Weights, HandComputed) {
    const std::vector<double> same{0.3, 0.3};
    const auto half = compute_weights(same, WeightScheme::Softmax);
    EXPECT_NEAR(half[0], 0.5, 1e-12);
    EXPECT_NEAR(half[1], 0.5, 1e-12);

    const std::vector<double> s{1.0, 0.8};
    const auto w = compute_weights(s, WeightScheme::Softmax);
    EXPECT_NEAR(w[0], 0.549834, 1e-5);
    EXPECT_NEAR(w[1], 0.450166, 1e-5);

    const std::vector<double> four{0.9, 0.5, 0.4, 0.1};
    for (double x : compute_weights(four, WeightScheme::Uniform)) EXPECT_DOUBLE_EQ(x, 0.25);
    const auto norm = compute_weights(four, WeightScheme::NormalizedSimilarity);
    EXPECT_NEAR(norm[0], 0.9 / 1.9, 1e-12);
}

TEST(Weights, DegenerateNormalizedSimilarity) {
    const std::vector<double> zeros{0.0, 0.0};
    EXPECT_THROW(compute_weights(zeros, WeightScheme::NormalizedSimilarity), Error);
    const std::vector<double> negative{-0.5, -0.1};
    EXPECT_THROW(compute_weights(negative, WeightScheme::NormalizedSimilarity), Error);
    EXPECT_THROW(compute_weights(std::vector<double>{}, WeightScheme::Softmax), Error);
}

TEST(Weights, SoftmaxShiftInvariant) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> s(7);
        for (auto& x : s) x = u(rng);
        auto shifted = s;
        for (auto& x : shifted) x += 42.0;
        const auto a = compute_weights(s, WeightScheme::Softmax);
        const auto b = compute_weights(shifted, WeightScheme::Softmax);
        for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
    }
}

TEST(Keywords, Resolution) {
    const Vocabulary vocab({{0, "sports", false}, {1, " sports", false}, {2, "ball", false},
                            {3, "foot", false}, {4, "<s>", true}});
    EXPECT_EQ(resolve_keyword("sports", vocab), std::vector<TokenId>{1});
    EXPECT_EQ(resolve_keyword(" sports", vocab), std::vector<TokenId>{1});
    EXPECT_EQ(resolve_keyword("ball", vocab), std::vector<TokenId>{2});
    SubwordSplits splits{{"football", {3, 2}}};
    EXPECT_EQ(resolve_keyword("football", vocab, splits), (std::vector<TokenId>{3, 2}));
    try {
        resolve_keyword("", vocab);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnresolvableLabel);
    }
    try {
        resolve_keyword("tennis", vocab);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("tennis"), std::string::npos);
    }
}

TEST(Keywords, EmbedLabelAveragesSubwords) {
    const auto vocab = plain_vocab(8);
    auto rows = Tensor::matrix(8, 2);
    rows.row(3)[0] = 1.0f, rows.row(3)[1] = 2.0f;
    rows.row(7)[0] = 3.0f, rows.row(7)[1] = -2.0f;
    const EmbeddingSpace space(vocab, rows);
    EXPECT_EQ(embed_label("t3", vocab, space), (std::vector<double>{1.0, 2.0}));
    SubwordSplits splits{{"pair", {3, 7}}};
    EXPECT_EQ(embed_label("pair", vocab, space, splits), (std::vector<double>{2.0, 0.0}));
}

TEST(Verbalizer, TwoClassesOnFourRows) {
    FourRows f;
    const std::vector<LabelSpec> labels{{"left", {"A"}}, {"up", {"C"}}};
    const auto v = build_verbalizer(labels, f.vocab, f.space, 2, SimilarityMetric::Cosine, WeightScheme::Softmax);
    ASSERT_EQ(v.classes.size(), 2u);
    for (const auto& cls : v.classes) {
        ASSERT_EQ(cls.entries.size(), 1u);
        ASSERT_EQ(cls.entries[0].neighbors.size(), 2u);
        double total = 0;
        for (const auto& n : cls.entries[0].neighbors) total += n.weight;
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
    const auto& left = v.classes[0].entries[0].neighbors;
    EXPECT_EQ(left[0].token_id, 0);
    EXPECT_EQ(left[1].token_id, 1);
    EXPECT_NEAR(left[0].weight, 0.549834, 1e-5);
    // C=[0,1]: itself, then B (0.6)
    EXPECT_EQ(v.classes[1].entries[0].neighbors[1].token_id, 1);
    EXPECT_EQ(v.shared_tokens, std::vector<TokenId>{1});
}

TEST(Verbalizer, MultiKeywordClassAndDump) {
    const auto vocab = read_vocab(testing_support::micro_dir() / "vocab.vocab.jsonl");
    const EmbeddingSpace space(vocab, read_tensor(testing_support::micro_dir() / "embeddings.npt"));
    const std::vector<LabelSpec> labels{{"nature", {"river", "lake", "mountain"}}};
    const auto v = build_verbalizer(labels, vocab, space, 3, SimilarityMetric::Cosine, WeightScheme::Softmax);
    ASSERT_EQ(v.classes[0].entries.size(), 3u);
    EXPECT_EQ(v.classes[0].entries[2].keyword, "mountain");

    const auto dump = dump_verbalizer(v, vocab);
    const auto& first = dump["classes"][0]["keywords"][0]["neighbors"][0];
    EXPECT_EQ(first["token"], " river");
    EXPECT_EQ(first["id"], 6);
    EXPECT_NEAR(first["similarity"].get<double>(), 1.0, 1e-12);

    EXPECT_THROW(build_verbalizer(labels, vocab, space, 0, SimilarityMetric::Cosine, WeightScheme::Softmax), Error);
}

TEST(Whitening, OneDimensionalHandExample) {
    const auto w = fit_whitening(Tensor({2, 1}, {0.0f, 2.0f}));
    EXPECT_NEAR(w.mean[0], 1.0, 1e-12);
    EXPECT_NEAR(w.transform[0], 1.0, 1e-12);
    EXPECT_NEAR(whiten(std::vector<double>{0.0}, w)[0], -1.0, 1e-12);
    EXPECT_NEAR(whiten(std::vector<double>{2.0}, w)[0], 1.0, 1e-12);
}

TEST(Whitening, Errors) {
    EXPECT_THROW(fit_whitening(Tensor({1, 3}, {1, 2, 3})), Error);
    WhiteningTransform w{{0, 0, 0}, std::vector<double>(9, 0.0)};
    try {
        whiten(std::vector<double>{1, 2}, w);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
    const std::vector<double> at_mean{0, 0, 0};
    for (double x : whiten(at_mean, w)) EXPECT_EQ(x, 0.0);
}

TEST(Whitening, AlreadyWhiteSampleGivesNearIdentity) {
    // rows are +-1 along each axis: mean 0, covariance exactly I
    auto t = Tensor::matrix(6, 3);
    for (std::size_t i = 0; i < 3; ++i) {
        t.row(2 * i)[i] = std::sqrt(3.0f);
        t.row(2 * i + 1)[i] = -std::sqrt(3.0f);
    }
    const auto w = fit_whitening(t);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(w.mean[i], 0.0, 1e-7);
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_NEAR(std::abs(w.transform[i * 3 + j]), i == j ? 1.0 : 0.0, 1e-6);
        }
    }
}

TEST(Whitening, RankDeficientSampleSurvives) {
    // second column duplicates the first
    auto t = Tensor::matrix(10, 2);
    for (std::size_t i = 0; i < 10; ++i) t.row(i)[0] = t.row(i)[1] = static_cast<float>(i);
    const auto w = fit_whitening(t);
    for (double x : w.transform) EXPECT_TRUE(std::isfinite(x));
}

TEST(Whitening, NearWhiteRandomSampleGivesOrthogonalTransform) {
    // Eigenvectors of a near-identity covariance are arbitrary, so the
    // transform is close to a rotation rather than to I itself.
    std::mt19937 rng(99);
    const auto t = testing_support::random_matrix(rng, 20000, 4);
    const auto w = fit_whitening(t);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            double dot = 0;
            for (std::size_t c = 0; c < 4; ++c) dot += w.transform[i * 4 + c] * w.transform[j * 4 + c];
            EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 0.05);
        }
    }
}

TEST(Whitening, PersistedTransformRoundTrips) {
    testing_support::TempDir dir("whiten");
    std::mt19937 rng(4);
    const auto w = fit_whitening(testing_support::random_matrix(rng, 40, 3));
    write_whitening(dir / "w.npt", w);
    const auto back = read_whitening(dir / "w.npt");
    ASSERT_EQ(back.dim(), 3u);
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(back.transform[i], w.transform[i], 1e-6);
}
