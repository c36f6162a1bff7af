#include <bit>
#include <cmath>
#include <cstring>
#include <functional>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "fixture.hpp"
#include "npprompt/error.hpp"
#include "npprompt/tensorio.hpp"

using namespace npprompt;
using testing_support::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an npprompt::Error";
    return ErrorCode::Io;
}

void write_lines(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

} // namespace

TEST(Tensor, IdentityRoundTrip) {
    TempDir dir("tensor");
    const Tensor m({2, 2}, {1.0f, 0.0f, 0.0f, 1.0f});
    write_tensor(dir / "m.npt", m);
    const Tensor back = read_tensor(dir / "m.npt");
    EXPECT_EQ(back, m);
    EXPECT_EQ(back.shape(), (std::vector<std::size_t>{2, 2}));
}

TEST(Tensor, PayloadIsLittleEndianF32) {
    const auto bytes = encode_tensor(Tensor({1, 1}, {3.5f}));
    ASSERT_GE(bytes.size(), 4u);
    const std::vector<std::uint8_t> tail(bytes.end() - 4, bytes.end());
    EXPECT_EQ(tail, (std::vector<std::uint8_t>{0x00, 0x00, 0x60, 0x40}));
    EXPECT_EQ(std::memcmp(bytes.data(), "NPPT", 4), 0);
    EXPECT_EQ(bytes[4], 1);  // version, little endian
    EXPECT_EQ(bytes[5], 0);
}

TEST(Tensor, HeaderIsJsonWithDtypeAndShape) {
    const auto bytes = encode_tensor(Tensor({2, 3}, std::vector<float>(6, 0.5f)));
    const std::uint32_t len = bytes[8] | (bytes[9] << 8) | (bytes[10] << 16) | (bytes[11] << 24);
    const std::string header(bytes.begin() + 12, bytes.begin() + 12 + len);
    EXPECT_EQ(header, R"({"dtype":"f32","shape":[2,3]})");
    EXPECT_EQ(bytes.size(), 12 + len + 24);
}

TEST(Tensor, ShapeLengthDisagreement) {
    // declared [2,2] with only 12 payload bytes
    auto bytes = encode_tensor(Tensor({2, 2}, {1, 2, 3, 4}));
    bytes.resize(bytes.size() - 4);
    EXPECT_EQ(code_of([&] { decode_tensor(bytes); }), ErrorCode::LengthMismatch);
    auto longer = encode_tensor(Tensor({2, 2}, {1, 2, 3, 4}));
    longer.push_back(0);
    EXPECT_EQ(code_of([&] { decode_tensor(longer); }), ErrorCode::LengthMismatch);
}

TEST(Tensor, DistinctHeaderErrors) {
    const auto good = encode_tensor(Tensor::vector({1.0f, 2.0f}));

    auto magic = good;
    magic[0] = 'X';
    EXPECT_EQ(code_of([&] { decode_tensor(magic); }), ErrorCode::BadMagic);

    auto version = good;
    version[4] = 2;
    EXPECT_EQ(code_of([&] { decode_tensor(version); }), ErrorCode::VersionMismatch);

    const std::vector<std::uint8_t> stub(good.begin(), good.begin() + 14);
    EXPECT_EQ(code_of([&] { decode_tensor(stub); }), ErrorCode::Truncated);

    auto header = good;
    header[12] = '[';
    EXPECT_EQ(code_of([&] { decode_tensor(header); }), ErrorCode::MalformedHeader);
}

TEST(Tensor, RejectsNonFiniteOnWrite) {
    EXPECT_EQ(code_of([] { encode_tensor(Tensor::vector({1.0f, NAN})); }), ErrorCode::NonFinite);
}

TEST(Tensor, RandomRoundTripIsBitExact) {
    std::mt19937 rng(7);
    std::uniform_int_distribution<std::size_t> dim(1, 17);
    std::uniform_int_distribution<std::uint32_t> bits;
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<std::size_t> shape = trial % 2 ? std::vector<std::size_t>{dim(rng)}
                                                   : std::vector<std::size_t>{dim(rng), dim(rng)};
        std::size_t n = 1;
        for (auto s : shape) n *= s;
        std::vector<float> data(n);
        for (float& x : data) {
            do {
                x = std::bit_cast<float>(bits(rng));
            } while (!std::isfinite(x));
        }
        const Tensor t(shape, data);
        const Tensor back = decode_tensor(encode_tensor(t));
        ASSERT_EQ(back.shape(), t.shape());
        ASSERT_EQ(std::memcmp(back.data().data(), t.data().data(), 4 * n), 0);
    }
}

TEST(Vocab, KeepsLeadingSpaceTokensDistinct) {
    TempDir dir("vocab");
    write_lines(dir / "v.vocab.jsonl",
                "{\"id\":0,\"token\":\"a\",\"special\":false}\n{\"id\":1,\"token\":\" a\",\"special\":false}\n");
    const auto v = read_vocab(dir / "v.vocab.jsonl");
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v.find("a"), 0);
    EXPECT_EQ(v.find(" a"), 1);
}

TEST(Vocab, GapNamesMissingId) {
    TempDir dir("vocab");
    write_lines(dir / "v.vocab.jsonl",
                "{\"id\":0,\"token\":\"a\",\"special\":false}\n{\"id\":2,\"token\":\"b\",\"special\":false}\n");
    try {
        read_vocab(dir / "v.vocab.jsonl");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IdGap);
        EXPECT_NE(std::string(e.what()).find("id 1"), std::string::npos);
    }
}

TEST(Vocab, DuplicateAndMalformedLines) {
    TempDir dir("vocab");
    write_lines(dir / "dup.jsonl",
                "{\"id\":0,\"token\":\"a\",\"special\":false}\n{\"id\":0,\"token\":\"b\",\"special\":false}\n");
    EXPECT_EQ(code_of([&] { read_vocab(dir / "dup.jsonl"); }), ErrorCode::DuplicateId);

    write_lines(dir / "bad.jsonl", "{\"id\":0,\"token\":\"a\",\"special\":false}\n{oops\n");
    try {
        read_vocab(dir / "bad.jsonl");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedLine);
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
    }

    write_lines(dir / "special.jsonl", "{\"id\":0,\"token\":\"<s>\",\"special\":true}\n");
    EXPECT_EQ(code_of([&] { read_vocab(dir / "special.jsonl"); }), ErrorCode::EmptyVocabulary);
}

TEST(Vocab, ReadsFixtureWrittenByPythonExporter) {
    const auto v = read_vocab(testing_support::micro_dir() / "vocab.vocab.jsonl");
    EXPECT_EQ(v.size(), 10u);
    EXPECT_EQ(v.eligible_count(), 8u);
    EXPECT_TRUE(v.is_special(1));
    EXPECT_EQ(v.at(2).token, " sports");
}

TEST(LogitsBatch, LookupByExampleId) {
    TempDir dir("logits");
    write_logits_batch(dir / "l.npt", dir / "l.manifest.jsonl", Tensor({1, 4}, {0.5f, 1.5f, -2.0f, 3.0f}),
                       {"ex1"});
    const auto batch = read_logits_batch(dir / "l.npt", dir / "l.manifest.jsonl", 4);
    const auto row = batch.lookup("ex1");
    EXPECT_EQ(std::vector<float>(row.begin(), row.end()), (std::vector<float>{0.5f, 1.5f, -2.0f, 3.0f}));
    EXPECT_EQ(code_of([&] { batch.lookup("nope"); }), ErrorCode::MissingExample);
}

TEST(LogitsBatch, ShapeDisagreements) {
    TempDir dir("logits");
    write_tensor(dir / "l.npt", Tensor::matrix(3, 4));
    write_lines(dir / "m.jsonl", "{\"row\":0,\"id\":\"a\"}\n{\"row\":1,\"id\":\"b\"}\n");
    EXPECT_EQ(code_of([&] { read_logits_batch(dir / "l.npt", dir / "m.jsonl", 4); }),
              ErrorCode::RowCountMismatch);

    write_lines(dir / "m3.jsonl", "{\"row\":0,\"id\":\"a\"}\n{\"row\":1,\"id\":\"a\"}\n{\"row\":2,\"id\":\"c\"}\n");
    EXPECT_EQ(code_of([&] { read_logits_batch(dir / "l.npt", dir / "m3.jsonl", 4); }),
              ErrorCode::DuplicateId);
    EXPECT_EQ(code_of([&] { read_logits_batch(dir / "l.npt", dir / "m3.jsonl", 5); }),
              ErrorCode::VocabSizeMismatch);
}

TEST(Dataset, SingleAndPairRecords) {
    TempDir dir("data");
    write_lines(dir / "d.jsonl",
                "{\"id\":\"a\",\"text\":\"hello\",\"label\":1}\n"
                "{\"id\":\"b\",\"text_a\":\"x\",\"text_b\":\"y\"}\n"
                "{\"id\":\"c\",\"text\":\"q?\",\"label\":2,\"choices\":[\"u\",\"v\",\"w\"]}\n");
    const auto records = read_dataset(dir / "d.jsonl");
    ASSERT_EQ(records.size(), 3u);
    EXPECT_EQ(records[0].label, 1);
    EXPECT_TRUE(records[1].is_pair());
    EXPECT_FALSE(records[1].label.has_value());
    EXPECT_EQ(records[2].choices->size(), 3u);

    write_lines(dir / "both.jsonl", "{\"id\":\"a\",\"text\":\"x\",\"text_a\":\"y\"}\n");
    EXPECT_EQ(code_of([&] { read_dataset(dir / "both.jsonl"); }), ErrorCode::InvalidRecord);
    write_lines(dir / "range.jsonl", "{\"id\":\"a\",\"text\":\"x\",\"label\":3,\"choices\":[\"p\",\"q\"]}\n");
    EXPECT_EQ(code_of([&] { read_dataset(dir / "range.jsonl"); }), ErrorCode::InvalidRecord);
}
