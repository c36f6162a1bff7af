#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace npprompt {

using TokenId = std::int64_t;

/// Dense row-major f32 tensor of rank 1 or 2.
///
/// Rank-1 tensors behave as a single row for row access, so a vector of
/// length n reports rows() == 1 and cols() == n.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<std::size_t> shape, std::vector<float> data);

    static Tensor matrix(std::size_t rows, std::size_t cols);
    static Tensor vector(std::vector<float> values);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t rows() const noexcept;
    std::size_t cols() const noexcept;
    std::size_t size() const noexcept { return data_.size(); }

    std::span<const float> row(std::size_t i) const;
    std::span<float> row(std::size_t i);

    const std::vector<float>& data() const noexcept { return data_; }
    std::vector<float>& data() noexcept { return data_; }

    bool operator==(const Tensor&) const = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<float> data_;
};

inline constexpr char kTensorMagic[4] = {'N', 'P', 'P', 'T'};
inline constexpr std::uint32_t kTensorVersion = 1;

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor(const std::filesystem::path& path);

struct VocabEntry {
    TokenId id = 0;
    std::string token;
    bool special = false;
};

/// Token table with ids 0..n-1. Tokens are kept verbatim, so " sports"
/// and "sports" are distinct entries.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<VocabEntry> entries);

    std::size_t size() const noexcept { return entries_.size(); }
    const VocabEntry& at(TokenId id) const;
    const std::vector<VocabEntry>& entries() const noexcept { return entries_; }
    std::optional<TokenId> find(const std::string& token) const;
    bool is_special(TokenId id) const { return at(id).special; }
    std::size_t eligible_count() const noexcept { return eligible_; }

private:
    std::vector<VocabEntry> entries_;
    std::unordered_map<std::string, TokenId> by_token_;
    std::size_t eligible_ = 0;
};

Vocabulary read_vocab(const std::filesystem::path& path);
void write_vocab(const std::filesystem::path& path, const Vocabulary& vocab);

/// Per-example masked-position logits keyed by example id.
class LogitsBatch {
public:
    LogitsBatch(Tensor rows, std::vector<std::string> ids);

    std::size_t size() const noexcept { return ids_.size(); }
    std::size_t width() const noexcept { return rows_.cols(); }
    bool contains(const std::string& example_id) const;
    std::span<const float> lookup(const std::string& example_id) const;
    const std::vector<std::string>& ids() const noexcept { return ids_; }

private:
    Tensor rows_;
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Loads a [n, |V|] logits tensor plus its row manifest. `vocab_size` is
/// the size of the engine's vocabulary; a width disagreement fails.
LogitsBatch read_logits_batch(const std::filesystem::path& tensor_path,
                              const std::filesystem::path& manifest_path, std::size_t vocab_size);
void write_logits_batch(const std::filesystem::path& tensor_path,
                        const std::filesystem::path& manifest_path, const Tensor& rows,
                        const std::vector<std::string>& ids);

struct DatasetRecord {
    std::string id;
    std::optional<std::string> text;
    std::optional<std::string> text_a;
    std::optional<std::string> text_b;
    std::optional<int> label;
    std::optional<std::vector<std::string>> choices;

    bool is_pair() const noexcept { return text_a.has_value(); }
};

std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records);

} // namespace npprompt
