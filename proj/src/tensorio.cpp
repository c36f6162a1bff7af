#include "npprompt/tensorio.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>

#include <json.hpp>

#include "npprompt/error.hpp"

namespace npprompt {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
    }
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
    }
    return v;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = {}) {
    std::ofstream out(path, std::ios::out | std::ios::trunc | mode);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write " + path.string());
    }
    return out;
}

// Calls fn(line_number, parsed_json) for each non-blank line.
template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        json value;
        try {
            value = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::MalformedLine,
                        path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        try {
            fn(line_no, value);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::MalformedLine,
                        path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty() || shape_.size() > 2) {
        throw Error(ErrorCode::MalformedHeader, "tensor rank must be 1 or 2");
    }
    if (product(shape_) != data_.size()) {
        throw Error(ErrorCode::LengthMismatch, "tensor data does not match its shape");
    }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols) {
    return Tensor({rows, cols}, std::vector<float>(rows * cols, 0.0f));
}

Tensor Tensor::vector(std::vector<float> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

std::size_t Tensor::rows() const noexcept {
    if (shape_.empty()) {
        return 0;
    }
    return shape_.size() == 1 ? 1 : shape_[0];
}

std::size_t Tensor::cols() const noexcept {
    if (shape_.empty()) {
        return 0;
    }
    return shape_.back();
}

std::span<const float> Tensor::row(std::size_t i) const {
    if (i >= rows()) {
        throw std::out_of_range("tensor row out of range");
    }
    return {data_.data() + i * cols(), cols()};
}

std::span<float> Tensor::row(std::size_t i) {
    if (i >= rows()) {
        throw std::out_of_range("tensor row out of range");
    }
    return {data_.data() + i * cols(), cols()};
}

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor) {
    if (tensor.rank() == 0 || tensor.rank() > 2) {
        throw Error(ErrorCode::MalformedHeader, "tensor rank must be 1 or 2");
    }
    for (float v : tensor.data()) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::NonFinite, "refusing to write a non-finite value");
        }
    }
    ordered_json header;
    header["dtype"] = "f32";
    header["shape"] = tensor.shape();
    const std::string header_text = header.dump();

    std::vector<std::uint8_t> out;
    out.reserve(12 + header_text.size() + 4 * tensor.size());
    out.insert(out.end(), std::begin(kTensorMagic), std::end(kTensorMagic));
    put_u32(out, kTensorVersion);
    put_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out.insert(out.end(), header_text.begin(), header_text.end());
    for (float v : tensor.data()) {
        put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) {
        throw Error(ErrorCode::Truncated, "file shorter than magic");
    }
    if (!std::equal(std::begin(kTensorMagic), std::end(kTensorMagic), bytes.begin(),
                    [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
        throw Error(ErrorCode::BadMagic, "expected NPPT magic");
    }
    if (bytes.size() < 12) {
        throw Error(ErrorCode::Truncated, "file shorter than fixed header");
    }
    const std::uint32_t version = get_u32(bytes, 4);
    if (version != kTensorVersion) {
        throw Error(ErrorCode::VersionMismatch, "unsupported version " + std::to_string(version));
    }
    const std::uint32_t header_len = get_u32(bytes, 8);
    if (bytes.size() - 12 < header_len) {
        throw Error(ErrorCode::Truncated, "file shorter than declared header length");
    }

    std::vector<std::size_t> shape;
    try {
        const auto header = json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
        if (header.at("dtype").get<std::string>() != "f32") {
            throw Error(ErrorCode::MalformedHeader, "unsupported dtype");
        }
        shape = header.at("shape").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedHeader, e.what());
    }
    if (shape.empty() || shape.size() > 2) {
        throw Error(ErrorCode::MalformedHeader, "tensor rank must be 1 or 2");
    }

    const std::size_t payload = bytes.size() - 12 - header_len;
    const std::size_t count = product(shape);
    if (payload != 4 * count) {
        throw Error(ErrorCode::LengthMismatch,
                    "payload has " + std::to_string(payload) + " bytes, shape needs " +
                        std::to_string(4 * count));
    }
    std::vector<float> data(count);
    const std::size_t base = 12 + header_len;
    for (std::size_t i = 0; i < count; ++i) {
        data[i] = std::bit_cast<float>(get_u32(bytes, base + 4 * i));
    }
    return Tensor(std::move(shape), std::move(data));
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor) {
    const auto bytes = encode_tensor(tensor);
    auto out = open_out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorCode::Io, "short write to " + path.string());
    }
}

Tensor read_tensor(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    try {
        return decode_tensor(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary(std::vector<VocabEntry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(),
              [](const VocabEntry& a, const VocabEntry& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (i > 0 && entries_[i - 1].id == e.id) {
            throw Error(ErrorCode::DuplicateId, "duplicate token id " + std::to_string(e.id));
        }
        if (e.id != static_cast<TokenId>(i)) {
            throw Error(ErrorCode::IdGap, "missing token id " + std::to_string(i));
        }
        // First occurrence wins if an exporter emits the same surface twice.
        by_token_.emplace(e.token, e.id);
        if (!e.special) {
            ++eligible_;
        }
    }
    if (eligible_ == 0) {
        throw Error(ErrorCode::EmptyVocabulary, "vocabulary has no non-special entries");
    }
}

const VocabEntry& Vocabulary::at(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= entries_.size()) {
        throw Error(ErrorCode::CorruptVerbalizer, "token id " + std::to_string(id) + " out of range");
    }
    return entries_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(const std::string& token) const {
    if (auto it = by_token_.find(token); it != by_token_.end()) {
        return it->second;
    }
    return std::nullopt;
}

Vocabulary read_vocab(const std::filesystem::path& path) {
    std::vector<VocabEntry> entries;
    std::set<TokenId> seen;
    for_each_json_line(path, [&](std::size_t line_no, const json& j) {
        VocabEntry e;
        e.id = j.at("id").get<TokenId>();
        e.token = j.at("token").get<std::string>();
        e.special = j.value("special", false);
        if (!seen.insert(e.id).second) {
            throw Error(ErrorCode::DuplicateId, path.string() + ":" + std::to_string(line_no) +
                                                    ": duplicate token id " + std::to_string(e.id));
        }
        entries.push_back(std::move(e));
    });
    return Vocabulary(std::move(entries));
}

void write_vocab(const std::filesystem::path& path, const Vocabulary& vocab) {
    auto out = open_out(path);
    for (const auto& e : vocab.entries()) {
        ordered_json j;
        j["id"] = e.id;
        j["token"] = e.token;
        j["special"] = e.special;
        out << j.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------

LogitsBatch::LogitsBatch(Tensor rows, std::vector<std::string> ids)
    : rows_(std::move(rows)), ids_(std::move(ids)) {
    if (rows_.rank() != 2) {
        throw Error(ErrorCode::MalformedHeader, "logits batch must be a rank-2 tensor");
    }
    if (rows_.rows() != ids_.size()) {
        throw Error(ErrorCode::RowCountMismatch,
                    "manifest lists " + std::to_string(ids_.size()) + " examples, tensor has " +
                        std::to_string(rows_.rows()) + " rows");
    }
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!index_.emplace(ids_[i], i).second) {
            throw Error(ErrorCode::DuplicateId, "duplicate example id " + ids_[i]);
        }
    }
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        for (float v : rows_.row(i)) {
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::NonFinite, "non-finite logit", ids_[i]);
            }
        }
    }
}

bool LogitsBatch::contains(const std::string& example_id) const {
    return index_.contains(example_id);
}

std::span<const float> LogitsBatch::lookup(const std::string& example_id) const {
    auto it = index_.find(example_id);
    if (it == index_.end()) {
        throw Error(ErrorCode::MissingExample, "no logits row", example_id);
    }
    return rows_.row(it->second);
}

LogitsBatch read_logits_batch(const std::filesystem::path& tensor_path,
                              const std::filesystem::path& manifest_path, std::size_t vocab_size) {
    Tensor rows = read_tensor(tensor_path);
    if (rows.rank() != 2) {
        throw Error(ErrorCode::MalformedHeader, tensor_path.string() + ": logits must be rank 2");
    }
    if (rows.cols() != vocab_size) {
        throw Error(ErrorCode::VocabSizeMismatch,
                    tensor_path.string() + ": width " + std::to_string(rows.cols()) +
                        " but vocabulary has " + std::to_string(vocab_size) + " entries");
    }

    std::vector<std::optional<std::string>> by_row;
    for_each_json_line(manifest_path, [&](std::size_t line_no, const json& j) {
        const auto row = j.at("row").get<std::size_t>();
        auto id = j.at("id").get<std::string>();
        if (row >= by_row.size()) {
            by_row.resize(row + 1);
        }
        if (by_row[row]) {
            throw Error(ErrorCode::MalformedLine, manifest_path.string() + ":" +
                                                      std::to_string(line_no) + ": row " +
                                                      std::to_string(row) + " listed twice");
        }
        by_row[row] = std::move(id);
    });
    if (by_row.size() != rows.rows()) {
        throw Error(ErrorCode::RowCountMismatch,
                    manifest_path.string() + " maps " + std::to_string(by_row.size()) +
                        " rows, tensor has " + std::to_string(rows.rows()));
    }
    std::vector<std::string> ids;
    ids.reserve(by_row.size());
    for (std::size_t i = 0; i < by_row.size(); ++i) {
        if (!by_row[i]) {
            throw Error(ErrorCode::RowCountMismatch,
                        manifest_path.string() + ": no entry for row " + std::to_string(i));
        }
        ids.push_back(std::move(*by_row[i]));
    }
    return LogitsBatch(std::move(rows), std::move(ids));
}

void write_logits_batch(const std::filesystem::path& tensor_path,
                        const std::filesystem::path& manifest_path, const Tensor& rows,
                        const std::vector<std::string>& ids) {
    if (rows.rank() != 2 || rows.rows() != ids.size()) {
        throw Error(ErrorCode::RowCountMismatch, "logits rows and ids disagree");
    }
    write_tensor(tensor_path, rows);
    auto out = open_out(manifest_path);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        ordered_json j;
        j["row"] = i;
        j["id"] = ids[i];
        out << j.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------

std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path) {
    std::vector<DatasetRecord> records;
    std::set<std::string> seen;
    for_each_json_line(path, [&](std::size_t line_no, const json& j) {
        const auto where = path.string() + ":" + std::to_string(line_no);
        DatasetRecord r;
        r.id = j.contains("id") ? j.at("id").get<std::string>() : std::to_string(records.size());
        if (j.contains("text")) {
            r.text = j.at("text").get<std::string>();
        }
        if (j.contains("text_a")) {
            r.text_a = j.at("text_a").get<std::string>();
        }
        if (j.contains("text_b")) {
            r.text_b = j.at("text_b").get<std::string>();
        }
        if (j.contains("label") && !j.at("label").is_null()) {
            r.label = j.at("label").get<int>();
        }
        if (j.contains("choices") && !j.at("choices").is_null()) {
            r.choices = j.at("choices").get<std::vector<std::string>>();
        }

        if (r.text.has_value() == r.text_a.has_value()) {
            throw Error(ErrorCode::InvalidRecord, where + ": exactly one of text or text_a required");
        }
        if (r.text_b && !r.text_a) {
            throw Error(ErrorCode::InvalidRecord, where + ": text_b without text_a");
        }
        if (r.choices && r.choices->empty()) {
            throw Error(ErrorCode::InvalidRecord, where + ": empty choices");
        }
        if (r.label && *r.label < 0) {
            throw Error(ErrorCode::InvalidRecord, where + ": negative label");
        }
        if (r.label && r.choices && static_cast<std::size_t>(*r.label) >= r.choices->size()) {
            throw Error(ErrorCode::InvalidRecord, where + ": label outside choices");
        }
        if (!seen.insert(r.id).second) {
            throw Error(ErrorCode::DuplicateId, where + ": duplicate example id " + r.id);
        }
        records.push_back(std::move(r));
    });
    return records;
}

void write_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records) {
    auto out = open_out(path);
    for (const auto& r : records) {
        ordered_json j;
        j["id"] = r.id;
        if (r.text) j["text"] = *r.text;
        if (r.text_a) j["text_a"] = *r.text_a;
        if (r.text_b) j["text_b"] = *r.text_b;
        if (r.label) j["label"] = *r.label;
        if (r.choices) j["choices"] = *r.choices;
        out << j.dump() << '\n';
    }
}

} // namespace npprompt
