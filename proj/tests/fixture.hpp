#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "npprompt/tensorio.hpp"
#include "npprompt/verbalizer.hpp"

namespace testing_support {

inline std::filesystem::path micro_dir() {
    return std::filesystem::path(NPPROMPT_TEST_DATA) / "micro";
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("npprompt_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline npprompt::Tensor random_matrix(std::mt19937& rng, std::size_t rows, std::size_t cols) {
    std::normal_distribution<float> dist(0.0f, 1.0f);
    auto t = npprompt::Tensor::matrix(rows, cols);
    for (float& x : t.data()) x = dist(rng);
    return t;
}

/// Vocabulary "t0".."t{n-1}" with the given ids flagged special.
inline npprompt::Vocabulary plain_vocab(std::size_t n, const std::vector<npprompt::TokenId>& special = {}) {
    std::vector<npprompt::VocabEntry> entries;
    for (std::size_t i = 0; i < n; ++i) {
        const auto id = static_cast<npprompt::TokenId>(i);
        const bool sp = std::find(special.begin(), special.end(), id) != special.end();
        entries.push_back({id, "t" + std::to_string(i), sp});
    }
    return npprompt::Vocabulary(std::move(entries));
}

inline std::vector<std::vector<double>> to_rows(const npprompt::Tensor& t) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        auto r = t.row(i);
        rows.emplace_back(r.begin(), r.end());
    }
    return rows;
}

} // namespace testing_support
