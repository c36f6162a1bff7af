#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <semaphore>
#include <string>

#include "npprompt/aggregator.hpp"
#include "npprompt/tensorio.hpp"

namespace npprompt {

struct ScoreRequest {
    std::string example_id;
    std::string prompted_text;
    std::size_t mask_char_offset = 0;
};

/// Builds a request, checking that the mask marker sits at the offset.
ScoreRequest make_score_request(std::string example_id, std::string prompted_text,
                                std::size_t mask_char_offset);

/// Source of masked-position logits. Implementations must be safe to call
/// from several threads and return vectors of exactly vocab_size() finite
/// values; failures carry the example id.
class ScoringBackend {
public:
    virtual ~ScoringBackend() = default;
    virtual LogitVector score(const ScoreRequest& request) const = 0;
    virtual std::size_t vocab_size() const = 0;
};

/// Serves rows of a precomputed logits batch by example id.
class FileBackend final : public ScoringBackend {
public:
    FileBackend(std::shared_ptr<const LogitsBatch> batch, std::size_t vocab_size);

    LogitVector score(const ScoreRequest& request) const override;
    std::size_t vocab_size() const override { return vocab_size_; }

private:
    std::shared_ptr<const LogitsBatch> batch_;
    std::size_t vocab_size_;
};

struct HttpBackendOptions {
    std::string url;                // e.g. http://127.0.0.1:8080
    std::size_t vocab_size = 0;
    std::size_t max_in_flight = 4;
    std::chrono::milliseconds timeout{60'000};
    int retries = 0;
};

/// POST {url}/v1/score with {"example_id","prompted_text"}; expects
/// {"logits": [...]} with one number per vocabulary entry.
class HttpBackend final : public ScoringBackend {
public:
    explicit HttpBackend(HttpBackendOptions options);

    LogitVector score(const ScoreRequest& request) const override;
    std::size_t vocab_size() const override { return options_.vocab_size; }

private:
    LogitVector score_once(const ScoreRequest& request) const;

    HttpBackendOptions options_;
    std::string host_;
    std::string path_;
    mutable std::counting_semaphore<1024> in_flight_;
};

} // namespace npprompt
