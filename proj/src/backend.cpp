#include "npprompt/backend.hpp"

#include <algorithm>
#include <cmath>

#include <httplib.h>
#include <json.hpp>

#include "npprompt/error.hpp"
#include "npprompt/logging.hpp"
#include "npprompt/prompting.hpp"

namespace npprompt {

ScoreRequest make_score_request(std::string example_id, std::string prompted_text,
                                std::size_t mask_char_offset) {
    if (mask_char_offset > prompted_text.size() ||
        prompted_text.compare(mask_char_offset, kMaskMarker.size(), kMaskMarker) != 0) {
        throw Error(ErrorCode::InvalidRecord, "mask marker not at the stated offset", example_id);
    }
    return {std::move(example_id), std::move(prompted_text), mask_char_offset};
}

FileBackend::FileBackend(std::shared_ptr<const LogitsBatch> batch, std::size_t vocab_size)
    : batch_(std::move(batch)), vocab_size_(vocab_size) {
    if (batch_->width() != vocab_size_) {
        throw Error(ErrorCode::VocabSizeMismatch, "logits batch width " +
                                                      std::to_string(batch_->width()) +
                                                      " differs from vocabulary size " +
                                                      std::to_string(vocab_size_));
    }
}

LogitVector FileBackend::score(const ScoreRequest& request) const {
    const auto row = batch_->lookup(request.example_id);
    return {row.begin(), row.end()};
}

namespace {

std::size_t clamp_in_flight(std::size_t n) {
    return std::clamp<std::size_t>(n, 1, 1024);
}

} // namespace

HttpBackend::HttpBackend(HttpBackendOptions options)
    : options_(std::move(options)),
      in_flight_(static_cast<std::ptrdiff_t>(clamp_in_flight(options_.max_in_flight))) {
    const auto scheme = options_.url.find("://");
    if (scheme == std::string::npos) {
        throw Error(ErrorCode::Config, "backend url needs a scheme: " + options_.url);
    }
    const auto slash = options_.url.find('/', scheme + 3);
    host_ = options_.url.substr(0, slash);
    std::string prefix = slash == std::string::npos ? "" : options_.url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    path_ = prefix + "/v1/score";
}

LogitVector HttpBackend::score(const ScoreRequest& request) const {
    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
    } release{in_flight_};

    for (int attempt = 0;; ++attempt) {
        try {
            return score_once(request);
        } catch (const Error& e) {
            // Wrong-length or malformed payloads are not transient.
            if (e.code() == ErrorCode::BadResponse || attempt >= options_.retries) {
                throw;
            }
            logger()->info("retrying {} after: {}", request.example_id, e.what());
        }
    }
}

LogitVector HttpBackend::score_once(const ScoreRequest& request) const {
    httplib::Client client(host_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    nlohmann::ordered_json body;
    body["example_id"] = request.example_id;
    body["prompted_text"] = request.prompted_text;
    auto res = client.Post(path_, body.dump(), "application/json");
    if (!res) {
        throw Error(ErrorCode::Transport, httplib::to_string(res.error()), request.example_id);
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error(ErrorCode::HttpStatus, "status " + std::to_string(res->status),
                    request.example_id);
    }

    LogitVector logits;
    try {
        const auto reply = nlohmann::json::parse(res->body);
        const auto& values = reply.at("logits");
        if (!values.is_array()) {
            throw Error(ErrorCode::BadResponse, "logits is not an array", request.example_id);
        }
        logits.reserve(values.size());
        for (const auto& v : values) {
            if (!v.is_number()) {
                throw Error(ErrorCode::BadResponse, "non-numeric logit", request.example_id);
            }
            logits.push_back(v.get<float>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BadResponse, e.what(), request.example_id);
    }
    if (logits.size() != options_.vocab_size) {
        throw Error(ErrorCode::BadResponse,
                    "expected " + std::to_string(options_.vocab_size) + " logits, got " +
                        std::to_string(logits.size()),
                    request.example_id);
    }
    for (float v : logits) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::BadResponse, "non-finite logit", request.example_id);
        }
    }
    return logits;
}

} // namespace npprompt
