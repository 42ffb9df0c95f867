#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace faithcal {

enum class errc {
    // gateway
    auth,
    rate_limited,
    provider,
    timeout,
    partial_batch,
    invalid_request,
    // prompts
    missing_field,
    unknown_strategy,
    asset_error,
    // judge
    judge_call_failed,
    unparseable_judge_output,
    rating_out_of_range,
    // metrics
    length_mismatch,
    empty_input,
    too_few_points,
    degenerate_input,
    no_scorable_samples,
    // metafaith
    generation_failed,
    parse_error,
    validation_failed,
    // pipeline / io
    file_missing,
    schema_error,
    unknown_run,
    config_mismatch,
    pairing,
    io_error,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::auth: return "auth";
        case errc::rate_limited: return "rate_limited";
        case errc::provider: return "provider";
        case errc::timeout: return "timeout";
        case errc::partial_batch: return "partial_batch";
        case errc::invalid_request: return "invalid_request";
        case errc::missing_field: return "missing_field";
        case errc::unknown_strategy: return "unknown_strategy";
        case errc::asset_error: return "asset_error";
        case errc::judge_call_failed: return "judge_call_failed";
        case errc::unparseable_judge_output: return "unparseable_judge_output";
        case errc::rating_out_of_range: return "rating_out_of_range";
        case errc::length_mismatch: return "length_mismatch";
        case errc::empty_input: return "empty_input";
        case errc::too_few_points: return "too_few_points";
        case errc::degenerate_input: return "degenerate_input";
        case errc::no_scorable_samples: return "no_scorable_samples";
        case errc::generation_failed: return "generation_failed";
        case errc::parse_error: return "parse_error";
        case errc::validation_failed: return "validation_failed";
        case errc::file_missing: return "file_missing";
        case errc::schema_error: return "schema_error";
        case errc::unknown_run: return "unknown_run";
        case errc::config_mismatch: return "config_mismatch";
        case errc::pairing: return "pairing";
        case errc::io_error: return "io_error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

/// Thrown when a batched request yields fewer responses than requested.
class PartialBatchError : public Error {
public:
    PartialBatchError(std::size_t got, std::size_t want)
        : Error(errc::partial_batch,
                "got " + std::to_string(got) + " of " + std::to_string(want) + " responses"),
          got_(got), want_(want) {}

    std::size_t got() const noexcept { return got_; }
    std::size_t want() const noexcept { return want_; }

private:
    std::size_t got_;
    std::size_t want_;
};

}  // namespace faithcal
