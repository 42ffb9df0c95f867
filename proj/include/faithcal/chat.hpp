#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithcal/digest.hpp"
#include "faithcal/errors.hpp"

namespace faithcal {

enum class Role { system, user, assistant };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

inline Role role_from_name(const std::string& s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw Error(errc::schema_error, "unknown role '" + s + "'");
}

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

inline ChatMessage system_message(std::string content) { return {Role::system, std::move(content)}; }
inline ChatMessage user_message(std::string content) { return {Role::user, std::move(content)}; }
inline ChatMessage assistant_message(std::string content) { return {Role::assistant, std::move(content)}; }

/// Enforces message invariants: non-empty content for user/system roles, at
/// most one system message, and the system message comes first.
inline void validate_messages(const std::vector<ChatMessage>& messages) {
    if (messages.empty()) throw Error(errc::invalid_request, "empty message list");
    int system_count = 0;
    for (std::size_t i = 0; i < messages.size(); ++i) {
        const auto& m = messages[i];
        if (m.role == Role::system) {
            ++system_count;
            if (i != 0) throw Error(errc::invalid_request, "system message must come first");
        }
        if ((m.role == Role::system || m.role == Role::user) && m.content.empty()) {
            throw Error(errc::invalid_request, "empty content in message " + std::to_string(i));
        }
    }
    if (system_count > 1) throw Error(errc::invalid_request, "more than one system message");
}

struct GenerationParams {
    double temperature = 1.0;
    int max_tokens = 250;
    int num_samples = 1;
    std::optional<std::int64_t> seed;

    bool operator==(const GenerationParams&) const = default;
};

inline void validate_params(const GenerationParams& p) {
    if (p.temperature < 0.0) throw Error(errc::invalid_request, "temperature must be >= 0");
    if (p.max_tokens < 1) throw Error(errc::invalid_request, "max_tokens must be positive");
    if (p.num_samples < 1) throw Error(errc::invalid_request, "num_samples must be positive");
}

struct RetryPolicy {
    int max_attempts = 3;
    int base_backoff_ms = 200;
};

struct ProviderProfile {
    std::string provider_name;
    std::string endpoint;
    std::string model_id;
    std::string auth_ref;  // environment variable holding the credential
    int max_concurrency = 4;
    RetryPolicy retry;
};

inline void validate_profile(const ProviderProfile& p) {
    if (p.max_concurrency < 1) throw Error(errc::invalid_request, "max_concurrency must be >= 1");
    if (p.retry.max_attempts < 1) throw Error(errc::invalid_request, "max_attempts must be >= 1");
}

namespace detail {
inline std::string fixed_decimal(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}
}  // namespace detail

/// Canonical serialization of (model_id, messages, params). Key order is
/// alphabetical, message content bytes are preserved verbatim, and real
/// params are rendered with fixed decimal precision so the fingerprint is
/// stable across runs and machines.
inline std::string request_fingerprint(const std::string& model_id,
                                       const std::vector<ChatMessage>& messages,
                                       const GenerationParams& params) {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) {
        msgs.push_back({{"content", m.content}, {"role", role_name(m.role)}});
    }
    nlohmann::json fp{
        {"messages", std::move(msgs)},
        {"model_id", model_id},
        {"params",
         {{"max_tokens", params.max_tokens},
          {"num_samples", params.num_samples},
          {"seed", params.seed ? nlohmann::json(*params.seed) : nlohmann::json(nullptr)},
          {"temperature", detail::fixed_decimal(params.temperature)}}},
    };
    return fp.dump();
}

/// Cache key: pure function of the request fingerprint.
inline std::string cache_key(const std::string& request_fingerprint) {
    return sha256_hex(request_fingerprint);
}

}  // namespace faithcal
