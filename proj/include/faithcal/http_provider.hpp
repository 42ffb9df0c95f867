#pragma once

#include <cstdlib>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "faithcal/errors.hpp"
#include "faithcal/provider.hpp"

namespace faithcal {

namespace detail {
struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // leading base path, may be empty
};

inline SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(errc::invalid_request, "endpoint must be a http(s) URL: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string path = url.substr(path_start);
    if (path == "/") path.clear();
    return {url.substr(0, path_start), path};
}
}  // namespace detail

/// Chat-completions client for the de-facto standard HTTP chat API:
/// POST <endpoint>/chat/completions with {model, messages, temperature,
/// max_tokens, n[, seed]}; completions come back as choices[i].message.content.
class HttpChatProvider : public Provider {
public:
    HttpChatProvider() = default;

    std::string name() const override { return "http"; }

    std::vector<std::string> generate(const ProviderProfile& profile,
                                      const std::vector<ChatMessage>& messages,
                                      const GenerationParams& params) override {
        auto url = detail::split_url(profile.endpoint);
        httplib::Client client(url.origin);
        client.set_connection_timeout(connect_timeout_s_);
        client.set_read_timeout(read_timeout_s_);

        httplib::Headers headers;
        if (!profile.auth_ref.empty()) {
            const char* token = std::getenv(profile.auth_ref.c_str());
            if (token == nullptr || *token == '\0') {
                throw Error(errc::auth, "credential env var '" + profile.auth_ref + "' is not set");
            }
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }

        nlohmann::json body{
            {"model", profile.model_id},
            {"messages", nlohmann::json::array()},
            {"temperature", params.temperature},
            {"max_tokens", params.max_tokens},
            {"n", params.num_samples},
        };
        for (const auto& m : messages) {
            body["messages"].push_back({{"role", role_name(m.role)}, {"content", m.content}});
        }
        if (params.seed) body["seed"] = *params.seed;

        auto res = client.Post(url.path + "/chat/completions", headers, body.dump(),
                               "application/json");
        if (!res) {
            throw Error(errc::timeout, "no response from " + url.origin + ": " +
                                           httplib::to_string(res.error()));
        }
        if (res->status == 401 || res->status == 403) {
            throw Error(errc::auth, "status " + std::to_string(res->status) + ": " + res->body);
        }
        if (res->status == 429) {
            throw Error(errc::rate_limited, "status 429: " + res->body);
        }
        if (res->status >= 500) {
            // 5xx are treated as transient and retried by the gateway
            throw Error(errc::timeout, "status " + std::to_string(res->status) + ": " + res->body);
        }
        if (res->status != 200) {
            throw Error(errc::provider, "status " + std::to_string(res->status) + ": " + res->body);
        }

        try {
            auto j = nlohmann::json::parse(res->body);
            std::vector<std::string> out;
            for (const auto& choice : j.at("choices")) {
                out.push_back(choice.at("message").at("content").get<std::string>());
            }
            return out;
        } catch (const nlohmann::json::exception& ex) {
            throw Error(errc::provider, std::string("malformed completion payload: ") + ex.what());
        }
    }

    void set_timeouts(int connect_s, int read_s) {
        connect_timeout_s_ = connect_s;
        read_timeout_s_ = read_s;
    }

private:
    int connect_timeout_s_ = 10;
    int read_timeout_s_ = 120;
};

}  // namespace faithcal
