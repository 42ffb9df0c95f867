#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithcal/errors.hpp"
#include "faithcal/provider.hpp"

namespace faithcal {

/// Scriptable offline provider driven by a JSON Lines fixture. Each line:
///
///   { "match": <exact user-prompt string or fingerprint digest>,
///     "responses": [ ... ],
///     "mode": "cycle" | "exact",          // optional, default "cycle"
///     "fail": "rate_limited" | "timeout" | "provider_error" | "auth",
///     "fail_times": <int>,                // optional, default 0
///     "latency_ms": <int> }               // optional, default 0
///
/// "cycle" repeats the response list to satisfy num_samples; "exact" returns
/// the list as-is regardless of the requested count (useful for scripting
/// short batches). "fail_times" makes the first N calls to that entry raise
/// the scripted error before succeeding. Matching tries the fingerprint
/// digest of the request first, then the content of the last user message.
class MockProvider : public Provider {
public:
    MockProvider() = default;

    explicit MockProvider(const std::filesystem::path& fixture_path) { load_fixture(fixture_path); }

    void load_fixture(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(errc::file_missing, "fixture not found: " + path.string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& ex) {
                throw Error(errc::schema_error,
                            path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
            }
            Entry e;
            e.responses = j.at("responses").get<std::vector<std::string>>();
            e.exact = j.value("mode", "cycle") == "exact";
            e.fail = j.value("fail", "");
            e.fail_times = j.value("fail_times", 0);
            e.latency_ms = j.value("latency_ms", 0);
            insert_entry(j.at("match").get<std::string>(), std::move(e));
        }
    }

    void add_entry(const std::string& match, std::vector<std::string> responses) {
        Entry e;
        e.responses = std::move(responses);
        insert_entry(match, std::move(e));
    }

    std::string name() const override { return "mock"; }

    bool supports_multi_sample(const ProviderProfile&) const override { return multi_sample_; }
    void set_supports_multi_sample(bool v) { multi_sample_ = v; }

    std::vector<std::string> generate(const ProviderProfile& profile,
                                      const std::vector<ChatMessage>& messages,
                                      const GenerationParams& params) override {
        InFlightGuard guard(*this);
        total_calls_.fetch_add(1);

        Entry* entry = find_entry(messages, params, profile);
        if (entry == nullptr) {
            throw Error(errc::provider, "no fixture entry matches request (last user message: '" +
                                            last_user_content(messages) + "')");
        }
        if (entry->latency_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(entry->latency_ms));
        }
        {
            std::lock_guard<std::mutex> lock(mu_);
            ++hit_counts_[entry->match];
            if (entry->failures_left > 0) {
                --entry->failures_left;
                raise_scripted(entry->fail);
            }
        }
        std::vector<std::string> out;
        const auto& rs = entry->responses;
        if (entry->exact) {
            out = rs;
        } else {
            if (rs.empty()) throw Error(errc::provider, "fixture entry has no responses");
            out.reserve(params.num_samples);
            for (int i = 0; i < params.num_samples; ++i) out.push_back(rs[i % rs.size()]);
        }
        return out;
    }

    // --- instrumentation ---
    std::uint64_t total_calls() const { return total_calls_.load(); }
    int max_in_flight() const { return max_in_flight_.load(); }
    std::uint64_t hits(const std::string& match) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = hit_counts_.find(match);
        return it == hit_counts_.end() ? 0 : it->second;
    }
    void reset_counters() {
        std::lock_guard<std::mutex> lock(mu_);
        total_calls_ = 0;
        max_in_flight_ = 0;
        hit_counts_.clear();
    }

private:
    struct Entry {
        std::string match;
        std::vector<std::string> responses;
        bool exact = false;
        std::string fail;
        int fail_times = 0;
        int failures_left = 0;
        int latency_ms = 0;
    };

    struct InFlightGuard {
        explicit InFlightGuard(MockProvider& p) : provider(p) {
            int cur = provider.in_flight_.fetch_add(1) + 1;
            int prev = provider.max_in_flight_.load();
            while (cur > prev && !provider.max_in_flight_.compare_exchange_weak(prev, cur)) {
            }
        }
        ~InFlightGuard() { provider.in_flight_.fetch_sub(1); }
        MockProvider& provider;
    };

    void insert_entry(const std::string& match, Entry e) {
        e.match = match;
        e.failures_left = e.fail_times;
        std::lock_guard<std::mutex> lock(mu_);
        entries_[match] = std::move(e);
    }

    static std::string last_user_content(const std::vector<ChatMessage>& messages) {
        for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
            if (it->role == Role::user) return it->content;
        }
        return "";
    }

    Entry* find_entry(const std::vector<ChatMessage>& messages, const GenerationParams& params,
                      const ProviderProfile& profile) {
        std::lock_guard<std::mutex> lock(mu_);
        auto by_digest = entries_.find(cache_key(request_fingerprint(profile.model_id, messages, params)));
        if (by_digest != entries_.end()) return &by_digest->second;
        auto by_prompt = entries_.find(last_user_content(messages));
        if (by_prompt != entries_.end()) return &by_prompt->second;
        return nullptr;
    }

    [[noreturn]] static void raise_scripted(const std::string& kind) {
        if (kind == "rate_limited") throw Error(errc::rate_limited, "scripted rate limit");
        if (kind == "timeout") throw Error(errc::timeout, "scripted timeout");
        if (kind == "auth") throw Error(errc::auth, "scripted auth failure");
        throw Error(errc::provider, "scripted provider failure");
    }

    mutable std::mutex mu_;
    std::map<std::string, Entry> entries_;
    std::map<std::string, std::uint64_t> hit_counts_;
    std::atomic<std::uint64_t> total_calls_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
    bool multi_sample_ = true;
};

}  // namespace faithcal
