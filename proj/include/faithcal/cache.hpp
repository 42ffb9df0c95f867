#pragma once

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithcal/chat.hpp"
#include "faithcal/errors.hpp"

namespace faithcal {

struct CacheEntry {
    std::string key;
    std::string request_fingerprint;
    std::vector<std::string> responses;
    std::int64_t created_at = 0;  // unix seconds
};

namespace detail {
inline std::string sanitize_component(std::string s) {
    for (auto& c : s) {
        if (c == '/' || c == '\\' || c == ':') c = '_';
    }
    return s.empty() ? std::string("_") : s;
}
}  // namespace detail

/// Content-addressed on-disk response cache. One JSON file per entry under
/// `<root>/<provider>/<model_id>/<first2 hex of key>/<key>.json`. Entries are
/// write-once: publication goes through link(2), so the first writer wins and
/// a key is never overwritten with different responses.
class DiskCache {
public:
    explicit DiskCache(std::filesystem::path root) : root_(std::move(root)) {}

    const std::filesystem::path& root() const { return root_; }

    std::filesystem::path entry_path(const ProviderProfile& profile, const std::string& key) const {
        return root_ / detail::sanitize_component(profile.provider_name) /
               detail::sanitize_component(profile.model_id) / key.substr(0, 2) / (key + ".json");
    }

    std::optional<CacheEntry> lookup(const ProviderProfile& profile, const std::string& key) const {
        auto path = entry_path(profile, key);
        std::ifstream in(path, std::ios::binary);
        if (!in) return std::nullopt;
        nlohmann::json j;
        try {
            in >> j;
            CacheEntry e;
            e.key = j.at("key").get<std::string>();
            e.request_fingerprint = j.at("request_fingerprint").get<std::string>();
            e.responses = j.at("responses").get<std::vector<std::string>>();
            e.created_at = j.value("created_at", std::int64_t{0});
            return e;
        } catch (const nlohmann::json::exception& ex) {
            throw Error(errc::io_error, "corrupt cache entry " + path.string() + ": " + ex.what());
        }
    }

    /// Publishes `entry`; returns the entry that ended up on disk (the
    /// first-published one if a concurrent writer won the race).
    CacheEntry publish(const ProviderProfile& profile, const CacheEntry& entry) const {
        auto path = entry_path(profile, entry.key);
        std::filesystem::create_directories(path.parent_path());
        if (auto existing = lookup(profile, entry.key)) return *existing;

        nlohmann::json j{
            {"key", entry.key},
            {"request_fingerprint", entry.request_fingerprint},
            {"responses", entry.responses},
            {"created_at", entry.created_at},
        };
        auto tmp = path;
        tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(tmp_counter());
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw Error(errc::io_error, "cannot write " + tmp.string());
            out << j.dump();
        }
        int rc = ::link(tmp.c_str(), path.c_str());
        std::filesystem::remove(tmp);
        if (rc != 0) {
            // Lost the publication race; serve whatever got there first.
            if (auto existing = lookup(profile, entry.key)) return *existing;
            throw Error(errc::io_error, "cannot publish cache entry " + path.string());
        }
        return entry;
    }

    static std::int64_t now_unix() {
        return std::chrono::duration_cast<std::chrono::seconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    }

private:
    static std::uint64_t tmp_counter() {
        static std::atomic<std::uint64_t> n{0};
        return n.fetch_add(1);
    }

    std::filesystem::path root_;
};

}  // namespace faithcal
