#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithcal/chat.hpp"

namespace testsup {

inline std::filesystem::path assets_dir() { return FAITHCAL_ASSETS_DIR; }
inline std::filesystem::path fixtures_dir() { return FAITHCAL_FIXTURES_DIR; }

/// Fresh scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() /
                ("faithcal-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Appends one mock-fixture line mapping a prompt (or digest) to responses.
inline void append_fixture_line(std::string& out, const std::string& match,
                                const std::vector<std::string>& responses,
                                const nlohmann::json& extra = nlohmann::json::object()) {
    nlohmann::json j{{"match", match}, {"responses", responses}};
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    out += j.dump() + "\n";
}

inline faithcal::ProviderProfile mock_profile(const std::string& model = "test-model") {
    faithcal::ProviderProfile p;
    p.provider_name = "mock";
    p.endpoint = "mock://local";
    p.model_id = model;
    p.max_concurrency = 8;
    p.retry.max_attempts = 3;
    p.retry.base_backoff_ms = 1;
    return p;
}

}  // namespace testsup
