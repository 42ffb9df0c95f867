#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "faithcal/cache.hpp"
#include "faithcal/chat.hpp"
#include "faithcal/errors.hpp"
#include "faithcal/provider.hpp"

namespace faithcal {

namespace detail {

/// Counting limiter with a dynamic bound; keeps in-flight requests per
/// profile at or below max_concurrency.
class ConcurrencyLimiter {
public:
    explicit ConcurrencyLimiter(int max) : max_(max) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return active_ < max_; });
        ++active_;
    }

    void release() {
        {
            std::lock_guard<std::mutex> lock(mu_);
            --active_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int max_;
    int active_ = 0;
};

struct LimiterSlot {
    explicit LimiterSlot(ConcurrencyLimiter& l) : limiter(l) { limiter.acquire(); }
    ~LimiterSlot() { limiter.release(); }
    ConcurrencyLimiter& limiter;
};

inline bool is_transient(errc c) { return c == errc::rate_limited || c == errc::timeout; }

}  // namespace detail

/// Provider-agnostic completion front end: deterministic response caching,
/// bounded per-profile concurrency, and exponential backoff with jitter on
/// rate-limit and transient network errors.
class Gateway {
public:
    struct Options {
        bool cache_enabled = true;
        // Injectable sleep so retry tests run instantly; defaults to a real sleep.
        std::function<void(std::chrono::milliseconds)> sleeper;
        std::uint64_t jitter_seed = 0x5eed;
    };

    Gateway(std::shared_ptr<Provider> provider, std::filesystem::path cache_root)
        : Gateway(std::move(provider), std::move(cache_root), Options()) {}

    Gateway(std::shared_ptr<Provider> provider, std::filesystem::path cache_root, Options options)
        : provider_(std::move(provider)), cache_(std::move(cache_root)), options_(std::move(options)),
          jitter_rng_(options_.jitter_seed) {}

    /// One logical request; returns params.num_samples completions in stable
    /// order. Cache hits never touch the provider.
    std::vector<std::string> complete(const ProviderProfile& profile,
                                      const std::vector<ChatMessage>& messages,
                                      const GenerationParams& params) {
        validate_profile(profile);
        validate_messages(messages);
        validate_params(params);

        const std::string fingerprint = request_fingerprint(profile.model_id, messages, params);
        const std::string key = cache_key(fingerprint);
        if (options_.cache_enabled) {
            if (auto hit = cache_.lookup(profile, key)) {
                if (hit->responses.size() != static_cast<std::size_t>(params.num_samples)) {
                    throw Error(errc::io_error, "cache entry " + key + " has " +
                                                    std::to_string(hit->responses.size()) +
                                                    " responses, expected " +
                                                    std::to_string(params.num_samples));
                }
                return hit->responses;
            }
        }

        std::vector<std::string> responses;
        if (provider_->supports_multi_sample(profile) || params.num_samples == 1) {
            responses = call_with_retry(profile, messages, params);
        } else {
            GenerationParams single = params;
            single.num_samples = 1;
            responses.reserve(params.num_samples);
            for (int i = 0; i < params.num_samples; ++i) {
                std::vector<std::string> one;
                try {
                    one = call_with_retry(profile, messages, single);
                } catch (const Error&) {
                    throw PartialBatchError(responses.size(),
                                            static_cast<std::size_t>(params.num_samples));
                }
                if (one.empty()) {
                    throw PartialBatchError(responses.size(),
                                            static_cast<std::size_t>(params.num_samples));
                }
                responses.push_back(std::move(one.front()));
            }
        }
        if (responses.size() != static_cast<std::size_t>(params.num_samples)) {
            throw PartialBatchError(responses.size(), static_cast<std::size_t>(params.num_samples));
        }

        if (options_.cache_enabled) {
            CacheEntry entry{key, fingerprint, responses, DiskCache::now_unix()};
            return cache_.publish(profile, entry).responses;
        }
        return responses;
    }

    /// K sampled responses at the configured temperature; equivalent to
    /// complete() with num_samples = k.
    std::vector<std::string> sample_batch(const ProviderProfile& profile,
                                          const std::vector<ChatMessage>& messages, int k,
                                          GenerationParams params = {}) {
        if (k < 1) throw Error(errc::invalid_request, "k must be >= 1");
        params.num_samples = k;
        return complete(profile, messages, params);
    }

    const DiskCache& cache() const { return cache_; }
    Provider& provider() { return *provider_; }

private:
    std::vector<std::string> call_with_retry(const ProviderProfile& profile,
                                             const std::vector<ChatMessage>& messages,
                                             const GenerationParams& params) {
        const int attempts = profile.retry.max_attempts;
        for (int attempt = 1;; ++attempt) {
            try {
                detail::LimiterSlot slot(limiter_for(profile));
                return provider_->generate(profile, messages, params);
            } catch (const Error& e) {
                if (!detail::is_transient(e.code()) || attempt >= attempts) throw;
                auto delay = backoff_delay(profile.retry, attempt);
                if (options_.sleeper) {
                    options_.sleeper(delay);
                } else {
                    std::this_thread::sleep_for(delay);
                }
            }
        }
    }

    std::chrono::milliseconds backoff_delay(const RetryPolicy& retry, int attempt) {
        std::int64_t base = retry.base_backoff_ms;
        std::int64_t delay = base << std::min(attempt - 1, 16);
        std::lock_guard<std::mutex> lock(rng_mu_);
        std::int64_t jitter = base > 0 ? static_cast<std::int64_t>(jitter_rng_() % base) : 0;
        return std::chrono::milliseconds(delay + jitter);
    }

    detail::ConcurrencyLimiter& limiter_for(const ProviderProfile& profile) {
        std::string key =
            profile.provider_name + "\x1f" + profile.model_id + "\x1f" + profile.endpoint;
        std::lock_guard<std::mutex> lock(limiters_mu_);
        auto it = limiters_.find(key);
        if (it == limiters_.end()) {
            it = limiters_
                     .emplace(std::move(key),
                              std::make_unique<detail::ConcurrencyLimiter>(profile.max_concurrency))
                     .first;
        }
        return *it->second;
    }

    std::shared_ptr<Provider> provider_;
    DiskCache cache_;
    Options options_;
    std::mutex limiters_mu_;
    std::map<std::string, std::unique_ptr<detail::ConcurrencyLimiter>> limiters_;
    std::mutex rng_mu_;
    std::mt19937_64 jitter_rng_;
};

}  // namespace faithcal
