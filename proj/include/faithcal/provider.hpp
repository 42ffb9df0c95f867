#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "faithcal/chat.hpp"
#include "faithcal/errors.hpp"

namespace faithcal {

/// Backend behind the gateway. Implementations translate one logical request
/// into provider traffic and return `params.num_samples` completions in a
/// stable order.
class Provider {
public:
    virtual ~Provider() = default;

    virtual std::string name() const = 0;

    /// Whether one call can return multiple samples for this profile. When
    /// false the gateway issues num_samples independent single-sample calls.
    virtual bool supports_multi_sample(const ProviderProfile&) const { return true; }

    virtual std::vector<std::string> generate(const ProviderProfile& profile,
                                              const std::vector<ChatMessage>& messages,
                                              const GenerationParams& params) = 0;
};

/// Dispatches by profile.provider_name, so one gateway can serve an
/// evaluated model and a judge that live on different backends.
class RoutingProvider : public Provider {
public:
    void add_route(const std::string& provider_name, std::shared_ptr<Provider> provider) {
        routes_[provider_name] = std::move(provider);
    }

    std::string name() const override { return "router"; }

    bool supports_multi_sample(const ProviderProfile& profile) const override {
        return route(profile).supports_multi_sample(profile);
    }

    std::vector<std::string> generate(const ProviderProfile& profile,
                                      const std::vector<ChatMessage>& messages,
                                      const GenerationParams& params) override {
        return route(profile).generate(profile, messages, params);
    }

private:
    Provider& route(const ProviderProfile& profile) const {
        auto it = routes_.find(profile.provider_name);
        if (it == routes_.end()) {
            throw Error(errc::provider, "no provider registered for '" + profile.provider_name + "'");
        }
        return *it->second;
    }

    std::map<std::string, std::shared_ptr<Provider>> routes_;
};

}  // namespace faithcal
