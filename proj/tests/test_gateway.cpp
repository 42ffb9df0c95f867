#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <memory>
#include <random>
#include <set>
#include <thread>

#include "faithcal/cache.hpp"
#include "faithcal/gateway.hpp"
#include "faithcal/mock_provider.hpp"
#include "test_support.hpp"

using namespace faithcal;

namespace {

std::vector<ChatMessage> ask(const std::string& prompt) { return {user_message(prompt)}; }

}  // namespace

TEST_CASE("fingerprints are deterministic and sensitive to every field") {
    GenerationParams params;
    auto base = request_fingerprint("m", ask("P"), params);
    CHECK(request_fingerprint("m", ask("P"), params) == base);
    CHECK(cache_key(base) == cache_key(base));

    GenerationParams cold = params;
    cold.temperature = 0.0;
    CHECK(cache_key(request_fingerprint("m", ask("P"), cold)) != cache_key(base));

    // whitespace inside message content is significant
    CHECK(cache_key(request_fingerprint("m", ask("P "), params)) != cache_key(base));
    CHECK(cache_key(request_fingerprint("m2", ask("P"), params)) != cache_key(base));

    GenerationParams more = params;
    more.num_samples = 2;
    CHECK(cache_key(request_fingerprint("m", ask("P"), more)) != cache_key(base));
}

TEST_CASE("randomized fingerprints map to distinct cache entries") {
    std::mt19937_64 rng(7);
    std::set<std::string> keys;
    std::vector<std::string> contents;
    for (int i = 0; i < 200; ++i) {
        GenerationParams p;
        p.temperature = (rng() % 20) / 10.0;
        p.max_tokens = 1 + static_cast<int>(rng() % 500);
        p.num_samples = 1 + static_cast<int>(rng() % 20);
        if (rng() % 2) p.seed = static_cast<std::int64_t>(rng() % 1000);
        std::string prompt = "prompt-" + std::to_string(rng() % 50);
        std::string model = "model-" + std::to_string(rng() % 5);
        auto fp = request_fingerprint(model, ask(prompt), p);
        if (contents.end() == std::find(contents.begin(), contents.end(), fp)) {
            contents.push_back(fp);
            CHECK(keys.insert(cache_key(fp)).second);  // new fingerprint, new key
        }
    }
}

TEST_CASE("disk cache entries are write-once") {
    testsup::TempDir tmp;
    DiskCache cache(tmp / "cache");
    auto profile = testsup::mock_profile();

    CacheEntry first{"aa11", "fp", {"one"}, 1};
    CacheEntry second{"aa11", "fp", {"two"}, 2};
    CHECK(cache.publish(profile, first).responses == std::vector<std::string>{"one"});
    CHECK(cache.publish(profile, second).responses == std::vector<std::string>{"one"});
    auto found = cache.lookup(profile, "aa11");
    REQUIRE(found.has_value());
    CHECK(found->responses == std::vector<std::string>{"one"});
}

TEST_CASE("cache layout is provider/model/prefix/key") {
    testsup::TempDir tmp;
    DiskCache cache(tmp / "cache");
    auto profile = testsup::mock_profile("some/model");
    cache.publish(profile, {"deadbeef", "fp", {"r"}, 0});
    CHECK(std::filesystem::exists(tmp / "cache" / "mock" / "some_model" / "de" / "deadbeef.json"));
}

TEST_CASE("complete replays the fixture and then serves from cache") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();
    mock->add_entry("P", {"A"});
    Gateway gateway(mock, tmp / "cache");
    auto profile = testsup::mock_profile();

    GenerationParams params;
    auto r1 = gateway.complete(profile, ask("P"), params);
    CHECK(r1 == std::vector<std::string>{"A"});

    // any params still hit the same prompt-matched fixture entry
    GenerationParams other;
    other.temperature = 0.3;
    CHECK(gateway.complete(profile, ask("P"), other) == std::vector<std::string>{"A"});

    auto calls = mock->total_calls();
    auto r2 = gateway.complete(profile, ask("P"), params);
    CHECK(r2 == r1);
    CHECK(mock->total_calls() == calls);  // cache hit, no provider call
}

TEST_CASE("20 scripted variants come back in fixture order") {
    testsup::TempDir tmp;
    std::vector<std::string> variants;
    for (int i = 0; i < 20; ++i) variants.push_back("variant " + std::to_string(i));
    std::string fixture;
    testsup::append_fixture_line(fixture, "P", variants);
    auto fixture_path = tmp / "fixture.jsonl";
    testsup::write_file(fixture_path, fixture);

    auto mock = std::make_shared<MockProvider>(fixture_path);
    Gateway gateway(mock, tmp / "cache");
    auto got = gateway.sample_batch(testsup::mock_profile(), ask("P"), 20);
    CHECK(got == variants);
}

TEST_CASE("sample_batch k=1 equals complete") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();
    mock->add_entry("P", {"A"});
    Gateway gateway(mock, tmp / "cache");
    auto profile = testsup::mock_profile();
    GenerationParams params;
    CHECK(gateway.sample_batch(profile, ask("P"), 1) == gateway.complete(profile, ask("P"), params));
}

TEST_CASE("a short batch raises PartialBatch by default") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();
    std::vector<std::string> only18(18, "r");
    std::string fixture;
    testsup::append_fixture_line(fixture, "P", only18, {{"mode", "exact"}});
    auto fixture_path = tmp / "fixture.jsonl";
    testsup::write_file(fixture_path, fixture);
    mock->load_fixture(fixture_path);

    Gateway gateway(mock, tmp / "cache");
    try {
        gateway.sample_batch(testsup::mock_profile(), ask("P"), 20);
        FAIL("expected PartialBatch");
    } catch (const PartialBatchError& e) {
        CHECK(e.got() == 18);
        CHECK(e.want() == 20);
    }
}

TEST_CASE("transient failures are retried with backoff, others are not") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();
    std::string fixture;
    testsup::append_fixture_line(fixture, "flaky", {"ok"},
                                 {{"fail", "rate_limited"}, {"fail_times", 2}});
    testsup::append_fixture_line(fixture, "dead", {"never"},
                                 {{"fail", "provider_error"}, {"fail_times", 1}});
    testsup::append_fixture_line(fixture, "always429", {"never"},
                                 {{"fail", "rate_limited"}, {"fail_times", 99}});
    auto fixture_path = tmp / "fixture.jsonl";
    testsup::write_file(fixture_path, fixture);
    mock->load_fixture(fixture_path);

    std::vector<std::chrono::milliseconds> sleeps;
    Gateway::Options opts;
    opts.sleeper = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
    Gateway gateway(mock, tmp / "cache", opts);
    auto profile = testsup::mock_profile();
    profile.retry.max_attempts = 3;
    profile.retry.base_backoff_ms = 100;

    GenerationParams params;
    CHECK(gateway.complete(profile, ask("flaky"), params) == std::vector<std::string>{"ok"});
    REQUIRE(sleeps.size() == 2);
    CHECK(sleeps[0] >= std::chrono::milliseconds(100));   // base * 2^0 + jitter
    CHECK(sleeps[1] >= std::chrono::milliseconds(200));   // base * 2^1 + jitter
    CHECK(sleeps[1] < std::chrono::milliseconds(400));

    auto calls = mock->total_calls();
    try {
        gateway.complete(profile, ask("dead"), params);
        FAIL("expected ProviderError");
    } catch (const Error& e) {
        CHECK(e.code() == errc::provider);
    }
    CHECK(mock->total_calls() == calls + 1);  // non-retryable: a single attempt

    try {
        gateway.complete(profile, ask("always429"), params);
        FAIL("expected RateLimited");
    } catch (const Error& e) {
        CHECK(e.code() == errc::rate_limited);
    }
    CHECK(mock->hits("always429") == 3);  // retried to exhaustion
}

TEST_CASE("in-flight requests per profile never exceed max_concurrency") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();
    std::string fixture;
    for (int i = 0; i < 8; ++i) {
        testsup::append_fixture_line(fixture, "p" + std::to_string(i), {"r"},
                                     {{"latency_ms", 25}});
    }
    auto fixture_path = tmp / "fixture.jsonl";
    testsup::write_file(fixture_path, fixture);
    mock->load_fixture(fixture_path);

    Gateway gateway(mock, tmp / "cache");
    auto profile = testsup::mock_profile();
    profile.max_concurrency = 2;

    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&gateway, &profile, i] {
            GenerationParams params;
            gateway.complete(profile, ask("p" + std::to_string(i)), params);
        });
    }
    for (auto& t : threads) t.join();
    CHECK(mock->total_calls() == 8);
    CHECK(mock->max_in_flight() <= 2);
}

TEST_CASE("multi-sample fallback issues k single calls in order") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();
    mock->add_entry("P", {"only"});
    mock->set_supports_multi_sample(false);
    Gateway gateway(mock, tmp / "cache");

    auto got = gateway.sample_batch(testsup::mock_profile(), ask("P"), 3);
    CHECK(got == std::vector<std::string>{"only", "only", "only"});
    CHECK(mock->total_calls() == 3);
}

TEST_CASE("mock provider matches on fingerprint digests too") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();
    auto profile = testsup::mock_profile();
    GenerationParams params;
    std::vector<ChatMessage> messages{system_message("S"), user_message("U")};
    auto digest = cache_key(request_fingerprint(profile.model_id, messages, params));
    mock->add_entry(digest, {"matched by digest"});

    Gateway gateway(mock, tmp / "cache");
    CHECK(gateway.complete(profile, messages, params) ==
          std::vector<std::string>{"matched by digest"});
}

TEST_CASE("message invariants are enforced") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();
    Gateway gateway(mock, tmp / "cache");
    auto profile = testsup::mock_profile();
    GenerationParams params;

    CHECK_THROWS_AS(gateway.complete(profile, {}, params), Error);
    CHECK_THROWS_AS(gateway.complete(profile, {user_message("")}, params), Error);
    CHECK_THROWS_AS(
        gateway.complete(profile, {system_message("a"), system_message("b"), user_message("u")},
                         params),
        Error);
    CHECK_THROWS_AS(gateway.complete(profile, {user_message("u"), system_message("s")}, params),
                    Error);

    GenerationParams bad;
    bad.temperature = -1.0;
    CHECK_THROWS_AS(gateway.complete(profile, ask("P"), bad), Error);
}

TEST_CASE("duplicate concurrent misses settle on the first published entry") {
    testsup::TempDir tmp;
    DiskCache cache(tmp / "cache");
    auto profile = testsup::mock_profile();
    std::vector<std::thread> threads;
    std::vector<std::vector<std::string>> results(8);
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&, i] {
            CacheEntry entry{"k1", "fp", {"writer " + std::to_string(i)}, 0};
            results[i] = cache.publish(profile, entry).responses;
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& r : results) CHECK(r == results[0]);
}
