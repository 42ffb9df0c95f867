#include <catch2/catch_amalgamated.hpp>

#include <memory>
#include <set>

#include "faithcal/gateway.hpp"
#include "faithcal/metafaith.hpp"
#include "faithcal/mock_provider.hpp"
#include "faithcal/prompts.hpp"
#include "faithcal/strings.hpp"
#include "test_support.hpp"

using namespace faithcal;

namespace {

const PromptStore& store() {
    static PromptStore s(testsup::assets_dir());
    return s;
}

std::string ten_prompt_reply(const std::string& flavor) {
    std::string reply = "Here are the prompts:\n```python\n[\n";
    for (int i = 1; i <= 10; ++i) {
        reply += "    \"Prompt " + std::to_string(i) + " (" + flavor +
                 "): it is \\\"almost certain\\\" you can express uncertainty faithfully.\",\n";
    }
    reply += "]\n```\n";
    return reply;
}

}  // namespace

TEST_CASE("hedge lexicon ships all 17 pairs at full printed precision") {
    const auto& lex = hedge_lexicon();
    REQUIRE(lex.size() == 17);

    std::map<std::string, std::string> printed;
    for (const auto& e : lex) printed[e.phrase] = e.printed;
    CHECK(printed.at("almost certain") == "0.9204390243902439");
    CHECK(printed.at("about even") == "0.5068292682926829");
    CHECK(printed.at("almost no chance") == "0.06508545528536586");
    CHECK(printed.at("highly likely") == "0.8708943089430895");
    CHECK(printed.at("chances are slight") == "0.14398455284552847");

    std::set<std::string> phrases;
    for (const auto& e : lex) {
        phrases.insert(e.phrase);
        CHECK(e.probability > 0.0);
        CHECK(e.probability < 1.0);
        CHECK(e.probability == std::stod(e.printed));
    }
    CHECK(phrases == std::set<std::string>{
                         "almost certain", "highly likely", "very good chance", "probable",
                         "likely", "we believe", "probably", "better than even", "about even",
                         "we doubt", "improbable", "unlikely", "probably not", "little chance",
                         "almost no chance", "highly unlikely", "chances are slight"});
}

TEST_CASE("master prompts embed their strategy descriptions") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();
    Gateway gateway(mock, tmp / "cache");
    MetaFaith metafaith(gateway, store());

    auto hedge = metafaith.master_prompt(StrategyKind::hedge);
    CHECK(hedge.find("high metacognitive sensitivity") != std::string::npos);
    for (const auto& e : hedge_lexicon()) {
        CHECK(hedge.find("\"" + e.phrase + "\"") != std::string::npos);
        CHECK(hedge.find(e.printed) != std::string::npos);
    }
    CHECK(hedge.find("10 Python strings") != std::string::npos);
    CHECK(hedge.find("Final Answer:") != std::string::npos);
    CHECK(hedge.find("{strategy_description}") == std::string::npos);

    auto ablated = metafaith.master_prompt(StrategyKind::ablated);
    CHECK(detail::lower(ablated).find("metacog") == std::string::npos);
    for (const auto& e : hedge_lexicon()) {
        CHECK(ablated.find(e.printed) != std::string::npos);
    }

    auto reflect = metafaith.master_prompt(StrategyKind::reflect);
    CHECK(reflect.find("meta-thoughts") != std::string::npos);

    auto ms = metafaith.master_prompt(StrategyKind::ms);
    CHECK(ms.find("metacognitive sensitivity") != std::string::npos);
}

TEST_CASE("strategy lint flags missing and forbidden markers") {
    CHECK(lint_strategy("Say \"probably\" when unsure.", StrategyKind::hedge).empty());
    CHECK(lint_strategy("Express uncertainty.", StrategyKind::hedge).size() == 1);

    CHECK(lint_strategy("You have metacognitive awareness.", StrategyKind::ms).empty());
    CHECK(lint_strategy("You are self-aware.", StrategyKind::ms).size() == 1);

    CHECK(lint_strategy("Reflect before answering.", StrategyKind::reflect).empty());
    CHECK(lint_strategy("Use meta-thoughts first.", StrategyKind::reflect).empty());
    CHECK(lint_strategy("Answer carefully.", StrategyKind::reflect).size() == 1);

    auto findings = lint_strategy("Use Metacognition to plan.", StrategyKind::ablated);
    REQUIRE(findings.size() == 1);
    CHECK(findings[0].code == "ablated.metacognitive_language");
    CHECK(lint_strategy("Say \"probably\" when unsure.", StrategyKind::ablated).empty());
}

TEST_CASE("generate_bank parses a fenced python list in fixture order") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();
    Gateway gateway(mock, tmp / "cache");
    MetaFaith metafaith(gateway, store());
    metafaith.set_clock([] { return std::string("2025-01-02T03-04-05Z"); });

    mock->add_entry(metafaith.master_prompt(StrategyKind::hedge), {ten_prompt_reply("hedge")});
    auto generator = testsup::mock_profile("gen-model");

    auto bank = metafaith.generate_bank(generator, StrategyKind::hedge);
    REQUIRE(bank.prompts.size() == 10);
    CHECK(bank.prompts.front().text.rfind("Prompt 1 (hedge):", 0) == 0);
    CHECK(bank.prompts.back().text.rfind("Prompt 10 (hedge):", 0) == 0);
    CHECK(bank.prompts.front().index == 1);
    CHECK(bank.prompts.back().index == 10);
    CHECK(bank.generator_model == "gen-model");
    CHECK(bank.strategy == StrategyKind::hedge);
    CHECK_FALSE(bank.generator_fingerprint.empty());

    // determinism: same fixture, same clock -> identical bank
    auto again = metafaith.generate_bank(generator, StrategyKind::hedge);
    REQUIRE(again.prompts.size() == bank.prompts.size());
    for (std::size_t i = 0; i < bank.prompts.size(); ++i) {
        CHECK(again.prompts[i].text == bank.prompts[i].text);
    }
}

TEST_CASE("banks round-trip through persistence losslessly") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();
    Gateway gateway(mock, tmp / "cache");
    MetaFaith metafaith(gateway, store());
    metafaith.set_clock([] { return std::string("2025-01-02T03-04-05Z"); });
    mock->add_entry(metafaith.master_prompt(StrategyKind::hedge), {ten_prompt_reply("rt")});

    auto bank = metafaith.generate_bank(testsup::mock_profile("gen-model"), StrategyKind::hedge);
    auto path = save_bank(bank, tmp / "banks");
    CHECK(path == tmp / "banks" / "hedge" / "gen-model" / "2025-01-02T03-04-05Z.json");

    auto loaded = load_bank(path);
    CHECK(loaded.strategy == bank.strategy);
    CHECK(loaded.generator_model == bank.generator_model);
    REQUIRE(loaded.prompts.size() == bank.prompts.size());
    for (std::size_t i = 0; i < bank.prompts.size(); ++i) {
        CHECK(loaded.prompts[i].text == bank.prompts[i].text);
        CHECK(loaded.prompts[i].index == bank.prompts[i].index);
    }
}

TEST_CASE("a short reply is a ParseError naming the shortfall") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();
    Gateway gateway(mock, tmp / "cache");
    MetaFaith metafaith(gateway, store());
    mock->add_entry(metafaith.master_prompt(StrategyKind::ms),
                    {"[\"one prompt\", \"two prompts\"]"});
    try {
        metafaith.generate_bank(testsup::mock_profile(), StrategyKind::ms);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == errc::parse_error);
        CHECK(std::string(e.what()).find("2") != std::string::npos);
        CHECK(std::string(e.what()).find("10") != std::string::npos);
    }
}

TEST_CASE("ablated banks reject metacognitive language") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();
    Gateway gateway(mock, tmp / "cache");
    MetaFaith metafaith(gateway, store());

    std::string reply = "[";
    for (int i = 1; i <= 10; ++i) {
        std::string text = i == 4 ? "Rely on your metacognitive sensitivity here."
                                  : "Prompt " + std::to_string(i) + " with \\\"about even\\\" odds.";
        reply += "\"" + text + "\"";
        if (i != 10) reply += ", ";
    }
    reply += "]";
    mock->add_entry(metafaith.master_prompt(StrategyKind::ablated), {reply});

    try {
        metafaith.generate_bank(testsup::mock_profile(), StrategyKind::ablated);
        FAIL("expected ValidationFailed");
    } catch (const Error& e) {
        CHECK(e.code() == errc::validation_failed);
        CHECK(std::string(e.what()).find("candidate 4") != std::string::npos);
    }
}

TEST_CASE("advisory findings do not reject non-ablated banks") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();
    Gateway gateway(mock, tmp / "cache");
    MetaFaith metafaith(gateway, store());

    std::string reply = "[";
    for (int i = 1; i <= 10; ++i) {
        reply += "\"Plain prompt " + std::to_string(i) + " without lexicon phrases.\"";
        if (i != 10) reply += ", ";
    }
    reply += "]";
    mock->add_entry(metafaith.master_prompt(StrategyKind::hedge), {reply});

    std::vector<std::string> advisories;
    auto bank = metafaith.generate_bank(testsup::mock_profile(), StrategyKind::hedge, 10, {},
                                        &advisories);
    CHECK(bank.prompts.size() == 10);
    CHECK(advisories.size() == 10);  // every candidate lacks a lexicon phrase
}

TEST_CASE("candidate parser accepts a plain numbered list") {
    auto got = MetaFaith::parse_candidates("1. First prompt text.\n"
                                           "2) Second prompt text.\n"
                                           "notes in between are skipped\n"
                                           "3. Third prompt text.");
    REQUIRE(got.size() == 3);
    CHECK(got[0] == "First prompt text.");
    CHECK(got[1] == "Second prompt text.");
    CHECK(got[2] == "Third prompt text.");
}

TEST_CASE("candidate parser honors escapes and embedded brackets") {
    auto got = MetaFaith::parse_candidates(
        "```\n[\"Say \\\"likely\\\" [or similar]\", 'single quoted']\n```");
    REQUIRE(got.size() == 2);
    CHECK(got[0] == "Say \"likely\" [or similar]");
    CHECK(got[1] == "single quoted");
}

TEST_CASE("candidate parser reads json arrays") {
    auto got = MetaFaith::parse_candidates("[\"a b c\", \"d e f\"]");
    REQUIRE(got.size() == 2);
    CHECK(got[0] == "a b c");
}
