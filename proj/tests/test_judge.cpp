#include <catch2/catch_amalgamated.hpp>

#include <memory>
#include <random>

#include "faithcal/gateway.hpp"
#include "faithcal/judge.hpp"
#include "faithcal/mock_provider.hpp"
#include "faithcal/prompts.hpp"
#include "test_support.hpp"

using namespace faithcal;
using Catch::Matchers::WithinAbs;

namespace {

const PromptStore& store() {
    static PromptStore s(testsup::assets_dir());
    return s;
}

}  // namespace

TEST_CASE("assertion parser handles the judge exemplars") {
    auto one = Judge::parse_assertions(
        "Extracted assertion: JJ appears in Criminal Minds season 6, episode 2.");
    REQUIRE(one.size() == 1);
    CHECK(one[0].text == "JJ appears in Criminal Minds season 6, episode 2.");

    auto two = Judge::parse_assertions("Extracted assertion: The answer is Episode 1.\n"
                                       "Extracted assertion: The answer is John Reeves.");
    REQUIRE(two.size() == 2);
    CHECK(two[0].text == "The answer is Episode 1.");
    CHECK(two[1].text == "The answer is John Reeves.");
}

TEST_CASE("bare marker or silence signal punting, not failure") {
    CHECK(Judge::parse_assertions("Extracted assertion:").empty());
    CHECK(Judge::parse_assertions("Extracted assertion: ").empty());
    CHECK(Judge::parse_assertions("").empty());
    CHECK(Judge::parse_assertions("  \n \t").empty());
}

TEST_CASE("markerless non-empty output is unparseable") {
    try {
        Judge::parse_assertions("The response contains no assertions I can find.");
        FAIL("expected UnparseableJudgeOutput");
    } catch (const Error& e) {
        CHECK(e.code() == errc::unparseable_judge_output);
    }
}

TEST_CASE("assertion parser ignores surrounding chatter") {
    auto got = Judge::parse_assertions("Sure, here you go:\n"
                                       "Extracted assertion: Water boils at 100C.\n"
                                       "That is all.");
    REQUIRE(got.size() == 1);
    CHECK(got[0].text == "Water boils at 100C.");
}

TEST_CASE("decisiveness parser reads the first decimal literal") {
    CHECK_THAT(Judge::parse_decisiveness("0.129"), WithinAbs(0.129, 1e-15));
    CHECK_THAT(Judge::parse_decisiveness("Rating: 0.689"), WithinAbs(0.689, 1e-15));
    CHECK(Judge::parse_decisiveness("1.0") == 1.0);
    CHECK(Judge::parse_decisiveness("1") == 1.0);
    CHECK(Judge::parse_decisiveness(".5") == 0.5);
    CHECK(Judge::parse_decisiveness("rating = 0.80 (confident)") == 0.80);
}

TEST_CASE("decisiveness parser rejects out-of-range and empty replies") {
    try {
        Judge::parse_decisiveness("1.5");
        FAIL("expected RatingOutOfRange");
    } catch (const Error& e) {
        CHECK(e.code() == errc::rating_out_of_range);
    }
    CHECK_THROWS_AS(Judge::parse_decisiveness("-0.2"), Error);
    try {
        Judge::parse_decisiveness("no rating here");
        FAIL("expected UnparseableJudgeOutput");
    } catch (const Error& e) {
        CHECK(e.code() == errc::unparseable_judge_output);
    }
}

TEST_CASE("consistency parser maps yes/no and falls back to na") {
    CHECK(Judge::parse_consistency("Yes") == ConsistencyJudgment::yes);
    CHECK(Judge::parse_consistency("yes, it is consistent") == ConsistencyJudgment::yes);
    CHECK(Judge::parse_consistency("No.") == ConsistencyJudgment::no);
    CHECK(Judge::parse_consistency("NO!") == ConsistencyJudgment::no);
    CHECK(Judge::parse_consistency("It is unclear from the context") == ConsistencyJudgment::na);
    CHECK(Judge::parse_consistency("") == ConsistencyJudgment::na);
    // the na fallback must map to inconsistency 0.5 downstream
    CHECK(inconsistency_score(Judge::parse_consistency("maybe")) == 0.5);
}

TEST_CASE("accuracy parser maps True/False and rejects the rest") {
    CHECK(Judge::parse_accuracy("True"));
    CHECK(Judge::parse_accuracy("true."));
    CHECK_FALSE(Judge::parse_accuracy("False"));
    CHECK_FALSE(Judge::parse_accuracy("FALSE - the prediction differs"));
    try {
        Judge::parse_accuracy("Maybe");
        FAIL("expected UnparseableJudgeOutput");
    } catch (const Error& e) {
        CHECK(e.code() == errc::unparseable_judge_output);
    }
}

TEST_CASE("parsers are total over fuzzed replies") {
    std::mt19937_64 rng(424242);
    const std::string alphabet = "abcYyNnoOEHsS.01 5:\nExtracted assertion:Rating TrueFalse-";
    for (int trial = 0; trial < 2000; ++trial) {
        std::string s;
        std::size_t len = rng() % 60;
        for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);

        // each parser returns a typed value or throws a typed Error; nothing else
        try {
            auto a = Judge::parse_assertions(s);
            for (const auto& x : a) CHECK_FALSE(x.text.empty());
        } catch (const Error& e) {
            CHECK(e.code() == errc::unparseable_judge_output);
        }
        try {
            double d = Judge::parse_decisiveness(s);
            CHECK(d >= 0.0);
            CHECK(d <= 1.0);
        } catch (const Error& e) {
            CHECK((e.code() == errc::unparseable_judge_output ||
                   e.code() == errc::rating_out_of_range));
        }
        auto c = Judge::parse_consistency(s);
        CHECK((c == ConsistencyJudgment::yes || c == ConsistencyJudgment::no ||
               c == ConsistencyJudgment::na));
        try {
            (void)Judge::parse_accuracy(s);
        } catch (const Error& e) {
            CHECK(e.code() == errc::unparseable_judge_output);
        }
    }
}

TEST_CASE("judge calls run through the gateway and its cache") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();
    auto profile = testsup::mock_profile("judge-model");

    auto extraction = store().judge_prompt(JudgePromptKind::assertion_extraction,
                                           {{"answer", "Paris."}});
    mock->add_entry(extraction[0].content, {"Extracted assertion: The answer is Paris."});
    auto decisiveness = store().judge_prompt(JudgePromptKind::decisiveness,
                                             {{"text", "The answer is Paris."}});
    mock->add_entry(decisiveness[0].content, {"0.95"});
    auto consistency = store().judge_prompt(
        JudgePromptKind::consistency,
        {{"assertion", "The answer is Paris."}, {"sampled_response", "Paris"}});
    mock->add_entry(consistency[0].content, {"Yes"});
    auto accuracy = store().judge_prompt(
        JudgePromptKind::accuracy, {{"targets", "[\"Paris\"]"}, {"pred", "Paris."}});
    mock->add_entry(accuracy[0].content, {"True"});

    Gateway gateway(mock, tmp / "cache");
    Judge judge(gateway, store(), {profile, {}});

    auto assertions = judge.extract_assertions("Paris.");
    REQUIRE(assertions.size() == 1);
    CHECK(assertions[0].text == "The answer is Paris.");
    CHECK(judge.score_decisiveness("The answer is Paris.") == 0.95);
    CHECK(judge.judge_consistency(assertions[0], "Paris") == ConsistencyJudgment::yes);
    CHECK(judge.judge_accuracy("Paris.", {"Paris"}));

    // identical calls come out of the cache, not the provider
    auto calls = mock->total_calls();
    CHECK(judge.score_decisiveness("The answer is Paris.") == 0.95);
    CHECK(judge.judge_accuracy("Paris.", {"Paris"}));
    CHECK(mock->total_calls() == calls);
}

TEST_CASE("judge wraps provider failures as JudgeCallFailed") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();  // no fixture entries at all
    Gateway gateway(mock, tmp / "cache");
    Judge judge(gateway, store(), {testsup::mock_profile("judge-model"), {}});
    try {
        judge.score_decisiveness("anything");
        FAIL("expected JudgeCallFailed");
    } catch (const Error& e) {
        CHECK(e.code() == errc::judge_call_failed);
    }
}

TEST_CASE("judge rejects empty inputs up front") {
    testsup::TempDir tmp;
    auto mock = std::make_shared<MockProvider>();
    Gateway gateway(mock, tmp / "cache");
    Judge judge(gateway, store(), {testsup::mock_profile(), {}});
    CHECK_THROWS_AS(judge.extract_assertions(""), Error);
    CHECK_THROWS_AS(judge.score_decisiveness(""), Error);
    CHECK_THROWS_AS(judge.judge_consistency({"x"}, ""), Error);
    CHECK_THROWS_AS(judge.judge_accuracy("p", {}), Error);
}
