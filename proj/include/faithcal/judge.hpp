#pragma once

#include <cctype>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithcal/chat.hpp"
#include "faithcal/errors.hpp"
#include "faithcal/gateway.hpp"
#include "faithcal/metrics.hpp"
#include "faithcal/prompts.hpp"
#include "faithcal/strings.hpp"

namespace faithcal {

struct Assertion {
    std::string text;

    bool operator==(const Assertion&) const = default;
};

struct JudgeConfig {
    ProviderProfile profile;
    GenerationParams params;  // judge calls run at provider defaults
};

/// The four LLM-as-judge calls plus the strict parsers from raw judge text
/// to typed scores. Judge traffic goes through the gateway and is cached
/// like any other call.
class Judge {
public:
    Judge(Gateway& gateway, const PromptStore& prompts, JudgeConfig config)
        : gateway_(gateway), prompts_(prompts), config_(std::move(config)) {}

    const JudgeConfig& config() const { return config_; }

    std::vector<Assertion> extract_assertions(const std::string& response) {
        if (response.empty()) throw Error(errc::invalid_request, "empty response");
        auto reply = call(JudgePromptKind::assertion_extraction, {{"answer", response}});
        return parse_assertions(reply);
    }

    double score_decisiveness(const std::string& assertion_or_answer) {
        if (assertion_or_answer.empty()) throw Error(errc::invalid_request, "empty input");
        auto reply = call(JudgePromptKind::decisiveness, {{"text", assertion_or_answer}});
        return parse_decisiveness(reply);
    }

    ConsistencyJudgment judge_consistency(const Assertion& assertion,
                                          const std::string& sampled_response) {
        if (assertion.text.empty() || sampled_response.empty()) {
            throw Error(errc::invalid_request, "empty assertion or sampled response");
        }
        auto reply = call(JudgePromptKind::consistency,
                          {{"assertion", assertion.text}, {"sampled_response", sampled_response}});
        return parse_consistency(reply);
    }

    bool judge_accuracy(const std::string& prediction, const std::vector<std::string>& references) {
        if (references.empty()) throw Error(errc::invalid_request, "no references");
        auto reply = call(JudgePromptKind::accuracy,
                          {{"targets", nlohmann::json(references).dump()}, {"pred", prediction}});
        return parse_accuracy(reply);
    }

    // --- parsers (pure; exposed for direct testing) ---

    /// Every line beginning "Extracted assertion:" yields one assertion; a
    /// bare marker or an empty reply signals punting and contributes none.
    static std::vector<Assertion> parse_assertions(const std::string& judge_output) {
        static const std::string marker = "Extracted assertion:";
        std::vector<Assertion> out;
        bool saw_marker = false;
        std::istringstream in(judge_output);
        std::string line;
        while (std::getline(in, line)) {
            auto t = detail::trim(line);
            if (t.rfind(marker, 0) != 0) continue;
            saw_marker = true;
            auto text = detail::trim(t.substr(marker.size()));
            if (!text.empty()) out.push_back({std::move(text)});
        }
        if (!saw_marker && !detail::trim(judge_output).empty()) {
            throw Error(errc::unparseable_judge_output,
                        "no 'Extracted assertion' marker in: " + judge_output);
        }
        return out;
    }

    /// First decimal literal in the reply, tolerating prefixes like
    /// "Rating: "; must land in [0,1].
    static double parse_decisiveness(const std::string& judge_output) {
        const std::string& s = judge_output;
        for (std::size_t i = 0; i < s.size(); ++i) {
            unsigned char c = s[i];
            bool starts_number = std::isdigit(c) ||
                                 (c == '.' && i + 1 < s.size() &&
                                  std::isdigit(static_cast<unsigned char>(s[i + 1])));
            if (!starts_number) continue;
            bool negative = i > 0 && s[i - 1] == '-';
            std::size_t j = i;
            bool dot = false;
            while (j < s.size()) {
                if (std::isdigit(static_cast<unsigned char>(s[j]))) {
                    ++j;
                } else if (s[j] == '.' && !dot) {
                    dot = true;
                    ++j;
                } else {
                    break;
                }
            }
            double v = std::stod(s.substr(i, j - i));
            if (negative) v = -v;
            if (v < 0.0 || v > 1.0) {
                throw Error(errc::rating_out_of_range, "rating " + s.substr(i, j - i) +
                                                           " outside [0,1] in: " + judge_output);
            }
            return v;
        }
        throw Error(errc::unparseable_judge_output, "no decimal literal in: " + judge_output);
    }

    /// First token "yes" -> yes, "no" -> no, anything else -> na.
    static ConsistencyJudgment parse_consistency(const std::string& judge_output) {
        auto tok = detail::first_token_normalized(judge_output);
        if (tok == "yes") return ConsistencyJudgment::yes;
        if (tok == "no") return ConsistencyJudgment::no;
        return ConsistencyJudgment::na;
    }

    static bool parse_accuracy(const std::string& judge_output) {
        auto tok = detail::first_token_normalized(judge_output);
        if (tok == "true") return true;
        if (tok == "false") return false;
        throw Error(errc::unparseable_judge_output, "neither True nor False: " + judge_output);
    }

private:
    std::string call(JudgePromptKind kind, const std::map<std::string, std::string>& bindings) {
        auto messages = prompts_.judge_prompt(kind, bindings);
        try {
            auto responses = gateway_.complete(config_.profile, messages, config_.params);
            return responses.front();
        } catch (const Error& e) {
            if (e.code() == errc::missing_field) throw;
            throw Error(errc::judge_call_failed,
                        std::string(judge_prompt_name(kind)) + " call failed: " + e.what());
        }
    }

    Gateway& gateway_;
    const PromptStore& prompts_;
    JudgeConfig config_;
};

}  // namespace faithcal
