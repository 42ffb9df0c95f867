#pragma once

#include <cctype>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithcal/chat.hpp"
#include "faithcal/digest.hpp"
#include "faithcal/errors.hpp"
#include "faithcal/gateway.hpp"
#include "faithcal/prompts.hpp"
#include "faithcal/strings.hpp"

namespace faithcal {

enum class StrategyKind { reflect, ms, hedge, ablated };

inline const char* strategy_kind_name(StrategyKind k) {
    switch (k) {
        case StrategyKind::reflect: return "reflect";
        case StrategyKind::ms: return "ms";
        case StrategyKind::hedge: return "hedge";
        case StrategyKind::ablated: return "ablated";
    }
    return "hedge";
}

inline StrategyKind strategy_kind_from_name(const std::string& s) {
    if (s == "reflect") return StrategyKind::reflect;
    if (s == "ms") return StrategyKind::ms;
    if (s == "hedge") return StrategyKind::hedge;
    if (s == "ablated") return StrategyKind::ablated;
    throw Error(errc::schema_error, "unknown strategy kind '" + s + "'");
}

struct HedgeLexiconEntry {
    std::string phrase;
    double probability;
    std::string printed;  // full printed precision, as shipped in the prompt assets
};

/// The 17 uncertainty phrases with their perceived probabilities, at full
/// printed precision.
inline const std::vector<HedgeLexiconEntry>& hedge_lexicon() {
    static const std::vector<HedgeLexiconEntry> lexicon = [] {
        const std::pair<const char*, const char*> raw[] = {
            {"almost certain", "0.9204390243902439"},
            {"highly likely", "0.8708943089430895"},
            {"very good chance", "0.8052764227642277"},
            {"probable", "0.676178861788618"},
            {"likely", "0.7091056910569106"},
            {"we believe", "0.7508048780487805"},
            {"probably", "0.686829268292683"},
            {"better than even", "0.581219512195122"},
            {"about even", "0.5068292682926829"},
            {"we doubt", "0.223739837398374"},
            {"improbable", "0.16772357723577236"},
            {"unlikely", "0.21178861788617886"},
            {"probably not", "0.24682926829268292"},
            {"little chance", "0.12854065040650406"},
            {"almost no chance", "0.06508545528536586"},
            {"highly unlikely", "0.10757081300821136"},
            {"chances are slight", "0.14398455284552847"},
        };
        std::vector<HedgeLexiconEntry> out;
        for (const auto& [phrase, printed] : raw) {
            out.push_back({phrase, std::strtod(printed, nullptr), printed});
        }
        return out;
    }();
    return lexicon;
}

struct LintFinding {
    std::string code;
    std::string message;
};

/// Mechanized strategy check. For hedge/ms/reflect the findings flag missing
/// required markers; for ablated they flag any metacognitive vocabulary.
inline std::vector<LintFinding> lint_strategy(const std::string& prompt, StrategyKind strategy) {
    std::vector<LintFinding> findings;
    switch (strategy) {
        case StrategyKind::hedge: {
            bool any = false;
            for (const auto& e : hedge_lexicon()) {
                if (detail::icontains(prompt, e.phrase)) {
                    any = true;
                    break;
                }
            }
            if (!any) findings.push_back({"hedge.no_lexicon_phrase", "no hedge lexicon phrase present"});
            break;
        }
        case StrategyKind::ms: {
            if (!detail::icontains(prompt, "metacognitive") && !detail::icontains(prompt, "metacognition")) {
                findings.push_back({"ms.no_metacognitive_marker", "no metacognitive vocabulary present"});
            }
            break;
        }
        case StrategyKind::reflect: {
            if (!detail::icontains(prompt, "reflect") && !detail::icontains(prompt, "meta-thought") &&
                !detail::icontains(prompt, "metacog")) {
                findings.push_back({"reflect.no_reflection_marker", "no reflection vocabulary present"});
            }
            break;
        }
        case StrategyKind::ablated: {
            if (detail::icontains(prompt, "metacog")) {
                findings.push_back(
                    {"ablated.metacognitive_language", "ablated prompt mentions metacognition"});
            }
            break;
        }
    }
    return findings;
}

/// One generated system instruction.
struct CalibrationPrompt {
    std::string text;
    StrategyKind strategy = StrategyKind::hedge;
    std::string generator_model;
    int index = 1;  // 1-based position within the bank
};

struct PromptBank {
    StrategyKind strategy = StrategyKind::hedge;
    std::string generator_model;
    std::string created_at;  // ISO-8601 UTC
    std::string generator_fingerprint;
    std::vector<CalibrationPrompt> prompts;
};

inline nlohmann::ordered_json bank_to_json(const PromptBank& bank) {
    nlohmann::ordered_json j;
    j["strategy"] = strategy_kind_name(bank.strategy);
    j["generator"] = bank.generator_model;
    j["created_at"] = bank.created_at;
    j["generator_fingerprint"] = bank.generator_fingerprint;
    j["prompts"] = nlohmann::json::array();
    for (const auto& p : bank.prompts) j["prompts"].push_back(p.text);
    return j;
}

inline PromptBank bank_from_json(const nlohmann::json& j) {
    PromptBank bank;
    bank.strategy = strategy_kind_from_name(j.at("strategy").get<std::string>());
    bank.generator_model = j.at("generator").get<std::string>();
    bank.created_at = j.value("created_at", "");
    bank.generator_fingerprint = j.value("generator_fingerprint", "");
    int idx = 1;
    for (const auto& t : j.at("prompts")) {
        bank.prompts.push_back({t.get<std::string>(), bank.strategy, bank.generator_model, idx++});
    }
    return bank;
}

inline PromptBank load_bank(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::file_missing, "bank not found: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        return bank_from_json(j);
    } catch (const nlohmann::json::exception& ex) {
        throw Error(errc::schema_error, "bad bank file " + path.string() + ": " + ex.what());
    }
}

/// Writes `banks/<strategy>/<generator>/<timestamp>.json`; returns the path.
inline std::filesystem::path save_bank(const PromptBank& bank, const std::filesystem::path& banks_root) {
    auto dir = banks_root / strategy_kind_name(bank.strategy) /
               detail::sanitize_component(bank.generator_model);
    std::filesystem::create_directories(dir);
    std::string stamp = bank.created_at.empty() ? "bank" : bank.created_at;
    for (auto& c : stamp) {
        if (c == ':') c = '-';
    }
    auto path = dir / (stamp + ".json");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(errc::io_error, "cannot write " + path.string());
    out << bank_to_json(bank).dump(2) << "\n";
    return path;
}

/// Assembles master prompts, drives a generator model to emit calibration
/// prompts, validates them, and persists the result as a reusable bank.
class MetaFaith {
public:
    using Clock = std::function<std::string()>;

    MetaFaith(Gateway& gateway, const PromptStore& prompts)
        : gateway_(gateway), prompts_(prompts), clock_(default_clock) {}

    void set_clock(Clock clock) { clock_ = std::move(clock); }

    /// Master template with {strategy_description} bound to the verbatim
    /// strategy text.
    std::string master_prompt(StrategyKind strategy) const {
        const auto& master = prompts_.asset("metafaith", "master");
        const auto& desc =
            prompts_.asset("metafaith", std::string("strategy_") + strategy_kind_name(strategy));
        return prompts_.render_asset(master, {{"strategy_description", desc.text}});
    }

    /// Sends the master prompt, recovers exactly `n` candidate strings,
    /// validates each, and returns the bank. Advisory lint findings (for
    /// reflect/ms/hedge) go to `advisories` when provided; for ablated any
    /// metacognitive language is a hard ValidationFailed.
    PromptBank generate_bank(const ProviderProfile& generator, StrategyKind strategy, int n = 10,
                             GenerationParams params = {}, std::vector<std::string>* advisories = nullptr) {
        if (n < 1) throw Error(errc::invalid_request, "n must be >= 1");
        std::vector<ChatMessage> messages{user_message(master_prompt(strategy))};
        std::string fingerprint = request_fingerprint(generator.model_id, messages, params);
        std::vector<std::string> replies;
        try {
            replies = gateway_.complete(generator, messages, params);
        } catch (const Error& e) {
            throw Error(errc::generation_failed, std::string("generator call failed: ") + e.what());
        }
        auto candidates = parse_candidates(replies.front());
        if (static_cast<int>(candidates.size()) != n) {
            throw Error(errc::parse_error, "recovered " + std::to_string(candidates.size()) +
                                               " candidate prompts, expected " + std::to_string(n));
        }

        PromptBank bank;
        bank.strategy = strategy;
        bank.generator_model = generator.model_id;
        bank.created_at = clock_();
        bank.generator_fingerprint = cache_key(fingerprint);
        std::vector<std::string> rejections;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const auto& text = candidates[i];
            std::string label = "candidate " + std::to_string(i + 1);
            if (detail::trim(text).empty()) {
                rejections.push_back(label + ": empty");
                continue;
            }
            for (const char* ph : {"{question}", "{answer_choices}", "{answer}", "{hedge_prompt}",
                                   "{strategy_description}"}) {
                if (text.find(ph) != std::string::npos) {
                    rejections.push_back(label + ": unresolved placeholder " + ph);
                }
            }
            auto findings = lint_strategy(text, strategy);
            for (const auto& f : findings) {
                if (strategy == StrategyKind::ablated) {
                    rejections.push_back(label + ": " + f.code + " (" + f.message + ")");
                } else if (advisories != nullptr) {
                    advisories->push_back(label + ": " + f.code + " (" + f.message + ")");
                }
            }
            bank.prompts.push_back(
                {text, strategy, generator.model_id, static_cast<int>(i + 1)});
        }
        if (!rejections.empty()) {
            std::string msg = "rejected candidates:";
            for (const auto& r : rejections) msg += "\n  " + r;
            throw Error(errc::validation_failed, msg);
        }
        return bank;
    }

    /// Recovers candidate prompt strings from a generator reply: a Python or
    /// JSON list of string literals (optionally inside a code fence), a
    /// plain numbered list, or bare string literals, tried in that order.
    static std::vector<std::string> parse_candidates(const std::string& reply) {
        std::string body = strip_code_fence(reply);
        if (body.find('[') != std::string::npos) {
            auto quoted = extract_bracketed_strings(body);
            if (!quoted.empty()) return quoted;
        }
        auto numbered = extract_numbered_lines(body);
        if (!numbered.empty()) return numbered;
        return extract_string_literals(body);
    }

private:
    static std::string default_clock() {
        std::time_t t = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H-%M-%SZ", std::gmtime(&t));
        return buf;
    }

    static std::string strip_code_fence(const std::string& s) {
        auto open = s.find("```");
        if (open == std::string::npos) return s;
        auto nl = s.find('\n', open);
        if (nl == std::string::npos) return s;
        auto close = s.find("```", nl);
        if (close == std::string::npos) return s.substr(nl + 1);
        return s.substr(nl + 1, close - nl - 1);
    }

    /// String literals inside the first [...] block, honoring quotes and
    /// escapes while matching brackets.
    static std::vector<std::string> extract_bracketed_strings(const std::string& s) {
        std::size_t begin = s.find('[');
        std::size_t end = std::string::npos;
        int depth = 0;
        bool in_str = false;
        char quote = 0;
        for (std::size_t i = begin; i < s.size(); ++i) {
            char c = s[i];
            if (in_str) {
                if (c == '\\') {
                    ++i;
                } else if (c == quote) {
                    in_str = false;
                }
                continue;
            }
            if (c == '"' || c == '\'') {
                in_str = true;
                quote = c;
            } else if (c == '[') {
                ++depth;
            } else if (c == ']') {
                if (--depth == 0) {
                    end = i;
                    break;
                }
            }
        }
        if (end == std::string::npos) return {};
        return extract_string_literals(s.substr(begin + 1, end - begin - 1));
    }

    static std::vector<std::string> extract_string_literals(const std::string& s) {
        std::vector<std::string> out;
        std::size_t i = 0;
        while (i < s.size()) {
            char c = s[i];
            if (c != '"' && c != '\'') {
                ++i;
                continue;
            }
            // triple quotes
            bool triple = i + 2 < s.size() && s[i + 1] == c && s[i + 2] == c;
            std::string closer = triple ? std::string(3, c) : std::string(1, c);
            std::size_t start = i + closer.size();
            std::string lit;
            std::size_t j = start;
            bool closed = false;
            while (j < s.size()) {
                if (!triple && s[j] == '\\' && j + 1 < s.size()) {
                    lit.push_back(unescape(s[j + 1]));
                    j += 2;
                    continue;
                }
                if (s.compare(j, closer.size(), closer) == 0) {
                    closed = true;
                    break;
                }
                lit.push_back(s[j]);
                ++j;
            }
            if (!closed) break;
            if (!lit.empty()) out.push_back(std::move(lit));
            i = j + closer.size();
        }
        return out;
    }

    static char unescape(char c) {
        switch (c) {
            case 'n': return '\n';
            case 't': return '\t';
            case 'r': return '\r';
            default: return c;
        }
    }

    static std::vector<std::string> extract_numbered_lines(const std::string& s) {
        std::vector<std::string> out;
        std::istringstream in(s);
        std::string line;
        while (std::getline(in, line)) {
            auto t = detail::trim(line);
            std::size_t i = 0;
            while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
            if (i == 0 || i >= t.size() || (t[i] != '.' && t[i] != ')')) continue;
            auto text = detail::trim(t.substr(i + 1));
            if (text.size() >= 2 && (text.front() == '"' || text.front() == '\'') &&
                text.back() == text.front()) {
                text = text.substr(1, text.size() - 2);
            }
            if (!text.empty()) out.push_back(text);
        }
        return out;
    }

    Gateway& gateway_;
    const PromptStore& prompts_;
    Clock clock_;
};

}  // namespace faithcal
