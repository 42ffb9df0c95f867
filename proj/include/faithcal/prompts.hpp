#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithcal/chat.hpp"
#include "faithcal/digest.hpp"
#include "faithcal/errors.hpp"
#include "faithcal/sample.hpp"

namespace faithcal {

enum class ElicitationVariant { none, basic, genuine, human, perception };

inline const char* elicitation_name(ElicitationVariant v) {
    switch (v) {
        case ElicitationVariant::none: return "none";
        case ElicitationVariant::basic: return "basic";
        case ElicitationVariant::genuine: return "genuine";
        case ElicitationVariant::human: return "human";
        case ElicitationVariant::perception: return "perception";
    }
    return "none";
}

inline ElicitationVariant elicitation_from_name(const std::string& s) {
    if (s == "none") return ElicitationVariant::none;
    if (s == "basic") return ElicitationVariant::basic;
    if (s == "genuine") return ElicitationVariant::genuine;
    if (s == "human") return ElicitationVariant::human;
    if (s == "perception") return ElicitationVariant::perception;
    throw Error(errc::schema_error, "unknown elicitation variant '" + s + "'");
}

enum class JudgePromptKind { assertion_extraction, decisiveness, consistency, accuracy };

inline const char* judge_prompt_name(JudgePromptKind k) {
    switch (k) {
        case JudgePromptKind::assertion_extraction: return "assertion_extraction";
        case JudgePromptKind::decisiveness: return "decisiveness";
        case JudgePromptKind::consistency: return "consistency";
        case JudgePromptKind::accuracy: return "accuracy";
    }
    return "decisiveness";
}

enum class StrategyPlacement { system, user_suffix, second_turn, few_shot_prefix };

inline const char* placement_name(StrategyPlacement p) {
    switch (p) {
        case StrategyPlacement::system: return "system";
        case StrategyPlacement::user_suffix: return "user_suffix";
        case StrategyPlacement::second_turn: return "second_turn";
        case StrategyPlacement::few_shot_prefix: return "few_shot_prefix";
    }
    return "system";
}

inline StrategyPlacement placement_from_name(const std::string& s) {
    if (s == "system") return StrategyPlacement::system;
    if (s == "user_suffix") return StrategyPlacement::user_suffix;
    if (s == "second_turn") return StrategyPlacement::second_turn;
    if (s == "few_shot_prefix") return StrategyPlacement::few_shot_prefix;
    throw Error(errc::schema_error, "unknown placement '" + s + "'");
}

struct StrategyPromptAsset {
    std::string name;
    StrategyPlacement placement = StrategyPlacement::system;
    std::string text;
};

namespace detail {

inline bool placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

/// Single-pass substitution of the declared placeholders only. Other brace
/// sequences (literal dicts, LaTeX) pass through untouched; substituted
/// values are never rescanned.
inline std::string render_template(const std::string& tmpl,
                                   const std::map<std::string, std::string>& bindings,
                                   const std::vector<std::string>& declared) {
    std::set<std::string> known(declared.begin(), declared.end());
    std::string out;
    out.reserve(tmpl.size());
    for (std::size_t i = 0; i < tmpl.size();) {
        if (tmpl[i] == '{') {
            std::size_t j = i + 1;
            while (j < tmpl.size() && placeholder_char(tmpl[j])) ++j;
            if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
                std::string name = tmpl.substr(i + 1, j - i - 1);
                if (known.count(name)) {
                    auto it = bindings.find(name);
                    if (it == bindings.end()) {
                        throw Error(errc::missing_field, "no binding for placeholder {" + name + "}");
                    }
                    out += it->second;
                    i = j + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i]);
        ++i;
    }
    return out;
}

}  // namespace detail

/// Byte-exact store for every shipped prompt asset. Loads
/// `<root>/manifest.json`, reads each listed file and verifies its digest, so
/// a drifted asset fails fast instead of silently skewing scores. Immutable
/// after construction.
class PromptStore {
public:
    struct Asset {
        std::string name;
        std::string group;
        std::string text;
        std::string sha256;
        std::vector<std::string> placeholders;
        StrategyPlacement placement = StrategyPlacement::system;
    };

    explicit PromptStore(const std::filesystem::path& root) : root_(root) {
        auto manifest_path = root / "manifest.json";
        std::ifstream in(manifest_path, std::ios::binary);
        if (!in) throw Error(errc::file_missing, "missing " + manifest_path.string());
        nlohmann::json manifest;
        try {
            in >> manifest;
        } catch (const nlohmann::json::exception& ex) {
            throw Error(errc::asset_error, "bad manifest: " + std::string(ex.what()));
        }
        for (const auto& j : manifest.at("assets")) {
            Asset a;
            a.name = j.at("name").get<std::string>();
            a.group = j.at("group").get<std::string>();
            a.sha256 = j.at("sha256").get<std::string>();
            a.placeholders = j.value("placeholders", std::vector<std::string>{});
            if (j.contains("placement")) {
                a.placement = placement_from_name(j["placement"].get<std::string>());
            }
            auto file = root / j.at("path").get<std::string>();
            a.text = read_file(file);
            if (sha256_hex(a.text) != a.sha256) {
                throw Error(errc::asset_error, "digest mismatch for asset " + a.group + "/" + a.name);
            }
            assets_[a.group + "/" + a.name] = std::move(a);
        }
    }

    const std::filesystem::path& root() const { return root_; }

    const Asset& asset(const std::string& group, const std::string& name) const {
        auto it = assets_.find(group + "/" + name);
        if (it == assets_.end()) {
            throw Error(errc::asset_error, "no such prompt asset " + group + "/" + name);
        }
        return it->second;
    }

    std::vector<const Asset*> all_assets() const {
        std::vector<const Asset*> out;
        out.reserve(assets_.size());
        for (const auto& [_, a] : assets_) out.push_back(&a);
        return out;
    }

    /// Verbatim uncertainty elicitation string (leading space included for
    /// the non-none variants; none is the empty string).
    std::string elicitation_text(ElicitationVariant v) const {
        return asset("elicitation", elicitation_name(v)).text;
    }

    /// Renders the task template for the sample's kind, filling the hedge
    /// slot with the elicitation text. `hedge_suffix` lands directly after
    /// the elicitation string (used for user_suffix strategy prompts).
    std::string render_task(const TaskSample& sample, ElicitationVariant variant,
                            const std::string& hedge_suffix = "") const {
        const Asset& a = asset("task", task_kind_name(sample.kind));
        std::map<std::string, std::string> bindings;
        bindings["question"] = sample.question;
        std::string hedge = elicitation_text(variant);
        if (!hedge_suffix.empty()) hedge += " " + hedge_suffix;
        bindings["hedge_prompt"] = hedge;
        if (needs(a, "answer_choices")) {
            if (sample.answer_choices.empty()) {
                throw Error(errc::missing_field,
                            "sample " + sample.id + " has no answer choices for " +
                                task_kind_name(sample.kind));
            }
            bindings["answer_choices"] =
                format_choices(sample.answer_choices, sample.kind == TaskKind::mc_letters);
        }
        if (needs(a, "answer")) {
            if (!sample.proposed_answer) {
                throw Error(errc::missing_field,
                            "sample " + sample.id + " has no proposed answer for halu_detect");
            }
            bindings["answer"] = *sample.proposed_answer;
        }
        return render_asset(a, bindings);
    }

    /// A judge prompt is a single self-contained user message.
    std::vector<ChatMessage> judge_prompt(JudgePromptKind kind,
                                          const std::map<std::string, std::string>& bindings) const {
        const Asset& a = asset("judge", judge_prompt_name(kind));
        return {user_message(render_asset(a, bindings))};
    }

    StrategyPromptAsset strategy_prompt(const std::string& name) const {
        auto it = assets_.find("strategy/" + name);
        if (it == assets_.end()) throw Error(errc::unknown_strategy, "no strategy '" + name + "'");
        return {it->second.name, it->second.placement, it->second.text};
    }

    std::vector<std::string> strategy_names() const {
        std::vector<std::string> names;
        for (const auto& [key, a] : assets_) {
            if (a.group == "strategy") names.push_back(a.name);
        }
        return names;
    }

    /// Placeholder closure holds by construction: the single rendering pass
    /// either substitutes each declared placeholder or throws MissingField,
    /// and substituted values are never rescanned.
    std::string render_asset(const Asset& a, const std::map<std::string, std::string>& bindings) const {
        return detail::render_template(a.text, bindings, a.placeholders);
    }

    /// Answer-choice block: one per line, "A. "/"B. " for letters and
    /// "1. "/"2. " for numbers.
    static std::string format_choices(const std::vector<std::string>& choices, bool letters) {
        std::ostringstream out;
        for (std::size_t i = 0; i < choices.size(); ++i) {
            if (i != 0) out << '\n';
            if (letters) {
                out << static_cast<char>('A' + i) << ". " << choices[i];
            } else {
                out << (i + 1) << ". " << choices[i];
            }
        }
        return out.str();
    }

private:
    static bool needs(const Asset& a, const std::string& placeholder) {
        for (const auto& p : a.placeholders) {
            if (p == placeholder) return true;
        }
        return false;
    }

    static std::string read_file(const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw Error(errc::file_missing, "missing asset file " + p.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    std::filesystem::path root_;
    std::map<std::string, Asset> assets_;
};

}  // namespace faithcal
