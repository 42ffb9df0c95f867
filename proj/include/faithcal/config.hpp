#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithcal/errors.hpp"
#include "faithcal/metafaith.hpp"
#include "faithcal/pipeline.hpp"

namespace faithcal {

/// Parsed run configuration file. Sections: model, judge, dataset, prompts,
/// run. Credentials never appear here; profiles reference environment
/// variables by name.
struct AppConfig {
    RunConfig run;
    std::filesystem::path assets_dir = "assets/prompts";
    std::filesystem::path cache_dir = ".faithcal-cache";
    std::vector<std::filesystem::path> mock_fixtures;
    std::optional<std::string> strategy_name;          // prompts.strategy
    std::optional<std::filesystem::path> bank_path;    // prompts.calibration_bank
    int bank_index = 1;                                // 1-based
};

namespace detail {

inline ProviderProfile profile_from_json(const nlohmann::json& j, const std::string& section) {
    ProviderProfile p;
    if (!j.contains("provider")) {
        throw Error(errc::schema_error, section + ".provider is required (\"mock\" or \"http\")");
    }
    p.provider_name = j.at("provider").get<std::string>();
    p.endpoint = j.value("endpoint", "");
    if (!j.contains("model_id")) throw Error(errc::schema_error, section + ".model_id is required");
    p.model_id = j.at("model_id").get<std::string>();
    p.auth_ref = j.value("auth_env", "");
    p.max_concurrency = j.value("max_concurrency", 4);
    if (j.contains("retry")) {
        p.retry.max_attempts = j["retry"].value("max_attempts", 3);
        p.retry.base_backoff_ms = j["retry"].value("base_backoff_ms", 200);
    }
    return p;
}

inline GenerationParams params_from_json(const nlohmann::json& j) {
    GenerationParams p;
    p.temperature = j.value("temperature", 1.0);
    p.max_tokens = j.value("max_tokens", 250);
    if (j.contains("seed") && !j.at("seed").is_null()) p.seed = j.at("seed").get<std::int64_t>();
    return p;
}

}  // namespace detail

inline AppConfig load_app_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::file_missing, "config not found: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(errc::schema_error, "bad config " + path.string() + ": " + ex.what());
    }

    AppConfig cfg;
    if (!j.contains("model")) throw Error(errc::schema_error, "config needs a model section");
    cfg.run.evaluated_model = detail::profile_from_json(j["model"], "model");
    cfg.run.gen_params = detail::params_from_json(j["model"]);

    if (!j.contains("judge")) throw Error(errc::schema_error, "config needs a judge section");
    cfg.run.judge.profile = detail::profile_from_json(j["judge"], "judge");
    cfg.run.judge.params = detail::params_from_json(j["judge"]);

    if (!j.contains("dataset")) throw Error(errc::schema_error, "config needs a dataset section");
    const auto& d = j["dataset"];
    if (!d.contains("path")) throw Error(errc::schema_error, "dataset.path is required");
    cfg.run.dataset.path = d.at("path").get<std::string>();
    cfg.run.dataset.name = d.value("name", cfg.run.dataset.path.stem().string());
    cfg.run.dataset.kind = task_kind_from_name(d.value("kind", "qa"));
    cfg.run.dataset.lenient = d.value("lenient", false);
    if (d.contains("field_map")) {
        const auto& fm = d["field_map"];
        cfg.run.dataset.field_map.id = fm.value("id", "id");
        cfg.run.dataset.field_map.question = fm.value("question", "question");
        cfg.run.dataset.field_map.answer_choices = fm.value("answer_choices", "answer_choices");
        cfg.run.dataset.field_map.proposed_answer = fm.value("proposed_answer", "proposed_answer");
        cfg.run.dataset.field_map.references = fm.value("references", "references");
    }

    if (j.contains("prompts")) {
        const auto& p = j["prompts"];
        cfg.assets_dir = p.value("assets_dir", cfg.assets_dir.string());
        cfg.run.elicitation = elicitation_from_name(p.value("elicitation", "basic"));
        if (p.contains("strategy") && !p.at("strategy").is_null()) {
            cfg.strategy_name = p.at("strategy").get<std::string>();
        }
        if (p.contains("calibration_bank") && !p.at("calibration_bank").is_null()) {
            cfg.bank_path = p.at("calibration_bank").get<std::string>();
            cfg.bank_index = p.value("calibration_index", 1);
        }
        if (cfg.strategy_name && cfg.bank_path) {
            throw Error(errc::schema_error,
                        "prompts.strategy and prompts.calibration_bank are mutually exclusive");
        }
    }

    if (j.contains("run")) {
        const auto& r = j["run"];
        cfg.run.k = r.value("k", 20);
        cfg.run.sample_count = r.value("sample_count", 1000);
        cfg.run.sample_seed = r.value("sample_seed", std::uint64_t{0});
        cfg.run.bins.bin_count = r.value("bins", 10);
        cfg.run.workers = r.value("workers", 1);
        cfg.run.runs_dir = r.value("runs_dir", std::string("runs"));
        cfg.run.run_id = r.value("run_id", "");
        cfg.cache_dir = r.value("cache_dir", cfg.cache_dir.string());
        if (r.contains("mock_fixtures")) {
            for (const auto& f : r["mock_fixtures"]) {
                cfg.mock_fixtures.emplace_back(f.get<std::string>());
            }
        }
    }
    return cfg;
}

/// Fills the system-prompt slot from the prompts section: a named strategy
/// asset or one calibration prompt drawn from a persisted bank.
inline void resolve_system_prompt(AppConfig& cfg, const PromptStore& store) {
    if (cfg.strategy_name) {
        cfg.run.system_prompt.strategy = store.strategy_prompt(*cfg.strategy_name);
    } else if (cfg.bank_path) {
        auto bank = load_bank(*cfg.bank_path);
        if (cfg.bank_index < 1 || cfg.bank_index > static_cast<int>(bank.prompts.size())) {
            throw Error(errc::schema_error,
                        "calibration_index " + std::to_string(cfg.bank_index) + " outside bank of " +
                            std::to_string(bank.prompts.size()));
        }
        cfg.run.system_prompt.calibration = bank.prompts[cfg.bank_index - 1];
    }
}

}  // namespace faithcal
