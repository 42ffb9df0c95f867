#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithcal/chat.hpp"
#include "faithcal/dataset.hpp"
#include "faithcal/errors.hpp"
#include "faithcal/gateway.hpp"
#include "faithcal/judge.hpp"
#include "faithcal/metafaith.hpp"
#include "faithcal/metrics.hpp"
#include "faithcal/prompts.hpp"
#include "faithcal/report.hpp"

namespace faithcal {

/// Main response plus the K sampled responses for one (sample, model,
/// prompt condition).
struct GenerationRecord {
    std::string sample_id;
    std::vector<ChatMessage> request_messages;  // messages of the scored stage
    std::string main_response;
    std::vector<std::string> sampled_responses;
    std::optional<std::string> initial_response;  // second_turn strategies only
};

/// One extracted assertion with its decisiveness, K consistency judgments,
/// and the derived intrinsic confidence.
struct AssertionScore {
    Assertion assertion;
    double decisiveness = 0.0;
    std::vector<ConsistencyJudgment> judgments;
    std::vector<double> inconsistency_scores;
    double confidence = 0.0;
};

struct JudgedSample {
    std::string sample_id;
    bool punted = false;
    std::vector<AssertionScore> scores;
};

/// What occupies the system slot: nothing, one strategy asset, or one
/// calibration prompt.
struct SystemPromptSlot {
    std::optional<StrategyPromptAsset> strategy;
    std::optional<CalibrationPrompt> calibration;

    bool empty() const { return !strategy && !calibration; }

    std::string label() const {
        if (calibration) {
            return "calib:" + std::string(strategy_kind_name(calibration->strategy)) + "#" +
                   std::to_string(calibration->index);
        }
        if (strategy) return "strategy:" + strategy->name;
        return "";
    }
};

struct RunConfig {
    ProviderProfile evaluated_model;
    GenerationParams gen_params;  // main-response params; sampling reuses them with n=k
    JudgeConfig judge;
    DatasetSpec dataset;
    ElicitationVariant elicitation = ElicitationVariant::basic;
    SystemPromptSlot system_prompt;
    int k = 20;
    int sample_count = 1000;
    std::uint64_t sample_seed = 0;
    BinSpec bins;
    int workers = 1;
    std::string run_id;  // empty: derived from the config fingerprint
    std::filesystem::path runs_dir = "runs";
};

inline std::string condition_label(const RunConfig& cfg) {
    std::string label = elicitation_name(cfg.elicitation);
    auto slot = cfg.system_prompt.label();
    if (!slot.empty()) label += "+" + slot;
    return label;
}

/// Digest of the semantic run parameters. Storage locations (runs_dir, the
/// dataset file path) and worker count are excluded: results depend on
/// dataset content and identity, not on where files sit.
inline std::string config_fingerprint(const RunConfig& cfg) {
    nlohmann::json j{
        {"model",
         {{"provider", cfg.evaluated_model.provider_name},
          {"endpoint", cfg.evaluated_model.endpoint},
          {"model_id", cfg.evaluated_model.model_id}}},
        {"gen_params",
         {{"temperature", detail::fixed_decimal(cfg.gen_params.temperature)},
          {"max_tokens", cfg.gen_params.max_tokens}}},
        {"judge",
         {{"provider", cfg.judge.profile.provider_name},
          {"endpoint", cfg.judge.profile.endpoint},
          {"model_id", cfg.judge.profile.model_id},
          {"temperature", detail::fixed_decimal(cfg.judge.params.temperature)},
          {"max_tokens", cfg.judge.params.max_tokens}}},
        {"dataset",
         {{"name", cfg.dataset.name}, {"kind", task_kind_name(cfg.dataset.kind)}}},
        {"condition", condition_label(cfg)},
        {"system_prompt_text",
         cfg.system_prompt.calibration ? cfg.system_prompt.calibration->text
         : cfg.system_prompt.strategy ? cfg.system_prompt.strategy->text
                                      : ""},
        {"k", cfg.k},
        {"sample_count", cfg.sample_count},
        {"sample_seed", cfg.sample_seed},
        {"bin_count", cfg.bins.bin_count},
    };
    return sha256_hex(j.dump());
}

namespace detail {

enum class Stage { pending = 0, generated = 1, judged = 2, scored = 3 };

inline const char* stage_name(Stage s) {
    switch (s) {
        case Stage::pending: return "pending";
        case Stage::generated: return "generated";
        case Stage::judged: return "judged";
        case Stage::scored: return "scored";
    }
    return "pending";
}

inline Stage stage_from_name(const std::string& s) {
    if (s == "generated") return Stage::generated;
    if (s == "judged") return Stage::judged;
    if (s == "scored") return Stage::scored;
    return Stage::pending;
}

inline bool stage_at_least(Stage a, Stage b) {
    return static_cast<int>(a) >= static_cast<int>(b);
}

inline void atomic_write(const std::filesystem::path& path, const std::string& data) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(errc::io_error, "cannot write " + tmp.string());
        out << data;
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io_error, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

/// Per-sample stage markers, persisted so an interrupted run can resume
/// without repeating completed work. Stages only move forward. Not
/// internally synchronized; the pipeline serializes access.
class RunState {
public:
    RunState() = default;

    explicit RunState(std::string fingerprint) : fingerprint_(std::move(fingerprint)) {}

    const std::string& fingerprint() const { return fingerprint_; }

    detail::Stage stage(const std::string& sample_id) const {
        auto it = stages_.find(sample_id);
        return it == stages_.end() ? detail::Stage::pending : it->second;
    }

    void advance(const std::string& sample_id, detail::Stage to) {
        auto& cur = stages_[sample_id];
        if (!detail::stage_at_least(to, cur)) {
            throw Error(errc::io_error, "stage regression for sample " + sample_id);
        }
        cur = to;
    }

    /// A failure records the error without regressing the stage, so a retry
    /// resumes from the last completed stage.
    void mark_failed(const std::string& sample_id, const std::string& error) {
        errors_[sample_id] = error;
    }

    void clear_failure(const std::string& sample_id) { errors_.erase(sample_id); }

    std::optional<std::string> error_of(const std::string& sample_id) const {
        auto it = errors_.find(sample_id);
        if (it == errors_.end()) return std::nullopt;
        return it->second;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["config_fingerprint"] = fingerprint_;
        nlohmann::ordered_json stages;
        for (const auto& [id, st] : stages_) stages[id] = detail::stage_name(st);
        j["stages"] = std::move(stages);
        nlohmann::ordered_json errors;
        for (const auto& [id, msg] : errors_) errors[id] = msg;
        j["errors"] = std::move(errors);
        return j;
    }

    static RunState from_json(const nlohmann::json& j) {
        RunState s;
        s.fingerprint_ = j.at("config_fingerprint").get<std::string>();
        for (const auto& [id, st] : j.at("stages").items()) {
            s.stages_[id] = detail::stage_from_name(st.get<std::string>());
        }
        if (j.contains("errors")) {
            for (const auto& [id, msg] : j.at("errors").items()) {
                s.errors_[id] = msg.get<std::string>();
            }
        }
        return s;
    }

private:
    std::string fingerprint_;
    std::map<std::string, detail::Stage> stages_;
    std::map<std::string, std::string> errors_;
};

struct DryRunPlan {
    std::string run_id;
    std::string condition;
    int sample_count = 0;
    int k = 0;
    std::string system_prompt_text;
    std::string example_user_prompt;
    int planned_generation_requests = 0;  // one main + one sampling batch per sample
    std::string judge_call_bound;
};

/// End-to-end orchestrator: dataset ingestion and sampling, generation
/// (main + K samples), judging, scoring, with resumable persisted state.
class Pipeline {
public:
    Pipeline(Gateway& gateway, const PromptStore& prompts, RunConfig config)
        : gateway_(gateway), prompts_(prompts), config_(std::move(config)),
          judge_(gateway, prompts, config_.judge) {
        if (config_.k < 1) throw Error(errc::invalid_request, "k must be >= 1");
        if (config_.sample_count < 1) throw Error(errc::invalid_request, "sample_count must be >= 1");
        if (config_.workers < 1) throw Error(errc::invalid_request, "workers must be >= 1");
        if (config_.system_prompt.strategy && config_.system_prompt.calibration) {
            throw Error(errc::invalid_request,
                        "system slot holds either a strategy asset or a calibration prompt, not both");
        }
        if (config_.system_prompt.strategy &&
            config_.system_prompt.strategy->placement == StrategyPlacement::few_shot_prefix) {
            throw Error(errc::invalid_request, "few-shot strategies are not available");
        }
        fingerprint_ = config_fingerprint(config_);
        if (config_.run_id.empty()) config_.run_id = "run-" + fingerprint_.substr(0, 12);
    }

    const RunConfig& config() const { return config_; }
    const std::string& run_id() const { return config_.run_id; }
    std::filesystem::path run_dir() const { return config_.runs_dir / config_.run_id; }

    /// Loads, subsamples, and reports the planned work without issuing a
    /// single gateway call or touching the runs directory.
    DryRunPlan dry_run() {
        auto samples = load_and_subsample();
        DryRunPlan plan;
        plan.run_id = config_.run_id;
        plan.condition = condition_label(config_);
        plan.sample_count = static_cast<int>(samples.size());
        plan.k = config_.k;
        plan.system_prompt_text = system_prompt_text();
        plan.example_user_prompt = samples.empty() ? "" : user_prompt_for(samples.front());
        plan.planned_generation_requests = 2 * static_cast<int>(samples.size());
        plan.judge_call_bound = "per sample: 1 extraction + N*(1 decisiveness + " +
                                std::to_string(config_.k) + " consistency) + 1 accuracy";
        return plan;
    }

    /// Runs every stage for every sample, skipping work recorded as done.
    DatasetReport run() {
        auto samples = load_and_subsample();
        prepare_run_dir();

        // A finished run is a no-op: hand back the final report.
        auto report_path = run_dir() / "report.json";
        if (std::filesystem::exists(report_path)) {
            bool all_done = true;
            for (const auto& s : samples) {
                std::lock_guard<std::mutex> lock(state_mu_);
                if (state_.stage(s.id) != detail::Stage::scored && !state_.error_of(s.id)) {
                    all_done = false;
                    break;
                }
            }
            if (all_done) return load_report(report_path);
        }

        std::vector<std::optional<SampleEval>> evals(samples.size());
        std::vector<std::optional<std::pair<errc, std::string>>> failures(samples.size());

        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= samples.size()) return;
                const auto& sample = samples[i];
                try {
                    evals[i] = process_sample(sample);
                } catch (const Error& e) {
                    failures[i] = std::make_pair(e.code(), std::string(e.what()));
                    std::lock_guard<std::mutex> lock(state_mu_);
                    state_.mark_failed(sample.id, e.what());
                    persist_state_locked();
                }
            }
        };
        if (config_.workers == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(config_.workers);
            for (int w = 0; w < config_.workers; ++w) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }

        return finalize(samples, evals, failures);
    }

    /// Continues an existing run. UnknownRun when nothing was started;
    /// ConfigMismatch when the persisted config fingerprint differs.
    DatasetReport resume() {
        if (!std::filesystem::exists(run_dir() / "config.json")) {
            throw Error(errc::unknown_run, "no run at " + run_dir().string());
        }
        return run();
    }

    // --- single-sample stage drivers (also used by tests) ---

    GenerationRecord run_generation(const TaskSample& sample) {
        GenerationRecord rec;
        rec.sample_id = sample.id;
        GenerationParams main_params = config_.gen_params;
        main_params.num_samples = 1;

        const auto* strat = config_.system_prompt.strategy ? &*config_.system_prompt.strategy : nullptr;
        if (strat != nullptr && strat->placement == StrategyPlacement::second_turn) {
            std::vector<ChatMessage> first{user_message(user_prompt_for(sample))};
            rec.initial_response = gateway_.complete(config_.evaluated_model, first, main_params).front();
            first.push_back(assistant_message(*rec.initial_response));
            first.push_back(user_message(strat->text));
            rec.request_messages = std::move(first);
        } else {
            std::vector<ChatMessage> messages;
            if (auto sys = system_prompt_text(); !sys.empty()) {
                messages.push_back(system_message(sys));
            }
            messages.push_back(user_message(user_prompt_for(sample)));
            rec.request_messages = std::move(messages);
        }
        rec.main_response =
            gateway_.complete(config_.evaluated_model, rec.request_messages, main_params).front();
        rec.sampled_responses = gateway_.sample_batch(config_.evaluated_model, rec.request_messages,
                                                      config_.k, config_.gen_params);
        return rec;
    }

    JudgedSample run_judging(const GenerationRecord& rec) {
        JudgedSample js;
        js.sample_id = rec.sample_id;
        auto assertions = judge_.extract_assertions(rec.main_response);
        if (assertions.empty()) {
            js.punted = true;
            return js;
        }
        for (const auto& assertion : assertions) {
            AssertionScore score;
            score.assertion = assertion;
            score.decisiveness = judge_.score_decisiveness(assertion.text);
            score.judgments.reserve(rec.sampled_responses.size());
            for (const auto& sampled : rec.sampled_responses) {
                auto judgment = judge_.judge_consistency(assertion, sampled);
                score.judgments.push_back(judgment);
                score.inconsistency_scores.push_back(inconsistency_score(judgment));
            }
            score.confidence = intrinsic_confidence(score.judgments);
            js.scores.push_back(std::move(score));
        }
        return js;
    }

    SampleEval score_sample(const TaskSample& sample, const GenerationRecord& rec,
                            const JudgedSample& js) {
        SampleEval ev;
        ev.sample_id = sample.id;
        ev.punted = js.punted;
        ev.assertion_count = static_cast<int>(js.scores.size());
        if (js.punted) return ev;

        std::vector<double> decs, confs;
        for (const auto& s : js.scores) {
            decs.push_back(s.decisiveness);
            confs.push_back(s.confidence);
        }
        ev.faithfulness = faithfulness(decs, confs);
        ev.mean_decisiveness = detail::mean(decs);
        ev.mean_confidence = detail::mean(confs);
        ev.correct = judge_.judge_accuracy(rec.main_response, sample.references);
        return ev;
    }

    const RunState& state() const { return state_; }

private:
    std::string system_prompt_text() const {
        if (config_.system_prompt.calibration) return config_.system_prompt.calibration->text;
        if (config_.system_prompt.strategy &&
            config_.system_prompt.strategy->placement == StrategyPlacement::system) {
            return config_.system_prompt.strategy->text;
        }
        return "";
    }

    std::string user_prompt_for(const TaskSample& sample) const {
        std::string suffix;
        if (config_.system_prompt.strategy &&
            config_.system_prompt.strategy->placement == StrategyPlacement::user_suffix) {
            suffix = config_.system_prompt.strategy->text;
        }
        return prompts_.render_task(sample, config_.elicitation, suffix);
    }

    std::vector<TaskSample> load_and_subsample() {
        auto samples = load_dataset(config_.dataset);
        return subsample(samples, static_cast<std::size_t>(config_.sample_count), config_.sample_seed);
    }

    void prepare_run_dir() {
        auto dir = run_dir();
        std::filesystem::create_directories(dir / "records");
        std::filesystem::create_directories(dir / "judged");

        auto config_path = dir / "config.json";
        if (std::filesystem::exists(config_path)) {
            nlohmann::json existing = nlohmann::json::parse(detail::read_file_or_throw(config_path));
            auto stored = existing.value("config_fingerprint", "");
            if (stored != fingerprint_) {
                throw Error(errc::config_mismatch,
                            "run " + config_.run_id + " was started with a different config");
            }
        } else {
            nlohmann::ordered_json j;
            j["run_id"] = config_.run_id;
            j["config_fingerprint"] = fingerprint_;
            j["model"] = config_.evaluated_model.model_id;
            j["dataset"] = config_.dataset.name;
            j["condition"] = condition_label(config_);
            j["k"] = config_.k;
            j["sample_count"] = config_.sample_count;
            j["sample_seed"] = config_.sample_seed;
            j["bin_count"] = config_.bins.bin_count;
            detail::atomic_write(config_path, j.dump(2) + "\n");
        }

        auto state_path = dir / "state.json";
        std::lock_guard<std::mutex> lock(state_mu_);
        if (std::filesystem::exists(state_path)) {
            auto j = nlohmann::json::parse(detail::read_file_or_throw(state_path));
            RunState loaded = RunState::from_json(j);
            if (loaded.fingerprint() != fingerprint_) {
                throw Error(errc::config_mismatch,
                            "state of run " + config_.run_id + " has a different config fingerprint");
            }
            state_ = std::move(loaded);
        } else {
            state_ = RunState(fingerprint_);
            persist_state_locked();
        }
    }

    void advance_and_persist(const std::string& sample_id, detail::Stage to) {
        std::lock_guard<std::mutex> lock(state_mu_);
        state_.advance(sample_id, to);
        persist_state_locked();
    }

    void persist_state_locked() {
        detail::atomic_write(run_dir() / "state.json", state_.to_json().dump(2) + "\n");
    }

    SampleEval process_sample(const TaskSample& sample) {
        detail::Stage stage;
        {
            std::lock_guard<std::mutex> lock(state_mu_);
            state_.clear_failure(sample.id);
            stage = state_.stage(sample.id);
        }

        GenerationRecord rec;
        if (detail::stage_at_least(stage, detail::Stage::generated)) {
            rec = load_record(sample.id);
        } else {
            rec = run_generation(sample);
            save_record(rec);
            advance_and_persist(sample.id, detail::Stage::generated);
        }

        JudgedSample js;
        if (detail::stage_at_least(stage, detail::Stage::judged)) {
            js = load_judged(sample.id);
        } else {
            js = run_judging(rec);
            save_judged(js);
            advance_and_persist(sample.id, detail::Stage::judged);
        }

        // Scoring is recomputed each pass; its one judge call (accuracy) is
        // served from the gateway cache on resume.
        return score_sample(sample, rec, js);
    }

    void save_record(const GenerationRecord& rec) const {
        nlohmann::ordered_json j;
        j["sample_id"] = rec.sample_id;
        j["messages"] = nlohmann::json::array();
        for (const auto& m : rec.request_messages) {
            j["messages"].push_back({{"role", role_name(m.role)}, {"content", m.content}});
        }
        j["main_response"] = rec.main_response;
        j["sampled_responses"] = rec.sampled_responses;
        if (rec.initial_response) j["initial_response"] = *rec.initial_response;
        // calibration prompts may instruct a "Final Answer:" demarcation; the
        // full response is scored either way, so record the marker as metadata
        j["final_answer_marker"] = rec.main_response.find("Final Answer:") != std::string::npos;
        detail::atomic_write(run_dir() / "records" / (rec.sample_id + ".json"), j.dump(2) + "\n");
    }

    GenerationRecord load_record(const std::string& sample_id) const {
        auto path = run_dir() / "records" / (sample_id + ".json");
        auto j = nlohmann::json::parse(detail::read_file_or_throw(path));
        GenerationRecord rec;
        rec.sample_id = j.at("sample_id").get<std::string>();
        for (const auto& m : j.at("messages")) {
            rec.request_messages.push_back(
                {role_from_name(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
        }
        rec.main_response = j.at("main_response").get<std::string>();
        rec.sampled_responses = j.at("sampled_responses").get<std::vector<std::string>>();
        if (j.contains("initial_response")) rec.initial_response = j["initial_response"].get<std::string>();
        return rec;
    }

    void save_judged(const JudgedSample& js) const {
        nlohmann::ordered_json j;
        j["sample_id"] = js.sample_id;
        j["punted"] = js.punted;
        j["assertions"] = nlohmann::json::array();
        for (const auto& s : js.scores) {
            nlohmann::ordered_json a;
            a["text"] = s.assertion.text;
            a["decisiveness"] = s.decisiveness;
            a["judgments"] = nlohmann::json::array();
            for (auto jm : s.judgments) a["judgments"].push_back(judgment_name(jm));
            a["confidence"] = s.confidence;
            j["assertions"].push_back(std::move(a));
        }
        detail::atomic_write(run_dir() / "judged" / (js.sample_id + ".json"), j.dump(2) + "\n");
    }

    JudgedSample load_judged(const std::string& sample_id) const {
        auto path = run_dir() / "judged" / (sample_id + ".json");
        auto j = nlohmann::json::parse(detail::read_file_or_throw(path));
        JudgedSample js;
        js.sample_id = j.at("sample_id").get<std::string>();
        js.punted = j.at("punted").get<bool>();
        for (const auto& a : j.at("assertions")) {
            AssertionScore s;
            s.assertion.text = a.at("text").get<std::string>();
            s.decisiveness = a.at("decisiveness").get<double>();
            for (const auto& jm : a.at("judgments")) {
                auto judgment = judgment_from_name(jm.get<std::string>());
                s.judgments.push_back(judgment);
                s.inconsistency_scores.push_back(inconsistency_score(judgment));
            }
            s.confidence = a.at("confidence").get<double>();
            js.scores.push_back(std::move(s));
        }
        return js;
    }

    DatasetReport finalize(const std::vector<TaskSample>& samples,
                           const std::vector<std::optional<SampleEval>>& evals,
                           const std::vector<std::optional<std::pair<errc, std::string>>>& failures) {
        std::vector<SampleEval> ok;
        int punted = 0, failed = 0;
        const std::pair<errc, std::string>* first_failure = nullptr;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (failures[i]) {
                ++failed;
                if (first_failure == nullptr) first_failure = &*failures[i];
                continue;
            }
            if (evals[i]) {
                if (evals[i]->punted) ++punted;
                ok.push_back(*evals[i]);
            }
        }
        const int total = static_cast<int>(samples.size());
        const int scored = static_cast<int>(ok.size()) - punted;
        if (scored == 0 && punted == 0 && first_failure != nullptr) {
            // nothing punted, everything broke: surface the underlying error class
            throw Error(first_failure->first, "all " + std::to_string(total) +
                                                  " samples failed; first: " + first_failure->second);
        }
        if (scored == 0) {
            double rate = total > 0 ? static_cast<double>(punted) / total : 0.0;
            std::ostringstream msg;
            msg << "no scorable samples: " << punted << " of " << total << " punted (punt rate "
                << rate << "), " << failed << " failed";
            throw Error(errc::no_scorable_samples, msg.str());
        }

        DatasetReport report;
        report.run_id = config_.run_id;
        report.model = config_.evaluated_model.model_id;
        report.dataset = config_.dataset.name;
        report.condition = condition_label(config_);
        report.sample_count = total;
        report.scored_count = scored;
        report.punted_count = punted;
        report.failed_count = failed;
        report.punt_rate = static_cast<double>(punted) / total;
        report.k = config_.k;
        report.bin_count = config_.bins.bin_count;

        std::vector<double> confidences, decisivenesses;
        std::vector<bool> corrects;
        std::vector<double> accuracy_values;
        for (const auto& ev : ok) {
            if (ev.punted) continue;
            confidences.push_back(*ev.mean_confidence);
            decisivenesses.push_back(*ev.mean_decisiveness);
            corrects.push_back(*ev.correct);
            accuracy_values.push_back(*ev.correct ? 1.0 : 0.0);
        }
        report.accuracy = detail::mean(accuracy_values);
        report.cmfg = cmfg(ok, config_.bins);
        report.ece = ece(confidences, corrects, config_.bins);
        report.brier = brier(confidences, corrects);
        try {
            report.spearman = spearman(decisivenesses, confidences);
        } catch (const Error& e) {
            if (e.code() != errc::too_few_points && e.code() != errc::degenerate_input) throw;
        }

        write_evals(samples, evals, failures);
        {
            std::lock_guard<std::mutex> lock(state_mu_);
            for (const auto& ev : ok) {
                state_.advance(ev.sample_id, detail::Stage::scored);
            }
            persist_state_locked();
        }
        detail::atomic_write(run_dir() / "report.json", report_to_json(report).dump(2) + "\n");
        return report;
    }

    void write_evals(const std::vector<TaskSample>& samples,
                     const std::vector<std::optional<SampleEval>>& evals,
                     const std::vector<std::optional<std::pair<errc, std::string>>>& failures) {
        std::ostringstream out;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            nlohmann::ordered_json j;
            j["sample_id"] = samples[i].id;
            if (failures[i]) {
                j["failed"] = true;
                j["error"] = failures[i]->second;
            } else if (evals[i]) {
                const auto& ev = *evals[i];
                j["punted"] = ev.punted;
                j["assertion_count"] = ev.assertion_count;
                if (!ev.punted) {
                    j["faithfulness"] = *ev.faithfulness;
                    j["correct"] = *ev.correct;
                    j["mean_decisiveness"] = *ev.mean_decisiveness;
                    j["mean_confidence"] = *ev.mean_confidence;
                }
            }
            out << j.dump() << "\n";
        }
        detail::atomic_write(run_dir() / "evals.jsonl", out.str());
    }

    Gateway& gateway_;
    const PromptStore& prompts_;
    RunConfig config_;
    Judge judge_;
    std::string fingerprint_;
    RunState state_;
    std::mutex state_mu_;
};

}  // namespace faithcal
