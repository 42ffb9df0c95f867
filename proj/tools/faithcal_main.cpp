#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "faithcal/config.hpp"
#include "faithcal/gateway.hpp"
#include "faithcal/http_provider.hpp"
#include "faithcal/metafaith.hpp"
#include "faithcal/mock_provider.hpp"
#include "faithcal/pipeline.hpp"
#include "faithcal/report.hpp"

namespace {

using namespace faithcal;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitProvider = 3;
constexpr int kExitScoring = 4;

int exit_code_for(errc c) {
    switch (c) {
        case errc::auth:
        case errc::rate_limited:
        case errc::provider:
        case errc::timeout:
        case errc::partial_batch:
        case errc::generation_failed:
        case errc::judge_call_failed:
            return kExitProvider;
        case errc::unparseable_judge_output:
        case errc::rating_out_of_range:
        case errc::length_mismatch:
        case errc::empty_input:
        case errc::too_few_points:
        case errc::degenerate_input:
        case errc::no_scorable_samples:
        case errc::parse_error:
        case errc::validation_failed:
            return kExitScoring;
        default:
            return kExitConfig;
    }
}

std::shared_ptr<Provider> build_provider(const AppConfig& cfg) {
    auto router = std::make_shared<RoutingProvider>();
    auto mock = std::make_shared<MockProvider>();
    for (const auto& fixture : cfg.mock_fixtures) mock->load_fixture(fixture);
    router->add_route("mock", std::move(mock));
    router->add_route("http", std::make_shared<HttpChatProvider>());
    return router;
}

void write_or_print(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(errc::io_error, "cannot write " + out_path);
    out << text;
}

struct RunFlags {
    std::string config_path;
    std::string runs_dir, cache_dir, run_id, assets_dir, elicitation;
    int workers = 0, k = 0, sample_count = 0;
    std::int64_t sample_seed = -1;
    bool dry_run = false;
};

AppConfig resolve_config(const RunFlags& flags) {
    AppConfig cfg = load_app_config(flags.config_path);
    if (!flags.runs_dir.empty()) cfg.run.runs_dir = flags.runs_dir;
    if (!flags.cache_dir.empty()) cfg.cache_dir = flags.cache_dir;
    if (!flags.run_id.empty()) cfg.run.run_id = flags.run_id;
    if (!flags.assets_dir.empty()) cfg.assets_dir = flags.assets_dir;
    if (!flags.elicitation.empty()) cfg.run.elicitation = elicitation_from_name(flags.elicitation);
    if (flags.workers > 0) cfg.run.workers = flags.workers;
    if (flags.k > 0) cfg.run.k = flags.k;
    if (flags.sample_count > 0) cfg.run.sample_count = flags.sample_count;
    if (flags.sample_seed >= 0) cfg.run.sample_seed = static_cast<std::uint64_t>(flags.sample_seed);
    return cfg;
}

int do_run(const RunFlags& flags, bool resume) {
    AppConfig cfg = resolve_config(flags);
    PromptStore store(cfg.assets_dir);
    resolve_system_prompt(cfg, store);
    Gateway gateway(build_provider(cfg), cfg.cache_dir);
    Pipeline pipeline(gateway, store, cfg.run);

    if (flags.dry_run) {
        auto plan = pipeline.dry_run();
        std::cout << "run id:        " << plan.run_id << "\n"
                  << "condition:     " << plan.condition << "\n"
                  << "samples:       " << plan.sample_count << "\n"
                  << "k:             " << plan.k << "\n"
                  << "generation:    " << plan.planned_generation_requests
                  << " requests (1 main + 1 batch of " << plan.k << " per sample)\n"
                  << "judge calls:   " << plan.judge_call_bound << "\n";
        if (!plan.system_prompt_text.empty()) {
            std::cout << "--- system prompt ---\n" << plan.system_prompt_text << "\n";
        }
        std::cout << "--- user prompt (first sample) ---\n" << plan.example_user_prompt << "\n";
        return kExitOk;
    }

    DatasetReport report = resume ? pipeline.resume() : pipeline.run();
    std::cout << render_reports({report}, ReportFormat::markdown);
    std::cout << "report: " << (pipeline.run_dir() / "report.json").string() << "\n";
    return kExitOk;
}

int do_report(const std::vector<std::string>& inputs, const std::string& format,
              const std::string& out_path) {
    std::vector<DatasetReport> reports;
    for (const auto& path : inputs) reports.push_back(load_report(path));
    write_or_print(render_reports(reports, report_format_from_name(format)), out_path);
    return kExitOk;
}

int do_compare(const std::vector<std::string>& baseline_paths,
               const std::vector<std::string>& treatment_paths, const std::string& select,
               const std::string& format, const std::string& out_path) {
    std::vector<DatasetReport> baselines, treatments;
    for (const auto& p : baseline_paths) baselines.push_back(load_report(p));
    for (const auto& p : treatment_paths) treatments.push_back(load_report(p));
    if (select == "best") baselines = select_best(baselines);
    auto rows = compare(baselines, treatments);
    write_or_print(render_comparison(rows, report_format_from_name(format)), out_path);
    return kExitOk;
}

int do_metafaith_gen(const std::string& config_path, const std::string& strategy, int n,
                     const std::string& banks_dir, const std::string& created_at) {
    AppConfig cfg = load_app_config(config_path);
    PromptStore store(cfg.assets_dir);
    Gateway gateway(build_provider(cfg), cfg.cache_dir);
    MetaFaith metafaith(gateway, store);
    if (!created_at.empty()) {
        metafaith.set_clock([created_at] { return created_at; });
    }
    std::vector<std::string> advisories;
    auto bank = metafaith.generate_bank(cfg.run.evaluated_model, strategy_kind_from_name(strategy),
                                        n, cfg.run.gen_params, &advisories);
    auto path = save_bank(bank, banks_dir);
    for (const auto& a : advisories) std::cout << "advisory: " << a << "\n";
    std::cout << "bank of " << bank.prompts.size() << " prompts: " << path.string() << "\n";
    return kExitOk;
}

int do_validate(const std::string& assets_dir, const std::string& bank_path) {
    if (assets_dir.empty() && bank_path.empty()) {
        std::cerr << "error: pass --assets and/or --bank\n";
        return kExitConfig;
    }
    if (!assets_dir.empty()) {
        PromptStore store(assets_dir);  // digest verification happens on load
        std::cout << "assets ok: " << store.all_assets().size() << " verified in " << assets_dir
                  << "\n";
    }
    if (!bank_path.empty()) {
        auto bank = load_bank(bank_path);
        bool reject = false;
        for (const auto& p : bank.prompts) {
            for (const auto& f : lint_strategy(p.text, bank.strategy)) {
                bool hard = bank.strategy == StrategyKind::ablated;
                std::cout << (hard ? "reject" : "advisory") << " prompt #" << p.index << ": "
                          << f.code << " (" << f.message << ")\n";
                reject = reject || hard;
            }
        }
        if (reject) {
            std::cerr << "bank failed ablated-strategy validation\n";
            return kExitScoring;
        }
        std::cout << "bank ok: " << bank.prompts.size() << " prompts pass "
                  << strategy_kind_name(bank.strategy) << " lint\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"faithcal: measures how well a model's hedging tracks its sampling-consistency "
                 "confidence, and generates calibration system prompts"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto add_run_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", run_flags.config_path, "run config file")->required();
        cmd->add_option("--runs-dir", run_flags.runs_dir, "override run artifact directory");
        cmd->add_option("--cache-dir", run_flags.cache_dir, "override response cache directory");
        cmd->add_option("--run-id", run_flags.run_id, "override run id");
        cmd->add_option("--assets", run_flags.assets_dir, "prompt asset directory");
        cmd->add_option("--elicitation", run_flags.elicitation,
                        "none|basic|genuine|human|perception");
        cmd->add_option("--workers", run_flags.workers, "concurrent sample workers");
        cmd->add_option("--k", run_flags.k, "sampled responses per item");
        cmd->add_option("--sample-count", run_flags.sample_count, "dataset subsample size");
        cmd->add_option("--seed", run_flags.sample_seed, "subsample seed");
    };

    auto* run_cmd = app.add_subcommand("run", "execute load -> generate -> judge -> score -> report");
    add_run_flags(run_cmd);
    run_cmd->add_flag("--dry-run", run_flags.dry_run,
                      "print resolved prompts and planned call counts; no LLM calls");

    auto* resume_cmd = app.add_subcommand("resume", "continue an interrupted run");
    add_run_flags(resume_cmd);

    std::vector<std::string> report_inputs;
    std::string format = "markdown", out_path;
    auto* report_cmd = app.add_subcommand("report", "re-render stored report files");
    report_cmd->add_option("inputs", report_inputs, "report.json files")->required();
    report_cmd->add_option("--format", format, "json|csv|markdown");
    report_cmd->add_option("--out", out_path, "output file (default stdout)");

    std::vector<std::string> baseline_paths, treatment_paths;
    std::string select;
    auto* compare_cmd = app.add_subcommand("compare", "treatment-minus-baseline delta table");
    compare_cmd->add_option("--baseline", baseline_paths, "baseline report files")->required();
    compare_cmd->add_option("--treatment", treatment_paths, "treatment report files")->required();
    compare_cmd->add_option("--select", select, "\"best\": keep best baseline per (model, dataset)");
    compare_cmd->add_option("--format", format, "json|csv|markdown");
    compare_cmd->add_option("--out", out_path, "output file (default stdout)");

    std::string gen_config, gen_strategy = "hedge", banks_dir = "banks", created_at;
    int gen_n = 10;
    auto* gen_cmd = app.add_subcommand("metafaith-gen",
                                       "generate a calibration prompt bank with a generator model");
    gen_cmd->add_option("--config", gen_config, "config file (model section is the generator)")
        ->required();
    gen_cmd->add_option("--strategy", gen_strategy, "reflect|ms|hedge|ablated");
    gen_cmd->add_option("--n", gen_n, "prompts per bank");
    gen_cmd->add_option("--banks-dir", banks_dir, "bank output root");
    gen_cmd->add_option("--created-at", created_at, "fix the bank timestamp (reproducible output)");

    std::string val_assets, val_bank;
    auto* val_cmd = app.add_subcommand("validate-prompts", "verify asset digests and lint banks");
    val_cmd->add_option("--assets", val_assets, "prompt asset directory to verify");
    val_cmd->add_option("--bank", val_bank, "bank file to lint");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return do_run(run_flags, false);
        if (resume_cmd->parsed()) return do_run(run_flags, true);
        if (report_cmd->parsed()) return do_report(report_inputs, format, out_path);
        if (compare_cmd->parsed()) {
            return do_compare(baseline_paths, treatment_paths, select, format, out_path);
        }
        if (gen_cmd->parsed()) {
            return do_metafaith_gen(gen_config, gen_strategy, gen_n, banks_dir, created_at);
        }
        if (val_cmd->parsed()) return do_validate(val_assets, val_bank);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
