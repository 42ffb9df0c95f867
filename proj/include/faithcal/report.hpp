#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithcal/errors.hpp"
#include "faithcal/metrics.hpp"

namespace faithcal {

/// Aggregated result of one run: model x dataset x prompt condition.
struct DatasetReport {
    std::string run_id;
    std::string model;
    std::string dataset;
    std::string condition;
    int sample_count = 0;  // scored + punted + failed
    int scored_count = 0;
    int punted_count = 0;
    int failed_count = 0;
    double punt_rate = 0.0;
    std::optional<double> accuracy;
    std::optional<double> cmfg;
    std::optional<double> ece;
    std::optional<double> brier;
    std::optional<SpearmanResult> spearman;  // dec vs conf, per-sample means
    int k = 0;
    int bin_count = 0;
};

enum class ReportFormat { json, csv, markdown };

inline ReportFormat report_format_from_name(const std::string& s) {
    if (s == "json") return ReportFormat::json;
    if (s == "csv") return ReportFormat::csv;
    if (s == "markdown" || s == "md") return ReportFormat::markdown;
    throw Error(errc::invalid_request, "unknown report format '" + s + "'");
}

namespace detail {

inline nlohmann::ordered_json opt_json(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

/// Two decimals for human-readable tables; machine formats keep full precision.
inline std::string round2(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", *v);
    return buf;
}

inline std::string full(const std::optional<double>& v) {
    if (!v) return "";
    nlohmann::json j = *v;
    return j.dump();
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const DatasetReport& r) {
    nlohmann::ordered_json j;
    j["run_id"] = r.run_id;
    j["model"] = r.model;
    j["dataset"] = r.dataset;
    j["condition"] = r.condition;
    j["sample_count"] = r.sample_count;
    j["scored_count"] = r.scored_count;
    j["punted_count"] = r.punted_count;
    j["failed_count"] = r.failed_count;
    j["punt_rate"] = r.punt_rate;
    j["accuracy"] = detail::opt_json(r.accuracy);
    j["cmfg"] = detail::opt_json(r.cmfg);
    j["ece"] = detail::opt_json(r.ece);
    j["brier"] = detail::opt_json(r.brier);
    if (r.spearman) {
        j["spearman_dec_conf"] = {
            {"rho", r.spearman->rho}, {"p_value", r.spearman->p_value}, {"granularity", "sample"}};
    } else {
        j["spearman_dec_conf"] = nullptr;
    }
    j["k"] = r.k;
    j["bin_count"] = r.bin_count;
    return j;
}

inline DatasetReport report_from_json(const nlohmann::json& j) {
    DatasetReport r;
    r.run_id = j.at("run_id").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.condition = j.at("condition").get<std::string>();
    r.sample_count = j.at("sample_count").get<int>();
    r.scored_count = j.at("scored_count").get<int>();
    r.punted_count = j.at("punted_count").get<int>();
    r.failed_count = j.at("failed_count").get<int>();
    r.punt_rate = j.at("punt_rate").get<double>();
    auto opt = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
        return j.at(key).get<double>();
    };
    r.accuracy = opt("accuracy");
    r.cmfg = opt("cmfg");
    r.ece = opt("ece");
    r.brier = opt("brier");
    if (j.contains("spearman_dec_conf") && !j.at("spearman_dec_conf").is_null()) {
        const auto& s = j.at("spearman_dec_conf");
        r.spearman = SpearmanResult{s.at("rho").get<double>(), s.at("p_value").get<double>()};
    }
    r.k = j.value("k", 0);
    r.bin_count = j.value("bin_count", 0);
    return r;
}

inline DatasetReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::file_missing, "report not found: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        return report_from_json(j);
    } catch (const nlohmann::json::exception& ex) {
        throw Error(errc::schema_error, "bad report " + path.string() + ": " + ex.what());
    }
}

inline const std::vector<std::string>& report_csv_header() {
    static const std::vector<std::string> header = {
        "run_id",   "model",        "dataset",      "condition",   "sample_count",
        "scored_count", "punted_count", "failed_count", "punt_rate",   "accuracy",
        "cmfg",     "ece",          "brier",        "spearman_rho", "spearman_p",
        "k",        "bin_count"};
    return header;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

inline std::vector<std::string> report_csv_row(const DatasetReport& r) {
    nlohmann::json pr = r.punt_rate;
    return {r.run_id,
            r.model,
            r.dataset,
            r.condition,
            std::to_string(r.sample_count),
            std::to_string(r.scored_count),
            std::to_string(r.punted_count),
            std::to_string(r.failed_count),
            pr.dump(),
            full(r.accuracy),
            full(r.cmfg),
            full(r.ece),
            full(r.brier),
            r.spearman ? full(r.spearman->rho) : "",
            r.spearman ? full(r.spearman->p_value) : "",
            std::to_string(r.k),
            std::to_string(r.bin_count)};
}

}  // namespace detail

/// Bitwise-stable rendering: fixed field order, 2-decimal metrics in the
/// human-readable markdown table, full precision in json/csv.
inline std::string render_reports(const std::vector<DatasetReport>& reports, ReportFormat format) {
    std::ostringstream out;
    switch (format) {
        case ReportFormat::json: {
            if (reports.size() == 1) {
                out << report_to_json(reports.front()).dump(2) << "\n";
            } else {
                nlohmann::ordered_json arr = nlohmann::ordered_json::array();
                for (const auto& r : reports) arr.push_back(report_to_json(r));
                out << arr.dump(2) << "\n";
            }
            break;
        }
        case ReportFormat::csv: {
            const auto& header = report_csv_header();
            for (std::size_t i = 0; i < header.size(); ++i) {
                if (i != 0) out << ",";
                out << header[i];
            }
            out << "\n";
            for (const auto& r : reports) {
                auto row = detail::report_csv_row(r);
                for (std::size_t i = 0; i < row.size(); ++i) {
                    if (i != 0) out << ",";
                    out << detail::csv_escape(row[i]);
                }
                out << "\n";
            }
            break;
        }
        case ReportFormat::markdown: {
            out << "| model | dataset | condition | n | punt | acc | cMFG | ECE | Brier | rho |\n";
            out << "|---|---|---|---|---|---|---|---|---|---|\n";
            for (const auto& r : reports) {
                out << "| " << r.model << " | " << r.dataset << " | " << r.condition << " | "
                    << r.sample_count << " | " << detail::round2(r.punt_rate) << " | "
                    << detail::round2(r.accuracy) << " | " << detail::round2(r.cmfg) << " | "
                    << detail::round2(r.ece) << " | " << detail::round2(r.brier) << " | "
                    << (r.spearman ? detail::round2(r.spearman->rho) : std::string("-")) << " |\n";
            }
            break;
        }
    }
    return out.str();
}

inline void emit_report(const DatasetReport& report, ReportFormat format,
                        const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(errc::io_error, "cannot write " + path.string());
    out << render_reports({report}, format);
}

/// Treatment-minus-baseline deltas for one (model, dataset) pairing. When
/// the treatment side has several prompt-bank variants, its metrics are the
/// variant means and `*_se` carries the standard error over variants.
struct ComparisonRow {
    std::string model;
    std::string dataset;
    std::string baseline_condition;
    std::string treatment_condition;
    int variant_count = 1;
    double baseline_cmfg = 0.0;
    double treatment_cmfg = 0.0;
    double delta_cmfg = 0.0;
    std::optional<double> cmfg_se;
    double baseline_accuracy = 0.0;
    double treatment_accuracy = 0.0;
    double delta_accuracy = 0.0;
    std::optional<double> accuracy_se;
};

namespace detail {

struct MetricStats {
    double mean = 0.0;
    std::optional<double> se;
};

inline MetricStats stats_over(const std::vector<double>& values) {
    MetricStats s;
    s.mean = mean(values);
    if (values.size() >= 2) {
        long double ss = 0.0L;
        for (double v : values) {
            long double d = v - s.mean;
            ss += d * d;
        }
        double sd = std::sqrt(static_cast<double>(ss / (values.size() - 1)));
        s.se = sd / std::sqrt(static_cast<double>(values.size()));
    }
    return s;
}

inline double require_metric(const std::optional<double>& v, const std::string& what) {
    if (!v) throw Error(errc::no_scorable_samples, what + " is missing");
    return *v;
}

}  // namespace detail

/// Per-(model, dataset) deltas plus an across-dataset average row. Reports
/// must pair on (model, dataset); unmatched keys raise a pairing error.
inline std::vector<ComparisonRow> compare(const std::vector<DatasetReport>& baselines,
                                          const std::vector<DatasetReport>& treatments) {
    using Key = std::pair<std::string, std::string>;
    std::map<Key, std::vector<const DatasetReport*>> base, treat;
    for (const auto& r : baselines) base[{r.model, r.dataset}].push_back(&r);
    for (const auto& r : treatments) treat[{r.model, r.dataset}].push_back(&r);

    for (const auto& [key, _] : base) {
        if (!treat.count(key)) {
            throw Error(errc::pairing, "no treatment report for (" + key.first + ", " + key.second + ")");
        }
    }
    for (const auto& [key, _] : treat) {
        if (!base.count(key)) {
            throw Error(errc::pairing, "no baseline report for (" + key.first + ", " + key.second + ")");
        }
    }

    std::vector<ComparisonRow> rows;
    for (const auto& [key, b_reports] : base) {
        const auto& t_reports = treat.at(key);
        std::vector<double> b_cmfg, t_cmfg, b_acc, t_acc;
        for (const auto* r : b_reports) {
            b_cmfg.push_back(detail::require_metric(r->cmfg, "baseline cmfg"));
            b_acc.push_back(detail::require_metric(r->accuracy, "baseline accuracy"));
        }
        for (const auto* r : t_reports) {
            t_cmfg.push_back(detail::require_metric(r->cmfg, "treatment cmfg"));
            t_acc.push_back(detail::require_metric(r->accuracy, "treatment accuracy"));
        }
        auto bc = detail::stats_over(b_cmfg), tc = detail::stats_over(t_cmfg);
        auto ba = detail::stats_over(b_acc), ta = detail::stats_over(t_acc);

        ComparisonRow row;
        row.model = key.first;
        row.dataset = key.second;
        row.baseline_condition = b_reports.front()->condition;
        row.treatment_condition = t_reports.size() == 1
                                      ? t_reports.front()->condition
                                      : t_reports.front()->condition + " [avg of " +
                                            std::to_string(t_reports.size()) + "]";
        row.variant_count = static_cast<int>(t_reports.size());
        row.baseline_cmfg = bc.mean;
        row.treatment_cmfg = tc.mean;
        row.delta_cmfg = tc.mean - bc.mean;
        row.cmfg_se = tc.se;
        row.baseline_accuracy = ba.mean;
        row.treatment_accuracy = ta.mean;
        row.delta_accuracy = ta.mean - ba.mean;
        row.accuracy_se = ta.se;
        rows.push_back(std::move(row));
    }

    if (rows.size() > 1) {
        ComparisonRow avg;
        avg.model = "(all)";
        avg.dataset = "(average)";
        avg.baseline_condition = rows.front().baseline_condition;
        avg.treatment_condition = rows.front().treatment_condition;
        std::vector<double> bc, tc, ba, ta;
        for (const auto& r : rows) {
            bc.push_back(r.baseline_cmfg);
            tc.push_back(r.treatment_cmfg);
            ba.push_back(r.baseline_accuracy);
            ta.push_back(r.treatment_accuracy);
        }
        avg.baseline_cmfg = detail::mean(bc);
        avg.treatment_cmfg = detail::mean(tc);
        avg.delta_cmfg = avg.treatment_cmfg - avg.baseline_cmfg;
        avg.baseline_accuracy = detail::mean(ba);
        avg.treatment_accuracy = detail::mean(ta);
        avg.delta_accuracy = avg.treatment_accuracy - avg.baseline_accuracy;
        avg.variant_count = rows.front().variant_count;
        rows.push_back(std::move(avg));
    }
    return rows;
}

/// Post-hoc max over conditions: keep the best-cmfg report per (model,
/// dataset); ties break toward the condition named "basic".
inline std::vector<DatasetReport> select_best(const std::vector<DatasetReport>& reports) {
    std::map<std::pair<std::string, std::string>, const DatasetReport*> best;
    for (const auto& r : reports) {
        auto key = std::make_pair(r.model, r.dataset);
        auto it = best.find(key);
        if (it == best.end()) {
            best[key] = &r;
            continue;
        }
        double cur = it->second->cmfg.value_or(-1.0);
        double cand = r.cmfg.value_or(-1.0);
        if (cand > cur || (cand == cur && r.condition == "basic")) best[key] = &r;
    }
    std::vector<DatasetReport> out;
    for (const auto& [_, r] : best) out.push_back(*r);
    return out;
}

inline std::string render_comparison(const std::vector<ComparisonRow>& rows, ReportFormat format) {
    std::ostringstream out;
    switch (format) {
        case ReportFormat::json: {
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            for (const auto& r : rows) {
                nlohmann::ordered_json j;
                j["model"] = r.model;
                j["dataset"] = r.dataset;
                j["baseline_condition"] = r.baseline_condition;
                j["treatment_condition"] = r.treatment_condition;
                j["variant_count"] = r.variant_count;
                j["baseline_cmfg"] = r.baseline_cmfg;
                j["treatment_cmfg"] = r.treatment_cmfg;
                j["delta_cmfg"] = r.delta_cmfg;
                j["cmfg_se"] = detail::opt_json(r.cmfg_se);
                j["baseline_accuracy"] = r.baseline_accuracy;
                j["treatment_accuracy"] = r.treatment_accuracy;
                j["delta_accuracy"] = r.delta_accuracy;
                j["accuracy_se"] = detail::opt_json(r.accuracy_se);
                arr.push_back(std::move(j));
            }
            out << arr.dump(2) << "\n";
            break;
        }
        case ReportFormat::csv: {
            out << "model,dataset,baseline_condition,treatment_condition,variant_count,"
                   "baseline_cmfg,treatment_cmfg,delta_cmfg,cmfg_se,"
                   "baseline_accuracy,treatment_accuracy,delta_accuracy,accuracy_se\n";
            for (const auto& r : rows) {
                out << detail::csv_escape(r.model) << "," << detail::csv_escape(r.dataset) << ","
                    << detail::csv_escape(r.baseline_condition) << ","
                    << detail::csv_escape(r.treatment_condition) << "," << r.variant_count << ","
                    << detail::full(r.baseline_cmfg) << "," << detail::full(r.treatment_cmfg) << ","
                    << detail::full(r.delta_cmfg) << "," << detail::full(r.cmfg_se) << ","
                    << detail::full(r.baseline_accuracy) << "," << detail::full(r.treatment_accuracy)
                    << "," << detail::full(r.delta_accuracy) << "," << detail::full(r.accuracy_se)
                    << "\n";
            }
            break;
        }
        case ReportFormat::markdown: {
            out << "| model | dataset | baseline | treatment | dCMFG | dAcc | se |\n";
            out << "|---|---|---|---|---|---|---|\n";
            for (const auto& r : rows) {
                out << "| " << r.model << " | " << r.dataset << " | " << r.baseline_condition
                    << " | " << r.treatment_condition << " | " << detail::round2(r.delta_cmfg)
                    << " | " << detail::round2(r.delta_accuracy) << " | "
                    << (r.cmfg_se ? detail::round2(*r.cmfg_se) : std::string("-")) << " |\n";
            }
            break;
        }
    }
    return out.str();
}

}  // namespace faithcal
