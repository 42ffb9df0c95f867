#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithcal/errors.hpp"
#include "faithcal/sample.hpp"

namespace faithcal {

/// Maps schema fields to the source keys of a JSON Lines file.
struct FieldMap {
    std::string id = "id";
    std::string question = "question";
    std::string answer_choices = "answer_choices";
    std::string proposed_answer = "proposed_answer";
    std::string references = "references";
};

struct DatasetSpec {
    std::filesystem::path path;
    std::string name;
    TaskKind kind = TaskKind::qa;
    FieldMap field_map;
    bool lenient = false;  // collect malformed lines instead of failing
};

struct LoadIssue {
    std::size_t line = 0;
    std::string message;
};

struct LoadReport {
    std::vector<LoadIssue> issues;
    std::size_t loaded = 0;
};

namespace detail {

inline std::vector<std::string> string_list(const nlohmann::json& j) {
    if (j.is_string()) return {j.get<std::string>()};
    return j.get<std::vector<std::string>>();
}

inline TaskSample parse_sample_line(const nlohmann::json& j, const DatasetSpec& spec,
                                    std::size_t line_no) {
    const auto& fm = spec.field_map;
    TaskSample s;
    s.dataset = spec.name;
    s.kind = spec.kind;
    s.id = j.contains(fm.id) ? j.at(fm.id).is_string() ? j.at(fm.id).get<std::string>()
                                                       : j.at(fm.id).dump()
                             : "s" + std::to_string(line_no);
    if (!j.contains(fm.question) || !j.at(fm.question).is_string()) {
        throw Error(errc::schema_error, "missing question key '" + fm.question + "'");
    }
    s.question = j.at(fm.question).get<std::string>();

    if (spec.kind == TaskKind::mc_letters || spec.kind == TaskKind::mc_numbers) {
        if (!j.contains(fm.answer_choices)) {
            throw Error(errc::schema_error, "missing answer choices key '" + fm.answer_choices + "'");
        }
        s.answer_choices = string_list(j.at(fm.answer_choices));
        if (s.answer_choices.empty()) {
            throw Error(errc::schema_error, "empty answer choices");
        }
    }
    if (spec.kind == TaskKind::halu_detect) {
        if (!j.contains(fm.proposed_answer) || !j.at(fm.proposed_answer).is_string()) {
            throw Error(errc::schema_error,
                        "missing proposed answer key '" + fm.proposed_answer + "'");
        }
        s.proposed_answer = j.at(fm.proposed_answer).get<std::string>();
    }
    if (!j.contains(fm.references)) {
        throw Error(errc::schema_error, "missing references key '" + fm.references + "'");
    }
    s.references = string_list(j.at(fm.references));
    if (s.references.empty()) throw Error(errc::schema_error, "empty references");
    return s;
}

}  // namespace detail

/// Reads a JSON Lines dataset in file order. Malformed lines become per-line
/// issues; the load fails on any issue unless `spec.lenient` is set.
inline std::vector<TaskSample> load_dataset(const DatasetSpec& spec, LoadReport* report = nullptr) {
    std::ifstream in(spec.path, std::ios::binary);
    if (!in) throw Error(errc::file_missing, "dataset not found: " + spec.path.string());
    std::vector<TaskSample> samples;
    LoadReport local;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(line);
            samples.push_back(detail::parse_sample_line(j, spec, line_no));
        } catch (const nlohmann::json::exception& ex) {
            local.issues.push_back({line_no, ex.what()});
        } catch (const Error& ex) {
            local.issues.push_back({line_no, ex.what()});
        }
    }
    local.loaded = samples.size();
    if (report != nullptr) *report = local;
    if (!local.issues.empty() && !spec.lenient) {
        std::string msg = spec.path.string() + " has " + std::to_string(local.issues.size()) +
                          " malformed line(s):";
        for (const auto& iss : local.issues) {
            msg += "\n  line " + std::to_string(iss.line) + ": " + iss.message;
        }
        throw Error(errc::schema_error, msg);
    }
    return samples;
}

/// Uniform sample without replacement of min(n, |samples|), deterministic in
/// `seed`, returned in original file order. Selection uses raw engine output
/// (not std::uniform_int_distribution) so draws are identical across
/// standard libraries.
inline std::vector<TaskSample> subsample(const std::vector<TaskSample>& samples, std::size_t n,
                                         std::uint64_t seed) {
    if (samples.empty()) throw Error(errc::empty_input, "empty dataset");
    if (n >= samples.size()) return samples;

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    std::vector<TaskSample> out;
    out.reserve(n);
    for (auto i : idx) out.push_back(samples[i]);
    return out;
}

}  // namespace faithcal
