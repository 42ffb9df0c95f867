#pragma once

#include <optional>
#include <string>
#include <vector>

#include "faithcal/errors.hpp"

namespace faithcal {

enum class TaskKind { qa, qa_answerable, mc_letters, mc_numbers, halu_detect, math, math_answerable };

inline const char* task_kind_name(TaskKind k) {
    switch (k) {
        case TaskKind::qa: return "qa";
        case TaskKind::qa_answerable: return "qa_answerable";
        case TaskKind::mc_letters: return "mc_letters";
        case TaskKind::mc_numbers: return "mc_numbers";
        case TaskKind::halu_detect: return "halu_detect";
        case TaskKind::math: return "math";
        case TaskKind::math_answerable: return "math_answerable";
    }
    return "qa";
}

inline TaskKind task_kind_from_name(const std::string& s) {
    if (s == "qa") return TaskKind::qa;
    if (s == "qa_answerable") return TaskKind::qa_answerable;
    if (s == "mc_letters") return TaskKind::mc_letters;
    if (s == "mc_numbers") return TaskKind::mc_numbers;
    if (s == "halu_detect") return TaskKind::halu_detect;
    if (s == "math") return TaskKind::math;
    if (s == "math_answerable") return TaskKind::math_answerable;
    throw Error(errc::schema_error, "unknown task kind '" + s + "'");
}

/// One benchmark item.
struct TaskSample {
    std::string id;
    std::string dataset;
    TaskKind kind = TaskKind::qa;
    std::string question;
    std::vector<std::string> answer_choices;       // mc_* only
    std::optional<std::string> proposed_answer;    // halu_detect only
    std::vector<std::string> references;           // gold answers
};

}  // namespace faithcal
