#pragma once

#include <cctype>
#include <sstream>
#include <string>

namespace faithcal::detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline bool icontains(const std::string& haystack, const std::string& lowered_needle) {
    return lower(haystack).find(lowered_needle) != std::string::npos;
}

/// First whitespace-delimited token after case-folding and mapping
/// punctuation to spaces.
inline std::string first_token_normalized(const std::string& s) {
    std::string norm;
    norm.reserve(s.size());
    for (unsigned char c : s) {
        norm.push_back(std::isalnum(c) ? static_cast<char>(std::tolower(c)) : ' ');
    }
    std::istringstream in(norm);
    std::string tok;
    in >> tok;
    return tok;
}

}  // namespace faithcal::detail
