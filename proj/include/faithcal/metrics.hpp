#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "faithcal/errors.hpp"

namespace faithcal {

enum class ConsistencyJudgment { yes, na, no };

inline const char* judgment_name(ConsistencyJudgment j) {
    switch (j) {
        case ConsistencyJudgment::yes: return "yes";
        case ConsistencyJudgment::na: return "na";
        case ConsistencyJudgment::no: return "no";
    }
    return "na";
}

inline ConsistencyJudgment judgment_from_name(const std::string& s) {
    if (s == "yes") return ConsistencyJudgment::yes;
    if (s == "na") return ConsistencyJudgment::na;
    if (s == "no") return ConsistencyJudgment::no;
    throw Error(errc::schema_error, "unknown judgment '" + s + "'");
}

/// {yes: 0.0, na: 0.5, no: 1.0}, exactly.
inline double inconsistency_score(ConsistencyJudgment j) {
    switch (j) {
        case ConsistencyJudgment::yes: return 0.0;
        case ConsistencyJudgment::na: return 0.5;
        case ConsistencyJudgment::no: return 1.0;
    }
    return 0.5;
}

namespace detail {

/// Pairwise summation with extended-precision accumulation; deterministic
/// and order-stable for a given input order.
inline long double pairwise_sum(const double* p, std::size_t n) {
    if (n <= 8) {
        long double s = 0.0L;
        for (std::size_t i = 0; i < n; ++i) s += p[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum(p, half) + pairwise_sum(p + half, n - half);
}

inline double mean(const std::vector<double>& v) {
    return static_cast<double>(pairwise_sum(v.data(), v.size()) / static_cast<long double>(v.size()));
}

}  // namespace detail

/// Intrinsic confidence of one assertion: 1 - mean inconsistency over the K
/// consistency judgments.
inline double intrinsic_confidence(const std::vector<ConsistencyJudgment>& judgments) {
    if (judgments.empty()) throw Error(errc::empty_input, "no consistency judgments");
    std::vector<double> x;
    x.reserve(judgments.size());
    for (auto j : judgments) x.push_back(inconsistency_score(j));
    return 1.0 - detail::mean(x);
}

/// Faithful response uncertainty: 1 - mean |dec - conf| over assertions.
inline double faithfulness(const std::vector<double>& decisiveness,
                           const std::vector<double>& confidence) {
    if (decisiveness.size() != confidence.size()) {
        throw Error(errc::length_mismatch, "decisiveness and confidence lengths differ");
    }
    if (decisiveness.empty()) {
        throw Error(errc::empty_input, "no assertions; mark the sample punted instead");
    }
    std::vector<double> gaps;
    gaps.reserve(decisiveness.size());
    for (std::size_t i = 0; i < decisiveness.size(); ++i) {
        gaps.push_back(std::fabs(decisiveness[i] - confidence[i]));
    }
    return 1.0 - detail::mean(gaps);
}

/// Equal-width partition of [0,1]; the value 1.0 belongs to the top bin.
struct BinSpec {
    int bin_count = 10;

    double lower_edge(int i) const { return static_cast<double>(i) / bin_count; }

    int index_of(double v) const {
        for (int i = bin_count - 1; i > 0; --i) {
            if (v >= lower_edge(i)) return i;
        }
        return 0;
    }
};

/// Per-sample evaluation result. Punted samples carry no faithfulness or
/// means and are excluded from every aggregate except the punt rate.
struct SampleEval {
    std::string sample_id;
    bool punted = false;
    std::optional<double> faithfulness;
    std::optional<bool> correct;
    std::optional<double> mean_decisiveness;
    std::optional<double> mean_confidence;
    int assertion_count = 0;
};

/// Conditional mean faithfulness: bin non-punted samples by mean confidence,
/// average faithfulness within each non-empty bin, then average the bin
/// means without weighting.
inline double cmfg(const std::vector<SampleEval>& evals, BinSpec bins = {}) {
    std::vector<std::vector<double>> by_bin(bins.bin_count);
    for (const auto& e : evals) {
        if (e.punted) continue;
        if (!e.mean_confidence || !e.faithfulness) {
            throw Error(errc::empty_input, "non-punted eval without scores: " + e.sample_id);
        }
        by_bin[bins.index_of(*e.mean_confidence)].push_back(*e.faithfulness);
    }
    std::vector<double> bin_means;
    for (const auto& bucket : by_bin) {
        if (!bucket.empty()) bin_means.push_back(detail::mean(bucket));
    }
    if (bin_means.empty()) throw Error(errc::no_scorable_samples, "all samples punted");
    return detail::mean(bin_means);
}

/// Expected calibration error with equal-width bins: sum over non-empty bins
/// of (|b|/n) * |mean confidence - accuracy|.
inline double ece(const std::vector<double>& confidences, const std::vector<bool>& correct,
                  BinSpec bins = {}) {
    if (confidences.size() != correct.size()) {
        throw Error(errc::length_mismatch, "confidences and correctness lengths differ");
    }
    if (confidences.empty()) throw Error(errc::empty_input, "no samples");
    struct Bucket {
        std::vector<double> conf;
        std::size_t hits = 0;
    };
    std::vector<Bucket> by_bin(bins.bin_count);
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        auto& b = by_bin[bins.index_of(confidences[i])];
        b.conf.push_back(confidences[i]);
        if (correct[i]) ++b.hits;
    }
    long double total = 0.0L;
    const auto n = static_cast<long double>(confidences.size());
    for (const auto& b : by_bin) {
        if (b.conf.empty()) continue;
        long double weight = static_cast<long double>(b.conf.size()) / n;
        long double gap = std::fabs(detail::mean(b.conf) -
                                    static_cast<double>(b.hits) / static_cast<double>(b.conf.size()));
        total += weight * gap;
    }
    return static_cast<double>(total);
}

/// Brier score: mean squared error between confidence and correctness.
inline double brier(const std::vector<double>& confidences, const std::vector<bool>& correct) {
    if (confidences.size() != correct.size()) {
        throw Error(errc::length_mismatch, "confidences and correctness lengths differ");
    }
    if (confidences.empty()) throw Error(errc::empty_input, "no samples");
    std::vector<double> sq;
    sq.reserve(confidences.size());
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        double gap = confidences[i] - (correct[i] ? 1.0 : 0.0);
        sq.push_back(gap * gap);
    }
    return detail::mean(sq);
}

struct SpearmanResult {
    double rho = 0.0;
    double p_value = 1.0;
};

namespace detail {

/// Average ranks (1-based); ties share the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = mean(x), my = mean(y);
    long double sxy = 0.0L, sxx = 0.0L, syy = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) {
        long double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0L || syy == 0.0L) {
        throw Error(errc::degenerate_input, "zero variance in ranks");
    }
    return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

}  // namespace detail

/// Spearman rank correlation with average ranks for ties; the p-value comes
/// from the t-distribution approximation with n-2 degrees of freedom.
inline SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error(errc::length_mismatch, "input lengths differ");
    if (x.size() < 3) throw Error(errc::too_few_points, "need at least 3 points");
    auto rx = detail::average_ranks(x);
    auto ry = detail::average_ranks(y);
    double rho = detail::pearson(rx, ry);
    rho = std::clamp(rho, -1.0, 1.0);

    const auto n = static_cast<double>(x.size());
    double p = 0.0;
    if (std::fabs(rho) < 1.0) {
        double t = rho * std::sqrt((n - 2.0) / (1.0 - rho * rho));
        boost::math::students_t dist(n - 2.0);
        p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
    }
    return {rho, p};
}

}  // namespace faithcal
