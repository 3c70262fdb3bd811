#pragma once

// Rank-based tests for comparing conditions: Kruskal-Wallis H across groups
// and pairwise two-sided Mann-Whitney U with Bonferroni correction.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ganspire::stats {

using Groups = std::vector<std::vector<double>>;

double median(std::vector<double> values);  // throws InputError when empty

// Average ranks (1-based) of the pooled values, ties sharing the mean rank.
std::vector<double> average_ranks(const std::vector<double>& values);

struct KruskalResult {
    double h = 0.0;
    double p = 1.0;
    int df = 0;
};

// Tie-corrected H, p from the chi-squared(k - 1) upper tail. Requires at least
// two non-empty groups. When every value is identical H is 0 and p is 1.
KruskalResult kruskal_wallis(const Groups& groups);

enum class MwMethod { automatic, exact, asymptotic };
MwMethod parse_mw_method(const std::string& s);

struct MannWhitneyResult {
    double u = 0.0;  // U statistic of the first sample
    double p = 1.0;  // two-sided
    MwMethod method = MwMethod::automatic;  // the one actually used
};

// automatic: exact null distribution when there are no ties and the smaller
// sample has at most 8 values, otherwise the normal approximation with tie
// correction and continuity correction.
MannWhitneyResult mann_whitney(const std::vector<double>& a, const std::vector<double>& b,
                               MwMethod method = MwMethod::automatic);

struct PairwiseEntry {
    int row = 0;
    int col = 0;
    double median_diff = 0.0;  // median(row) - median(col)
    double u = 0.0;
    double p_raw = 1.0;
    double p_corrected = 1.0;  // min(1, p_raw * k(k-1)/2)
    std::string stars;
};

struct PairwiseTable {
    int k = 0;
    double alpha = 0.05;
    std::vector<PairwiseEntry> entries;  // row < col, lexicographic

    const PairwiseEntry& at(int row, int col) const;  // row < col
    // Antisymmetric median-difference matrix (k x k).
    std::vector<std::vector<double>> median_diff_matrix() const;
};

std::string significance_stars(double p, double alpha = 0.05);

PairwiseTable mannwhitney_bonferroni(const Groups& groups, double alpha = 0.05,
                                     MwMethod method = MwMethod::automatic);

void to_json(nlohmann::json& j, const KruskalResult& r);
void to_json(nlohmann::json& j, const PairwiseTable& t);

}  // namespace ganspire::stats
