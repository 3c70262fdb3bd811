#include "ganspire/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "ganspire/errors.hpp"

namespace ganspire::stats {

double median(std::vector<double> values) {
    if (values.empty()) throw InputError("median of an empty group");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

namespace {

// sum over tie blocks of (t^3 - t)
double tie_term(const std::vector<double>& pooled) {
    std::vector<double> v = pooled;
    std::sort(v.begin(), v.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i;
        while (j + 1 < v.size() && v[j + 1] == v[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        acc += t * t * t - t;
        i = j + 1;
    }
    return acc;
}

bool has_ties(const std::vector<double>& pooled) { return tie_term(pooled) > 0.0; }

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// P(U >= u) under H0 for sample sizes m, n without ties.
double exact_sf(double u, int m, int n) {
    // counts[u] for the current (i, j) table, built up over i with j = n.
    // f(i, j, u) = f(i - 1, j, u - j) + f(i, j - 1, u)
    const int maxu = m * n;
    std::vector<std::vector<double>> prev(n + 1, std::vector<double>(maxu + 1, 0.0));
    for (int j = 0; j <= n; ++j) prev[j][0] = 1.0;  // i = 0
    for (int i = 1; i <= m; ++i) {
        std::vector<std::vector<double>> cur(n + 1, std::vector<double>(maxu + 1, 0.0));
        cur[0][0] = 1.0;
        for (int j = 1; j <= n; ++j)
            for (int k = 0; k <= i * j; ++k) {
                double v = cur[j - 1][k];
                if (k - j >= 0) v += prev[j][k - j];
                cur[j][k] = v;
            }
        prev = std::move(cur);
    }
    const double total = binomial(m + n, m);
    const int start = static_cast<int>(std::ceil(u - 1e-9));
    double tail = 0.0;
    for (int k = std::max(start, 0); k <= maxu; ++k) tail += prev[n][k];
    return tail / total;
}

}  // namespace

KruskalResult kruskal_wallis(const Groups& groups) {
    if (groups.size() < 2) throw InputError("Kruskal-Wallis needs at least 2 groups");
    std::vector<double> pooled;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) throw InputError("Kruskal-Wallis: group " + std::to_string(g) + " is empty");
        pooled.insert(pooled.end(), groups[g].begin(), groups[g].end());
    }
    const double N = static_cast<double>(pooled.size());
    const auto ranks = average_ranks(pooled);
    const double mean_rank = (N + 1.0) / 2.0;
    double ss = 0.0;
    std::size_t off = 0;
    for (const auto& g : groups) {
        double r = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) r += ranks[off + i];
        off += g.size();
        const double n = static_cast<double>(g.size());
        const double dev = r / n - mean_rank;
        ss += n * dev * dev;
    }
    KruskalResult out;
    out.df = static_cast<int>(groups.size()) - 1;
    const double correction = 1.0 - tie_term(pooled) / (N * N * N - N);
    if (correction <= 0.0) return out;  // every value identical
    out.h = 12.0 / (N * (N + 1.0)) * ss / correction;
    out.p = out.h > 0 ? boost::math::cdf(boost::math::complement(boost::math::chi_squared(out.df), out.h)) : 1.0;
    return out;
}

MwMethod parse_mw_method(const std::string& s) {
    if (s == "auto" || s == "automatic") return MwMethod::automatic;
    if (s == "exact") return MwMethod::exact;
    if (s == "asymptotic") return MwMethod::asymptotic;
    throw InputError("unknown Mann-Whitney method '" + s + "'");
}

MannWhitneyResult mann_whitney(const std::vector<double>& a, const std::vector<double>& b, MwMethod method) {
    if (a.empty() || b.empty()) throw InputError("Mann-Whitney needs two non-empty samples");
    const int n1 = static_cast<int>(a.size());
    const int n2 = static_cast<int>(b.size());
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = average_ranks(pooled);
    double r1 = 0.0;
    for (int i = 0; i < n1; ++i) r1 += ranks[i];
    const double u1 = r1 - n1 * (n1 + 1.0) / 2.0;
    const double u2 = static_cast<double>(n1) * n2 - u1;
    const double u = std::max(u1, u2);

    MannWhitneyResult out;
    out.u = u1;
    if (method == MwMethod::automatic)
        method = (has_ties(pooled) || std::min(n1, n2) > 8) ? MwMethod::asymptotic : MwMethod::exact;
    out.method = method;

    double p;
    if (method == MwMethod::exact) {
        p = 2.0 * exact_sf(u, std::min(n1, n2), std::max(n1, n2));
    } else {
        const double n = static_cast<double>(n1 + n2);
        const double mu = n1 * n2 / 2.0;
        const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term(pooled) / (n * (n - 1.0)));
        if (var <= 0.0) {
            p = 1.0;
        } else {
            const double z = (u - mu - 0.5) / std::sqrt(var);
            p = 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), z));
        }
    }
    out.p = std::clamp(p, 0.0, 1.0);
    return out;
}

std::string significance_stars(double p, double alpha) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < alpha) return "*";
    return "";
}

const PairwiseEntry& PairwiseTable::at(int row, int col) const {
    for (const auto& e : entries)
        if (e.row == row && e.col == col) return e;
    throw InputError("no pairwise entry (" + std::to_string(row) + ", " + std::to_string(col) + ")");
}

std::vector<std::vector<double>> PairwiseTable::median_diff_matrix() const {
    std::vector<std::vector<double>> m(k, std::vector<double>(k, 0.0));
    for (const auto& e : entries) {
        m[e.row][e.col] = e.median_diff;
        m[e.col][e.row] = -e.median_diff;
    }
    return m;
}

PairwiseTable mannwhitney_bonferroni(const Groups& groups, double alpha, MwMethod method) {
    if (groups.size() < 2) throw InputError("pairwise comparison needs at least 2 groups");
    for (std::size_t g = 0; g < groups.size(); ++g)
        if (groups[g].empty()) throw InputError("pairwise comparison: group " + std::to_string(g) + " is empty");
    PairwiseTable t;
    t.k = static_cast<int>(groups.size());
    t.alpha = alpha;
    const double comparisons = t.k * (t.k - 1) / 2.0;
    for (int i = 0; i < t.k; ++i)
        for (int j = i + 1; j < t.k; ++j) {
            const auto mw = mann_whitney(groups[i], groups[j], method);
            PairwiseEntry e;
            e.row = i;
            e.col = j;
            e.median_diff = median(groups[i]) - median(groups[j]);
            e.u = mw.u;
            e.p_raw = mw.p;
            e.p_corrected = std::min(1.0, mw.p * comparisons);
            e.stars = significance_stars(e.p_corrected, alpha);
            t.entries.push_back(e);
        }
    return t;
}

void to_json(nlohmann::json& j, const KruskalResult& r) { j = nlohmann::json{{"h", r.h}, {"p", r.p}, {"df", r.df}}; }

void to_json(nlohmann::json& j, const PairwiseTable& t) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : t.entries)
        entries.push_back({{"row", e.row},
                           {"col", e.col},
                           {"median_diff", e.median_diff},
                           {"u", e.u},
                           {"p_raw", e.p_raw},
                           {"p_corrected", e.p_corrected},
                           {"stars", e.stars}});
    j = nlohmann::json{{"k", t.k}, {"alpha", t.alpha}, {"entries", entries}};
}

}  // namespace ganspire::stats
