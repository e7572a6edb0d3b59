// Generators and independent oracles shared by the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stack>
#include <string>
#include <utility>
#include <vector>

#include "ribodesign/random.hpp"

namespace testsupport {

using ribodesign::Rng;

inline std::string random_rna(Rng& rng, std::size_t n) {
    static constexpr char nts[] = "ACGU";
    std::string s(n, 'A');
    for (auto& c : s) c = nts[ribodesign::uniform_int<int>(rng, 0, 3)];
    return s;
}

/// Random balanced dot-bracket built by recursive interval splitting; every
/// hairpin loop has at least `min_loop` dots.
inline void fill_structure(Rng& rng, std::string& s, std::size_t lo, std::size_t hi, std::size_t min_loop) {
    while (lo < hi) {
        if (hi - lo >= min_loop + 2 && ribodesign::uniform01(rng) < 0.45) {
            const std::size_t max_span = hi - lo;
            const auto span = ribodesign::uniform_int<std::size_t>(rng, min_loop + 2, max_span);
            s[lo] = '(';
            s[lo + span - 1] = ')';
            fill_structure(rng, s, lo + 1, lo + span - 1, min_loop);
            lo += span;
        } else {
            s[lo] = '.';
            ++lo;
        }
    }
}

inline std::string random_structure(Rng& rng, std::size_t n, std::size_t min_loop = 3) {
    std::string s(n, '.');
    fill_structure(rng, s, 0, n, min_loop);
    return s;
}

/// Stack-based pair list, independent of the library parser.
inline std::optional<std::vector<std::pair<std::size_t, std::size_t>>> oracle_pairs(const std::string& db) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::stack<std::size_t> open;
    for (std::size_t i = 0; i < db.size(); ++i) {
        if (db[i] == '(') {
            open.push(i);
        } else if (db[i] == ')') {
            if (open.empty()) return std::nullopt;
            pairs.emplace_back(open.top(), i);
            open.pop();
        } else if (db[i] != '.') {
            return std::nullopt;
        }
    }
    if (!open.empty()) return std::nullopt;
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

inline double oracle_gc(const std::string& s) {
    const auto gc = std::count_if(s.begin(), s.end(), [](char c) { return c == 'G' || c == 'C'; });
    return static_cast<double>(gc) / static_cast<double>(s.size());
}

inline bool oracle_can_pair(char a, char b) {
    const std::string p{a, b};
    return p == "AU" || p == "UA" || p == "GC" || p == "CG" || p == "GU" || p == "UG";
}

struct MannWhitney {
    double u = 0.0;
    double z = 0.0;
    double p_less = 1.0;  // one-sided: P(x tends to be smaller than y)
};

/// Mann-Whitney U with average ranks for ties and a tie-corrected normal
/// approximation.
inline MannWhitney mann_whitney_less(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n1 = x.size();
    const std::size_t n2 = y.size();
    std::vector<std::pair<double, int>> all;
    for (double v : x) all.emplace_back(v, 0);
    for (double v : y) all.emplace_back(v, 1);
    std::sort(all.begin(), all.end());
    const std::size_t n = all.size();
    std::vector<double> rank(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && all[j].first == all[i].first) ++j;
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) rank[k] = r;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    double r1 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (all[k].second == 0) r1 += rank[k];
    }
    const double dn1 = static_cast<double>(n1);
    const double dn2 = static_cast<double>(n2);
    const double dn = static_cast<double>(n);
    MannWhitney m;
    m.u = r1 - dn1 * (dn1 + 1.0) / 2.0;
    const double mean = dn1 * dn2 / 2.0;
    const double var = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (var <= 0.0) return m;
    m.z = (m.u - mean + 0.5) / std::sqrt(var);  // continuity correction toward the null
    m.p_less = 0.5 * std::erfc(-m.z / std::sqrt(2.0));
    return m;
}

inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) r[idx[k]] = (static_cast<double>(i) + static_cast<double>(j) - 1.0) / 2.0;
        i = j;
    }
    return r;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(ra.size());
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(rb.size());
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    return da > 0 && db > 0 ? num / std::sqrt(da * db) : 0.0;
}

/// Least-squares slope of y against its index.
inline double trend_slope(const std::vector<double>& y) {
    const double n = static_cast<double>(y.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double x = static_cast<double>(i);
        sx += x;
        sy += y[i];
        sxx += x * x;
        sxy += x * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace testsupport
