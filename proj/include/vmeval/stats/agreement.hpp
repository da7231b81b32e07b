#pragma once

// Correlation and chance-corrected agreement between two raters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "../error.hpp"

namespace vmeval::stats {

/// Product-moment correlation, two passes in extended precision.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw ArgumentError("pearson: lengths differ (" + std::to_string(xs.size()) + " vs " + std::to_string(ys.size()) + ")");
    if (xs.size() < 2) throw ArgumentError("pearson: needs at least two pairs");
    const auto n = static_cast<long double>(xs.size());
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const long double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0) throw ArgumentError("pearson: an input has zero variance");
    const long double r = sxy / std::sqrt(sxx * syy);
    return static_cast<double>(std::clamp<long double>(r, -1, 1));
}

/// Cohen's kappa from the confusion matrix of two label lists. Counts stay
/// integral until the final division. When both raters use one and the same
/// label throughout, chance agreement is 1 and kappa is defined as 1.
inline double cohen_kappa(std::span<const int> a, std::span<const int> b, std::span<const int> classes) {
    if (a.size() != b.size())
        throw ArgumentError("cohen_kappa: lengths differ (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    if (a.empty()) throw ArgumentError("cohen_kappa: no labels");
    std::map<int, std::size_t> index;
    for (int c : classes)
        if (!index.emplace(c, index.size()).second) throw ArgumentError("cohen_kappa: duplicate class " + std::to_string(c));
    std::vector<std::uint64_t> ra(index.size()), rb(index.size());
    std::uint64_t agree = 0;
    auto slot = [&](int label) {
        auto it = index.find(label);
        if (it == index.end()) throw ArgumentError("cohen_kappa: label " + std::to_string(label) + " is not a class");
        return it->second;
    };
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto ia = slot(a[i]), ib = slot(b[i]);
        ++ra[ia];
        ++rb[ib];
        if (ia == ib) ++agree;
    }
    const auto n = static_cast<std::uint64_t>(a.size());
    std::uint64_t chance = 0; // n^2 * p_e
    for (std::size_t k = 0; k < ra.size(); ++k) chance += ra[k] * rb[k];
    const std::uint64_t n2 = n * n;
    if (chance == n2) return 1.0; // p_e = 1 forces p_o = 1
    // kappa = (n*agree - chance) / (n^2 - chance); both terms are exact in a
    // double below 2^53, so the one division is correctly rounded.
    const auto num = static_cast<std::int64_t>(n * agree) - static_cast<std::int64_t>(chance);
    return static_cast<double>(num) / static_cast<double>(n2 - chance);
}

} // namespace vmeval::stats
