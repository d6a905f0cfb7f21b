// Slow, obviously-correct reference computations used to check the library.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace refer::oracle {

/// Kendall tau-b by enumerating every pair.
inline double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0) ++ties_x;
            if (dy == 0) ++ties_y;
            if (dx == 0 || dy == 0) continue;
            if ((dx > 0) == (dy > 0)) ++concordant;
            else ++discordant;
        }
    }
    const long long n0 = static_cast<long long>(n * (n - 1) / 2);
    return static_cast<double>(concordant - discordant) /
           std::sqrt(static_cast<double>(n0 - ties_x) * static_cast<double>(n0 - ties_y));
}

/// Average rank of each value: 1 + (#smaller) + (#equal - 1) / 2.
inline std::vector<long double> average_ranks(const std::vector<double>& v) {
    std::vector<long double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        long double smaller = 0, equal = 0;
        for (double w : v) {
            if (w < v[i]) smaller += 1;
            if (w == v[i]) equal += 1;
        }
        r[i] = 1 + smaller + (equal - 1) / 2;
    }
    return r;
}

inline double pearson(const std::vector<long double>& a, const std::vector<long double>& b) {
    const long double n = static_cast<long double>(a.size());
    long double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    long double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return static_cast<double>(cov / std::sqrt(va * vb));
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(average_ranks(x), average_ranks(y));
}

/// Student-t density with nu degrees of freedom.
inline long double t_density(long double x, long double nu) {
    const long double c = std::exp(std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2)) / std::sqrt(nu * M_PIl);
    return c * std::pow(1 + x * x / nu, -(nu + 1) / 2);
}

/// Two-sided p-value: 1 - 2 * integral of the density over [0, |t|], by
/// composite Simpson's rule.
inline double two_sided_p(double t, double nu, int intervals = 200000) {
    const long double b = std::fabs(t);
    if (b == 0) return 1.0;
    const long double h = b / intervals;
    long double sum = t_density(0, nu) + t_density(b, nu);
    for (int i = 1; i < intervals; ++i) sum += t_density(i * h, nu) * ((i % 2) ? 4 : 2);
    return static_cast<double>(1 - 2 * (sum * h / 3));
}

}  // namespace refer::oracle
