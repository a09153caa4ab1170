#pragma once

// Independent OLS reference: explicit normal equations solved by Gauss-Jordan in long double,
// p-values from Boost's Student t distribution.

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

struct Ols {
    std::vector<double> beta, se, t, p;
    double r2 = 0.0, adj_r2 = 0.0;
};

/// cols: predictor columns (no intercept); an intercept column is prepended.
inline Ols normal_equations(const std::vector<std::vector<double>>& cols, const std::vector<double>& y) {
    const std::size_t n = y.size(), k = cols.size() + 1;
    auto x = [&](std::size_t i, std::size_t j) -> long double { return j == 0 ? 1.0L : cols[j - 1][i]; };
    std::vector<std::vector<long double>> a(k, std::vector<long double>(2 * k, 0.0L));
    std::vector<long double> xty(k, 0.0L);
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t i = 0; i < n; ++i) a[r][c] += x(i, r) * x(i, c);
        a[r][k + r] = 1.0L;
        for (std::size_t i = 0; i < n; ++i) xty[r] += x(i, r) * y[i];
    }
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < k; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        if (a[c][c] == 0.0L) throw std::runtime_error("singular");
        const long double d = a[c][c];
        for (auto& v : a[c]) v /= d;
        for (std::size_t r = 0; r < k; ++r) {
            if (r == c) continue;
            const long double f = a[r][c];
            for (std::size_t j = 0; j < 2 * k; ++j) a[r][j] -= f * a[c][j];
        }
    }
    Ols out;
    std::vector<long double> b(k, 0.0L);
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < k; ++c) b[r] += a[r][k + c] * xty[c];
    long double rss = 0.0L, ybar = 0.0L, tss = 0.0L;
    for (double v : y) ybar += v;
    ybar /= static_cast<long double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        long double fit = 0.0L;
        for (std::size_t j = 0; j < k; ++j) fit += b[j] * x(i, j);
        rss += (y[i] - fit) * (y[i] - fit);
        tss += (y[i] - ybar) * (y[i] - ybar);
    }
    const double dof = static_cast<double>(n - k);
    const long double sigma2 = rss / dof;
    boost::math::students_t dist(dof);
    for (std::size_t j = 0; j < k; ++j) {
        out.beta.push_back(static_cast<double>(b[j]));
        out.se.push_back(static_cast<double>(std::sqrt(sigma2 * a[j][k + j])));
        out.t.push_back(out.beta.back() / out.se.back());
        out.p.push_back(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(out.t.back()))));
    }
    out.r2 = static_cast<double>(1.0L - rss / tss);
    out.adj_r2 = 1.0 - (1.0 - out.r2) * static_cast<double>(n - 1) / dof;
    return out;
}

}  // namespace oracle
