#pragma once

// Direct, unoptimized reference computations used to check the optimized
// paths. Nothing here shares code with the implementations it verifies.

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "wristvat/error.hpp"

namespace wristvat::oracle {

using Point = std::vector<double>;

/// Mean distance over all ordered pairs i != j after dropping points whose
/// distance from the centroid exceeds trim_sigma * sqrt(mean per-axis variance).
inline double oracle_mad(const std::vector<Point>& points, double trim_sigma) {
    const std::size_t n = points.size();
    if (n < 2) throw AllPointsTrimmed("oracle_mad needs 2 points");
    const std::size_t dim = points[0].size();
    Point centroid(dim, 0.0);
    for (const auto& p : points)
        for (std::size_t a = 0; a < dim; ++a) centroid[a] += p[a] / static_cast<double>(n);
    double pooled = 0.0;
    for (std::size_t a = 0; a < dim; ++a) {
        double mean = 0.0;
        for (const auto& p : points) mean += p[a];
        mean /= static_cast<double>(n);
        double v = 0.0;
        for (const auto& p : points) v += (p[a] - mean) * (p[a] - mean);
        pooled += v / static_cast<double>(n);
    }
    const double sigma = std::sqrt(pooled / static_cast<double>(dim));

    std::vector<Point> kept;
    for (const auto& p : points) {
        double r = 0.0;
        for (std::size_t a = 0; a < dim; ++a) r += (p[a] - centroid[a]) * (p[a] - centroid[a]);
        if (std::sqrt(r) <= trim_sigma * sigma) kept.push_back(p);
    }
    if (kept.size() < 2) throw AllPointsTrimmed("oracle_mad trimmed everything");

    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < kept.size(); ++i)
        for (std::size_t j = 0; j < kept.size(); ++j) {
            if (i == j) continue;
            double d = 0.0;
            for (std::size_t a = 0; a < dim; ++a) d += (kept[i][a] - kept[j][a]) * (kept[i][a] - kept[j][a]);
            total += std::sqrt(d);
            ++pairs;
        }
    return total / static_cast<double>(pairs);
}

/// Spearman correlation from an explicit rank table:
/// rank_i = 1 + #{j : v_j < v_i} + (#{j : v_j == v_i} - 1) / 2.
inline double oracle_spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    auto rank = [n](const std::vector<double>& v) {
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) {
            double below = 0.0, equal = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (v[j] < v[i]) below += 1.0;
                if (v[j] == v[i]) equal += 1.0;
            }
            r[i] = 1.0 + below + (equal - 1.0) / 2.0;
        }
        return r;
    };
    const auto ra = rank(a);
    const auto rb = rank(b);
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) throw ConstantInput("oracle_spearman of a constant input");
    return sab / std::sqrt(saa * sbb);
}

using Matrix = std::vector<std::vector<double>>;

/// Gauss-Jordan inverse with partial pivoting.
inline Matrix invert(Matrix a) {
    const std::size_t n = a.size();
    Matrix inv(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300) throw SingularSystem("oracle matrix is singular");
        std::swap(a[piv], a[col]);
        std::swap(inv[piv], inv[col]);
        const double d = a[col][col];
        for (std::size_t k = 0; k < n; ++k) {
            a[col][k] /= d;
            inv[col][k] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (std::size_t k = 0; k < n; ++k) {
                a[r][k] -= f * a[col][k];
                inv[r][k] -= f * inv[col][k];
            }
        }
    }
    return inv;
}

struct RidgeSolution {
    std::vector<double> means;
    std::vector<double> stds;
    std::vector<double> weights;  // standardized space
    double intercept = 0.0;

    double predict(const std::vector<double>& row) const {
        double v = intercept;
        for (std::size_t j = 0; j < weights.size(); ++j) v += weights[j] * (row[j] - means[j]) / stds[j];
        return v;
    }
};

/// Ridge on population-standardized columns with an unpenalized intercept,
/// solved as w = (Z'Z + penalty I)^-1 Z'(y - mean y) with an explicit inverse.
/// penalty = lambda * n when scale_by_n, else lambda. All columns must vary.
inline RidgeSolution oracle_ridge(const Matrix& rows, const std::vector<double>& y, double lambda,
                                  bool scale_by_n = true) {
    const std::size_t n = rows.size();
    const std::size_t p = rows.at(0).size();
    RidgeSolution s;
    s.means.assign(p, 0.0);
    s.stds.assign(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i < n; ++i) s.means[j] += rows[i][j];
        s.means[j] /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) s.stds[j] += (rows[i][j] - s.means[j]) * (rows[i][j] - s.means[j]);
        s.stds[j] = std::sqrt(s.stds[j] / static_cast<double>(n));
        if (s.stds[j] == 0.0) throw SingularSystem("oracle_ridge column without variance");
    }
    for (double v : y) s.intercept += v;
    s.intercept /= static_cast<double>(n);

    Matrix z(n, std::vector<double>(p));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) z[i][j] = (rows[i][j] - s.means[j]) / s.stds[j];

    const double penalty = scale_by_n ? lambda * static_cast<double>(n) : lambda;
    Matrix a(p, std::vector<double>(p, 0.0));
    std::vector<double> b(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t k = 0; k < p; ++k)
            for (std::size_t i = 0; i < n; ++i) a[j][k] += z[i][j] * z[i][k];
        a[j][j] += penalty;
        for (std::size_t i = 0; i < n; ++i) b[j] += z[i][j] * (y[i] - s.intercept);
    }
    const auto inv = invert(a);
    s.weights.assign(p, 0.0);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < p; ++k) s.weights[j] += inv[j][k] * b[k];
    return s;
}

}  // namespace wristvat::oracle
