#pragma once

// Frame-level movement features: path length, trimmed mean absolute distance
// (3-d and 2-d axis pairs), and time-delay-embedding correlation eigenspectra.
// The "dynamics" variants operate on the per-axis z-scored frame and are
// therefore free of absolute acceleration magnitude.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "wristvat/error.hpp"
#include "wristvat/ingest.hpp"
#include "wristvat/sigproc.hpp"

namespace wristvat {

inline constexpr std::size_t kTdeScales = 4;
inline constexpr std::size_t kTdeDelays = 7;
inline constexpr std::size_t kTdeChannels = 3 * kTdeDelays;
inline constexpr std::array<std::size_t, kTdeScales> kTdeSpacings = {3, 7, 15, 31};

inline constexpr double kMad3dTrimSigma = 4.0;
inline constexpr double kMadPairTrimSigma = 2.0;

enum class AxisPair { xx, xy, xz, yy, yz, zz };
inline constexpr std::array<AxisPair, 6> kAxisPairs = {AxisPair::xx, AxisPair::xy, AxisPair::xz,
                                                       AxisPair::yy, AxisPair::yz, AxisPair::zz};

inline std::string_view to_string(AxisPair p) {
    constexpr std::array<std::string_view, 6> names = {"xx", "xy", "xz", "yy", "yz", "zz"};
    return names[static_cast<std::size_t>(p)];
}

inline std::array<int, 2> axes_of(AxisPair p) {
    switch (p) {
        case AxisPair::xx: return {0, 0};
        case AxisPair::xy: return {0, 1};
        case AxisPair::xz: return {0, 2};
        case AxisPair::yy: return {1, 1};
        case AxisPair::yz: return {1, 2};
        case AxisPair::zz: return {2, 2};
    }
    return {0, 0};
}

using TdeSpectrum = std::array<double, kTdeChannels>;

struct DynamicsFeatures {
    double pl_z = 0.0;
    double mad3_z = 0.0;
    std::array<double, 6> mad_pair{};  // xx, xy, xz, yy, yz, zz
    std::array<TdeSpectrum, kTdeScales> tde_eig{};

    static constexpr std::size_t kCount = 2 + 6 + kTdeScales * kTdeChannels;  // 92

    /// Order: PL, MAD, six pair MADs, TDE (scale-major, rank descending).
    std::array<double, kCount> flatten() const {
        std::array<double, kCount> out{};
        std::size_t k = 0;
        out[k++] = pl_z;
        out[k++] = mad3_z;
        for (double v : mad_pair) out[k++] = v;
        for (const auto& s : tde_eig)
            for (double v : s) out[k++] = v;
        return out;
    }
};

struct RawIntensityFeatures {
    double msd_g = 0.0;
    double pl_raw = 0.0;
    double mad_raw = 0.0;
};

/// Sum of Euclidean distances between successive 3-d samples.
inline double path_length(FrameView f) {
    if (f.size() < 2) throw FrameTooShort("path length needs at least 2 samples");
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) {
        const double dx = f.x[i + 1] - f.x[i];
        const double dy = f.y[i + 1] - f.y[i];
        const double dz = f.z[i + 1] - f.z[i];
        s += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return s;
}

namespace detail {

/// Mean pairwise distance of D-dimensional points given as columns, after a
/// single trimming pass: points farther from the centroid than
/// trim_sigma * sigma are dropped, where sigma^2 is the mean of the per-axis
/// population variances.
template <std::size_t D>
double trimmed_mean_pairwise_distance(const std::array<std::span<const double>, D>& cols, double trim_sigma) {
    const std::size_t n = cols[0].size();
    if (n < 2) throw FrameTooShort("mean absolute distance needs at least 2 samples");

    std::array<double, D> centroid{};
    double pooled_var = 0.0;
    for (std::size_t a = 0; a < D; ++a) {
        const auto mv = mean_var(cols[a]);
        centroid[a] = mv.mean;
        pooled_var += mv.var;
    }
    pooled_var /= static_cast<double>(D);
    const double limit_sq = trim_sigma * trim_sigma * pooled_var;

    std::vector<std::array<double, D>> kept;
    kept.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::array<double, D> p{};
        double r2 = 0.0;
        for (std::size_t a = 0; a < D; ++a) {
            p[a] = cols[a][i];
            const double d = p[a] - centroid[a];
            r2 += d * d;
        }
        if (r2 <= limit_sq) kept.push_back(p);
    }
    const std::size_t m = kept.size();
    if (m < 2) throw AllPointsTrimmed("fewer than 2 points survive trimming");

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        double row = 0.0;
        for (std::size_t j = i + 1; j < m; ++j) {
            double d2 = 0.0;
            for (std::size_t a = 0; a < D; ++a) {
                const double d = kept[i][a] - kept[j][a];
                d2 += d * d;
            }
            row += std::sqrt(d2);
        }
        total += row;
    }
    return total / (0.5 * static_cast<double>(m) * static_cast<double>(m - 1));
}

}  // namespace detail

/// Trimmed mean pairwise distance in x,y,z space.
inline double mad_3d(FrameView f, double trim_sigma = kMad3dTrimSigma) {
    return detail::trimmed_mean_pairwise_distance<3>({f.x, f.y, f.z}, trim_sigma);
}

/// Trimmed mean pairwise distance of 2-d points built from two axes. A
/// repeated axis (xx, yy, zz) yields points (a_t, a_t) on the diagonal.
inline double mad_axis_pair(FrameView f, AxisPair pair, double trim_sigma = kMadPairTrimSigma) {
    const auto [a, b] = axes_of(pair);
    return detail::trimmed_mean_pairwise_distance<2>({f.axis(a), f.axis(b)}, trim_sigma);
}

/// Eigenvalues (descending, clamped at 0) of the Pearson correlation matrix of
/// 3 * n_delays channels: each axis delayed by k * spacing samples,
/// k = 0..n_delays-1, over their common support of
/// frame_len - (n_delays - 1) * spacing samples.
inline std::vector<double> tde_eigenspectrum(FrameView frame_z, std::size_t spacing,
                                             std::size_t n_delays = kTdeDelays) {
    const std::size_t n = frame_z.size();
    const std::size_t channels = 3 * n_delays;
    const std::size_t reach = (n_delays - 1) * spacing;
    if (n_delays == 0 || n <= reach || n - reach < channels)
        throw FrameTooShortForScale("frame too short for delay spacing " + std::to_string(spacing));
    const std::size_t len = n - reach;

    Eigen::MatrixXd c(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(channels));
    for (int a = 0; a < 3; ++a) {
        const auto src = frame_z.axis(a);
        for (std::size_t k = 0; k < n_delays; ++k) {
            const auto col = static_cast<Eigen::Index>(static_cast<std::size_t>(a) * n_delays + k);
            for (std::size_t t = 0; t < len; ++t) c(static_cast<Eigen::Index>(t), col) = src[t + k * spacing];
        }
    }
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
        const double mean = c.col(j).mean();
        c.col(j).array() -= mean;
        const double norm = c.col(j).norm();
        const double var = norm * norm / static_cast<double>(len);
        if (detail::negligible_variance(var, mean)) throw ZeroVarianceChannel("delay channel has zero variance");
        c.col(j) /= norm;
    }
    Eigen::MatrixXd corr = c.transpose() * c;
    corr.diagonal().setOnes();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr, Eigen::EigenvaluesOnly);
    std::vector<double> out(eig.eigenvalues().data(), eig.eigenvalues().data() + channels);
    std::sort(out.begin(), out.end(), std::greater<>());
    for (double& v : out) v = std::max(v, 0.0);
    return out;
}

/// Magnitude-free features of one frame (z-scored first).
inline DynamicsFeatures dynamics_features(FrameView frame) {
    const Frame z = zscore_frame(frame);
    const FrameView zv = z.view();
    DynamicsFeatures d;
    d.pl_z = path_length(zv);
    d.mad3_z = mad_3d(zv, kMad3dTrimSigma);
    for (std::size_t p = 0; p < kAxisPairs.size(); ++p)
        d.mad_pair[p] = mad_axis_pair(zv, kAxisPairs[p], kMadPairTrimSigma);
    for (std::size_t s = 0; s < kTdeScales; ++s) {
        const auto eig = tde_eigenspectrum(zv, kTdeSpacings[s], kTdeDelays);
        std::copy(eig.begin(), eig.end(), d.tde_eig[s].begin());
    }
    return d;
}

/// MSD of the frame's magnitude plus PL and 4-sigma-trimmed MAD on raw samples.
inline RawIntensityFeatures raw_intensity(FrameView frame) {
    const auto m = magnitude(frame);
    RawIntensityFeatures r;
    r.msd_g = std::sqrt(detail::mean_var(m).var);
    r.pl_raw = path_length(frame);
    r.mad_raw = mad_3d(frame, kMad3dTrimSigma);
    return r;
}

}  // namespace wristvat
