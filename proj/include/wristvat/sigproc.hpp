#pragma once

// Signal primitives shared by the gait and sleep analyses.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "wristvat/detail/numeric.hpp"
#include "wristvat/error.hpp"
#include "wristvat/ingest.hpp"

namespace wristvat {

struct MagnitudeSeries {
    std::vector<double> values;
    double sample_rate_hz = 80.0;
};

struct MsdSeries {
    std::vector<double> values;
    double sample_rate_hz = 80.0;
    double window_s = 10.0;
};

struct AcfSeries {
    std::vector<double> values;  // index = lag in samples
    double sample_rate_hz = 80.0;

    double lag_s(std::size_t k) const { return static_cast<double>(k) / sample_rate_hz; }
};

struct AcfPeak {
    double lag_s = 0.0;
    std::size_t lag_samples = 0;
    double height = 0.0;
    double prominence = 0.0;
};

struct PeakCriteria {
    double min_lag_s = 0.35;
    double max_lag_s = 1.70;
    double min_prominence = 0.2;
    double min_height = 0.01;
};

namespace detail {

inline std::size_t samples_for(double seconds, double rate_hz) {
    return static_cast<std::size_t>(std::llround(seconds * rate_hz));
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline double magnitude(double x, double y, double z) { return std::sqrt(x * x + y * y + z * z); }

inline std::vector<double> magnitude(FrameView f) {
    std::vector<double> m(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) m[i] = magnitude(f.x[i], f.y[i], f.z[i]);
    return m;
}

inline MagnitudeSeries magnitude(const TriaxialRecording& rec) {
    return {magnitude(rec.view()), rec.sample_rate_hz};
}

/// Population standard deviation of the magnitude over a centered window of
/// round(window_s * rate) samples. Windows are truncated at the recording
/// edges, so the output has the input's length.
inline MsdSeries rolling_msd(const MagnitudeSeries& mag, double window_s = 10.0) {
    const double fs = mag.sample_rate_hz;
    const std::size_t w = detail::samples_for(window_s, fs);
    if (!(window_s > 0.0) || w < 2) throw WindowTooShort("MSD window must span at least 2 samples");

    const auto& v = mag.values;
    const std::size_t n = v.size();
    MsdSeries out{std::vector<double>(n, 0.0), fs, window_s};
    if (n == 0) return out;

    // Sums are kept on values shifted by the series mean and rebuilt
    // periodically, which bounds drift over very long recordings.
    double ref = 0.0;
    for (double a : v) ref += a;
    ref /= static_cast<double>(n);

    const std::size_t before = w / 2;
    const std::size_t after = w - before;  // window is [i - before, i + after)
    constexpr std::size_t kResync = 1 << 14;

    std::size_t lo = 0, hi = 0;
    double s1 = 0.0, s2 = 0.0;
    auto rebuild = [&](std::size_t a, std::size_t b) {
        s1 = 0.0;
        s2 = 0.0;
        for (std::size_t k = a; k < b; ++k) {
            const double d = v[k] - ref;
            s1 += d;
            s2 += d * d;
        }
    };

    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t new_lo = i >= before ? i - before : 0;
        const std::size_t new_hi = std::min(n, i + after);
        if (i % kResync == 0) {
            rebuild(new_lo, new_hi);
        } else {
            for (std::size_t k = hi; k < new_hi; ++k) {
                const double d = v[k] - ref;
                s1 += d;
                s2 += d * d;
            }
            for (std::size_t k = lo; k < new_lo; ++k) {
                const double d = v[k] - ref;
                s1 -= d;
                s2 -= d * d;
            }
        }
        lo = new_lo;
        hi = new_hi;
        const double c = static_cast<double>(hi - lo);
        const double mean = s1 / c;
        const double var = std::max(0.0, s2 / c - mean * mean);
        out.values[i] = std::sqrt(var);
    }
    return out;
}

/// Projection of the mean-centered frame onto the leading eigenvector of its
/// 3x3 covariance. The sign is chosen so the largest-magnitude sample is positive.
inline std::vector<double> first_principal_component(FrameView f) {
    const std::size_t n = f.size();
    if (n < 2) throw DegenerateFrame("frame needs at least 2 samples");

    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) mean += Eigen::Vector3d(f.x[i], f.y[i], f.z[i]);
    mean /= static_cast<double>(n);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d d = Eigen::Vector3d(f.x[i], f.y[i], f.z[i]) - mean;
        cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(n);

    if (detail::negligible_variance(cov.trace(), mean.norm()))
        throw DegenerateFrame("frame has zero covariance");

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d axis = eig.eigenvectors().col(2);  // eigenvalues ascend

    std::vector<double> pc(n);
    std::size_t arg_max = 0;
    for (std::size_t i = 0; i < n; ++i) {
        pc[i] = axis.dot(Eigen::Vector3d(f.x[i], f.y[i], f.z[i]) - mean);
        if (std::abs(pc[i]) > std::abs(pc[arg_max])) arg_max = i;
    }
    if (pc[arg_max] < 0.0)
        for (double& p : pc) p = -p;
    return pc;
}

/// Biased autocorrelation: acf[k] = sum_t d[t] d[t+k] / (N * var), for lags
/// 0..floor(max_lag_s * rate).
inline AcfSeries autocorrelation(std::span<const double> series, double sample_rate_hz, double max_lag_s) {
    const auto max_lag = static_cast<std::size_t>(std::floor(max_lag_s * sample_rate_hz + 1e-9));
    const std::size_t n = series.size();
    if (n <= max_lag || n < 2) throw SeriesTooShort("series shorter than the maximum lag");

    const auto mv = detail::mean_var(series);
    if (detail::negligible_variance(mv.var, mv.mean)) throw ZeroVariance("autocorrelation of a constant series");

    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = series[i] - mv.mean;
    const double denom = static_cast<double>(n) * mv.var;

    AcfSeries out{std::vector<double>(max_lag + 1), sample_rate_hz};
    for (std::size_t k = 0; k <= max_lag; ++k) {
        double s = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) s += d[t] * d[t + k];
        out.values[k] = std::clamp(s / denom, -1.0, 1.0);
    }
    out.values[0] = 1.0;
    return out;
}

/// Local maxima of the acf inside the lag range that pass both thresholds,
/// highest first.
///
/// A peak is strictly higher than its left neighbour and its right neighbour
/// (after any plateau); plateaus report their leftmost index. Both neighbours
/// must lie inside the searched range. Prominence is the height above the
/// higher of the two minima found walking outward until terrain higher than
/// the peak or the range boundary.
inline std::vector<AcfPeak> find_acf_peaks(const AcfSeries& acf, const PeakCriteria& c = {}) {
    const auto& a = acf.values;
    std::vector<AcfPeak> peaks;
    if (a.empty()) return peaks;
    const double fs = acf.sample_rate_hz;
    const auto lo = static_cast<std::size_t>(std::max(0.0, std::ceil(c.min_lag_s * fs - 1e-9)));
    auto hi = static_cast<std::size_t>(std::floor(c.max_lag_s * fs + 1e-9));
    hi = std::min(hi, a.size() - 1);
    if (hi < lo + 2) return peaks;

    std::size_t i = lo + 1;
    while (i < hi) {
        if (!(a[i] > a[i - 1])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 <= hi && a[j + 1] == a[i]) ++j;
        if (j + 1 > hi || !(a[j + 1] < a[i])) {
            i = j + 1;
            continue;
        }
        const double h = a[i];
        double left_min = h;
        for (std::size_t k = i; k-- > lo;) {
            if (a[k] > h) break;
            left_min = std::min(left_min, a[k]);
        }
        double right_min = h;
        for (std::size_t k = j + 1; k <= hi; ++k) {
            if (a[k] > h) break;
            right_min = std::min(right_min, a[k]);
        }
        const double prominence = h - std::max(left_min, right_min);
        if (prominence > c.min_prominence && h > c.min_height)
            peaks.push_back({acf.lag_s(i), i, h, prominence});
        i = j + 1;
    }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const AcfPeak& p, const AcfPeak& q) { return p.height > q.height; });
    return peaks;
}

/// Per-axis z-scoring (population std).
inline Frame zscore_frame(FrameView f) {
    Frame out;
    std::vector<double>* dst[3] = {&out.x, &out.y, &out.z};
    for (int a = 0; a < 3; ++a) {
        const auto src = f.axis(a);
        const auto mv = detail::mean_var(src);
        if (detail::negligible_variance(mv.var, mv.mean)) throw ZeroVarianceAxis("axis has zero variance");
        const double sd = std::sqrt(mv.var);
        dst[a]->resize(src.size());
        for (std::size_t i = 0; i < src.size(); ++i) (*dst[a])[i] = (src[i] - mv.mean) / sd;
    }
    return out;
}

}  // namespace wristvat
