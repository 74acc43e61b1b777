#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "wristvat/sigproc.hpp"

using namespace wristvat;
using testing_support::random_frame;

TEST(Magnitude, SmallCases) {
    EXPECT_DOUBLE_EQ(magnitude(3, 4, 0), 5.0);
    EXPECT_DOUBLE_EQ(magnitude(0, 0, 0), 0.0);
    EXPECT_DOUBLE_EQ(magnitude(1, 1, 1), std::sqrt(3.0));
}

namespace {

// Direct two-pass standard deviation over the same centered window.
std::vector<double> msd_oracle(const std::vector<double>& v, std::size_t w) {
    std::vector<double> out(v.size());
    const std::size_t before = w / 2, after = w - before;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::size_t lo = i >= before ? i - before : 0;
        const std::size_t hi = std::min(v.size(), i + after);
        double m = 0.0;
        for (std::size_t k = lo; k < hi; ++k) m += v[k];
        m /= static_cast<double>(hi - lo);
        double s = 0.0;
        for (std::size_t k = lo; k < hi; ++k) s += (v[k] - m) * (v[k] - m);
        out[i] = std::sqrt(s / static_cast<double>(hi - lo));
    }
    return out;
}

}  // namespace

TEST(RollingMsd, ConstantIsZero) {
    const auto msd = rolling_msd({std::vector<double>(2000, 0.98), 80.0});
    for (double v : msd.values) EXPECT_EQ(v, 0.0);
}

TEST(RollingMsd, SinusoidInteriorValue) {
    MagnitudeSeries m{std::vector<double>(80 * 60), 80.0};
    for (std::size_t i = 0; i < m.values.size(); ++i)
        m.values[i] = 1.0 + 0.2 * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 80.0);
    const auto msd = rolling_msd(m);
    for (std::size_t i = 400; i + 400 < m.values.size(); ++i) EXPECT_NEAR(msd.values[i], 0.2 / std::sqrt(2.0), 1e-3);
}

TEST(RollingMsd, MatchesDirectWindowIncludingEdges) {
    const auto f = random_frame(50000, 3, 0.3);
    MagnitudeSeries m{magnitude(f.view()), 80.0};
    const auto msd = rolling_msd(m);
    const auto ref = msd_oracle(m.values, 800);
    ASSERT_EQ(msd.values.size(), ref.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(msd.values[i] - ref[i]));
    EXPECT_LT(worst, 1e-10);
}

TEST(RollingMsd, WindowTooShort) {
    EXPECT_THROW(rolling_msd({std::vector<double>(100, 1.0), 80.0}, 0.01), WindowTooShort);
}

TEST(Pca, AxisAlignedVariance) {
    Frame f;
    for (int i = 0; i < 200; ++i) {
        f.x.push_back(std::sin(0.1 * i) + 0.5);
        f.y.push_back(0.2);
        f.z.push_back(-0.9);
    }
    const auto pc = first_principal_component(f.view());
    double mean = 0.0;
    for (double v : f.x) mean += v / 200.0;
    const double sign = pc[0] * (f.x[0] - mean) >= 0 ? 1.0 : -1.0;
    for (int i = 0; i < 200; ++i) EXPECT_NEAR(pc[i], sign * (f.x[i] - mean), 1e-12);
}

TEST(Pca, RotationInvariantUpToSign) {
    auto f = random_frame(400, 8);
    for (auto& v : f.x) v *= 3.0;  // clear leading direction
    // Rotation from a unit quaternion.
    const Eigen::Quaterniond q = Eigen::Quaterniond(0.3, -0.5, 0.7, 0.2).normalized();
    const Eigen::Matrix3d r = q.toRotationMatrix();
    Frame g = f;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Eigen::Vector3d p = r * Eigen::Vector3d(f.x[i], f.y[i], f.z[i]);
        g.x[i] = p[0];
        g.y[i] = p[1];
        g.z[i] = p[2];
    }
    const auto a = first_principal_component(f.view());
    const auto b = first_principal_component(g.view());
    const double sign = a[0] * b[0] >= 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], sign * b[i], 1e-9);
}

TEST(Pca, ConstantFrameDegenerate) {
    Frame f{std::vector<double>(50, 0.1), std::vector<double>(50, 0.2), std::vector<double>(50, 0.9)};
    EXPECT_THROW(first_principal_component(f.view()), DegenerateFrame);
}

TEST(Autocorrelation, LagZeroIsOne) {
    const auto f = random_frame(400, 2);
    const auto acf = autocorrelation(f.x, 80.0, 1.7);
    EXPECT_EQ(acf.values.size(), 137u);
    EXPECT_EQ(acf.values[0], 1.0);
}

TEST(Autocorrelation, SinusoidPeakAtPeriod) {
    // Period of exactly 60 samples; the biased acf at that lag is 1 - 60/400.
    std::vector<double> s(400);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 60.0);
    const auto acf = autocorrelation(s, 80.0, 1.7);
    const auto peaks = find_acf_peaks(acf);
    ASSERT_FALSE(peaks.empty());
    EXPECT_LE(std::abs(static_cast<long>(peaks[0].lag_samples) - 60), 1);
    EXPECT_NEAR(peaks[0].height, 1.0 - 60.0 / 400.0, 0.01);
}

TEST(Autocorrelation, WhiteNoiseStaysSmall) {
    int exceed = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto f = random_frame(400, 1000 + seed);
        const auto acf = autocorrelation(f.x, 80.0, 1.7);
        bool any = false;
        for (std::size_t k = 1; k < acf.values.size(); ++k) any |= std::abs(acf.values[k]) >= 0.2;
        exceed += any;
    }
    EXPECT_LT(exceed, 10);
}

TEST(Autocorrelation, Preconditions) {
    EXPECT_THROW(autocorrelation(std::vector<double>(100, 1.0), 80.0, 0.5), ZeroVariance);
    EXPECT_THROW(autocorrelation(std::vector<double>{1, 2, 3}, 80.0, 1.7), SeriesTooShort);
}

TEST(AcfPeaks, StepPeriodSinusoid) {
    // 0.79 s at 80 Hz: peaks at the step and the stride lag.
    std::vector<double> s(400);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / 80.0 / 0.79);
    const auto peaks = find_acf_peaks(autocorrelation(s, 80.0, 1.7));
    ASSERT_EQ(peaks.size(), 2u);
    EXPECT_NEAR(peaks[0].lag_s, 0.79, 0.0125);
    EXPECT_NEAR(peaks[1].lag_s, 1.58, 0.0125);
}

TEST(AcfPeaks, MonotoneDecayHasNone) {
    AcfSeries acf{std::vector<double>(137), 80.0};
    for (std::size_t k = 0; k < acf.values.size(); ++k) acf.values[k] = std::exp(-0.05 * static_cast<double>(k));
    EXPECT_TRUE(find_acf_peaks(acf).empty());
}

namespace {

// Prominence by brute force: for each side, the minimum over every interval
// reaching from the peak to the first strictly higher sample or the boundary.
double brute_prominence(const std::vector<double>& a, std::size_t lo, std::size_t hi, std::size_t p) {
    double lmin = a[p], rmin = a[p];
    for (long k = static_cast<long>(p); k >= static_cast<long>(lo); --k) {
        if (a[k] > a[p]) break;
        lmin = std::min(lmin, a[k]);
    }
    for (std::size_t k = p; k <= hi; ++k) {
        if (a[k] > a[p]) break;
        rmin = std::min(rmin, a[k]);
    }
    return a[p] - std::max(lmin, rmin);
}

}  // namespace

TEST(AcfPeaks, ProminenceThresholdKeepsOne) {
    // Two bumps above a 0.3 floor: heights 0.55 and 0.45 give prominences 0.25 and 0.15.
    AcfSeries acf{std::vector<double>(137, 0.3), 80.0};
    auto bump = [&](std::size_t c, double h) {
        for (std::size_t k = c - 10; k <= c + 10; ++k)
            acf.values[k] = 0.3 + (h - 0.3) * (1.0 - std::abs(static_cast<double>(k) - static_cast<double>(c)) / 10.0);
    };
    bump(50, 0.55);
    bump(100, 0.45);
    acf.values[0] = 1.0;
    EXPECT_NEAR(brute_prominence(acf.values, 28, 136, 50), 0.25, 1e-12);
    EXPECT_NEAR(brute_prominence(acf.values, 28, 136, 100), 0.15, 1e-12);
    const auto peaks = find_acf_peaks(acf);
    ASSERT_EQ(peaks.size(), 1u);
    EXPECT_EQ(peaks[0].lag_samples, 50u);
    EXPECT_NEAR(peaks[0].prominence, 0.25, 1e-12);
}

TEST(AcfPeaks, RandomSeriesMatchBruteForce) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PeakCriteria none{0.35, 1.70, -1.0, -2.0};
    for (int t = 0; t < 200; ++t) {
        AcfSeries acf{std::vector<double>(137), 80.0};
        for (double& v : acf.values) v = std::round(u(rng) * 8.0) / 8.0;  // coarse values produce plateaus
        const auto peaks = find_acf_peaks(acf, none);
        std::vector<std::size_t> expect;
        for (std::size_t i = 29; i < 136; ++i) {
            if (!(acf.values[i] > acf.values[i - 1])) continue;
            std::size_t j = i;
            while (j + 1 <= 136 && acf.values[j + 1] == acf.values[i]) ++j;
            if (j + 1 <= 136 && acf.values[j + 1] < acf.values[i]) expect.push_back(i);
        }
        ASSERT_EQ(peaks.size(), expect.size());
        for (const auto& p : peaks) {
            EXPECT_NE(std::find(expect.begin(), expect.end(), p.lag_samples), expect.end());
            EXPECT_NEAR(p.prominence, brute_prominence(acf.values, 28, 136, p.lag_samples), 1e-12);
        }
        for (std::size_t k = 1; k < peaks.size(); ++k) EXPECT_GE(peaks[k - 1].height, peaks[k].height);
    }
}

TEST(Zscore, MomentsAndAffineInvariance) {
    const auto f = random_frame(400, 4, 2.0);
    const auto z = zscore_frame(f.view());
    for (int a = 0; a < 3; ++a) {
        const auto mv = detail::mean_var(z.view().axis(a));
        EXPECT_LT(std::abs(mv.mean), 1e-12);
        EXPECT_LT(std::abs(std::sqrt(mv.var) - 1.0), 1e-12);
    }
    Frame g = f;
    for (auto& v : g.x) v = 3.0 * v - 1.0;
    for (auto& v : g.y) v = 0.5 * v + 7.0;
    const auto zg = zscore_frame(g.view());
    for (std::size_t i = 0; i < f.size(); ++i) {
        EXPECT_NEAR(zg.x[i], z.x[i], 1e-12);
        EXPECT_NEAR(zg.y[i], z.y[i], 1e-12);
        EXPECT_NEAR(zg.z[i], z.z[i], 1e-12);
    }
}

TEST(Zscore, ConstantAxisRejected) {
    auto f = random_frame(100, 5);
    std::fill(f.y.begin(), f.y.end(), -0.4);
    EXPECT_THROW(zscore_frame(f.view()), ZeroVarianceAxis);
}
