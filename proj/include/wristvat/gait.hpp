#pragma once

// Gait bout segmentation, 5 s gait-frame detection via the autocorrelation
// periodicity test, frame features, and the 214-dim per-subject summary.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wristvat/detail/runs.hpp"
#include "wristvat/detail/summary.hpp"
#include "wristvat/dynamics.hpp"
#include "wristvat/error.hpp"
#include "wristvat/ingest.hpp"
#include "wristvat/sigproc.hpp"

namespace wristvat {

enum class BoutKind { gait, sleep };

struct Bout {
    std::size_t start_idx = 0;
    std::size_t end_idx = 0;  // exclusive
    BoutKind kind = BoutKind::gait;
    std::size_t length() const { return end_idx - start_idx; }
};

struct GaitConfig {
    double msd_threshold_g = 0.1;  // strict: sigma_m > threshold
    double min_active_s = 10.0;
    double max_gap_s = 15.0;
    double frame_s = 5.0;
    double step_halving_s = 0.85;
    PeakCriteria peaks{};
};

struct Cadence {
    double step_duration1_s = 0.0;
    double step_duration2_s = 0.0;
    double step_periodicity = 0.0;
};

struct GaitFrame {
    std::size_t recording_index = 0;
    std::size_t bout_index = 0;
    std::size_t tile_index = 0;  // position of the 5 s tile within its bout
    std::size_t start_idx = 0;
    Cadence cadence;
    RawIntensityFeatures intensity;
    int intensity_level = 1;
    DynamicsFeatures dynamics;
};

using TransitionMatrix = std::array<std::array<double, 4>, 4>;

/// Suprathreshold MSD regions merged across short gaps. A merged bout is kept
/// when its suprathreshold time (gaps excluded) reaches min_active_s.
inline std::vector<Bout> segment_gait_bouts(const MsdSeries& msd, const GaitConfig& cfg = {}) {
    const double fs = msd.sample_rate_hz;
    const auto runs = detail::runs_where(
        msd.values, [&](double s) { return s > cfg.msd_threshold_g; }, 0, msd.values.size());
    const auto merged = detail::merge_runs(runs, detail::samples_for(cfg.max_gap_s, fs));
    const std::size_t min_active = detail::samples_for(cfg.min_active_s, fs);
    std::vector<Bout> bouts;
    for (const auto& m : merged)
        if (m.active >= min_active) bouts.push_back({m.start, m.end, BoutKind::gait});
    return bouts;
}

inline double step_duration2(double step_duration1_s, double halving_s = 0.85) {
    return step_duration1_s > halving_s ? step_duration1_s / 2.0 : step_duration1_s;
}

/// Periodicity test on one frame: PC1 -> acf -> peaks in [0.35, 1.70] s.
/// Returns the highest qualifying peak as cadence features, or nothing.
inline std::optional<Cadence> detect_gait_frame(FrameView frame, double sample_rate_hz, const GaitConfig& cfg = {}) {
    try {
        const auto pc = first_principal_component(frame);
        const auto acf = autocorrelation(pc, sample_rate_hz, cfg.peaks.max_lag_s);
        const auto peaks = find_acf_peaks(acf, cfg.peaks);
        if (peaks.empty()) return std::nullopt;
        const auto& best = peaks.front();
        return Cadence{best.lag_s, step_duration2(best.lag_s, cfg.step_halving_s), best.height};
    } catch (const DataError&) {
        return std::nullopt;
    }
}

/// Intensity level 1..4 from frame MSD: <=0.125, <=0.375, <=1.0, above.
inline int intensity_bin(double msd_g) {
    if (msd_g <= 0.125) return 1;
    if (msd_g <= 0.375) return 2;
    if (msd_g <= 1.0) return 3;
    return 4;
}

/// Consecutive frames form a pair only when they are adjacent tiles of the
/// same bout in the same recording. Frames must be in chronological order.
inline TransitionMatrix transition_matrix(std::span<const GaitFrame> frames) {
    TransitionMatrix m{};
    std::size_t pairs = 0;
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
        const auto& a = frames[i];
        const auto& b = frames[i + 1];
        if (a.recording_index != b.recording_index || a.bout_index != b.bout_index ||
            b.tile_index != a.tile_index + 1)
            continue;
        m[static_cast<std::size_t>(a.intensity_level - 1)][static_cast<std::size_t>(b.intensity_level - 1)] += 1.0;
        ++pairs;
    }
    if (pairs > 0)
        for (auto& row : m)
            for (double& v : row) v /= static_cast<double>(pairs);
    return m;
}

inline double total_gait_hours(std::size_t frame_count, double frame_s = 5.0) {
    return static_cast<double>(frame_count) * frame_s / 3600.0;
}

struct GaitExtraction {
    std::vector<Bout> bouts;
    std::vector<GaitFrame> frames;
    std::size_t candidate_frames = 0;
};

/// Tiles every gait bout into contiguous frames (remainder dropped) and keeps
/// the frames that pass the periodicity test. Frames whose dynamics cannot be
/// computed (a flat axis) are dropped as well.
inline GaitExtraction extract_gait_frames(const TriaxialRecording& rec, const MsdSeries& msd,
                                          std::size_t recording_index = 0, const GaitConfig& cfg = {}) {
    GaitExtraction out;
    out.bouts = segment_gait_bouts(msd, cfg);
    const std::size_t frame_len = detail::samples_for(cfg.frame_s, rec.sample_rate_hz);
    const auto view = rec.view();
    for (std::size_t b = 0; b < out.bouts.size(); ++b) {
        const auto& bout = out.bouts[b];
        const std::size_t tiles = bout.length() / frame_len;
        for (std::size_t t = 0; t < tiles; ++t) {
            ++out.candidate_frames;
            const std::size_t start = bout.start_idx + t * frame_len;
            const auto frame = view.subframe(start, frame_len);
            const auto cadence = detect_gait_frame(frame, rec.sample_rate_hz, cfg);
            if (!cadence) continue;
            GaitFrame gf;
            gf.recording_index = recording_index;
            gf.bout_index = b;
            gf.tile_index = t;
            gf.start_idx = start;
            gf.cadence = *cadence;
            try {
                gf.intensity = raw_intensity(frame);
                gf.dynamics = dynamics_features(frame);
            } catch (const DataError&) {
                continue;
            }
            gf.intensity_level = intensity_bin(gf.intensity.msd_g);
            out.frames.push_back(gf);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-subject summary

inline constexpr std::size_t kGaitCadenceDim = 6;
inline constexpr std::size_t kGaitIntensityDim = 6;
inline constexpr std::size_t kGaitTransitionDim = 16;
inline constexpr std::size_t kGaitVolumeDim = 2;
inline constexpr std::size_t kGaitDim =
    kGaitCadenceDim + kGaitIntensityDim + kGaitTransitionDim + kGaitVolumeDim + detail::kDynamicsSummaryDim;
static_assert(kGaitDim == 214);

struct GaitSummary {
    std::array<double, kGaitDim> values{};

    static const std::vector<std::string>& names() {
        static const std::vector<std::string> n = [] {
            std::vector<std::string> v;
            for (const char* f : {"step_duration1", "step_duration2", "step_periodicity", "msd", "pl", "mad"}) {
                v.push_back(std::string("gait_") + f + "_mean");
                v.push_back(std::string("gait_") + f + "_std");
            }
            for (int i = 1; i <= 4; ++i)
                for (int j = 1; j <= 4; ++j) v.push_back("gait_trans_" + std::to_string(i) + std::to_string(j));
            v.push_back("gait_frame_count");
            v.push_back("gait_frame_msd_sum");
            detail::append_dynamics_names("gait_dyn_", v);
            return v;
        }();
        return n;
    }
};

/// Means and population stds across frames (frame order as given, which also
/// defines transition adjacency). Requires at least 2 frames.
inline GaitSummary gait_summary(std::span<const GaitFrame> frames) {
    if (frames.size() < 2) throw InsufficientFrames("gait summary needs at least 2 gait frames");
    GaitSummary s;
    std::size_t k = 0;
    const auto per_frame = detail::mean_std<6>(frames, [](const GaitFrame& f) {
        return std::array<double, 6>{f.cadence.step_duration1_s, f.cadence.step_duration2_s,
                                     f.cadence.step_periodicity,  f.intensity.msd_g,
                                     f.intensity.pl_raw,          f.intensity.mad_raw};
    });
    for (std::size_t i = 0; i < 6; ++i) {
        s.values[k++] = per_frame.mean[i];
        s.values[k++] = per_frame.std[i];
    }
    const auto tm = transition_matrix(frames);
    for (const auto& row : tm)
        for (double v : row) s.values[k++] = v;
    s.values[k++] = static_cast<double>(frames.size());
    double msd_sum = 0.0;
    for (const auto& f : frames) msd_sum += f.intensity.msd_g;
    s.values[k++] = msd_sum;
    detail::write_dynamics_summary(frames, [](const GaitFrame& f) -> const DynamicsFeatures& { return f.dynamics; },
                                   s.values.data() + k);
    return s;
}

}  // namespace wristvat
