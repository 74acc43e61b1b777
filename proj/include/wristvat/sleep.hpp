#pragma once

// Sleep bouts, within-sleep movement segments, fragmentation histograms,
// sleep-movement frame features and the 206-dim per-subject summary.

#include <algorithm>
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
#include "wristvat/gait.hpp"
#include "wristvat/ingest.hpp"
#include "wristvat/sigproc.hpp"

namespace wristvat {

struct Segment {
    std::size_t start_idx = 0;
    std::size_t end_idx = 0;  // exclusive
    std::size_t length() const { return end_idx - start_idx; }
};

struct SleepBout {
    std::size_t start_idx = 0;
    std::size_t end_idx = 0;
    std::vector<Segment> movement_segments;
    std::size_t length() const { return end_idx - start_idx; }
};

struct SleepConfig {
    double quiet_threshold_g = 0.01;  // strict: sigma_m < threshold
    double max_interruption_s = 120.0;
    double min_bout_s = 2.0 * 3600.0;  // total span, interruptions included
    double movement_threshold_g = 0.05;  // strict: sigma_m > threshold
    double min_movement_s = 10.0;
    double frame_s = 5.0;
    double frame_msd_threshold_g = 0.005;  // strict: frame MSD > threshold
    std::array<double, 4> sleep_edges_min = {4.0, 8.0, 16.0, 32.0};
    std::array<double, 4> move_edges_s = {12.0, 25.0, 100.0, 200.0};
};

/// Quiet regions merged across short suprathreshold interruptions; a bout is
/// kept when its total span (quiet + interruptions) reaches min_bout_s.
/// Movement segments are left empty; see detect_sleep_movements.
inline std::vector<SleepBout> segment_sleep_bouts(const MsdSeries& msd, const SleepConfig& cfg = {}) {
    const double fs = msd.sample_rate_hz;
    const auto runs = detail::runs_where(
        msd.values, [&](double s) { return s < cfg.quiet_threshold_g; }, 0, msd.values.size());
    const auto merged = detail::merge_runs(runs, detail::samples_for(cfg.max_interruption_s, fs));
    const std::size_t min_span = detail::samples_for(cfg.min_bout_s, fs);
    std::vector<SleepBout> bouts;
    for (const auto& m : merged)
        if (m.span() >= min_span) bouts.push_back({m.start, m.end, {}});
    return bouts;
}

/// Maximal runs inside the bout with sigma_m above the movement threshold
/// lasting at least min_movement_s.
inline std::vector<Segment> detect_sleep_movements(const SleepBout& bout, const MsdSeries& msd,
                                                   const SleepConfig& cfg = {}) {
    const auto runs = detail::runs_where(
        msd.values, [&](double s) { return s > cfg.movement_threshold_g; }, bout.start_idx,
        std::min(bout.end_idx, msd.values.size()));
    const std::size_t min_len = detail::samples_for(cfg.min_movement_s, msd.sample_rate_hz);
    std::vector<Segment> out;
    for (const auto& r : runs)
        if (r.length() >= min_len) out.push_back({r.start, r.end});
    return out;
}

/// Bouts with their movement segments filled in.
inline std::vector<SleepBout> segment_sleep(const MsdSeries& msd, const SleepConfig& cfg = {}) {
    auto bouts = segment_sleep_bouts(msd, cfg);
    for (auto& b : bouts) b.movement_segments = detect_sleep_movements(b, msd, cfg);
    return bouts;
}

/// Contiguous frame start indices tiling a segment; the remainder is dropped.
inline std::vector<std::size_t> tile_segment(const Segment& s, std::size_t frame_len) {
    std::vector<std::size_t> starts;
    const std::size_t tiles = s.length() / frame_len;
    for (std::size_t t = 0; t < tiles; ++t) starts.push_back(s.start_idx + t * frame_len);
    return starts;
}

// ---------------------------------------------------------------------------
// Fragmentation

/// Quiet interval durations in seconds: bout start to first movement, between
/// movements, and last movement to bout end (or the whole bout if no movement).
inline std::vector<double> sleep_intervals_s(const SleepBout& bout, double fs) {
    std::vector<double> out;
    std::size_t cursor = bout.start_idx;
    for (const auto& s : bout.movement_segments) {
        if (s.start_idx > cursor) out.push_back(static_cast<double>(s.start_idx - cursor) / fs);
        cursor = s.end_idx;
    }
    if (bout.end_idx > cursor) out.push_back(static_cast<double>(bout.end_idx - cursor) / fs);
    return out;
}

inline std::vector<double> movement_intervals_s(const SleepBout& bout, double fs) {
    std::vector<double> out;
    for (const auto& s : bout.movement_segments) out.push_back(static_cast<double>(s.length()) / fs);
    return out;
}

/// Bin 0..4 for right-closed edges: v <= e0, (e0, e1], ..., > e3.
inline std::size_t duration_bin(double v, const std::array<double, 4>& edges) {
    std::size_t b = 0;
    while (b < edges.size() && v > edges[b]) ++b;
    return b;
}

struct FragmentationFeatures {
    std::array<double, 5> sleep_dur_prob{};
    std::array<double, 5> move_dur_prob{};
};

struct FragmentationHistogram {
    std::array<std::size_t, 5> sleep{};
    std::array<std::size_t, 5> move{};

    void add(std::span<const SleepBout> bouts, double fs, const SleepConfig& cfg = {}) {
        for (const auto& b : bouts) {
            for (double s : sleep_intervals_s(b, fs)) ++sleep[duration_bin(s / 60.0, cfg.sleep_edges_min)];
            for (double s : movement_intervals_s(b, fs)) ++move[duration_bin(s, cfg.move_edges_s)];
        }
    }

    FragmentationFeatures normalized() const {
        FragmentationFeatures f;
        auto norm = [](const std::array<std::size_t, 5>& c, std::array<double, 5>& p) {
            std::size_t total = 0;
            for (auto v : c) total += v;
            if (total == 0) return;
            for (std::size_t i = 0; i < 5; ++i) p[i] = static_cast<double>(c[i]) / static_cast<double>(total);
        };
        norm(sleep, f.sleep_dur_prob);
        norm(move, f.move_dur_prob);
        return f;
    }
};

inline FragmentationFeatures fragmentation_features(std::span<const SleepBout> bouts, double fs,
                                                    const SleepConfig& cfg = {}) {
    FragmentationHistogram h;
    h.add(bouts, fs, cfg);
    return h.normalized();
}

// ---------------------------------------------------------------------------
// Movement frames

struct SleepFrameFeatures {
    RawIntensityFeatures intensity;
    std::array<double, 3> median{};  // x, y, z
    DynamicsFeatures dynamics;
};

struct SleepFrame {
    std::size_t recording_index = 0;
    std::size_t bout_index = 0;
    std::size_t segment_index = 0;
    std::size_t start_idx = 0;
    SleepFrameFeatures features;
};

/// Median with the even-length convention of averaging the two central values.
inline double median(std::span<const double> v) {
    if (v.empty()) return 0.0;
    std::vector<double> c(v.begin(), v.end());
    const std::size_t mid = c.size() / 2;
    std::nth_element(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(mid), c.end());
    const double upper = c[mid];
    if (c.size() % 2 == 1) return upper;
    const double lower = *std::max_element(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

/// Features of one 5 s movement frame, or nothing when the frame MSD is at or
/// below 0.005 g (or a flat axis prevents z-scoring).
inline std::optional<SleepFrameFeatures> sleep_movement_features(FrameView frame, const SleepConfig& cfg = {}) {
    if (frame.size() < 2) return std::nullopt;
    SleepFrameFeatures f;
    f.intensity = raw_intensity(frame);
    if (!(f.intensity.msd_g > cfg.frame_msd_threshold_g)) return std::nullopt;
    f.median = {median(frame.x), median(frame.y), median(frame.z)};
    try {
        f.dynamics = dynamics_features(frame);
    } catch (const DataError&) {
        return std::nullopt;
    }
    return f;
}

struct SleepExtraction {
    std::vector<SleepBout> bouts;
    std::vector<SleepFrame> frames;
};

inline SleepExtraction extract_sleep(const TriaxialRecording& rec, const MsdSeries& msd,
                                     std::size_t recording_index = 0, const SleepConfig& cfg = {}) {
    SleepExtraction out;
    out.bouts = segment_sleep(msd, cfg);
    const std::size_t frame_len = detail::samples_for(cfg.frame_s, rec.sample_rate_hz);
    const auto view = rec.view();
    for (std::size_t b = 0; b < out.bouts.size(); ++b) {
        const auto& segs = out.bouts[b].movement_segments;
        for (std::size_t s = 0; s < segs.size(); ++s) {
            for (std::size_t start : tile_segment(segs[s], frame_len)) {
                auto feats = sleep_movement_features(view.subframe(start, frame_len), cfg);
                if (!feats) continue;
                out.frames.push_back({recording_index, b, s, start, *feats});
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-subject summary

inline constexpr std::size_t kSleepFragmentationDim = 10;
inline constexpr std::size_t kSleepIntensityDim = 12;
inline constexpr std::size_t kSleepDim = kSleepFragmentationDim + kSleepIntensityDim + detail::kDynamicsSummaryDim;
static_assert(kSleepDim == 206);

struct SleepSummary {
    std::array<double, kSleepDim> values{};

    static const std::vector<std::string>& names() {
        static const std::vector<std::string> n = [] {
            std::vector<std::string> v;
            for (int i = 1; i <= 5; ++i) v.push_back("sleep_frag_sleep_dur_p" + std::to_string(i));
            for (int i = 1; i <= 5; ++i) v.push_back("sleep_frag_move_dur_p" + std::to_string(i));
            for (const char* f : {"msd", "pl", "mad", "median_x", "median_y", "median_z"}) {
                v.push_back(std::string("sleep_") + f + "_mean");
                v.push_back(std::string("sleep_") + f + "_std");
            }
            detail::append_dynamics_names("sleep_dyn_", v);
            return v;
        }();
        return n;
    }
};

inline SleepSummary sleep_summary(std::span<const SleepFrame> frames, const FragmentationFeatures& frag) {
    if (frames.size() < 2) throw InsufficientFrames("sleep summary needs at least 2 movement frames");
    SleepSummary s;
    std::size_t k = 0;
    for (double p : frag.sleep_dur_prob) s.values[k++] = p;
    for (double p : frag.move_dur_prob) s.values[k++] = p;
    const auto per_frame = detail::mean_std<6>(frames, [](const SleepFrame& f) {
        const auto& x = f.features;
        return std::array<double, 6>{x.intensity.msd_g, x.intensity.pl_raw, x.intensity.mad_raw,
                                     x.median[0],       x.median[1],        x.median[2]};
    });
    for (std::size_t i = 0; i < 6; ++i) {
        s.values[k++] = per_frame.mean[i];
        s.values[k++] = per_frame.std[i];
    }
    detail::write_dynamics_summary(
        frames, [](const SleepFrame& f) -> const DynamicsFeatures& { return f.features.dynamics; },
        s.values.data() + k);
    return s;
}

inline SleepSummary sleep_summary(std::span<const SleepFrame> frames, std::span<const SleepBout> bouts, double fs,
                                  const SleepConfig& cfg = {}) {
    return sleep_summary(frames, fragmentation_features(bouts, fs, cfg));
}

}  // namespace wristvat
