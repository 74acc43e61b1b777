#pragma once

// Synthetic wrist accelerometry with known ground truth: periodic arm-swing
// walks and quiet sleep with scheduled movement bursts.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "wristvat/error.hpp"
#include "wristvat/ingest.hpp"

namespace wristvat::synth {

using Vec3 = std::array<double, 3>;

struct WalkSpec {
    double duration_s = 600.0;
    double step_period_s = 0.79;
    double swing_amplitude_g = 0.4;
    double noise_std_g = 0.02;
    Vec3 gravity_axis = {-1.0, 0.0, 0.0};  // forearm hanging, x along the arm
    double sample_rate_hz = 80.0;
};

struct MovementBurst {
    double onset_s = 0.0;
    double duration_s = 0.0;
    double amplitude_g = 0.0;  // target magnitude std during the burst
};

struct SleepSpec {
    double duration_s = 3.0 * 3600.0;
    std::vector<MovementBurst> movement_schedule;
    double baseline_noise_g = 0.003;
    Vec3 gravity_axis = {0.0, 0.6, -0.8};
    double movement_frequency_hz = 1.3;
    double sample_rate_hz = 80.0;
};

namespace detail {

inline Vec3 unit(Vec3 v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (!(n > 0.0)) throw ConfigError("gravity axis must be non-zero");
    return {v[0] / n, v[1] / n, v[2] / n};
}

// Any unit vector orthogonal to u.
inline Vec3 orthogonal(const Vec3& u) {
    Vec3 a = std::abs(u[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const double d = a[0] * u[0] + a[1] * u[1] + a[2] * u[2];
    return unit({a[0] - d * u[0], a[1] - d * u[1], a[2] - d * u[2]});
}

inline std::size_t sample_count(double duration_s, double fs) {
    if (!(duration_s > 0.0) || !(fs > 0.0)) throw ConfigError("duration and sample rate must be positive");
    return static_cast<std::size_t>(std::llround(duration_s * fs));
}

}  // namespace detail

/// Fundamental arm swing on y, half-amplitude second harmonic on x and z, a
/// constant gravity vector, and white Gaussian noise on every axis.
inline TriaxialRecording gen_walk(const WalkSpec& spec, std::uint64_t seed) {
    if (spec.step_period_s < 0.35 || spec.step_period_s > 0.85)
        throw ConfigError("step period must lie in [0.35, 0.85] s");
    const double fs = spec.sample_rate_hz;
    const std::size_t n = detail::sample_count(spec.duration_s, fs);
    const Vec3 g = detail::unit(spec.gravity_axis);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double py = phase(rng), px = phase(rng), pz = phase(rng);
    const double w = 2.0 * std::numbers::pi / spec.step_period_s;
    const double a = spec.swing_amplitude_g;

    TriaxialRecording r;
    r.subject_id = "synth_walk";
    r.sample_rate_hz = fs;
    r.x.resize(n);
    r.y.resize(n);
    r.z.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        r.x[i] = g[0] + 0.5 * a * std::sin(2.0 * w * t + px) + spec.noise_std_g * noise(rng);
        r.y[i] = g[1] + a * std::sin(w * t + py) + spec.noise_std_g * noise(rng);
        r.z[i] = g[2] + 0.5 * a * std::sin(2.0 * w * t + pz) + spec.noise_std_g * noise(rng);
    }
    return r;
}

inline void validate(const SleepSpec& spec) {
    if (!(spec.baseline_noise_g >= 0.0 && spec.baseline_noise_g < 0.01))
        throw ConfigError("sleep baseline noise must be below 0.01 g");
    auto sched = spec.movement_schedule;
    std::sort(sched.begin(), sched.end(),
              [](const MovementBurst& p, const MovementBurst& q) { return p.onset_s < q.onset_s; });
    for (std::size_t i = 0; i < sched.size(); ++i) {
        const auto& b = sched[i];
        if (b.onset_s < 0.0 || b.duration_s <= 0.0 || b.onset_s + b.duration_s > spec.duration_s)
            throw ConfigError("movement burst outside the recording");
        if (i > 0 && sched[i - 1].onset_s + sched[i - 1].duration_s > b.onset_s)
            throw ConfigError("movement bursts overlap");
    }
}

/// Quiet baseline around a fixed wrist posture, with sinusoidal bursts along
/// the gravity direction (amplitude sqrt(2) * amplitude_g, so the magnitude std
/// inside a burst is about amplitude_g) plus a smaller orthogonal component.
inline TriaxialRecording gen_sleep(const SleepSpec& spec, std::uint64_t seed) {
    validate(spec);
    const double fs = spec.sample_rate_hz;
    const std::size_t n = detail::sample_count(spec.duration_s, fs);
    const Vec3 g = detail::unit(spec.gravity_axis);
    const Vec3 o = detail::orthogonal(g);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    TriaxialRecording r;
    r.subject_id = "synth_sleep";
    r.sample_rate_hz = fs;
    r.x.resize(n);
    r.y.resize(n);
    r.z.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.x[i] = g[0] + spec.baseline_noise_g * noise(rng);
        r.y[i] = g[1] + spec.baseline_noise_g * noise(rng);
        r.z[i] = g[2] + spec.baseline_noise_g * noise(rng);
    }
    const double w = 2.0 * std::numbers::pi * spec.movement_frequency_hz;
    for (const auto& b : spec.movement_schedule) {
        const auto first = static_cast<std::size_t>(std::llround(b.onset_s * fs));
        const auto last = std::min(n, static_cast<std::size_t>(std::llround((b.onset_s + b.duration_s) * fs)));
        const double along = std::numbers::sqrt2 * b.amplitude_g;
        const double across = 0.5 * b.amplitude_g;
        for (std::size_t i = first; i < last; ++i) {
            const double t = static_cast<double>(i - first) / fs;
            const double s = along * std::sin(w * t);
            const double c = across * std::sin(0.37 * w * t + 1.0);
            r.x[i] += s * g[0] + c * o[0];
            r.y[i] += s * g[1] + c * o[1];
            r.z[i] += s * g[2] + c * o[2];
        }
    }
    return r;
}

/// Quiet posture with white noise; e.g. sedentary wake periods when noise is
/// between the sleep and gait thresholds.
inline TriaxialRecording gen_rest(double duration_s, double noise_std_g, Vec3 gravity_axis, std::uint64_t seed,
                                  double sample_rate_hz = 80.0) {
    const std::size_t n = detail::sample_count(duration_s, sample_rate_hz);
    const Vec3 g = detail::unit(gravity_axis);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_std_g);
    TriaxialRecording r;
    r.subject_id = "synth_rest";
    r.sample_rate_hz = sample_rate_hz;
    r.x.resize(n);
    r.y.resize(n);
    r.z.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.x[i] = g[0] + noise(rng);
        r.y[i] = g[1] + noise(rng);
        r.z[i] = g[2] + noise(rng);
    }
    return r;
}

/// Joins recordings sharing a sample rate end to end.
inline TriaxialRecording concatenate(const std::vector<TriaxialRecording>& parts, const std::string& subject_id) {
    if (parts.empty()) throw ConfigError("nothing to concatenate");
    TriaxialRecording r;
    r.subject_id = subject_id;
    r.sample_rate_hz = parts.front().sample_rate_hz;
    r.start_epoch_s = parts.front().start_epoch_s;
    for (const auto& p : parts) {
        if (p.sample_rate_hz != r.sample_rate_hz) throw ConfigError("sample rates differ");
        r.x.insert(r.x.end(), p.x.begin(), p.x.end());
        r.y.insert(r.y.end(), p.y.begin(), p.y.end());
        r.z.insert(r.z.end(), p.z.begin(), p.z.end());
    }
    return r;
}

// ---------------------------------------------------------------------------
// Ground truth

struct Interval {
    double start_s = 0.0;
    double end_s = 0.0;
    double duration_s() const { return end_s - start_s; }
};

struct SleepTruth {
    std::vector<Interval> bouts;
    std::vector<std::vector<Interval>> movements;  // per bout
    std::vector<double> sleep_intervals_s;
    std::vector<double> movement_intervals_s;
};

/// Nominal schedule-level outcome of the sleep rules: bursts longer than two
/// minutes with amplitude at or above the quiet threshold split bouts, quiet
/// spans of two hours or more are bouts, and bursts above 0.05 g lasting 10 s
/// or more inside a bout are movements. Measured boundaries differ from these
/// by up to one MSD window.
inline SleepTruth sleep_ground_truth(const SleepSpec& spec) {
    auto sched = spec.movement_schedule;
    std::sort(sched.begin(), sched.end(),
              [](const MovementBurst& p, const MovementBurst& q) { return p.onset_s < q.onset_s; });
    SleepTruth t;
    double cursor = 0.0;
    std::vector<Interval> spans;
    for (const auto& b : sched)
        if (b.duration_s > 120.0 && b.amplitude_g >= 0.01) {
            spans.push_back({cursor, b.onset_s});
            cursor = b.onset_s + b.duration_s;
        }
    spans.push_back({cursor, spec.duration_s});
    for (const auto& span : spans) {
        if (span.duration_s() < 2.0 * 3600.0) continue;
        t.bouts.push_back(span);
        std::vector<Interval> moves;
        for (const auto& b : sched)
            if (b.onset_s >= span.start_s && b.onset_s + b.duration_s <= span.end_s && b.amplitude_g > 0.05 &&
                b.duration_s >= 10.0)
                moves.push_back({b.onset_s, b.onset_s + b.duration_s});
        double c = span.start_s;
        for (const auto& m : moves) {
            t.sleep_intervals_s.push_back(m.start_s - c);
            t.movement_intervals_s.push_back(m.duration_s());
            c = m.end_s;
        }
        t.sleep_intervals_s.push_back(span.end_s - c);
        t.movements.push_back(std::move(moves));
    }
    return t;
}

inline nlohmann::json to_json(const WalkSpec& s, std::uint64_t seed) {
    return {{"kind", "walk"},
            {"seed", seed},
            {"duration_s", s.duration_s},
            {"step_period_s", s.step_period_s},
            {"swing_amplitude_g", s.swing_amplitude_g},
            {"noise_std_g", s.noise_std_g},
            {"gravity_axis", s.gravity_axis},
            {"sample_rate_hz", s.sample_rate_hz},
            {"expected_gait_bouts", nlohmann::json::array({{{"start_s", 0.0}, {"end_s", s.duration_s}}})}};
}

inline nlohmann::json to_json(const SleepSpec& s, std::uint64_t seed) {
    nlohmann::json sched = nlohmann::json::array();
    for (const auto& b : s.movement_schedule)
        sched.push_back({{"onset_s", b.onset_s}, {"duration_s", b.duration_s}, {"amplitude_g", b.amplitude_g}});
    const auto truth = sleep_ground_truth(s);
    nlohmann::json bouts = nlohmann::json::array();
    for (std::size_t i = 0; i < truth.bouts.size(); ++i) {
        nlohmann::json moves = nlohmann::json::array();
        for (const auto& m : truth.movements[i]) moves.push_back({{"start_s", m.start_s}, {"end_s", m.end_s}});
        bouts.push_back({{"start_s", truth.bouts[i].start_s}, {"end_s", truth.bouts[i].end_s}, {"movements", moves}});
    }
    return {{"kind", "sleep"},
            {"seed", seed},
            {"duration_s", s.duration_s},
            {"baseline_noise_g", s.baseline_noise_g},
            {"gravity_axis", s.gravity_axis},
            {"movement_frequency_hz", s.movement_frequency_hz},
            {"sample_rate_hz", s.sample_rate_hz},
            {"movement_schedule", sched},
            {"expected_sleep_bouts", bouts},
            {"sleep_intervals_s", truth.sleep_intervals_s},
            {"movement_intervals_s", truth.movement_intervals_s}};
}

}  // namespace wristvat::synth
