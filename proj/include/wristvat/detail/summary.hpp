#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wristvat/dynamics.hpp"

namespace wristvat::detail {

template <std::size_t K>
struct MeanStd {
    std::array<double, K> mean{};
    std::array<double, K> std{};
};

/// Two-pass per-component mean and population std across items, in item order.
template <std::size_t K, class T, class Proj>
MeanStd<K> mean_std(std::span<const T> items, Proj proj) {
    MeanStd<K> r;
    if (items.empty()) return r;
    const double n = static_cast<double>(items.size());
    for (const auto& it : items) {
        const std::array<double, K> v = proj(it);
        for (std::size_t k = 0; k < K; ++k) r.mean[k] += v[k];
    }
    for (auto& m : r.mean) m /= n;
    for (const auto& it : items) {
        const std::array<double, K> v = proj(it);
        for (std::size_t k = 0; k < K; ++k) r.std[k] += (v[k] - r.mean[k]) * (v[k] - r.mean[k]);
    }
    for (auto& s : r.std) s = std::sqrt(s / n);
    return r;
}

inline constexpr std::size_t kDynamicsSummaryDim = 2 * DynamicsFeatures::kCount;  // 184

/// Dynamics block layout: PL mean/std, MAD mean/std, each pair's mean/std,
/// then all 84 TDE means followed by all 84 TDE stds.
template <class T, class Get>
void write_dynamics_summary(std::span<const T> frames, Get get_dynamics, double* out) {
    const auto ms = mean_std<DynamicsFeatures::kCount>(
        frames, [&](const T& f) { return get_dynamics(f).flatten(); });
    std::size_t k = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        out[k++] = ms.mean[i];
        out[k++] = ms.std[i];
    }
    for (std::size_t i = 8; i < DynamicsFeatures::kCount; ++i) out[k++] = ms.mean[i];
    for (std::size_t i = 8; i < DynamicsFeatures::kCount; ++i) out[k++] = ms.std[i];
}

inline void append_dynamics_names(const std::string& prefix, std::vector<std::string>& names) {
    for (const char* base : {"pl", "mad"}) {
        names.push_back(prefix + base + "_mean");
        names.push_back(prefix + base + "_std");
    }
    for (auto p : kAxisPairs) {
        names.push_back(prefix + "mad_" + std::string(to_string(p)) + "_mean");
        names.push_back(prefix + "mad_" + std::string(to_string(p)) + "_std");
    }
    for (const char* stat : {"mean", "std"})
        for (std::size_t s = 0; s < kTdeScales; ++s)
            for (std::size_t r = 0; r < kTdeChannels; ++r) {
                char buf[48];
                std::snprintf(buf, sizeof(buf), "tde_%s_s%zu_r%02zu", stat, s + 1, r + 1);
                names.push_back(prefix + buf);
            }
}

}  // namespace wristvat::detail
