#pragma once

#include <algorithm>
#include <span>

namespace wristvat::detail {

// Variance indistinguishable from rounding noise on values of this magnitude.
inline bool negligible_variance(double variance, double mean) {
    return !(variance > 1e-24 * std::max(mean * mean, 1e-300));
}

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;  // population
};

inline MeanVar mean_var(std::span<const double> v) {
    MeanVar r;
    if (v.empty()) return r;
    double s = 0.0;
    for (double a : v) s += a;
    r.mean = s / static_cast<double>(v.size());
    double ss = 0.0;
    for (double a : v) ss += (a - r.mean) * (a - r.mean);
    r.var = ss / static_cast<double>(v.size());
    return r;
}

}  // namespace wristvat::detail
