#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "wristvat/ingest.hpp"
#include "wristvat/sigproc.hpp"

namespace testing_support {

inline wristvat::Frame random_frame(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, scale);
    wristvat::Frame f;
    for (auto* v : {&f.x, &f.y, &f.z}) {
        v->resize(n);
        for (double& e : *v) e = nd(rng);
    }
    return f;
}

inline wristvat::MsdSeries msd_of(std::vector<double> v, double fs = 80.0) {
    return {std::move(v), fs, 10.0};
}

/// Piecewise-constant MSD series: (value, seconds) pieces at 80 Hz.
inline wristvat::MsdSeries msd_pieces(std::initializer_list<std::pair<double, double>> pieces, double fs = 80.0) {
    std::vector<double> v;
    for (auto [value, seconds] : pieces) v.insert(v.end(), wristvat::detail::samples_for(seconds, fs), value);
    return msd_of(std::move(v), fs);
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("wristvat_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string slurp(const std::filesystem::path& p) { return wristvat::detail::read_file(p.string()); }

}  // namespace testing_support
