#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wristvat::detail {

struct Run {
    std::size_t start = 0;
    std::size_t end = 0;  // exclusive
    std::size_t length() const { return end - start; }
};

/// Maximal runs of indices in [first, last) where pred(values[i]) holds.
template <class Pred>
std::vector<Run> runs_where(std::span<const double> values, Pred pred, std::size_t first, std::size_t last) {
    std::vector<Run> runs;
    std::size_t i = first;
    while (i < last) {
        if (!pred(values[i])) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < last && pred(values[i])) ++i;
        runs.push_back({start, i});
    }
    return runs;
}

struct MergedRun {
    std::size_t start = 0;
    std::size_t end = 0;
    std::size_t active = 0;  // samples covered by the constituent runs
    std::size_t span() const { return end - start; }
};

/// Joins consecutive runs whose separating gap is at most max_gap samples.
inline std::vector<MergedRun> merge_runs(const std::vector<Run>& runs, std::size_t max_gap) {
    std::vector<MergedRun> out;
    for (const auto& r : runs) {
        if (!out.empty() && r.start - out.back().end <= max_gap) {
            out.back().end = r.end;
            out.back().active += r.length();
        } else {
            out.push_back({r.start, r.end, r.length()});
        }
    }
    return out;
}

}  // namespace wristvat::detail
