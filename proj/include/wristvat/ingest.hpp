#pragma once

// Recording and subject data model, CSV loaders/writers, and the cohort
// inclusion filter.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wristvat/detail/text.hpp"
#include "wristvat/error.hpp"

namespace wristvat {

/// Non-owning view of a contiguous triaxial segment (three equal-length axes).
struct FrameView {
    std::span<const double> x;
    std::span<const double> y;
    std::span<const double> z;

    std::size_t size() const { return x.size(); }

    FrameView subframe(std::size_t start, std::size_t length) const {
        return {x.subspan(start, length), y.subspan(start, length), z.subspan(start, length)};
    }

    std::span<const double> axis(int a) const { return a == 0 ? x : (a == 1 ? y : z); }
};

/// Owning triaxial segment, e.g. the output of z-scoring.
struct Frame {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> z;

    std::size_t size() const { return x.size(); }
    FrameView view() const { return {x, y, z}; }
};

/// One subject-device recording in g at a uniform sample rate.
struct TriaxialRecording {
    std::string subject_id;
    double sample_rate_hz = 80.0;
    double start_epoch_s = 0.0;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> z;

    std::size_t size() const { return x.size(); }
    FrameView view() const { return {x, y, z}; }
    double duration_s() const { return static_cast<double>(size()) / sample_rate_hz; }

    /// Throws if the invariants (equal non-empty axes, positive rate, finite samples) fail.
    void validate() const {
        if (x.size() != y.size() || x.size() != z.size())
            throw ParseError("recording axes have unequal lengths");
        if (x.empty()) throw EmptyRecording("recording '" + subject_id + "' has no samples");
        if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
            throw ParseError("sample rate must be positive");
        for (const auto* axis : {&x, &y, &z})
            for (double v : *axis)
                if (!std::isfinite(v)) throw NonFiniteSample("non-finite sample in '" + subject_id + "'");
    }
};

enum class Gender { male, female };

struct SubjectRecord {
    std::string subject_id;
    std::optional<double> age_years;
    std::optional<Gender> gender;
    std::optional<double> height_cm;
    std::optional<double> weight_kg;
    std::optional<double> bmi_kg_m2;
    std::optional<double> waist_cm;
    std::optional<double> vat_g;

    bool has_all_covariates() const {
        return age_years && gender && height_cm && weight_kg && bmi_kg_m2 && waist_cm;
    }
};

struct CohortDataset {
    std::vector<SubjectRecord> subjects;
    std::map<std::string, std::vector<TriaxialRecording>> recordings;

    const SubjectRecord* find(const std::string& id) const {
        for (const auto& s : subjects)
            if (s.subject_id == id) return &s;
        return nullptr;
    }

    void validate() const {
        for (const auto& [id, recs] : recordings) {
            if (!find(id)) throw DataError("recordings for unknown subject '" + id + "'");
            for (const auto& r : recs)
                if (r.subject_id != id) throw DataError("recording subject id mismatch for '" + id + "'");
        }
    }
};

enum class RecordingFormat { csv_txyz, csv_xyz_with_header_rate };

namespace detail {

// "# key=value" metadata lines preceding the column header.
inline void parse_meta_line(std::string_view line, std::map<std::string, std::string, std::less<>>& meta) {
    line.remove_prefix(1);
    line = trim(line);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) return;
    meta.emplace(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
}

inline double meta_double(const std::map<std::string, std::string, std::less<>>& meta, const std::string& key,
                          const std::string& path) {
    double v = 0.0;
    if (!parse_double(meta.at(key), v) || !std::isfinite(v))
        throw ParseError(path + ": bad metadata value for " + key);
    return v;
}

}  // namespace detail

/// Parses a recording from text already in memory. `source` is used in messages.
inline TriaxialRecording parse_recording(std::string_view text, RecordingFormat format,
                                         const std::string& source = "<memory>") {
    std::map<std::string, std::string, std::less<>> meta;
    const bool with_time = format == RecordingFormat::csv_txyz;
    const std::size_t n_fields = with_time ? 4 : 3;
    bool header_seen = false;
    std::vector<double> t;
    TriaxialRecording rec;

    detail::for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
        const auto line = detail::trim(raw);
        if (line.empty()) return;
        if (line.front() == '#') {
            if (!header_seen) detail::parse_meta_line(line, meta);
            return;
        }
        const auto fields = detail::split(line);
        if (!header_seen) {
            const std::vector<std::string_view> expected =
                with_time ? std::vector<std::string_view>{"t", "x", "y", "z"}
                          : std::vector<std::string_view>{"x", "y", "z"};
            if (fields != expected)
                throw ParseError(source + ":" + std::to_string(line_no) + ": unexpected header");
            header_seen = true;
            return;
        }
        if (fields.size() != n_fields)
            throw ParseError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(n_fields) +
                             " fields");
        double v[4];
        for (std::size_t i = 0; i < n_fields; ++i) {
            if (!detail::parse_double(fields[i], v[i]))
                throw ParseError(source + ":" + std::to_string(line_no) + ": malformed number '" +
                                 std::string(fields[i]) + "'");
            if (!std::isfinite(v[i]))
                throw NonFiniteSample(source + ":" + std::to_string(line_no) + ": non-finite sample");
        }
        const std::size_t o = with_time ? 1 : 0;
        if (with_time) t.push_back(v[0]);
        rec.x.push_back(v[o]);
        rec.y.push_back(v[o + 1]);
        rec.z.push_back(v[o + 2]);
    });

    if (!header_seen) throw ParseError(source + ": missing column header");
    if (rec.x.empty()) throw EmptyRecording(source + ": no samples");

    if (auto it = meta.find("subject_id"); it != meta.end()) rec.subject_id = it->second;
    if (meta.count("sample_rate_hz")) {
        rec.sample_rate_hz = detail::meta_double(meta, "sample_rate_hz", source);
    } else if (with_time && t.size() >= 2) {
        // Endpoint estimate; individual timestamps are not trusted.
        const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
        if (!(dt > 0.0)) throw ParseError(source + ": timestamps are not increasing");
        rec.sample_rate_hz = std::round(1e6 / dt) / 1e6;
    } else {
        throw ParseError(source + ": sample rate not given and cannot be inferred");
    }
    if (!(rec.sample_rate_hz > 0.0)) throw ParseError(source + ": sample rate must be positive");
    if (meta.count("start_epoch_s"))
        rec.start_epoch_s = detail::meta_double(meta, "start_epoch_s", source);
    else if (with_time)
        rec.start_epoch_s = t.front();
    return rec;
}

inline TriaxialRecording load_recording(const std::filesystem::path& path, RecordingFormat format) {
    auto rec = parse_recording(detail::read_file(path.string()), format, path.string());
    if (rec.subject_id.empty()) rec.subject_id = path.stem().string();
    return rec;
}

/// Writes the csv_txyz profile. Samples use the shortest round-trip decimal form,
/// so load_recording(write_recording(r)) reproduces every sample bit-exactly.
inline void write_recording(std::ostream& out, const TriaxialRecording& rec) {
    out << "# subject_id=" << rec.subject_id << '\n'
        << "# sample_rate_hz=" << detail::format_double(rec.sample_rate_hz) << '\n'
        << "# start_epoch_s=" << detail::format_double(rec.start_epoch_s) << '\n'
        << "t,x,y,z\n";
    std::string line;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        line.clear();
        line += detail::format_double(static_cast<double>(i) / rec.sample_rate_hz);
        line += ',';
        line += detail::format_double(rec.x[i]);
        line += ',';
        line += detail::format_double(rec.y[i]);
        line += ',';
        line += detail::format_double(rec.z[i]);
        line += '\n';
        out << line;
    }
}

inline void write_recording(const std::filesystem::path& path, const TriaxialRecording& rec) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_recording(out, rec);
}

// ---------------------------------------------------------------------------
// Subject metadata

inline constexpr std::string_view kSubjectHeader = "subject_id,age,gender,height_cm,weight_kg,bmi,waist_cm,vat_g";

/// Tolerance for a supplied BMI against weight/height^2. Public data sets round
/// BMI to one decimal, so half of that rounding step is accepted.
inline constexpr double kBmiTolerance = 0.05 + 1e-9;

inline std::vector<SubjectRecord> parse_subjects(std::string_view text, const std::string& source = "<memory>") {
    std::vector<SubjectRecord> out;
    bool header_seen = false;
    detail::for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
        const auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') return;
        const auto fields = detail::split(line);
        const auto where = source + ":" + std::to_string(line_no);
        if (!header_seen) {
            if (fields != detail::split(kSubjectHeader)) throw ParseError(where + ": unexpected subject header");
            header_seen = true;
            return;
        }
        if (fields.size() != 8) throw ParseError(where + ": expected 8 fields");
        SubjectRecord s;
        s.subject_id = std::string(fields[0]);
        if (s.subject_id.empty()) throw ParseError(where + ": empty subject_id");
        auto opt = [&](std::string_view f) -> std::optional<double> {
            if (f.empty() || f == "NA") return std::nullopt;
            double v = 0.0;
            if (!detail::parse_double(f, v)) throw ParseError(where + ": malformed number '" + std::string(f) + "'");
            if (!std::isfinite(v)) return std::nullopt;
            return v;
        };
        s.age_years = opt(fields[1]);
        if (fields[2] == "M" || fields[2] == "m")
            s.gender = Gender::male;
        else if (fields[2] == "F" || fields[2] == "f")
            s.gender = Gender::female;
        else if (!(fields[2].empty() || fields[2] == "NA"))
            throw ParseError(where + ": gender must be M or F");
        s.height_cm = opt(fields[3]);
        s.weight_kg = opt(fields[4]);
        s.bmi_kg_m2 = opt(fields[5]);
        s.waist_cm = opt(fields[6]);
        s.vat_g = opt(fields[7]);
        if (s.vat_g && *s.vat_g < 0.0) throw ParseError(where + ": negative vat_g");
        if (s.height_cm && s.weight_kg && *s.height_cm > 0.0) {
            const double h = *s.height_cm / 100.0;
            const double derived = *s.weight_kg / (h * h);
            if (!s.bmi_kg_m2)
                s.bmi_kg_m2 = derived;
            else if (std::abs(*s.bmi_kg_m2 - derived) > kBmiTolerance)
                throw ParseError(where + ": bmi inconsistent with height and weight");
        }
        out.push_back(std::move(s));
    });
    if (!header_seen) throw ParseError(source + ": missing subject header");
    return out;
}

inline std::vector<SubjectRecord> load_subjects(const std::filesystem::path& path) {
    return parse_subjects(detail::read_file(path.string()), path.string());
}

inline void write_subjects(std::ostream& out, const std::vector<SubjectRecord>& subjects) {
    out << kSubjectHeader << '\n';
    auto opt = [](const std::optional<double>& v) { return v ? detail::format_double(*v) : std::string(); };
    for (const auto& s : subjects) {
        out << s.subject_id << ',' << opt(s.age_years) << ','
            << (s.gender ? (*s.gender == Gender::male ? "M" : "F") : "") << ',' << opt(s.height_cm) << ','
            << opt(s.weight_kg) << ',' << opt(s.bmi_kg_m2) << ',' << opt(s.waist_cm) << ',' << opt(s.vat_g)
            << '\n';
    }
}

// ---------------------------------------------------------------------------
// Recording discovery

/// Recording files per subject under a directory. Accepts `DIR/<id>.csv` (one
/// continuous recording) and `DIR/<id>/*.csv` (e.g. one file per day).
inline std::map<std::string, std::vector<std::filesystem::path>> discover_recordings(
    const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ConfigError("recordings directory not found: " + dir.string());
    std::map<std::string, std::vector<fs::path>> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory()) {
            std::vector<fs::path> files;
            for (const auto& f : fs::directory_iterator(entry.path()))
                if (f.is_regular_file() && f.path().extension() == ".csv") files.push_back(f.path());
            std::sort(files.begin(), files.end());
            if (!files.empty()) out[entry.path().filename().string()] = std::move(files);
        } else if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            out[entry.path().stem().string()].push_back(entry.path());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Inclusion filter

struct SubjectFilter {
    double min_age_years = 20.0;
    double max_age_years = 60.0;
    double min_gait_hours = 3.0;
};

/// Keeps subjects aged 20-60 with all six covariates and VAT present and at
/// least three hours of detected gait. Subjects absent from `total_gait_hours`
/// count as zero hours.
inline CohortDataset apply_subject_filters(const CohortDataset& dataset,
                                           const std::map<std::string, double>& total_gait_hours,
                                           const SubjectFilter& filter = {}) {
    CohortDataset out;
    for (const auto& s : dataset.subjects) {
        if (!s.has_all_covariates() || !s.vat_g) continue;
        if (*s.age_years < filter.min_age_years || *s.age_years > filter.max_age_years) continue;
        const auto it = total_gait_hours.find(s.subject_id);
        const double hours = it == total_gait_hours.end() ? 0.0 : it->second;
        if (!(hours >= filter.min_gait_hours)) continue;
        out.subjects.push_back(s);
        if (auto r = dataset.recordings.find(s.subject_id); r != dataset.recordings.end())
            out.recordings.emplace(r->first, r->second);
    }
    return out;
}

}  // namespace wristvat
