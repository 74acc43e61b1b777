#pragma once

// End-to-end commands: per-subject feature extraction, cross-validated
// evaluation of feature configurations, estimate fusion and synthetic data
// generation. The CLI is a thin wrapper over these functions.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "wristvat/detail/text.hpp"
#include "wristvat/error.hpp"
#include "wristvat/gait.hpp"
#include "wristvat/ingest.hpp"
#include "wristvat/model.hpp"
#include "wristvat/sigproc.hpp"
#include "wristvat/sleep.hpp"
#include "wristvat/synth.hpp"

#ifndef WRISTVAT_VERSION
#define WRISTVAT_VERSION "0.1.0"
#endif

namespace wristvat {

inline constexpr const char* kVersion = WRISTVAT_VERSION;
inline constexpr const char* kGaitHoursColumn = "detected_gait_hours";

// ---------------------------------------------------------------------------
// Feature tables

struct FeatureTable {
    std::vector<std::string> columns;  // excludes subject_id
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;

    std::size_t column_index(const std::string& name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw FeatureMismatch("missing feature column '" + name + "'");
        return static_cast<std::size_t>(it - columns.begin());
    }
};

inline std::vector<std::string> extracted_feature_columns() {
    std::vector<std::string> c{kGaitHoursColumn};
    const auto& g = GaitSummary::names();
    const auto& s = SleepSummary::names();
    c.insert(c.end(), g.begin(), g.end());
    c.insert(c.end(), s.begin(), s.end());
    return c;
}

inline std::string header_comment(const std::string& command, std::uint64_t seed, const std::string& config) {
    return std::string("# wristvat ") + kVersion + " command=" + command + " seed=" + std::to_string(seed) +
           " config=" + detail::hex64(detail::fnv1a(config));
}

inline void write_feature_table(std::ostream& out, const FeatureTable& t, const std::string& comment) {
    out << comment << '\n' << "subject_id";
    for (const auto& c : t.columns) out << ',' << c;
    out << '\n';
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        out << t.ids[r];
        for (double v : t.rows[r]) out << ',' << detail::format_double(v);
        out << '\n';
    }
}

inline FeatureTable parse_feature_table(std::string_view text, const std::string& source = "<memory>") {
    FeatureTable t;
    bool header = false;
    detail::for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
        const auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') return;
        const auto f = detail::split(line);
        if (!header) {
            if (f.empty() || f[0] != "subject_id") throw ParseError(source + ": first column must be subject_id");
            for (std::size_t i = 1; i < f.size(); ++i) t.columns.emplace_back(f[i]);
            header = true;
            return;
        }
        if (f.size() != t.columns.size() + 1)
            throw ParseError(source + ":" + std::to_string(line_no) + ": wrong field count");
        t.ids.emplace_back(f[0]);
        std::vector<double> row(t.columns.size());
        for (std::size_t i = 0; i < row.size(); ++i)
            if (!detail::parse_double(f[i + 1], row[i]))
                throw ParseError(source + ":" + std::to_string(line_no) + ": malformed number");
        t.rows.push_back(std::move(row));
    });
    if (!header) throw ParseError(source + ": missing header");
    return t;
}

inline FeatureTable load_feature_table(const std::filesystem::path& p) {
    return parse_feature_table(detail::read_file(p.string()), p.string());
}

// ---------------------------------------------------------------------------
// Feature classes and configurations

enum class FeatureClass {
    gait_cadence,
    gait_intensity,
    gait_patterns,
    gait_dynamics,
    gait_tde,
    sleep_fragmentation,
    sleep_intensity,
    sleep_dynamics,
    sleep_tde,
    gait,
    sleep,
    cov,
};

inline const std::map<std::string, FeatureClass>& feature_class_names() {
    static const std::map<std::string, FeatureClass> m = {
        {"gait_cadence", FeatureClass::gait_cadence},
        {"gait_intensity", FeatureClass::gait_intensity},
        {"gait_patterns", FeatureClass::gait_patterns},
        {"gait_dynamics", FeatureClass::gait_dynamics},
        {"gait_tde", FeatureClass::gait_tde},
        {"sleep_fragmentation", FeatureClass::sleep_fragmentation},
        {"sleep_intensity", FeatureClass::sleep_intensity},
        {"sleep_dynamics", FeatureClass::sleep_dynamics},
        {"sleep_tde", FeatureClass::sleep_tde},
        {"gait", FeatureClass::gait},
        {"sleep", FeatureClass::sleep},
        {"cov", FeatureClass::cov},
    };
    return m;
}

inline bool column_in_class(const std::string& c, FeatureClass k) {
    auto starts = [&](std::string_view p) { return c.rfind(p, 0) == 0; };
    switch (k) {
        case FeatureClass::gait_cadence: return starts("gait_step_");
        case FeatureClass::gait_intensity: return starts("gait_msd_") || starts("gait_pl_") || starts("gait_mad_");
        case FeatureClass::gait_patterns: return starts("gait_trans_") || starts("gait_frame_");
        case FeatureClass::gait_dynamics: return starts("gait_dyn_");
        case FeatureClass::gait_tde: return starts("gait_dyn_tde_");
        case FeatureClass::sleep_fragmentation: return starts("sleep_frag_");
        case FeatureClass::sleep_intensity:
            return starts("sleep_msd_") || starts("sleep_pl_") || starts("sleep_mad_") || starts("sleep_median_");
        case FeatureClass::sleep_dynamics: return starts("sleep_dyn_");
        case FeatureClass::sleep_tde: return starts("sleep_dyn_tde_");
        case FeatureClass::gait: return starts("gait_");
        case FeatureClass::sleep: return starts("sleep_");
        case FeatureClass::cov: return starts("cov_");
    }
    return false;
}

/// A named union of feature classes, e.g. "gait+sleep+cov".
struct FeatureConfiguration {
    std::string name;
    std::vector<std::string> classes;
};

inline FeatureConfiguration parse_configuration(const std::string& spec) {
    FeatureConfiguration c;
    std::string token;
    std::set<std::string> seen;
    auto flush = [&] {
        const auto t = std::string(detail::trim(token));
        token.clear();
        if (t.empty()) return;
        if (!feature_class_names().count(t)) throw ConfigError("unknown feature class '" + t + "'");
        if (seen.insert(t).second) c.classes.push_back(t);
    };
    for (char ch : spec) {
        if (ch == '+' || ch == ',')
            flush();
        else
            token += ch;
    }
    flush();
    if (c.classes.empty()) throw ConfigError("empty feature selection");
    for (std::size_t i = 0; i < c.classes.size(); ++i) c.name += (i ? "+" : "") + c.classes[i];
    return c;
}

/// The ridge rows of the published evaluation: feature classes one by one,
/// gait, sleep, their union, covariates alone and everything together.
inline std::vector<FeatureConfiguration> default_configurations() {
    std::vector<FeatureConfiguration> out;
    for (const char* s : {"gait_cadence", "gait_intensity", "gait_patterns", "gait_dynamics", "sleep_fragmentation",
                          "sleep_intensity", "sleep_dynamics", "gait", "sleep", "gait+sleep", "cov",
                          "gait+sleep+cov"})
        out.push_back(parse_configuration(s));
    return out;
}

inline std::vector<std::string> configuration_columns(const FeatureConfiguration& cfg,
                                                      const std::vector<std::string>& available) {
    std::vector<std::string> cols;
    for (const auto& c : available) {
        if (c == kGaitHoursColumn) continue;
        for (const auto& k : cfg.classes)
            if (column_in_class(c, feature_class_names().at(k))) {
                cols.push_back(c);
                break;
            }
    }
    if (cols.empty()) throw ConfigError("configuration '" + cfg.name + "' selects no columns");
    return cols;
}

// ---------------------------------------------------------------------------
// Per-subject extraction

struct ExtractionOptions {
    GaitConfig gait{};
    SleepConfig sleep{};
    double msd_window_s = 10.0;
};

struct SubjectFeatures {
    std::string subject_id;
    std::optional<GaitSummary> gait;
    std::optional<SleepSummary> sleep;
    std::size_t gait_frames = 0;
    std::size_t sleep_frames = 0;
    std::size_t sleep_bouts = 0;
    double gait_hours = 0.0;
    std::string exclusion_reason;  // empty when usable
    std::string detail;
};

/// Incremental per-subject accumulation so recordings can be processed one at
/// a time without holding a whole week of samples in memory.
class SubjectAccumulator {
public:
    explicit SubjectAccumulator(std::string id, ExtractionOptions opt = {})
        : id_(std::move(id)), opt_(std::move(opt)) {}

    void add(const TriaxialRecording& rec) {
        rec.validate();
        const auto msd = rolling_msd(magnitude(rec), opt_.msd_window_s);
        auto g = extract_gait_frames(rec, msd, index_, opt_.gait);
        gait_frames_.insert(gait_frames_.end(), g.frames.begin(), g.frames.end());
        auto s = extract_sleep(rec, msd, index_, opt_.sleep);
        frag_.add(s.bouts, rec.sample_rate_hz, opt_.sleep);
        sleep_bouts_ += s.bouts.size();
        sleep_frames_.insert(sleep_frames_.end(), s.frames.begin(), s.frames.end());
        ++index_;
    }

    const std::vector<GaitFrame>& gait_frames() const { return gait_frames_; }
    const std::vector<SleepFrame>& sleep_frames() const { return sleep_frames_; }

    SubjectFeatures finish() const {
        SubjectFeatures f;
        f.subject_id = id_;
        f.gait_frames = gait_frames_.size();
        f.sleep_frames = sleep_frames_.size();
        f.sleep_bouts = sleep_bouts_;
        f.gait_hours = total_gait_hours(gait_frames_.size(), opt_.gait.frame_s);
        if (gait_frames_.size() >= 2) f.gait = gait_summary(gait_frames_);
        if (sleep_frames_.size() >= 2) f.sleep = sleep_summary(sleep_frames_, frag_.normalized());
        if (!f.gait) {
            f.exclusion_reason = "NO_GAIT";
            f.detail = std::to_string(f.gait_frames) + " gait frames";
        } else if (!f.sleep) {
            f.exclusion_reason = "NO_SLEEP";
            f.detail = std::to_string(f.sleep_frames) + " sleep movement frames in " +
                       std::to_string(f.sleep_bouts) + " bouts";
        }
        return f;
    }

private:
    std::string id_;
    ExtractionOptions opt_;
    std::size_t index_ = 0;
    std::vector<GaitFrame> gait_frames_;
    std::vector<SleepFrame> sleep_frames_;
    FragmentationHistogram frag_;
    std::size_t sleep_bouts_ = 0;
};

inline SubjectFeatures extract_subject(const std::string& id, const std::vector<TriaxialRecording>& recs,
                                       const ExtractionOptions& opt = {}) {
    SubjectAccumulator acc(id, opt);
    for (const auto& r : recs) acc.add(r);
    return acc.finish();
}

inline SubjectFeatures extract_subject_files(const std::string& id, const std::vector<std::filesystem::path>& files,
                                             RecordingFormat format, const ExtractionOptions& opt = {}) {
    SubjectAccumulator acc(id, opt);
    try {
        for (const auto& p : files) {
            auto rec = load_recording(p, format);
            rec.subject_id = id;
            acc.add(rec);
        }
    } catch (const Error& e) {
        SubjectFeatures f;
        f.subject_id = id;
        f.exclusion_reason = "LOAD_ERROR";
        f.detail = e.what();
        return f;
    }
    return acc.finish();
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
}

// ---------------------------------------------------------------------------
// extract

struct ExtractConfig {
    std::filesystem::path recordings_dir;
    std::optional<std::filesystem::path> subjects_file;
    std::filesystem::path out_dir;
    RecordingFormat format = RecordingFormat::csv_txyz;
    std::size_t jobs = 1;
    ExtractionOptions options{};
    std::ostream* log = nullptr;
};

struct ExtractResult {
    std::vector<SubjectFeatures> subjects;  // sorted by subject_id
    std::filesystem::path features_csv;
    std::filesystem::path exclusions_csv;
};

inline ExtractResult run_extract(const ExtractConfig& cfg) {
    namespace fs = std::filesystem;
    auto found = discover_recordings(cfg.recordings_dir);
    std::vector<std::pair<std::string, std::string>> early;  // id, reason
    if (cfg.subjects_file) {
        if (!fs::exists(*cfg.subjects_file)) throw ConfigError("subjects file not found");
        std::set<std::string> meta;
        for (const auto& s : load_subjects(*cfg.subjects_file)) meta.insert(s.subject_id);
        for (const auto& id : meta)
            if (!found.count(id)) early.emplace_back(id, "NO_RECORDINGS");
        for (auto it = found.begin(); it != found.end();) {
            if (!meta.count(it->first)) {
                early.emplace_back(it->first, "NO_METADATA");
                it = found.erase(it);
            } else {
                ++it;
            }
        }
    }
    std::vector<std::string> ids;
    for (const auto& [id, files] : found) ids.push_back(id);

    ExtractResult res;
    res.subjects.resize(ids.size());
    std::mutex log_mu;
    parallel_for(ids.size(), cfg.jobs, [&](std::size_t i) {
        res.subjects[i] = extract_subject_files(ids[i], found.at(ids[i]), cfg.format, cfg.options);
        if (cfg.log) {
            std::lock_guard lock(log_mu);
            const auto& s = res.subjects[i];
            *cfg.log << "[extract] " << s.subject_id << ": " << s.gait_frames << " gait frames, " << s.sleep_frames
                     << " sleep frames" << (s.exclusion_reason.empty() ? "" : " -> excluded " + s.exclusion_reason)
                     << '\n';
        }
    });
    for (const auto& [id, reason] : early) {
        SubjectFeatures f;
        f.subject_id = id;
        f.exclusion_reason = reason;
        res.subjects.push_back(f);
    }
    std::sort(res.subjects.begin(), res.subjects.end(),
              [](const SubjectFeatures& a, const SubjectFeatures& b) { return a.subject_id < b.subject_id; });

    std::ostringstream config;
    config << "extract;recordings=" << fs::absolute(cfg.recordings_dir).lexically_normal().string()
           << ";format=" << static_cast<int>(cfg.format) << ";window=" << cfg.options.msd_window_s;
    const auto comment = header_comment("extract", 0, config.str());

    FeatureTable t;
    t.columns = extracted_feature_columns();
    for (const auto& s : res.subjects) {
        if (!s.exclusion_reason.empty()) continue;
        std::vector<double> row{s.gait_hours};
        row.insert(row.end(), s.gait->values.begin(), s.gait->values.end());
        row.insert(row.end(), s.sleep->values.begin(), s.sleep->values.end());
        t.ids.push_back(s.subject_id);
        t.rows.push_back(std::move(row));
    }
    fs::create_directories(cfg.out_dir);
    res.features_csv = cfg.out_dir / "features.csv";
    res.exclusions_csv = cfg.out_dir / "exclusions.csv";
    {
        std::ofstream out(res.features_csv, std::ios::binary);
        write_feature_table(out, t, comment);
    }
    {
        std::ofstream out(res.exclusions_csv, std::ios::binary);
        out << comment << "\nsubject_id,reason,detected_gait_hours,detail\n";
        for (const auto& s : res.subjects)
            if (!s.exclusion_reason.empty())
                out << s.subject_id << ',' << s.exclusion_reason << ',' << detail::format_double(s.gait_hours)
                    << ",\"" << s.detail << "\"\n";
    }
    return res;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateConfig {
    std::filesystem::path features_file;
    std::filesystem::path subjects_file;
    std::filesystem::path out_dir;
    std::vector<FeatureConfiguration> configurations = default_configurations();
    CvOptions cv{};
    SubjectFilter filter{};
};

struct Cohort {
    std::vector<std::string> ids;
    std::vector<std::string> columns;  // feature columns followed by covariates
    Eigen::MatrixXd x;
    Eigen::VectorXd vat;
    std::vector<double> bmi;
    std::vector<std::string> excluded;
};

/// Joins extracted features with subject metadata and applies the inclusion
/// filter. Rows are ordered by subject_id.
inline Cohort build_cohort(const FeatureTable& features, const std::vector<SubjectRecord>& subjects,
                           const SubjectFilter& filter) {
    std::map<std::string, double> hours;
    const std::size_t hcol = features.column_index(kGaitHoursColumn);
    std::map<std::string, std::size_t> row_of;
    for (std::size_t r = 0; r < features.ids.size(); ++r) {
        hours[features.ids[r]] = features.rows[r][hcol];
        row_of[features.ids[r]] = r;
    }
    CohortDataset ds;
    ds.subjects = subjects;
    const auto kept = apply_subject_filters(ds, hours, filter);

    Cohort c;
    for (const auto& col : features.columns)
        if (col != kGaitHoursColumn) c.columns.push_back(col);
    for (const auto& n : covariate_names()) c.columns.push_back(n);

    std::vector<const SubjectRecord*> rows;
    std::set<std::string> kept_ids;
    for (const auto& s : kept.subjects) {
        kept_ids.insert(s.subject_id);
        if (row_of.count(s.subject_id)) rows.push_back(&s);
    }
    for (const auto& s : subjects)
        if (!kept_ids.count(s.subject_id) || !row_of.count(s.subject_id)) c.excluded.push_back(s.subject_id);
    std::sort(rows.begin(), rows.end(),
              [](const SubjectRecord* a, const SubjectRecord* b) { return a->subject_id < b->subject_id; });

    c.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(c.columns.size()));
    c.vat.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& s = *rows[r];
        const auto& f = features.rows[row_of.at(s.subject_id)];
        Eigen::Index j = 0;
        for (std::size_t k = 0; k < features.columns.size(); ++k)
            if (k != hcol) c.x(static_cast<Eigen::Index>(r), j++) = f[k];
        for (double v : covariate_vector(s)) c.x(static_cast<Eigen::Index>(r), j++) = v;
        c.vat(static_cast<Eigen::Index>(r)) = *s.vat_g;
        c.bmi.push_back(*s.bmi_kg_m2);
        c.ids.push_back(s.subject_id);
    }
    std::sort(c.excluded.begin(), c.excluded.end());
    return c;
}

inline DesignMatrix design_for(const Cohort& c, const std::vector<std::string>& cols) {
    DesignMatrix d;
    d.row_ids = c.ids;
    d.columns = cols;
    d.y = c.vat;
    d.x.resize(c.x.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const auto it = std::find(c.columns.begin(), c.columns.end(), cols[j]);
        if (it == c.columns.end()) throw FeatureMismatch("missing column '" + cols[j] + "'");
        d.x.col(static_cast<Eigen::Index>(j)) = c.x.col(it - c.columns.begin());
    }
    return d;
}

inline const char* to_string(LambdaScaling s) { return s == LambdaScaling::n ? "n" : "raw"; }

inline nlohmann::json metric_json(const MetricStat& m) { return {{"mean", m.mean}, {"std", m.std}}; }

inline nlohmann::json stratified_json(const std::vector<CategoryResult>& cats) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : cats) {
        nlohmann::json e = {{"category", to_string(c.category)}, {"n", c.n}};
        e["spearman"] = c.spearman ? nlohmann::json(*c.spearman) : nlohmann::json(nullptr);
        out.push_back(e);
    }
    return out;
}

struct EvaluateResult {
    nlohmann::json report;
    std::filesystem::path report_json;
    std::filesystem::path predictions_csv;
    std::filesystem::path summary_csv;
};

inline EvaluateResult run_evaluate(const EvaluateConfig& cfg) {
    namespace fs = std::filesystem;
    if (!fs::exists(cfg.features_file)) throw ConfigError("features file not found: " + cfg.features_file.string());
    if (!fs::exists(cfg.subjects_file)) throw ConfigError("subjects file not found: " + cfg.subjects_file.string());
    if (cfg.configurations.empty()) throw ConfigError("no feature configurations requested");

    const auto features = load_feature_table(cfg.features_file);
    const auto subjects = load_subjects(cfg.subjects_file);
    const auto cohort = build_cohort(features, subjects, cfg.filter);

    std::ostringstream config;
    config << "evaluate;lambda=" << detail::format_double(cfg.cv.ridge.lambda)
           << ";scaling=" << to_string(cfg.cv.ridge.scaling) << ";repeats=" << cfg.cv.repeats
           << ";train_frac=" << detail::format_double(cfg.cv.train_frac)
           << ";min_gait_hours=" << detail::format_double(cfg.filter.min_gait_hours) << ";configs=";
    for (const auto& c : cfg.configurations) config << c.name << '|';
    const auto comment = header_comment("evaluate", cfg.cv.seed, config.str());

    nlohmann::json report;
    report["meta"] = {{"tool", "wristvat"},
                      {"version", kVersion},
                      {"command", "evaluate"},
                      {"seed", cfg.cv.seed},
                      {"config_hash", detail::hex64(detail::fnv1a(config.str()))}};
    report["lambda"] = cfg.cv.ridge.lambda;
    report["lambda_scaling"] = to_string(cfg.cv.ridge.scaling);
    report["repeats"] = cfg.cv.repeats;
    report["train_frac"] = cfg.cv.train_frac;
    report["min_gait_hours"] = cfg.filter.min_gait_hours;
    report["n_subjects"] = cohort.ids.size();
    report["excluded_subjects"] = cohort.excluded;
    report["configurations"] = nlohmann::json::array();

    std::ostringstream preds;
    preds << comment << "\nsubject_id,vat_true,vat_pred,configuration\n";
    std::ostringstream summary;
    summary << comment
            << "\nconfiguration,n_subjects,n_columns,spearman_mean,spearman_std,pearson_mean,pearson_std,"
               "mae_mean,mae_std,rmse_mean,rmse_std\n";

    for (const auto& fc : cfg.configurations) {
        const auto cols = configuration_columns(fc, cohort.columns);
        const auto design = design_for(cohort, cols);
        const auto rep = cross_validate(design, cfg.cv);

        std::vector<double> yt, yp, bmi;
        for (std::size_t i = 0; i < cohort.ids.size(); ++i) {
            if (rep.test_counts[i] == 0) continue;
            yt.push_back(cohort.vat(static_cast<Eigen::Index>(i)));
            yp.push_back(rep.mean_test_prediction[i]);
            bmi.push_back(cohort.bmi[i]);
            preds << cohort.ids[i] << ',' << detail::format_double(yt.back()) << ','
                  << detail::format_double(yp.back()) << ',' << fc.name << '\n';
        }

        nlohmann::json folds = nlohmann::json::array();
        std::map<std::string, std::size_t> dropped;
        for (const auto& f : rep.folds) {
            folds.push_back({{"repeat", f.repeat},
                             {"seed", f.seed},
                             {"n_train", f.n_train},
                             {"n_test", f.n_test},
                             {"spearman", f.metrics.spearman},
                             {"pearson", f.metrics.pearson},
                             {"mae", f.metrics.mae},
                             {"rmse", f.metrics.rmse},
                             {"dropped_columns", f.dropped_columns}});
            for (const auto& d : f.dropped_columns) ++dropped[d];
        }
        nlohmann::json dropped_log = nlohmann::json::array();
        for (const auto& [name, count] : dropped) dropped_log.push_back({{"column", name}, {"folds", count}});

        report["configurations"].push_back(
            {{"name", fc.name},
             {"classes", fc.classes},
             {"n_columns", cols.size()},
             {"metrics",
              {{"spearman", metric_json(rep.spearman)},
               {"pearson", metric_json(rep.pearson)},
               {"mae", metric_json(rep.mae)},
               {"rmse", metric_json(rep.rmse)}}},
             {"dropped_columns", dropped_log},
             {"stratified", stratified_json(stratified_eval(yt, yp, bmi))},
             {"folds", folds}});

        summary << fc.name << ',' << cohort.ids.size() << ',' << cols.size();
        for (const auto* m : {&rep.spearman, &rep.pearson, &rep.mae, &rep.rmse})
            summary << ',' << detail::format_double(m->mean) << ',' << detail::format_double(m->std);
        summary << '\n';
    }

    fs::create_directories(cfg.out_dir);
    EvaluateResult res;
    res.report = report;
    res.report_json = cfg.out_dir / "report.json";
    res.predictions_csv = cfg.out_dir / "predictions.csv";
    res.summary_csv = cfg.out_dir / "summary.csv";
    std::ofstream(res.report_json, std::ios::binary) << report.dump(2) << '\n';
    std::ofstream(res.predictions_csv, std::ios::binary) << preds.str();
    std::ofstream(res.summary_csv, std::ios::binary) << summary.str();
    return res;
}

// ---------------------------------------------------------------------------
// fuse

struct PredictionSet {
    std::string configuration;
    std::vector<std::string> ids;
    std::vector<double> vat_true;
    std::vector<double> vat_pred;
};

/// Reads one configuration from a predictions CSV. Without `select`, the file
/// must contain exactly one configuration.
inline PredictionSet load_predictions(const std::filesystem::path& path, const std::optional<std::string>& select) {
    const auto text = detail::read_file(path.string());
    std::map<std::string, PredictionSet> sets;
    bool header = false;
    detail::for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
        const auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') return;
        const auto f = detail::split(line);
        if (!header) {
            if (f != detail::split("subject_id,vat_true,vat_pred,configuration"))
                throw ParseError(path.string() + ": unexpected predictions header");
            header = true;
            return;
        }
        if (f.size() != 4) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 4 fields");
        double t = 0.0, p = 0.0;
        if (!detail::parse_double(f[1], t) || !detail::parse_double(f[2], p))
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed number");
        auto& s = sets[std::string(f[3])];
        s.configuration = std::string(f[3]);
        s.ids.emplace_back(f[0]);
        s.vat_true.push_back(t);
        s.vat_pred.push_back(p);
    });
    if (!header) throw ParseError(path.string() + ": missing header");
    if (select) {
        const auto it = sets.find(*select);
        if (it == sets.end()) throw ConfigError(path.string() + ": no configuration '" + *select + "'");
        return it->second;
    }
    if (sets.size() != 1)
        throw ConfigError(path.string() + ": holds " + std::to_string(sets.size()) +
                          " configurations; choose one with --select");
    return sets.begin()->second;
}

/// Parses weights such as "1/3,2/3" or "0.25 0.75".
inline std::vector<double> parse_weights(const std::string& text) {
    std::vector<double> w;
    std::string norm = text;
    std::replace(norm.begin(), norm.end(), '\n', ',');
    std::replace(norm.begin(), norm.end(), ' ', ',');
    std::replace(norm.begin(), norm.end(), '\t', ',');
    for (auto tok : detail::split(norm)) {
        if (tok.empty()) continue;
        double v = 0.0;
        if (const auto slash = tok.find('/'); slash != std::string_view::npos) {
            double num = 0.0, den = 0.0;
            if (!detail::parse_double(tok.substr(0, slash), num) || !detail::parse_double(tok.substr(slash + 1), den) ||
                den == 0.0)
                throw ConfigError("malformed weight '" + std::string(tok) + "'");
            v = num / den;
        } else if (!detail::parse_double(tok, v)) {
            throw ConfigError("malformed weight '" + std::string(tok) + "'");
        }
        w.push_back(v);
    }
    return w;
}

struct FuseConfig {
    std::vector<std::filesystem::path> prediction_files;
    std::vector<std::string> select;  // empty or one per file
    std::vector<double> weights;
    std::optional<std::filesystem::path> subjects_file;  // enables BMI strata
    std::filesystem::path out_dir;
    std::string name = "fused";
};

struct FuseResult {
    Metrics metrics;
    std::vector<Metrics> input_metrics;
    nlohmann::json report;
    std::filesystem::path predictions_csv;
    std::filesystem::path report_json;
};

inline nlohmann::json metrics_json(const Metrics& m) {
    return {{"spearman", m.spearman}, {"pearson", m.pearson}, {"mae", m.mae}, {"rmse", m.rmse}};
}

inline FuseResult run_fuse(const FuseConfig& cfg) {
    namespace fs = std::filesystem;
    if (cfg.prediction_files.size() < 1) throw ConfigError("at least one predictions file is required");
    if (!cfg.select.empty() && cfg.select.size() != cfg.prediction_files.size())
        throw ConfigError("--select must be given once per predictions file");
    if (cfg.weights.size() != cfg.prediction_files.size())
        throw WeightMismatch("one weight per predictions file is required");
    for (const auto& p : cfg.prediction_files)
        if (!fs::exists(p)) throw ConfigError("predictions file not found: " + p.string());

    std::vector<PredictionSet> sets;
    for (std::size_t i = 0; i < cfg.prediction_files.size(); ++i)
        sets.push_back(load_predictions(cfg.prediction_files[i],
                                        cfg.select.empty() ? std::nullopt : std::optional<std::string>(cfg.select[i])));

    // Align everything on the first file's subject order.
    const auto& ref = sets.front();
    std::vector<std::vector<double>> est;
    for (const auto& s : sets) {
        if (std::set<std::string>(s.ids.begin(), s.ids.end()) != std::set<std::string>(ref.ids.begin(), ref.ids.end()) ||
            s.ids.size() != ref.ids.size())
            throw DataError("prediction files cover different subjects");
        std::map<std::string, std::size_t> pos;
        for (std::size_t i = 0; i < s.ids.size(); ++i) pos[s.ids[i]] = i;
        std::vector<double> aligned(ref.ids.size());
        for (std::size_t i = 0; i < ref.ids.size(); ++i) {
            const std::size_t k = pos.at(ref.ids[i]);
            if (std::abs(s.vat_true[k] - ref.vat_true[i]) > 1e-9 * std::max(1.0, std::abs(ref.vat_true[i])))
                throw DataError("measured VAT differs between prediction files for '" + ref.ids[i] + "'");
            aligned[i] = s.vat_pred[k];
        }
        est.push_back(std::move(aligned));
    }
    const auto fused = fuse_estimates(est, cfg.weights);

    FuseResult res;
    res.metrics = metrics(ref.vat_true, fused);
    for (const auto& e : est) res.input_metrics.push_back(metrics(ref.vat_true, e));

    std::ostringstream config;
    config << "fuse;weights=";
    for (double w : cfg.weights) config << detail::format_double(w) << '|';
    config << ";inputs=";
    for (const auto& s : sets) config << s.configuration << '|';
    const auto comment = header_comment("fuse", 0, config.str());

    nlohmann::json inputs = nlohmann::json::array();
    for (std::size_t i = 0; i < sets.size(); ++i)
        inputs.push_back({{"file", cfg.prediction_files[i].filename().string()},
                          {"configuration", sets[i].configuration},
                          {"weight", cfg.weights[i]},
                          {"metrics", metrics_json(res.input_metrics[i])}});
    res.report = {{"meta",
                   {{"tool", "wristvat"},
                    {"version", kVersion},
                    {"command", "fuse"},
                    {"seed", 0},
                    {"config_hash", detail::hex64(detail::fnv1a(config.str()))}}},
                  {"name", cfg.name},
                  {"n_subjects", ref.ids.size()},
                  {"inputs", inputs},
                  {"metrics", metrics_json(res.metrics)}};
    if (cfg.subjects_file) {
        std::map<std::string, double> bmi_of;
        for (const auto& s : load_subjects(*cfg.subjects_file))
            if (s.bmi_kg_m2) bmi_of[s.subject_id] = *s.bmi_kg_m2;
        std::vector<double> t, p, b;
        for (std::size_t i = 0; i < ref.ids.size(); ++i)
            if (bmi_of.count(ref.ids[i])) {
                t.push_back(ref.vat_true[i]);
                p.push_back(fused[i]);
                b.push_back(bmi_of.at(ref.ids[i]));
            }
        res.report["stratified"] = stratified_json(stratified_eval(t, p, b));
    }

    fs::create_directories(cfg.out_dir);
    res.predictions_csv = cfg.out_dir / "fused_predictions.csv";
    res.report_json = cfg.out_dir / "fuse_report.json";
    {
        std::ofstream out(res.predictions_csv, std::ios::binary);
        out << comment << "\nsubject_id,vat_true,vat_pred,configuration\n";
        for (std::size_t i = 0; i < ref.ids.size(); ++i)
            out << ref.ids[i] << ',' << detail::format_double(ref.vat_true[i]) << ','
                << detail::format_double(fused[i]) << ',' << cfg.name << '\n';
    }
    std::ofstream(res.report_json, std::ios::binary) << res.report.dump(2) << '\n';
    return res;
}

// ---------------------------------------------------------------------------
// synth

enum class SynthKind { walk, sleep, cohort };

struct SynthConfig {
    SynthKind kind = SynthKind::walk;
    std::filesystem::path out_dir;
    std::uint64_t seed = 0;
    synth::WalkSpec walk{};
    synth::SleepSpec sleep{};
    std::size_t n_subjects = 5;
    double cohort_walk_s = 1200.0;
    double cohort_sleep_s = 2.5 * 3600.0;
};

/// Subject i of a synthetic cohort: a night with a few movements, a sedentary
/// stretch, and walks whose intensity and cadence vary by subject. VAT is a
/// noisy function of covariates and walking vigour.
inline std::pair<SubjectRecord, TriaxialRecording> synth_cohort_subject(const SynthConfig& cfg, std::size_t i) {
    const std::uint64_t s = cfg.seed * 1000003ULL + i;
    std::mt19937_64 rng(s);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    synth::SleepSpec night = cfg.sleep;
    night.duration_s = cfg.cohort_sleep_s;
    night.movement_schedule.clear();
    const int moves = 3 + static_cast<int>(u(rng) * 4.0);
    for (int k = 0; k < moves; ++k)
        night.movement_schedule.push_back({(k + 0.5) * night.duration_s / moves, 20.0 + 60.0 * u(rng), 0.08 + 0.1 * u(rng)});

    const double vigour = u(rng);
    synth::WalkSpec walk = cfg.walk;
    walk.duration_s = cfg.cohort_walk_s;
    walk.swing_amplitude_g = 0.3 + 0.5 * vigour;
    walk.step_period_s = 0.5 + 0.3 * u(rng);

    std::vector<TriaxialRecording> parts;
    parts.push_back(synth::gen_sleep(night, s ^ 0x51ULL));
    parts.push_back(synth::gen_rest(600.0, 0.03, {-0.3, 0.2, -0.9}, s ^ 0x52ULL));
    parts.push_back(synth::gen_walk(walk, s ^ 0x53ULL));
    parts.push_back(synth::gen_rest(300.0, 0.03, {-0.3, 0.2, -0.9}, s ^ 0x54ULL));
    char id[32];
    std::snprintf(id, sizeof(id), "S%04zu", i + 1);
    auto rec = synth::concatenate(parts, id);

    SubjectRecord subj;
    subj.subject_id = id;
    subj.age_years = 20.0 + 40.0 * u(rng);
    subj.gender = u(rng) < 0.5 ? Gender::male : Gender::female;
    subj.height_cm = (*subj.gender == Gender::male ? 175.0 : 162.0) + 8.0 * (u(rng) - 0.5);
    const double bmi = 20.0 + 18.0 * u(rng);
    subj.weight_kg = bmi * (*subj.height_cm / 100.0) * (*subj.height_cm / 100.0);
    subj.bmi_kg_m2 = bmi;
    subj.waist_cm = 70.0 + 1.5 * (bmi - 20.0) + 6.0 * u(rng);
    subj.vat_g = std::max(20.0, 40.0 * (bmi - 18.0) + 4.0 * (*subj.age_years - 20.0) + 300.0 * (1.0 - vigour) +
                                    60.0 * (u(rng) - 0.5));
    return {subj, rec};
}

inline void run_synth(const SynthConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    auto write_json = [](const fs::path& p, const nlohmann::json& j) {
        std::ofstream(p, std::ios::binary) << j.dump(2) << '\n';
    };
    switch (cfg.kind) {
        case SynthKind::walk: {
            auto rec = synth::gen_walk(cfg.walk, cfg.seed);
            write_recording(cfg.out_dir / "walk.csv", rec);
            write_json(cfg.out_dir / "walk.truth.json", synth::to_json(cfg.walk, cfg.seed));
            break;
        }
        case SynthKind::sleep: {
            auto rec = synth::gen_sleep(cfg.sleep, cfg.seed);
            write_recording(cfg.out_dir / "sleep.csv", rec);
            write_json(cfg.out_dir / "sleep.truth.json", synth::to_json(cfg.sleep, cfg.seed));
            break;
        }
        case SynthKind::cohort: {
            const auto rec_dir = cfg.out_dir / "recordings";
            fs::create_directories(rec_dir);
            std::vector<SubjectRecord> subjects;
            nlohmann::json truth = nlohmann::json::array();
            for (std::size_t i = 0; i < cfg.n_subjects; ++i) {
                auto [subj, rec] = synth_cohort_subject(cfg, i);
                write_recording(rec_dir / (subj.subject_id + ".csv"), rec);
                truth.push_back({{"subject_id", subj.subject_id}, {"vat_g", *subj.vat_g}});
                subjects.push_back(std::move(subj));
            }
            std::ofstream out(cfg.out_dir / "subjects.csv", std::ios::binary);
            write_subjects(out, subjects);
            write_json(cfg.out_dir / "cohort.truth.json",
                       {{"kind", "cohort"}, {"seed", cfg.seed}, {"subjects", truth}});
            break;
        }
    }
}

}  // namespace wristvat
