#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <sys/wait.h>

#include "helpers.hpp"
#include "wristvat/pipeline.hpp"

using namespace wristvat;
namespace fs = std::filesystem;
using testing_support::slurp;
using testing_support::temp_dir;

TEST(FeatureClasses, ColumnCounts) {
    const auto cols = extracted_feature_columns();
    std::vector<std::string> all(cols.begin(), cols.end());
    for (const auto& c : covariate_names()) all.push_back(c);
    const std::map<std::string, std::size_t> expect = {
        {"gait_cadence", 6},          {"gait_intensity", 6},   {"gait_patterns", 18}, {"gait_dynamics", 184},
        {"gait_tde", 168},            {"sleep_fragmentation", 10}, {"sleep_intensity", 12},
        {"sleep_dynamics", 184},      {"sleep_tde", 168},      {"gait", 214},         {"sleep", 206},
        {"cov", 6},                   {"gait+sleep", 420},     {"gait+sleep+cov", 426}};
    for (const auto& [spec, n] : expect)
        EXPECT_EQ(configuration_columns(parse_configuration(spec), all).size(), n) << spec;
    EXPECT_EQ(configuration_columns(parse_configuration("gait,sleep"), all).size(), 420u);
}

TEST(FeatureClasses, ParseErrors) {
    EXPECT_THROW(parse_configuration("gait+walking"), ConfigError);
    EXPECT_THROW(parse_configuration("+"), ConfigError);
    EXPECT_EQ(parse_configuration("sleep+gait+sleep").name, "sleep+gait");
    EXPECT_EQ(default_configurations().size(), 12u);
}

TEST(FeatureTable, RoundTrip) {
    FeatureTable t;
    t.columns = {"a", "b"};
    t.ids = {"x", "y"};
    t.rows = {{0.1, 1e-300}, {-2.5, 3.0}};
    std::ostringstream out;
    write_feature_table(out, t, "# header");
    const auto back = parse_feature_table(out.str());
    EXPECT_EQ(back.columns, t.columns);
    EXPECT_EQ(back.ids, t.ids);
    EXPECT_EQ(back.rows, t.rows);
    EXPECT_THROW(parse_feature_table("id,a\nx,1\n"), ParseError);
}

namespace {

/// Small cohort on disk plus a sleep-only subject that has no gait.
const fs::path& cohort_dir() {
    static const fs::path dir = [] {
        const auto d = temp_dir("cohort");
        SynthConfig cfg;
        cfg.kind = SynthKind::cohort;
        cfg.out_dir = d;
        cfg.seed = 5;
        cfg.n_subjects = 5;
        cfg.cohort_walk_s = 300.0;
        cfg.cohort_sleep_s = 2.05 * 3600.0;
        run_synth(cfg);
        synth::SleepSpec night;
        night.duration_s = 2.05 * 3600.0;
        night.movement_schedule = {{1000, 40, 0.07}, {4000, 40, 0.07}};
        auto rec = synth::gen_sleep(night, 77);
        rec.subject_id = "Z9";
        write_recording(d / "recordings" / "Z9.csv", rec);
        return d;
    }();
    return dir;
}

}  // namespace

TEST(Extract, SynthCohortRowsAndExclusions) {
    ExtractConfig cfg;
    cfg.recordings_dir = cohort_dir() / "recordings";
    cfg.out_dir = temp_dir("extract_a");
    cfg.jobs = 1;
    const auto r = run_extract(cfg);
    const auto t = load_feature_table(r.features_csv);
    EXPECT_EQ(t.ids, (std::vector<std::string>{"S0001", "S0002", "S0003", "S0004", "S0005"}));
    EXPECT_EQ(t.columns.size(), 1u + 214u + 206u);
    const auto ex = slurp(r.exclusions_csv);
    EXPECT_NE(ex.find("Z9,NO_GAIT"), std::string::npos);
    EXPECT_EQ(slurp(r.features_csv).rfind("# wristvat ", 0), 0u);

    // Rerun with several workers: identical bytes.
    cfg.out_dir = temp_dir("extract_b");
    cfg.jobs = 3;
    const auto r2 = run_extract(cfg);
    EXPECT_EQ(slurp(r.features_csv), slurp(r2.features_csv));
    EXPECT_EQ(slurp(r.exclusions_csv), slurp(r2.exclusions_csv));
}

TEST(Extract, MetadataRestrictsSubjects) {
    ExtractConfig cfg;
    cfg.recordings_dir = cohort_dir() / "recordings";
    cfg.subjects_file = cohort_dir() / "subjects.csv";
    cfg.out_dir = temp_dir("extract_meta");
    const auto r = run_extract(cfg);
    EXPECT_NE(slurp(r.exclusions_csv).find("Z9,NO_METADATA"), std::string::npos);
}

TEST(Extract, CorruptRecordingIsExcludedNotFatal) {
    const auto d = temp_dir("extract_corrupt");
    fs::create_directories(d / "rec");
    std::ofstream(d / "rec" / "BAD.csv") << "t,x,y,z\n0,0,0,1\n0.0125,nan,0,1\n";
    ExtractConfig cfg;
    cfg.recordings_dir = d / "rec";
    cfg.out_dir = d / "out";
    const auto r = run_extract(cfg);
    ASSERT_EQ(r.subjects.size(), 1u);
    EXPECT_EQ(r.subjects[0].exclusion_reason, "LOAD_ERROR");
}

namespace {

/// Fabricated features for 40 subjects where VAT depends on a few columns.
fs::path fabricated_inputs(const std::string& name) {
    const auto d = temp_dir(name);
    std::mt19937_64 rng(123);
    std::normal_distribution<double> nd;
    FeatureTable t;
    t.columns = extracted_feature_columns();
    std::vector<SubjectRecord> subjects;
    for (int i = 0; i < 40; ++i) {
        std::vector<double> row(t.columns.size());
        for (auto& v : row) v = nd(rng);
        row[0] = 3.5 + std::abs(nd(rng));
        char id[16];
        std::snprintf(id, sizeof(id), "P%03d", i);
        t.ids.push_back(id);
        SubjectRecord s;
        s.subject_id = id;
        s.age_years = 25.0 + 0.5 * i;
        s.gender = i % 2 ? Gender::female : Gender::male;
        s.height_cm = 170.0 + nd(rng) * 5.0;
        const double bmi = 22.0 + 0.3 * i;
        s.bmi_kg_m2 = bmi;
        s.weight_kg = bmi * std::pow(*s.height_cm / 100.0, 2);
        s.waist_cm = 80.0 + bmi;
        s.vat_g = 800.0 + 100.0 * row[1] + 80.0 * row[300] + 20.0 * bmi + 30.0 * nd(rng);
        subjects.push_back(s);
        t.rows.push_back(std::move(row));
    }
    std::ofstream out(d / "features.csv");
    write_feature_table(out, t, "# fabricated");
    std::ofstream sub(d / "subjects.csv");
    write_subjects(sub, subjects);
    return d;
}

EvaluateConfig evaluate_config(const fs::path& d, const std::string& out) {
    EvaluateConfig c;
    c.features_file = d / "features.csv";
    c.subjects_file = d / "subjects.csv";
    c.out_dir = d / out;
    c.configurations = {parse_configuration("gait"), parse_configuration("sleep"), parse_configuration("gait+sleep")};
    c.cv.seed = 11;
    return c;
}

}  // namespace

TEST(Evaluate, SectionsAndDeterminism) {
    const auto d = fabricated_inputs("evaluate");
    const auto a = run_evaluate(evaluate_config(d, "a"));
    const auto b = run_evaluate(evaluate_config(d, "b"));
    ASSERT_EQ(a.report["configurations"].size(), 3u);
    EXPECT_EQ(a.report["configurations"][2]["name"], "gait+sleep");
    EXPECT_EQ(a.report["configurations"][2]["n_columns"], 420);
    EXPECT_EQ(a.report["configurations"][0]["folds"].size(), 30u);
    EXPECT_EQ(a.report["configurations"][0]["stratified"].size(), 5u);
    EXPECT_EQ(a.report["n_subjects"], 40);
    EXPECT_EQ(slurp(a.report_json), slurp(b.report_json));
    EXPECT_EQ(slurp(a.predictions_csv), slurp(b.predictions_csv));
    EXPECT_NE(slurp(a.predictions_csv).find("subject_id,vat_true,vat_pred,configuration\n"), std::string::npos);
    // Every subject lands in some test split over 30 repeats.
    std::istringstream lines(slurp(a.predictions_csv));
    std::string line;
    std::size_t rows = 0;
    while (std::getline(lines, line)) rows += line.rfind("P0", 0) == 0;
    EXPECT_EQ(rows, 3u * 40u);
}

TEST(Evaluate, GaitHoursFilterAndTooFewRows) {
    const auto d = fabricated_inputs("evaluate_filter");
    auto c = evaluate_config(d, "x");
    c.filter.min_gait_hours = 100.0;
    EXPECT_THROW(run_evaluate(c), TooFewRows);
}

TEST(Fuse, IdentityWeightsReproduceInput) {
    const auto d = fabricated_inputs("fuse");
    const auto e = run_evaluate(evaluate_config(d, "ev"));
    FuseConfig f;
    f.prediction_files = {e.predictions_csv, e.predictions_csv};
    f.select = {"gait+sleep", "gait"};
    f.weights = {1.0, 0.0};
    f.subjects_file = d / "subjects.csv";
    f.out_dir = d / "fu";
    const auto r = run_fuse(f);
    EXPECT_DOUBLE_EQ(r.metrics.mae, r.input_metrics[0].mae);
    EXPECT_DOUBLE_EQ(r.metrics.spearman, r.input_metrics[0].spearman);
    EXPECT_EQ(r.report["stratified"].size(), 5u);

    f.weights = {0.5, 0.6};
    EXPECT_THROW(run_fuse(f), WeightMismatch);
    f.weights = {0.5, 0.5};
    f.select = {};
    EXPECT_THROW(run_fuse(f), ConfigError);  // files hold three configurations each
}

TEST(Fuse, SubjectMismatchIsDataError) {
    const auto d = temp_dir("fuse_mismatch");
    std::ofstream(d / "a.csv") << "subject_id,vat_true,vat_pred,configuration\nA,1,2,c\nB,3,4,c\n";
    std::ofstream(d / "b.csv") << "subject_id,vat_true,vat_pred,configuration\nA,1,2,c\nC,3,4,c\n";
    FuseConfig f;
    f.prediction_files = {d / "a.csv", d / "b.csv"};
    f.weights = {0.5, 0.5};
    f.out_dir = d / "out";
    EXPECT_THROW(run_fuse(f), DataError);
}

TEST(Fuse, WeightParsing) {
    EXPECT_EQ(parse_weights("1/4, 3/4"), (std::vector<double>{0.25, 0.75}));
    EXPECT_EQ(parse_weights("0.2\n0.8\n"), (std::vector<double>{0.2, 0.8}));
    EXPECT_THROW(parse_weights("a,b"), ConfigError);
    EXPECT_THROW(parse_weights("1/0"), ConfigError);
}

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(WRISTVAT_CLI) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
    const auto d = fabricated_inputs("cli");
    const auto dir = d.string();
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli("evaluate --features-file " + dir + "/nope.csv --subjects " + dir + "/subjects.csv --out " + dir + "/o"), 2);
    EXPECT_EQ(run_cli("evaluate --features-file " + dir + "/features.csv --subjects " + dir +
                      "/subjects.csv --features gait+bogus --out " + dir + "/o"),
              2);
    EXPECT_EQ(run_cli("bogus"), 2);
    EXPECT_EQ(run_cli("evaluate --features-file " + dir + "/features.csv --subjects " + dir +
                      "/subjects.csv --features gait --features cov --repeats 5 --seed 3 --out " + dir + "/o"),
              0);
    EXPECT_TRUE(fs::exists(d / "o" / "report.json"));
    EXPECT_EQ(run_cli("fuse --predictions " + dir + "/o/predictions.csv --predictions " + dir +
                      "/o/predictions.csv --select gait --select cov --weights 0.3,0.6 --out " + dir + "/f"),
              2);
    std::ofstream(d / "w.txt") << "1/3\n2/3\n";
    EXPECT_EQ(run_cli("fuse --predictions " + dir + "/o/predictions.csv --predictions " + dir +
                      "/o/predictions.csv --select gait --select cov --weights-file " + dir + "/w.txt --out " + dir + "/f"),
              0);
    std::ofstream(d / "short.csv") << "subject_id,vat_true,vat_pred,configuration\nP000,1,2,c\n";
    EXPECT_EQ(run_cli("fuse --predictions " + dir + "/o/predictions.csv --predictions " + dir +
                      "/short.csv --select gait --select c --out " + dir + "/f"),
              3);
    EXPECT_EQ(run_cli("synth walk --duration 10 --seed 2 --out " + dir + "/s"), 0);
    EXPECT_TRUE(fs::exists(d / "s" / "walk.csv"));
    EXPECT_TRUE(fs::exists(d / "s" / "walk.truth.json"));
}
