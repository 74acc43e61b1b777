// wristvat: feature extraction, evaluation, fusion and synthetic data.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "wristvat/pipeline.hpp"

namespace {

using namespace wristvat;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

void require_exists(const std::string& what, const std::string& path) {
    if (!std::filesystem::exists(path)) throw ConfigError(what + " not found: " + path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wrist accelerometry gait and sleep features for visceral fat estimation"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    // extract
    auto* ex = app.add_subcommand("extract", "Extract per-subject gait and sleep feature rows");
    std::string ex_recordings, ex_subjects, ex_out, ex_format = "txyz";
    std::size_t ex_jobs = 1;
    double ex_window = 10.0;
    ex->add_option("--recordings", ex_recordings, "Directory of <id>.csv files or <id>/ subdirectories")->required();
    ex->add_option("--subjects", ex_subjects, "Subject metadata CSV; restricts extraction to listed subjects");
    ex->add_option("--out", ex_out, "Output directory")->required();
    ex->add_option("--format", ex_format, "Recording layout")->check(CLI::IsMember({"txyz", "xyz"}));
    ex->add_option("--jobs", ex_jobs, "Worker threads")->check(CLI::PositiveNumber);
    ex->add_option("--msd-window", ex_window, "MSD window in seconds");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Cross-validated ridge evaluation of feature configurations");
    std::string ev_features_file, ev_subjects, ev_out, ev_scaling = "n";
    std::vector<std::string> ev_configs;
    CvOptions cv;
    SubjectFilter filter;
    ev->add_option("--features-file", ev_features_file, "features.csv written by extract")->required();
    ev->add_option("--subjects", ev_subjects, "Subject metadata CSV")->required();
    ev->add_option("--features", ev_configs,
                   "Feature configuration, classes joined with '+' (repeatable; default: the standard set)");
    ev->add_option("--lambda", cv.ridge.lambda, "Ridge penalty")->check(CLI::NonNegativeNumber);
    ev->add_option("--lambda-scaling", ev_scaling, "Penalty scaling: n (lambda*n) or raw")
        ->check(CLI::IsMember({"n", "raw"}));
    ev->add_option("--repeats", cv.repeats, "Random partitions")->check(CLI::PositiveNumber);
    ev->add_option("--train-frac", cv.train_frac, "Training fraction")->check(CLI::Range(0.0, 1.0));
    ev->add_option("--seed", cv.seed, "Base seed; partition r uses seed + r");
    ev->add_option("--min-gait-hours", filter.min_gait_hours, "Inclusion threshold on detected gait hours");
    ev->add_option("--min-age", filter.min_age_years, "Minimum age in years");
    ev->add_option("--max-age", filter.max_age_years, "Maximum age in years");
    ev->add_option("--out", ev_out, "Output directory")->required();

    // fuse
    auto* fu = app.add_subcommand("fuse", "Weighted fusion of prediction files");
    std::vector<std::string> fu_preds, fu_select;
    std::string fu_weights, fu_weights_file, fu_subjects, fu_out, fu_name = "fused";
    fu->add_option("--predictions", fu_preds, "predictions.csv (repeatable)")->required();
    fu->add_option("--select", fu_select, "Configuration to take from each file, in order (repeatable)");
    auto* w_opt = fu->add_option("--weights", fu_weights, "Comma-separated weights, fractions allowed (e.g. 1/3,2/3)");
    auto* wf_opt = fu->add_option("--weights-file", fu_weights_file, "File holding the weights");
    w_opt->excludes(wf_opt);
    fu->add_option("--subjects", fu_subjects, "Subject metadata CSV for BMI strata");
    fu->add_option("--name", fu_name, "Configuration label of the fused estimate");
    fu->add_option("--out", fu_out, "Output directory")->required();

    // synth
    auto* sy = app.add_subcommand("synth", "Generate synthetic recordings with ground truth");
    SynthConfig sc;
    std::string sy_kind = "walk", sy_out;
    std::vector<std::string> sy_bursts;
    sy->add_option("kind", sy_kind, "walk, sleep or cohort")->check(CLI::IsMember({"walk", "sleep", "cohort"}));
    sy->add_option("--out", sy_out, "Output directory")->required();
    sy->add_option("--seed", sc.seed, "Random seed");
    sy->add_option("--duration", sc.walk.duration_s, "Walk duration in seconds");
    sy->add_option("--step-period", sc.walk.step_period_s, "Walk step period in seconds");
    sy->add_option("--amplitude", sc.walk.swing_amplitude_g, "Walk swing amplitude in g");
    sy->add_option("--noise", sc.walk.noise_std_g, "Walk noise std in g");
    sy->add_option("--sleep-duration", sc.sleep.duration_s, "Sleep duration in seconds");
    sy->add_option("--sleep-noise", sc.sleep.baseline_noise_g, "Sleep baseline noise std in g");
    sy->add_option("--burst", sy_bursts, "Sleep movement onset:duration:amplitude (repeatable)");
    sy->add_option("--subjects", sc.n_subjects, "Cohort size")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*ex) {
            require_exists("recordings directory", ex_recordings);
            ExtractConfig c;
            c.recordings_dir = ex_recordings;
            if (!ex_subjects.empty()) c.subjects_file = ex_subjects;
            c.out_dir = ex_out;
            c.format = ex_format == "xyz" ? RecordingFormat::csv_xyz_with_header_rate : RecordingFormat::csv_txyz;
            c.jobs = ex_jobs;
            c.options.msd_window_s = ex_window;
            c.log = &std::cerr;
            const auto r = run_extract(c);
            std::size_t kept = 0;
            for (const auto& s : r.subjects) kept += s.exclusion_reason.empty();
            std::cerr << "extracted " << kept << " of " << r.subjects.size() << " subjects -> "
                      << r.features_csv.string() << '\n';
        } else if (*ev) {
            require_exists("features file", ev_features_file);
            require_exists("subjects file", ev_subjects);
            EvaluateConfig c;
            c.features_file = ev_features_file;
            c.subjects_file = ev_subjects;
            c.out_dir = ev_out;
            cv.ridge.scaling = ev_scaling == "raw" ? LambdaScaling::raw : LambdaScaling::n;
            c.cv = cv;
            c.filter = filter;
            if (!ev_configs.empty()) {
                c.configurations.clear();
                for (const auto& s : ev_configs) c.configurations.push_back(parse_configuration(s));
            }
            const auto r = run_evaluate(c);
            for (const auto& conf : r.report["configurations"])
                std::cout << conf["name"].get<std::string>() << ": spearman "
                          << conf["metrics"]["spearman"]["mean"].get<double>() << " +/- "
                          << conf["metrics"]["spearman"]["std"].get<double>() << '\n';
        } else if (*fu) {
            FuseConfig c;
            for (const auto& p : fu_preds) c.prediction_files.emplace_back(p);
            c.select = fu_select;
            if (!fu_weights_file.empty()) {
                require_exists("weights file", fu_weights_file);
                c.weights = parse_weights(detail::read_file(fu_weights_file));
            } else if (!fu_weights.empty()) {
                c.weights = parse_weights(fu_weights);
            } else {
                c.weights.assign(fu_preds.size(), 1.0 / static_cast<double>(fu_preds.size()));
            }
            if (!fu_subjects.empty()) {
                require_exists("subjects file", fu_subjects);
                c.subjects_file = fu_subjects;
            }
            c.out_dir = fu_out;
            c.name = fu_name;
            const auto r = run_fuse(c);
            std::cout << c.name << ": spearman " << r.metrics.spearman << " pearson " << r.metrics.pearson << " mae "
                      << r.metrics.mae << " rmse " << r.metrics.rmse << '\n';
        } else if (*sy) {
            sc.kind = sy_kind == "walk" ? SynthKind::walk : sy_kind == "sleep" ? SynthKind::sleep : SynthKind::cohort;
            sc.out_dir = sy_out;
            for (const auto& b : sy_bursts) {
                const auto f = detail::split(b, ':');
                synth::MovementBurst m;
                if (f.size() != 3 || !detail::parse_double(f[0], m.onset_s) ||
                    !detail::parse_double(f[1], m.duration_s) || !detail::parse_double(f[2], m.amplitude_g))
                    throw ConfigError("--burst expects onset:duration:amplitude");
                sc.sleep.movement_schedule.push_back(m);
            }
            run_synth(sc);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
